#include <doctest.h>

#include <cmath>

#include "kidc/errors.hpp"
#include "kidc/models.hpp"
#include "support/model_helpers.hpp"
#include "support/straightline.hpp"

using namespace kidc::models;
using kidc::InvalidInput;
using kidc::num::Graph;
using kidc::num::Rng;
using kidc::num::Tensor;
using kidc::testing::make_input;
using kidc::testing::micro_config;
using kidc::testing::random_input;

namespace {
const ModelKind kKinds[] = {ModelKind::transformer, ModelKind::rcnn, ModelKind::bilstm_attn};
}

TEST_CASE("init produces schema shapes on the float grid") {
    for (ModelKind kind : kKinds) {
        ModelConfig cfg = micro_config(kind);
        ModelParams p = ModelParams::init(cfg, 7);
        auto schema = param_schema(cfg);
        REQUIRE(p.entries().size() == schema.size());
        for (std::size_t i = 0; i < schema.size(); ++i) {
            CHECK(p.entries()[i].first == schema[i].name);
            CHECK(p.entries()[i].second.dims() == schema[i].dims);
            for (double v : p.entries()[i].second.values()) {
                CHECK(std::isfinite(v));
                CHECK(static_cast<double>(static_cast<float>(v)) == v);
            }
        }
        p.validate_against(cfg);
    }
}

TEST_CASE("same seed reproduces the same initialization") {
    ModelConfig cfg = micro_config(ModelKind::rcnn);
    ModelParams a = ModelParams::init(cfg, 42), b = ModelParams::init(cfg, 42);
    for (std::size_t i = 0; i < a.entries().size(); ++i) {
        CHECK(a.entries()[i].second.values() == b.entries()[i].second.values());
    }
    ModelParams c = ModelParams::init(cfg, 43);
    CHECK(a.entries()[2].second.values() != c.entries()[2].second.values());
}

TEST_CASE("lstm forget-gate bias starts at one") {
    ModelConfig cfg = micro_config(ModelKind::rcnn);
    ModelParams p = ModelParams::init(cfg, 1);
    const Tensor& b = p.at("lstm.fw.b");
    std::size_t h = cfg.lstm_hidden;
    for (std::size_t i = 0; i < 4 * h; ++i) {
        CHECK(b[i] == (i >= h && i < 2 * h ? 1.0 : 0.0));
    }
}

TEST_CASE("zero classifier weights force logits equal to the bias, any input") {
    for (ModelKind kind : kKinds) {
        ModelConfig cfg = micro_config(kind);
        ModelParams p = ModelParams::init(cfg, 3);
        p.at("head.w").fill(0.0);
        p.at("head.b") = Tensor({cfg.num_classes}, {0.5, -1.25, 2.0});
        Rng rng(9);
        Batch batch = {random_input(rng, cfg), random_input(rng, cfg)};
        Tensor logits = forward_eval(p, cfg, batch);
        REQUIRE(logits.rows() == 2);
        for (std::size_t r = 0; r < 2; ++r) {
            CHECK(logits.at(r, 0) == 0.5);
            CHECK(logits.at(r, 1) == -1.25);
            CHECK(logits.at(r, 2) == 2.0);
        }
    }
}

TEST_CASE("rcnn with zero conv kernels pools zeros, leaving only the head bias") {
    ModelConfig cfg = micro_config(ModelKind::rcnn);
    ModelParams p = ModelParams::init(cfg, 5);
    p.at("conv.kernels").fill(0.0);
    Rng rng(11);
    Tensor logits = forward_eval(p, cfg, {random_input(rng, cfg)});
    const Tensor& b = p.at("head.b");
    for (std::size_t c = 0; c < cfg.num_classes; ++c) CHECK(logits.at(0, c) == b[c]);
}

TEST_CASE("padding invariance: logits depend only on real tokens and mask") {
    Rng rng(123);
    for (ModelKind kind : kKinds) {
        ModelConfig cfg = micro_config(kind);
        ModelParams p = ModelParams::init(cfg, 21);
        for (int rep = 0; rep < 5; ++rep) {
            auto clean = random_input(rng, cfg);
            auto scrambled = clean;
            for (std::size_t i = scrambled.real_len; i < cfg.max_len; ++i) {
                scrambled.ids[i] = static_cast<int>(rng.index(cfg.vocab_size));
            }
            Tensor a = forward_eval(p, cfg, {clean});
            Tensor b = forward_eval(p, cfg, {scrambled});
            CHECK(a.values() == b.values());  // bit-identical
        }
    }
}

TEST_CASE("eval-mode forward is bit-identical across repeated runs") {
    Rng rng(77);
    for (ModelKind kind : kKinds) {
        ModelConfig cfg = micro_config(kind);
        ModelParams p = ModelParams::init(cfg, 8);
        Batch batch = {random_input(rng, cfg), random_input(rng, cfg)};
        CHECK(forward_eval(p, cfg, batch).values() == forward_eval(p, cfg, batch).values());
    }
}

TEST_CASE("logits shape is batch×num_classes for any valid config") {
    Rng rng(31);
    for (ModelKind kind : kKinds) {
        for (std::size_t classes : {1u, 2u, 5u}) {
            ModelConfig cfg = micro_config(kind, 16, classes);
            ModelParams p = ModelParams::init(cfg, classes);
            Batch batch;
            std::size_t n = 1 + rng.index(3);
            for (std::size_t i = 0; i < n; ++i) batch.push_back(random_input(rng, cfg));
            Tensor logits = forward_eval(p, cfg, batch);
            CHECK(logits.rows() == n);
            CHECK(logits.cols() == classes);
        }
    }
}

TEST_CASE("graph forward matches the straight-line oracle within 1e-6") {
    Rng rng(2718);
    for (ModelKind kind : kKinds) {
        ModelConfig cfg = micro_config(kind);
        ModelParams p = ModelParams::init(cfg, 99);
        for (int rep = 0; rep < 3; ++rep) {
            auto input = random_input(rng, cfg);
            Tensor logits = forward_eval(p, cfg, {input});
            auto want = kidc::testing::straightline::logits(p, cfg, input);
            REQUIRE(want.size() == cfg.num_classes);
            for (std::size_t c = 0; c < cfg.num_classes; ++c) {
                CHECK(std::abs(logits.at(0, c) - want[c]) < 1e-6);
            }
        }
    }
}

TEST_CASE("train-mode dropout perturbs logits but eval mode never does") {
    ModelConfig cfg = micro_config(ModelKind::rcnn);  // dropout 0.5
    ModelParams p = ModelParams::init(cfg, 4);
    Rng rng(5);
    Batch batch = {random_input(rng, cfg)};
    Tensor eval_logits = forward_eval(p, cfg, batch);

    Graph g;
    BoundParams bound = bind_params(g, p, cfg);
    Rng drop_rng(99);
    ForwardOptions opts{true, &drop_rng};
    Tensor train_logits = g.val(forward(g, bound, cfg, batch, opts));
    CHECK(train_logits.values() != eval_logits.values());

    Graph g2;
    BoundParams bound2 = bind_params(g2, p, cfg);
    CHECK_THROWS_AS(forward(g2, bound2, cfg, batch, ForwardOptions{true, nullptr}), InvalidInput);
}

TEST_CASE("freeze_encoder keeps encoder tensors out of the gradient set") {
    ModelConfig cfg = micro_config(ModelKind::bilstm_attn);
    cfg.freeze_encoder = true;
    ModelParams p = ModelParams::init(cfg, 15);
    Graph g;
    BoundParams bound = bind_params(g, p, cfg);
    Rng rng(2);
    Batch batch = {random_input(rng, cfg)};
    g.backward(g.cross_entropy(forward(g, bound, cfg, batch), {1}));
    CHECK(!g.is_trainable(bound.at("enc.tok_emb")));
    CHECK(g.is_trainable(bound.at("head.w")));
    CHECK(g.has_grad(bound.at("head.w")));
    CHECK(g.has_grad(bound.at("lstm.fw.w")));
}

TEST_CASE("forward validates batch structure") {
    ModelConfig cfg = micro_config(ModelKind::transformer);
    ModelParams p = ModelParams::init(cfg, 1);
    Graph g;
    BoundParams bound = bind_params(g, p, cfg);
    CHECK_THROWS_AS(forward(g, bound, cfg, {}), InvalidInput);

    auto bad_len = make_input({4, 5}, cfg.max_len + 1);
    CHECK_THROWS_AS(forward_eval(p, cfg, {bad_len}), InvalidInput);

    auto bad_mask = make_input({4, 5}, cfg.max_len);
    bad_mask.mask[0] = 0;
    CHECK_THROWS_AS(forward_eval(p, cfg, {bad_mask}), InvalidInput);

    auto bad_id = make_input({static_cast<int>(cfg.vocab_size) + 3}, cfg.max_len);
    CHECK_THROWS_AS(forward_eval(p, cfg, {bad_id}), InvalidInput);
}

TEST_CASE("predict takes the argmax with lowest-id tie break") {
    Tensor logits = Tensor::matrix(3, 3, {0.0, 2.0, 1.0,   //
                                          5.0, 5.0, 4.0,   //
                                          -1.0, -1.0, -1.0});
    CHECK(predict(logits) == std::vector<int>{1, 0, 0});
}
