#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "kidc/checkpoint.hpp"
#include "kidc/errors.hpp"
#include "kidc/models.hpp"
#include "support/model_helpers.hpp"

using namespace kidc::models;
using kidc::InvalidInput;
using kidc::num::Rng;
using kidc::num::Tensor;
using kidc::testing::micro_config;
using kidc::testing::random_input;

namespace {

std::filesystem::path tmp_path(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("checkpoint round-trip is bit-exact on fresh params, logits included") {
    Rng rng(404);
    for (ModelKind kind :
         {ModelKind::transformer, ModelKind::rcnn, ModelKind::bilstm_attn}) {
        ModelConfig cfg = micro_config(kind);
        ModelParams p = ModelParams::init(cfg, 1234);
        auto path = tmp_path("kidc_ckpt_rt.bin");
        save_params(p, path.string());
        ModelParams q = load_params(path.string());
        REQUIRE(q.entries().size() == p.entries().size());
        for (std::size_t i = 0; i < p.entries().size(); ++i) {
            CHECK(q.entries()[i].first == p.entries()[i].first);
            CHECK(q.entries()[i].second.values() == p.entries()[i].second.values());
        }
        Batch batch = {random_input(rng, cfg)};
        CHECK(forward_eval(p, cfg, batch).values() == forward_eval(q, cfg, batch).values());
        std::filesystem::remove(path);
    }
}

TEST_CASE("trained (off-grid) values survive one float rounding, then stabilize") {
    ModelConfig cfg = micro_config(ModelKind::transformer);
    ModelParams p = ModelParams::init(cfg, 1);
    p.at("head.b")[0] = 0.1 + 0.2;  // not float-representable
    auto path = tmp_path("kidc_ckpt_offgrid.bin");
    save_params(p, path.string());
    ModelParams once = load_params(path.string());
    save_params(once, path.string());
    ModelParams twice = load_params(path.string());
    CHECK(once.at("head.b").values() == twice.at("head.b").values());
    CHECK(once.at("head.b")[0] == doctest::Approx(0.3).epsilon(1e-7));
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejects bad magic, version, truncation, and corruption") {
    ModelConfig cfg = micro_config(ModelKind::rcnn);
    ModelParams p = ModelParams::init(cfg, 2);
    auto path = tmp_path("kidc_ckpt_bad.bin");
    save_params(p, path.string());

    auto mutate = [&](std::size_t offset, char value) {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(static_cast<std::streamoff>(offset));
        f.put(value);
    };

    SUBCASE("bad magic") {
        mutate(0, 'X');
        CHECK_THROWS_WITH_AS(load_params(path.string()),
                             (path.string() + ": bad magic, not a checkpoint file").c_str(),
                             InvalidInput);
    }
    SUBCASE("unsupported version") {
        mutate(4, 9);
        CHECK_THROWS_AS(load_params(path.string()), InvalidInput);
    }
    SUBCASE("payload corruption fails the CRC") {
        mutate(30, 'z');
        try {
            load_params(path.string());
            FAIL("expected InvalidInput");
        } catch (const InvalidInput& e) {
            CHECK(std::string(e.what()).find("CRC") != std::string::npos);
        }
    }
    SUBCASE("truncation") {
        auto size = std::filesystem::file_size(path);
        std::filesystem::resize_file(path, size - 7);
        CHECK_THROWS_AS(load_params(path.string()), InvalidInput);
    }
    std::filesystem::remove(path);
}

TEST_CASE("loading a transformer checkpoint into an rcnn config names the first missing tensor") {
    ModelConfig tf = micro_config(ModelKind::transformer);
    ModelParams p = ModelParams::init(tf, 3);
    auto path = tmp_path("kidc_ckpt_cross.bin");
    save_params(p, path.string());
    ModelConfig rc = micro_config(ModelKind::rcnn);
    CHECK_THROWS_WITH_AS(load_params_for(path.string(), rc),
                         "checkpoint does not fit config 'rcnn': missing tensor 'emb'",
                         InvalidInput);
    std::filesystem::remove(path);
}

TEST_CASE("unknown tensors are rejected when binding to a config") {
    ModelConfig cfg = micro_config(ModelKind::rcnn);
    ModelParams p = ModelParams::init(cfg, 3);
    auto entries = p.entries();
    entries.emplace_back("stowaway", Tensor({2}, {1.0, 2.0}));
    ModelParams extra = ModelParams::from_tensors(std::move(entries));
    auto path = tmp_path("kidc_ckpt_unknown.bin");
    save_params(extra, path.string());
    CHECK_THROWS_WITH_AS(load_params_for(path.string(), cfg),
                         "checkpoint has unknown tensor 'stowaway' for config 'rcnn'",
                         InvalidInput);
    std::filesystem::remove(path);
}

TEST_CASE("crc32 reference values") {
    // classic vectors for the IEEE polynomial
    const unsigned char check[] = {'1', '2', '3', '4', '5', '6', '7', '8', '9'};
    CHECK(crc32(check, 9) == 0xCBF43926u);
    CHECK(crc32(check, 0) == 0x00000000u);
}
