#include "kidc/models.hpp"

#include <cmath>

#include "kidc/errors.hpp"

namespace kidc::models {

using num::Graph;
using num::Tensor;
using num::Var;

num::Var BoundParams::at(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) throw InvalidInput("no bound parameter named '" + name + "'");
    return vars[it->second].second;
}

BoundParams bind_params(Graph& g, const ModelParams& params, const ModelConfig& cfg) {
    params.validate_against(cfg);
    BoundParams bound;
    for (const auto& [name, tensor] : params.entries()) {
        bool frozen = cfg.freeze_encoder && name.rfind("enc.", 0) == 0;
        Var v = frozen ? g.value(tensor) : g.param(tensor);
        bound.index.emplace(name, bound.vars.size());
        bound.vars.emplace_back(name, v);
    }
    return bound;
}

namespace {

std::vector<int> real_ids(const tokenizer::TokenizedInput& t, const ModelConfig& cfg,
                          std::size_t batch_index) {
    std::string where = "batch entry " + std::to_string(batch_index);
    if (t.ids.size() != cfg.max_len || t.mask.size() != cfg.max_len) {
        throw InvalidInput(where + ": sequence length " + std::to_string(t.ids.size()) +
                           " does not match config max_len " + std::to_string(cfg.max_len));
    }
    if (t.real_len < 2 || t.real_len > cfg.max_len) {
        throw InvalidInput(where + ": real_len " + std::to_string(t.real_len) + " outside [2," +
                           std::to_string(cfg.max_len) + "]");
    }
    for (std::size_t i = 0; i < cfg.max_len; ++i) {
        int want = i < t.real_len ? 1 : 0;
        if (t.mask[i] != want) {
            throw InvalidInput(where + ": mask must be 1s followed by 0s matching real_len");
        }
    }
    return std::vector<int>(t.ids.begin(), t.ids.begin() + static_cast<std::ptrdiff_t>(t.real_len));
}

Var maybe_dropout(Graph& g, Var x, const ModelConfig& cfg, const ForwardOptions& opts) {
    if (!opts.train_mode || cfg.dropout == 0.0) return x;
    if (!opts.dropout_rng) {
        throw InvalidInput("train-mode forward with dropout needs a dropout RNG");
    }
    return g.dropout(x, cfg.dropout, *opts.dropout_rng, true);
}

// Positions run over the real prefix only; padding keys therefore receive
// exactly zero attention weight (they are absent from the softmax).
Var transformer_encoder(Graph& g, const BoundParams& bound, const ModelConfig& cfg,
                        const std::vector<int>& ids, const std::string& prefix,
                        const ForwardOptions& opts) {
    std::vector<int> positions(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<int>(i);
    Var x = g.add(g.embedding(bound.at(prefix + "tok_emb"), ids),
                  g.embedding(bound.at(prefix + "pos_emb"), positions));
    const std::size_t dk = cfg.hidden / cfg.heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        std::string base = prefix + "enc" + std::to_string(l) + ".";
        Var q = g.add_row(g.matmul(x, bound.at(base + "attn.wq")), bound.at(base + "attn.bq"));
        Var k = g.add_row(g.matmul(x, bound.at(base + "attn.wk")), bound.at(base + "attn.bk"));
        Var v = g.add_row(g.matmul(x, bound.at(base + "attn.wv")), bound.at(base + "attn.bv"));
        std::vector<Var> per_head;
        per_head.reserve(cfg.heads);
        for (std::size_t h = 0; h < cfg.heads; ++h) {
            Var qh = g.slice_cols(q, h * dk, dk);
            Var kh = g.slice_cols(k, h * dk, dk);
            Var vh = g.slice_cols(v, h * dk, dk);
            Var scores = g.scale(g.matmul(qh, g.transpose(kh)), inv_sqrt_dk);
            per_head.push_back(g.matmul(g.softmax(scores), vh));
        }
        Var ctx = per_head.size() == 1 ? per_head[0] : g.concat_cols(per_head);
        Var attn_out =
            g.add_row(g.matmul(ctx, bound.at(base + "attn.wo")), bound.at(base + "attn.bo"));
        attn_out = maybe_dropout(g, attn_out, cfg, opts);
        x = g.layer_norm(g.add(x, attn_out), bound.at(base + "norm1.gain"),
                         bound.at(base + "norm1.bias"));
        Var ff = g.gelu(g.add_row(g.matmul(x, bound.at(base + "ff.w1")), bound.at(base + "ff.b1")));
        ff = g.add_row(g.matmul(ff, bound.at(base + "ff.w2")), bound.at(base + "ff.b2"));
        ff = maybe_dropout(g, ff, cfg, opts);
        x = g.layer_norm(g.add(x, ff), bound.at(base + "norm2.gain"),
                         bound.at(base + "norm2.bias"));
    }
    return x;
}

// h/c start at zero; states come back in position order for either direction
std::vector<Var> lstm_run(Graph& g, const BoundParams& bound, Var input_rows, std::size_t len,
                          std::size_t hidden, const std::string& prefix, bool backward_dir) {
    Var w = bound.at(prefix + "w");
    Var u = bound.at(prefix + "u");
    Var b = bound.at(prefix + "b");
    Var h = g.value(Tensor({hidden}));
    Var c = g.value(Tensor({hidden}));
    std::vector<Var> states(len);
    for (std::size_t step = 0; step < len; ++step) {
        std::size_t t = backward_dir ? len - 1 - step : step;
        auto next = num::lstm_cell(g, g.row(input_rows, t), h, c, w, u, b);
        h = next.h;
        c = next.c;
        states[t] = h;
    }
    return states;
}

Var bilstm_states(Graph& g, const BoundParams& bound, Var input_rows, std::size_t len,
                  std::size_t hidden) {
    std::vector<Var> fw = lstm_run(g, bound, input_rows, len, hidden, "lstm.fw.", false);
    std::vector<Var> bw = lstm_run(g, bound, input_rows, len, hidden, "lstm.bw.", true);
    return g.concat_cols({g.stack_rows(fw), g.stack_rows(bw)});  // len × 2H
}

Var classifier(Graph& g, const BoundParams& bound, Var features) {
    return g.add(g.vecmat(features, bound.at("head.w")), bound.at("head.b"));
}

Var transformer_logits(Graph& g, const BoundParams& bound, const ModelConfig& cfg,
                       const std::vector<int>& ids, const ForwardOptions& opts) {
    Var x = transformer_encoder(g, bound, cfg, ids, "", opts);
    Var cls = g.row(x, 0);  // [CLS] pooling
    cls = maybe_dropout(g, cls, cfg, opts);
    return classifier(g, bound, cls);
}

Var rcnn_logits(Graph& g, const BoundParams& bound, const ModelConfig& cfg,
                const std::vector<int>& ids, const ForwardOptions& opts) {
    Var x = g.embedding(bound.at("emb"), ids);
    Var states = bilstm_states(g, bound, x, ids.size(), cfg.lstm_hidden);
    Var conv = g.add_row(g.conv1d(states, bound.at("conv.kernels"), num::ConvPadding::same),
                         bound.at("conv.bias"));
    Var pooled = g.max_pool_rows(g.relu(conv));  // over real positions only
    pooled = maybe_dropout(g, pooled, cfg, opts);
    return classifier(g, bound, pooled);
}

Var bilstm_attn_logits(Graph& g, const BoundParams& bound, const ModelConfig& cfg,
                       const std::vector<int>& ids, const ForwardOptions& opts) {
    Var enc = transformer_encoder(g, bound, cfg, ids, "enc.", opts);
    Var states = bilstm_states(g, bound, enc, ids.size(), cfg.lstm_hidden);
    Var pooled = num::attention_pool(g, states, bound.at("attn.w"), bound.at("attn.v"));
    pooled = maybe_dropout(g, pooled, cfg, opts);
    return classifier(g, bound, pooled);
}

}  // namespace

Var forward(Graph& g, const BoundParams& bound, const ModelConfig& cfg, const Batch& batch,
            const ForwardOptions& opts) {
    if (batch.empty()) throw InvalidInput("forward: empty batch");
    std::vector<Var> rows;
    rows.reserve(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
        std::vector<int> ids = real_ids(batch[b], cfg, b);
        switch (cfg.kind) {
            case ModelKind::transformer:
                rows.push_back(transformer_logits(g, bound, cfg, ids, opts));
                break;
            case ModelKind::rcnn:
                rows.push_back(rcnn_logits(g, bound, cfg, ids, opts));
                break;
            case ModelKind::bilstm_attn:
                rows.push_back(bilstm_attn_logits(g, bound, cfg, ids, opts));
                break;
        }
    }
    return g.stack_rows(rows);
}

Tensor forward_eval(const ModelParams& params, const ModelConfig& cfg, const Batch& batch) {
    Graph g;
    BoundParams bound = bind_params(g, params, cfg);
    return g.val(forward(g, bound, cfg, batch));
}

std::vector<int> predict(const Tensor& logits) {
    if (logits.rank() != 2) throw InvalidInput("predict: expected batch×classes logits");
    std::vector<int> out(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < logits.cols(); ++c) {
            if (logits.at(r, c) > logits.at(r, best)) best = c;  // ties keep the lowest id
        }
        out[r] = static_cast<int>(best);
    }
    return out;
}

}  // namespace kidc::models
