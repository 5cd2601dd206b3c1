#include "kidc/model_params.hpp"

#include <cmath>

#include "kidc/errors.hpp"
#include "kidc/rng.hpp"

namespace kidc::models {

namespace {

void add_transformer_encoder(std::vector<ParamSpec>& schema, const ModelConfig& cfg,
                             const std::string& prefix) {
    schema.push_back({prefix + "tok_emb", {cfg.vocab_size, cfg.hidden}, ParamInit::embedding_normal,
                      true});
    schema.push_back({prefix + "pos_emb", {cfg.max_len, cfg.hidden}, ParamInit::embedding_normal,
                      true});
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        std::string base = prefix + "enc" + std::to_string(l) + ".";
        for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
            schema.push_back({base + w, {cfg.hidden, cfg.hidden}, ParamInit::xavier, false});
        }
        for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) {
            schema.push_back({base + b, {cfg.hidden}, ParamInit::zeros, true});
        }
        schema.push_back({base + "norm1.gain", {cfg.hidden}, ParamInit::ones, true});
        schema.push_back({base + "norm1.bias", {cfg.hidden}, ParamInit::zeros, true});
        schema.push_back({base + "ff.w1", {cfg.hidden, cfg.ff_inner}, ParamInit::xavier, false});
        schema.push_back({base + "ff.b1", {cfg.ff_inner}, ParamInit::zeros, true});
        schema.push_back({base + "ff.w2", {cfg.ff_inner, cfg.hidden}, ParamInit::xavier, false});
        schema.push_back({base + "ff.b2", {cfg.hidden}, ParamInit::zeros, true});
        schema.push_back({base + "norm2.gain", {cfg.hidden}, ParamInit::ones, true});
        schema.push_back({base + "norm2.bias", {cfg.hidden}, ParamInit::zeros, true});
    }
}

void add_bilstm(std::vector<ParamSpec>& schema, std::size_t input_dim, std::size_t hidden) {
    for (const char* dir : {"lstm.fw.", "lstm.bw."}) {
        schema.push_back({std::string(dir) + "w", {input_dim, 4 * hidden}, ParamInit::xavier,
                          false});
        schema.push_back({std::string(dir) + "u", {hidden, 4 * hidden}, ParamInit::xavier, false});
        schema.push_back({std::string(dir) + "b", {4 * hidden}, ParamInit::lstm_bias, true});
    }
}

}  // namespace

std::vector<ParamSpec> param_schema(const ModelConfig& cfg) {
    cfg.validate();
    std::vector<ParamSpec> schema;
    switch (cfg.kind) {
        case ModelKind::transformer: {
            add_transformer_encoder(schema, cfg, "");
            schema.push_back({"head.w", {cfg.hidden, cfg.num_classes}, ParamInit::xavier, false});
            schema.push_back({"head.b", {cfg.num_classes}, ParamInit::zeros, true});
            break;
        }
        case ModelKind::rcnn: {
            schema.push_back({"emb", {cfg.vocab_size, cfg.emb_dim}, ParamInit::embedding_normal,
                              true});
            add_bilstm(schema, cfg.emb_dim, cfg.lstm_hidden);
            schema.push_back({"conv.kernels",
                              {cfg.conv_width, 2 * cfg.lstm_hidden, cfg.conv_filters},
                              ParamInit::xavier, false});
            schema.push_back({"conv.bias", {cfg.conv_filters}, ParamInit::zeros, true});
            schema.push_back({"head.w", {cfg.conv_filters, cfg.num_classes}, ParamInit::xavier,
                              false});
            schema.push_back({"head.b", {cfg.num_classes}, ParamInit::zeros, true});
            break;
        }
        case ModelKind::bilstm_attn: {
            add_transformer_encoder(schema, cfg, "enc.");
            add_bilstm(schema, cfg.hidden, cfg.lstm_hidden);
            schema.push_back({"attn.w", {2 * cfg.lstm_hidden, cfg.attn_dim}, ParamInit::xavier,
                              false});
            schema.push_back({"attn.v", {cfg.attn_dim}, ParamInit::xavier, false});
            schema.push_back({"head.w", {2 * cfg.lstm_hidden, cfg.num_classes}, ParamInit::xavier,
                              false});
            schema.push_back({"head.b", {cfg.num_classes}, ParamInit::zeros, true});
            break;
        }
    }
    return schema;
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
    num::Rng rng = num::Rng::stream(seed, 0x1817);
    std::vector<std::pair<std::string, num::Tensor>> entries;
    // every drawn value passes through float so checkpoints (32-bit values)
    // round-trip bit-exactly on fresh parameters
    auto grid = [](double v) { return static_cast<double>(static_cast<float>(v)); };
    for (const ParamSpec& spec : param_schema(cfg)) {
        num::Tensor t(spec.dims);
        switch (spec.init) {
            case ParamInit::zeros:
                break;
            case ParamInit::ones:
                t.fill(1.0);
                break;
            case ParamInit::embedding_normal:
                for (auto& v : t.values()) v = grid(rng.normal(0.0, 0.02));
                break;
            case ParamInit::lstm_bias: {
                std::size_t h = spec.dims[0] / 4;
                // forget-gate bias starts at 1.0 (common LSTM stabilization)
                for (std::size_t i = h; i < 2 * h; ++i) t[i] = 1.0;
                break;
            }
            case ParamInit::xavier: {
                double fan_in = 0, fan_out = 0;
                if (spec.dims.size() == 1) {
                    fan_in = static_cast<double>(spec.dims[0]);
                    fan_out = 1.0;
                } else if (spec.dims.size() == 2) {
                    fan_in = static_cast<double>(spec.dims[0]);
                    fan_out = static_cast<double>(spec.dims[1]);
                } else {
                    fan_in = static_cast<double>(spec.dims[0] * spec.dims[1]);
                    fan_out = static_cast<double>(spec.dims[0] * spec.dims[2]);
                }
                double limit = std::sqrt(6.0 / (fan_in + fan_out));
                for (auto& v : t.values()) v = grid(rng.uniform(-limit, limit));
                break;
            }
        }
        entries.emplace_back(spec.name, std::move(t));
    }
    return from_tensors(std::move(entries));
}

ModelParams ModelParams::from_tensors(std::vector<std::pair<std::string, num::Tensor>> entries) {
    ModelParams p;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!p.index_.emplace(entries[i].first, i).second) {
            throw InvalidInput("duplicate parameter tensor '" + entries[i].first + "'");
        }
    }
    p.entries_ = std::move(entries);
    return p;
}

num::Tensor& ModelParams::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidInput("no parameter tensor named '" + name + "'");
    return entries_[it->second].second;
}

const num::Tensor& ModelParams::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InvalidInput("no parameter tensor named '" + name + "'");
    return entries_[it->second].second;
}

std::size_t ModelParams::total_values() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += t.size();
    return n;
}

void ModelParams::validate_against(const ModelConfig& cfg) const {
    std::vector<ParamSpec> schema = param_schema(cfg);
    std::unordered_map<std::string, const ParamSpec*> by_name;
    for (const ParamSpec& s : schema) by_name.emplace(s.name, &s);
    for (const ParamSpec& s : schema) {
        if (!has(s.name)) {
            throw InvalidInput("checkpoint does not fit config '" + std::string(kind_name(cfg.kind)) +
                               "': missing tensor '" + s.name + "'");
        }
    }
    for (const auto& [name, t] : entries_) {
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw InvalidInput("checkpoint has unknown tensor '" + name + "' for config '" +
                               kind_name(cfg.kind) + "'");
        }
        if (t.dims() != it->second->dims) {
            std::string want = "[";
            for (std::size_t i = 0; i < it->second->dims.size(); ++i) {
                if (i) want += "x";
                want += std::to_string(it->second->dims[i]);
            }
            want += "]";
            throw InvalidInput("tensor '" + name + "' has shape " + t.shape_str() + ", config '" +
                               kind_name(cfg.kind) + "' requires " + want);
        }
    }
}

}  // namespace kidc::models
