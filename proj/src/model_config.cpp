#include "kidc/model_config.hpp"

#include <fstream>

#include <json.hpp>

#include "kidc/errors.hpp"

namespace kidc::models {

const char* kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::transformer: return "transformer";
        case ModelKind::rcnn: return "rcnn";
        case ModelKind::bilstm_attn: return "bilstm-attn";
    }
    return "?";
}

ModelKind kind_from_name(const std::string& name) {
    if (name == "transformer") return ModelKind::transformer;
    if (name == "rcnn") return ModelKind::rcnn;
    if (name == "bilstm-attn" || name == "bilstm_attn") return ModelKind::bilstm_attn;
    throw InvalidInput("unknown model kind '" + name +
                       "'; expected transformer, rcnn, or bilstm-attn");
}

void ModelConfig::validate() const {
    if (vocab_size < 5) {
        throw InvalidInput("model config: vocab_size must cover the specials plus content, got " +
                           std::to_string(vocab_size));
    }
    if (num_classes < 1) throw InvalidInput("model config: num_classes must be >= 1");
    if (max_len < 3) throw InvalidInput("model config: max_len must be >= 3");
    if (dropout < 0.0 || dropout >= 1.0) {
        throw InvalidInput("model config: dropout must be in [0,1), got " +
                           std::to_string(dropout));
    }
    auto positive = [](std::size_t v, const char* what) {
        if (v == 0) throw InvalidInput(std::string("model config: ") + what + " must be >= 1");
    };
    if (kind == ModelKind::transformer || kind == ModelKind::bilstm_attn) {
        positive(layers, "layers");
        positive(heads, "heads");
        positive(hidden, "hidden");
        positive(ff_inner, "ff_inner");
        if (hidden % heads != 0) {
            throw InvalidInput("model config: hidden (" + std::to_string(hidden) +
                               ") must be divisible by heads (" + std::to_string(heads) + ")");
        }
    }
    if (kind == ModelKind::rcnn) {
        positive(emb_dim, "emb_dim");
        positive(conv_filters, "conv_filters");
        if (conv_width % 2 == 0) {
            throw InvalidInput("model config: conv_width must be odd for same-padding, got " +
                               std::to_string(conv_width));
        }
    }
    if (kind == ModelKind::rcnn || kind == ModelKind::bilstm_attn) positive(lstm_hidden, "lstm_hidden");
    if (kind == ModelKind::bilstm_attn) positive(attn_dim, "attn_dim");
}

std::string ModelConfig::to_json_string() const {
    nlohmann::json j;
    j["kind"] = kind_name(kind);
    j["vocab_size"] = vocab_size;
    j["num_classes"] = num_classes;
    j["max_len"] = max_len;
    j["layers"] = layers;
    j["heads"] = heads;
    j["hidden"] = hidden;
    j["ff_inner"] = ff_inner;
    j["emb_dim"] = emb_dim;
    j["conv_width"] = conv_width;
    j["conv_filters"] = conv_filters;
    j["lstm_hidden"] = lstm_hidden;
    j["attn_dim"] = attn_dim;
    j["freeze_encoder"] = freeze_encoder;
    j["dropout"] = dropout;
    return j.dump(1);
}

ModelConfig ModelConfig::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        ModelConfig c;
        c.kind = kind_from_name(j.at("kind").get<std::string>());
        c.vocab_size = j.at("vocab_size").get<std::size_t>();
        c.num_classes = j.at("num_classes").get<std::size_t>();
        c.max_len = j.at("max_len").get<std::size_t>();
        c.layers = j.at("layers").get<std::size_t>();
        c.heads = j.at("heads").get<std::size_t>();
        c.hidden = j.at("hidden").get<std::size_t>();
        c.ff_inner = j.at("ff_inner").get<std::size_t>();
        c.emb_dim = j.at("emb_dim").get<std::size_t>();
        c.conv_width = j.at("conv_width").get<std::size_t>();
        c.conv_filters = j.at("conv_filters").get<std::size_t>();
        c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
        c.attn_dim = j.at("attn_dim").get<std::size_t>();
        c.freeze_encoder = j.at("freeze_encoder").get<bool>();
        c.dropout = j.at("dropout").get<double>();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("model config JSON: ") + e.what());
    }
}

ModelConfig ModelConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open model config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

void ModelConfig::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write model config: " + path);
    out << to_json_string() << '\n';
    if (!out) throw RunFailure("failed writing model config: " + path);
}

ModelConfig paper_config(ModelKind kind, std::size_t vocab_size, std::size_t num_classes) {
    ModelConfig c;
    c.kind = kind;
    c.vocab_size = vocab_size;
    c.num_classes = num_classes;
    c.max_len = 128;
    switch (kind) {
        case ModelKind::transformer:
            c.layers = 12;
            c.heads = 12;
            c.hidden = 768;
            c.ff_inner = 3072;
            c.dropout = 0.0;
            break;
        case ModelKind::rcnn:
            c.emb_dim = 128;
            c.lstm_hidden = 256;
            c.conv_width = 3;
            c.conv_filters = 256;
            c.dropout = 0.5;
            break;
        case ModelKind::bilstm_attn:
            c.layers = 12;
            c.heads = 12;
            c.hidden = 768;
            c.ff_inner = 3072;
            c.lstm_hidden = 256;
            c.attn_dim = 256;
            c.dropout = 0.3;
            break;
    }
    c.validate();
    return c;
}

ModelConfig desk_config(ModelKind kind, std::size_t vocab_size, std::size_t num_classes) {
    ModelConfig c;
    c.kind = kind;
    c.vocab_size = vocab_size;
    c.num_classes = num_classes;
    c.max_len = 32;
    switch (kind) {
        case ModelKind::transformer:
            c.layers = 2;
            c.heads = 2;
            c.hidden = 64;
            c.ff_inner = 256;
            c.dropout = 0.0;
            break;
        case ModelKind::rcnn:
            c.emb_dim = 32;
            c.lstm_hidden = 32;
            c.conv_width = 3;
            c.conv_filters = 48;
            c.dropout = 0.5;
            break;
        case ModelKind::bilstm_attn:
            c.layers = 2;
            c.heads = 2;
            c.hidden = 64;
            c.ff_inner = 256;
            c.lstm_hidden = 32;
            c.attn_dim = 32;
            c.dropout = 0.3;
            break;
    }
    c.validate();
    return c;
}

}  // namespace kidc::models
