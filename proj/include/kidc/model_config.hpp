#pragma once

#include <cstdint>
#include <string>

namespace kidc::models {

enum class ModelKind { transformer, rcnn, bilstm_attn };

const char* kind_name(ModelKind k);
ModelKind kind_from_name(const std::string& name);

// One flat config covers all three architectures; each kind reads the fields
// it needs. The transformer block fields double as the contextual encoder of
// the attention model.
struct ModelConfig {
    ModelKind kind = ModelKind::transformer;
    std::size_t vocab_size = 0;
    std::size_t num_classes = 0;
    std::size_t max_len = 128;

    // transformer encoder
    std::size_t layers = 12;
    std::size_t heads = 12;
    std::size_t hidden = 768;
    std::size_t ff_inner = 3072;

    // rcnn
    std::size_t emb_dim = 128;
    std::size_t conv_width = 3;
    std::size_t conv_filters = 256;

    // shared recurrent width (rcnn and bilstm_attn), per direction
    std::size_t lstm_hidden = 256;

    // bilstm_attn
    std::size_t attn_dim = 256;
    bool freeze_encoder = false;

    double dropout = 0.0;

    void validate() const;

    std::string to_json_string() const;
    static ModelConfig from_json_string(const std::string& text);
    static ModelConfig load(const std::string& path);
    void save(const std::string& path) const;
};

// Dimensions as published: 12-layer/768-wide encoder, 128-d RCNN embeddings
// with 256 LSTM units per direction, sequence length 128. Constructible, but
// far too slow to train at desk scale.
ModelConfig paper_config(ModelKind kind, std::size_t vocab_size, std::size_t num_classes);

// Small dimensions for CI-scale verification.
ModelConfig desk_config(ModelKind kind, std::size_t vocab_size, std::size_t num_classes);

}  // namespace kidc::models
