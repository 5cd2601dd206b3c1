#pragma once

#include <vector>

#include "kidc/model_config.hpp"
#include "kidc/rng.hpp"
#include "kidc/tokenizer.hpp"

namespace kidc::testing {

// Micro configs that keep unit tests fast while exercising every code path
// (multiple heads, multiple layers where it matters).
inline models::ModelConfig micro_config(models::ModelKind kind, std::size_t vocab = 12,
                                        std::size_t classes = 3) {
    models::ModelConfig c;
    c.kind = kind;
    c.vocab_size = vocab;
    c.num_classes = classes;
    c.max_len = 8;
    c.layers = 2;
    c.heads = 2;
    c.hidden = 8;
    c.ff_inner = 16;
    c.emb_dim = 6;
    c.conv_width = 3;
    c.conv_filters = 5;
    c.lstm_hidden = 4;
    c.attn_dim = 5;
    c.dropout = kind == models::ModelKind::transformer ? 0.0
                : kind == models::ModelKind::rcnn      ? 0.5
                                                       : 0.3;
    c.validate();
    return c;
}

inline tokenizer::TokenizedInput make_input(const std::vector<int>& content_ids,
                                            std::size_t max_len) {
    tokenizer::TokenizedInput t;
    t.ids.assign(max_len, tokenizer::kPadId);
    t.mask.assign(max_len, 0);
    t.ids[0] = tokenizer::kClsId;
    std::size_t at = 1;
    for (int id : content_ids) t.ids[at++] = id;
    t.ids[at++] = tokenizer::kSepId;
    t.real_len = at;
    for (std::size_t i = 0; i < t.real_len; ++i) t.mask[i] = 1;
    return t;
}

inline tokenizer::TokenizedInput random_input(num::Rng& rng, const models::ModelConfig& cfg) {
    std::size_t content = rng.index(cfg.max_len - 2);
    std::vector<int> ids(content);
    for (auto& id : ids) id = 4 + static_cast<int>(rng.index(cfg.vocab_size - 4));
    return make_input(ids, cfg.max_len);
}

}  // namespace kidc::testing
