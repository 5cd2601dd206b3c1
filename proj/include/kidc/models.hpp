#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "kidc/graph.hpp"
#include "kidc/model_config.hpp"
#include "kidc/model_params.hpp"
#include "kidc/tokenizer.hpp"

namespace kidc::models {

using Batch = std::vector<tokenizer::TokenizedInput>;

struct ForwardOptions {
    bool train_mode = false;
    num::Rng* dropout_rng = nullptr;  // required when train_mode is set and dropout > 0
};

// Parameters registered as graph leaves. With freeze_encoder the encoder
// tensors become constants, so they get no gradients and sit out of updates.
struct BoundParams {
    std::vector<std::pair<std::string, num::Var>> vars;
    std::unordered_map<std::string, std::size_t> index;

    num::Var at(const std::string& name) const;
};

BoundParams bind_params(num::Graph& g, const ModelParams& params, const ModelConfig& cfg);

// Dispatches on cfg.kind. Processes each sequence over its real (non-pad)
// prefix only, so logits are a function of the real tokens and the mask alone.
// Returns batch×num_classes logits.
num::Var forward(num::Graph& g, const BoundParams& bound, const ModelConfig& cfg,
                 const Batch& batch, const ForwardOptions& opts = {});

// Fresh-graph eval-mode convenience.
num::Tensor forward_eval(const ModelParams& params, const ModelConfig& cfg, const Batch& batch);

// Argmax per row; ties go to the lowest class id.
std::vector<int> predict(const num::Tensor& logits);

}  // namespace kidc::models
