#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kidc/model_config.hpp"
#include "kidc/tensor.hpp"

namespace kidc::models {

enum class ParamInit {
    xavier,            // uniform +-sqrt(6/(fan_in+fan_out))
    zeros,
    ones,              // layer-norm gains
    embedding_normal,  // N(0, 0.02)
    lstm_bias,         // zeros with the forget-gate section at 1.0
};

struct ParamSpec {
    std::string name;
    std::vector<std::size_t> dims;
    ParamInit init = ParamInit::zeros;
    bool decay_exempt = false;  // embeddings, biases, norm gains skip weight decay
};

// Tensor names and shapes are derivable from the config alone; this is the
// single source of truth for initialization, checkpoint validation, and the
// optimizer's decay-exemption list.
std::vector<ParamSpec> param_schema(const ModelConfig& cfg);

// Named parameter tensors in schema order (or file order when loaded).
class ModelParams {
public:
    static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);
    static ModelParams from_tensors(std::vector<std::pair<std::string, num::Tensor>> entries);

    bool has(const std::string& name) const { return index_.count(name) > 0; }
    num::Tensor& at(const std::string& name);
    const num::Tensor& at(const std::string& name) const;
    std::vector<std::pair<std::string, num::Tensor>>& entries() { return entries_; }
    const std::vector<std::pair<std::string, num::Tensor>>& entries() const { return entries_; }
    std::size_t total_values() const;

    // Missing tensor (first in schema order), unknown tensor, or shape
    // mismatch, each named explicitly.
    void validate_against(const ModelConfig& cfg) const;

private:
    std::vector<std::pair<std::string, num::Tensor>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace kidc::models
