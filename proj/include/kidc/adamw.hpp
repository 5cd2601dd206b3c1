#pragma once

#include <string>
#include <unordered_map>

#include "kidc/model_params.hpp"
#include "kidc/tensor.hpp"

namespace kidc::training {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.01;
};

// Adam moment updates with bias correction, then decoupled weight decay
// applied directly to the parameter (never through the gradient/moment path):
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * weight_decay * p
// Embedding, bias, and normalization-gain tensors are exempt from decay, as
// marked in the parameter schema.
class AdamW {
public:
    AdamW(const AdamWConfig& cfg, const std::vector<models::ParamSpec>& schema);

    // grads holds one tensor per trainable parameter; frozen tensors are
    // absent and stay untouched. lr is the already-scheduled rate.
    void step(models::ModelParams& params,
              const std::unordered_map<std::string, num::Tensor>& grads, double lr);

    std::size_t step_count() const { return t_; }

private:
    AdamWConfig cfg_;
    std::unordered_map<std::string, bool> decay_exempt_;
    std::unordered_map<std::string, num::Tensor> m_;
    std::unordered_map<std::string, num::Tensor> v_;
    std::size_t t_ = 0;
};

}  // namespace kidc::training
