#include "kidc/adamw.hpp"

#include <cmath>

#include "kidc/errors.hpp"

namespace kidc::training {

AdamW::AdamW(const AdamWConfig& cfg, const std::vector<models::ParamSpec>& schema) : cfg_(cfg) {
    if (cfg.beta1 < 0 || cfg.beta1 >= 1 || cfg.beta2 < 0 || cfg.beta2 >= 1 || cfg.epsilon <= 0 ||
        cfg.weight_decay < 0) {
        throw InvalidInput("adamw: invalid hyperparameters");
    }
    for (const auto& spec : schema) decay_exempt_.emplace(spec.name, spec.decay_exempt);
}

void AdamW::step(models::ModelParams& params,
                 const std::unordered_map<std::string, num::Tensor>& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& [name, p] : params.entries()) {
        auto git = grads.find(name);
        if (git == grads.end()) continue;  // frozen or unused tensors stay put
        const num::Tensor& g = git->second;
        if (!g.same_shape(p)) {
            throw InvalidInput("adamw: gradient shape " + g.shape_str() + " for tensor '" + name +
                               "' of shape " + p.shape_str());
        }
        if (!g.all_finite()) {
            throw RunFailure("adamw: non-finite gradient in tensor '" + name + "', run aborted");
        }
        auto mit = m_.find(name);
        if (mit == m_.end()) {
            mit = m_.emplace(name, num::Tensor(p.dims())).first;
            v_.emplace(name, num::Tensor(p.dims()));
        }
        num::Tensor& m = mit->second;
        num::Tensor& v = v_.at(name);
        auto exempt_it = decay_exempt_.find(name);
        bool exempt = exempt_it != decay_exempt_.end() && exempt_it->second;
        double decay = exempt ? 0.0 : cfg_.weight_decay;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            double m_hat = m[i] / bc1;
            double v_hat = v[i] / bc2;
            double old = p[i];
            p[i] = old - lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon) - lr * decay * old;
        }
    }
}

}  // namespace kidc::training
