#include "mme/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace mme {

void Adam::set_learning_rate(const std::string& prefix, double lr) {
    for (auto& [p, v] : lr_overrides_)
        if (p == prefix) {
            v = lr;
            return;
        }
    lr_overrides_.emplace_back(prefix, lr);
}

double Adam::learning_rate_for(const std::string& path) const {
    double lr = config_.learning_rate;
    std::size_t best = 0;
    for (const auto& [prefix, v] : lr_overrides_)
        if (path.starts_with(prefix) && prefix.size() >= best) {
            best = prefix.size();
            lr = v;
        }
    return lr;
}

void adam_update(Tensor& weights, const Tensor& grad, Tensor& m, Tensor& v, const AdamConfig& config,
                 double learning_rate, std::size_t t) {
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < weights.size(); ++i) {
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        weights[i] -= learning_rate * mhat / (std::sqrt(vhat) + config.eps);
    }
}

void Adam::step(ParameterSet& params, const ParameterSet& grads) {
    for (const auto& [path, g] : grads) {
        if (!params.contains(path)) throw std::invalid_argument("gradient for unknown parameter " + path);
        if (g.size() != params.at(path).size()) throw std::invalid_argument("gradient shape mismatch at " + path);
        for (double x : g.values())
            if (!std::isfinite(x)) throw std::runtime_error("non-finite gradient at " + path);
    }
    ++steps_;
    for (const auto& [path, g] : grads) {
        Tensor& w = params.at(path);
        if (!first_moment_.contains(path)) {
            first_moment_.add(path, Tensor(w.shape(), 0.0));
            second_moment_.add(path, Tensor(w.shape(), 0.0));
        }
        adam_update(w, g, first_moment_.at(path), second_moment_.at(path), config_, learning_rate_for(path), steps_);
    }
}

} // namespace mme
