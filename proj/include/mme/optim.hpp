#pragma once

#include "mme/tensor.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace mme {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adaptive-moment optimizer with bias correction.
///
/// Only parameters that appear in the gradient set are touched. Learning rates
/// can be overridden per path prefix (longest matching prefix wins).
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    void set_learning_rate(const std::string& prefix, double lr);
    double learning_rate_for(const std::string& path) const;

    /// Throws std::runtime_error("non-finite gradient at <path>") before any
    /// parameter changes if a gradient entry is NaN or infinite.
    void step(ParameterSet& params, const ParameterSet& grads);

    std::size_t step_count() const { return steps_; }
    const AdamConfig& config() const { return config_; }

private:
    AdamConfig config_;
    std::vector<std::pair<std::string, double>> lr_overrides_;
    ParameterSet first_moment_;
    ParameterSet second_moment_;
    std::size_t steps_ = 0;
};

/// Single in-place update of one tensor at 1-based step `t`.
void adam_update(Tensor& weights, const Tensor& grad, Tensor& m, Tensor& v, const AdamConfig& config,
                 double learning_rate, std::size_t t);

} // namespace mme
