#pragma once

#include "mme/autodiff.hpp"

#include <functional>
#include <string>

namespace mme {

struct GradCheckReport {
    double max_relative_error = 0;
    double max_absolute_error = 0;
    std::string worst_coordinate;
    std::size_t coordinates_checked = 0;
    std::size_t coordinates_skipped = 0;  // non-smooth within ±step
    bool passed = true;
};

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    /// Gradients smaller than this (times max(1, |f|)) in both routes are compared in absolute terms.
    double absolute_floor = 1e-5;
    /// Coordinates whose one-sided slopes disagree by more than this (relative)
    /// straddle a kink (relu, clamp) and are skipped.
    double kink_tolerance = 1e-3;
    /// 0 checks every coordinate; otherwise at most this many evenly spaced ones per tensor.
    std::size_t max_coordinates_per_tensor = 0;
};

using ScalarFunction = std::function<double(const ParameterSet&)>;
using GradientFunction = std::function<ParameterSet(const ParameterSet&)>;
using LossBuilder = std::function<ad::Var(ad::Tape&, const ParameterSet&)>;

/// Compares `gradient` against central differences of `value` at `point`.
/// Relative error is |a − n| / max(|a|, |n|, absolute_floor · max(1, |f|)).
GradCheckReport finite_difference_check(const ScalarFunction& value, const GradientFunction& gradient,
                                        ParameterSet point, const GradCheckOptions& options = {});

/// Same, with both routes derived from a tape-built scalar loss.
GradCheckReport finite_difference_check(const LossBuilder& loss, ParameterSet point,
                                        const GradCheckOptions& options = {});

} // namespace mme
