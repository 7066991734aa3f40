#include "mme/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace mme {

GradCheckReport finite_difference_check(const ScalarFunction& value, const GradientFunction& gradient,
                                        ParameterSet point, const GradCheckOptions& options) {
    GradCheckReport report;
    const ParameterSet analytic = gradient(point);
    const double center = value(point);
    const double floor = options.absolute_floor * std::max(1.0, std::abs(center));
    for (auto& [path, tensor] : point) {
        const std::size_t n = tensor.size();
        std::size_t stride = 1;
        if (options.max_coordinates_per_tensor > 0 && n > options.max_coordinates_per_tensor)
            stride = (n + options.max_coordinates_per_tensor - 1) / options.max_coordinates_per_tensor;
        const Tensor* g = analytic.contains(path) ? &analytic.at(path) : nullptr;
        for (std::size_t i = 0; i < n; i += stride) {
            const double original = tensor[i];
            tensor[i] = original + options.step;
            const double plus = value(point);
            tensor[i] = original - options.step;
            const double minus = value(point);
            tensor[i] = original;
            const double numeric = (plus - minus) / (2.0 * options.step);
            const double right = (plus - center) / options.step, left = (center - minus) / options.step;
            if (std::abs(right - left) >
                options.kink_tolerance * std::max({std::abs(right), std::abs(left), floor})) {
                ++report.coordinates_skipped;
                continue;
            }
            const double a = g ? (*g)[i] : 0.0;
            const double abs_err = std::abs(a - numeric);
            const double rel_err = abs_err / std::max({std::abs(a), std::abs(numeric), floor});
            ++report.coordinates_checked;
            report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
            if (rel_err > report.max_relative_error) {
                report.max_relative_error = rel_err;
                report.worst_coordinate = path + "[" + std::to_string(i) + "]";
            }
        }
    }
    report.passed = report.max_relative_error <= options.tolerance;
    return report;
}

GradCheckReport finite_difference_check(const LossBuilder& loss, ParameterSet point, const GradCheckOptions& options) {
    auto value = [&](const ParameterSet& p) {
        ad::Tape tape;
        return loss(tape, p).value()[0];
    };
    auto gradient = [&](const ParameterSet& p) {
        ad::Tape tape;
        ad::Var out = loss(tape, p);
        tape.backward(out);
        return tape.gradients();
    };
    return finite_difference_check(value, gradient, std::move(point), options);
}

} // namespace mme
