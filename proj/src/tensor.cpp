#include "mme/tensor.hpp"

#include <functional>
#include <numeric>
#include <stdexcept>

namespace mme {

namespace {
std::size_t volume(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}
} // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
    for (auto d : shape_)
        if (d == 0) throw std::invalid_argument("tensor dimensions must be positive");
    values_.assign(volume(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    for (auto d : shape_)
        if (d == 0) throw std::invalid_argument("tensor dimensions must be positive");
    if (values_.size() != volume(shape_))
        throw std::invalid_argument("tensor value count " + std::to_string(values_.size()) +
                                    " does not match shape " + shape_string(shape_));
}

Tensor Tensor::row(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({1, n}, std::move(values));
}

std::size_t Tensor::rows() const {
    if (shape_.size() <= 1) return 1;
    return volume(shape_) / shape_.back();
}

std::size_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void Tensor::add_scaled(const Tensor& other, double scale) {
    if (other.size() != size()) throw std::invalid_argument("add_scaled: size mismatch");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * other.values_[i];
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
    return s + "]";
}

Tensor& ParameterSet::add(const std::string& path, Tensor value) {
    auto [it, inserted] = tensors_.insert_or_assign(path, std::move(value));
    return it->second;
}

Tensor& ParameterSet::at(const std::string& path) {
    auto it = tensors_.find(path);
    if (it == tensors_.end()) throw std::out_of_range("unknown parameter " + path);
    return it->second;
}

const Tensor& ParameterSet::at(const std::string& path) const {
    auto it = tensors_.find(path);
    if (it == tensors_.end()) throw std::out_of_range("unknown parameter " + path);
    return it->second;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : tensors_) n += t.size();
    return n;
}

void ParameterSet::accumulate(const ParameterSet& other, double scale) {
    for (const auto& [path, t] : other.tensors_) {
        auto it = tensors_.find(path);
        if (it == tensors_.end()) {
            Tensor copy = t;
            if (scale != 1.0)
                for (auto& v : copy.values()) v *= scale;
            tensors_.emplace(path, std::move(copy));
        } else {
            it->second.add_scaled(t, scale);
        }
    }
}

ParameterSet ParameterSet::subset(const std::string& prefix) const {
    ParameterSet out;
    for (auto it = tensors_.lower_bound(prefix); it != tensors_.end() && it->first.starts_with(prefix); ++it)
        out.tensors_.emplace(it->first, it->second);
    return out;
}

void ParameterSet::merge(const ParameterSet& other) {
    for (const auto& [path, t] : other.tensors_) tensors_.insert_or_assign(path, t);
}

} // namespace mme
