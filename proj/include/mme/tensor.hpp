#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mme {

/// Dense row-major array of doubles. Rank-1 tensors behave as 1×n rows.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) { return Tensor({rows, cols}, fill); }
    static Tensor row(std::vector<double> values);
    static Tensor scalar(double v) { return Tensor({1, 1}, std::vector<double>{v}); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return values_.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool operator==(const Tensor&) const = default;

    void fill(double v);
    /// this += scale * other (same size)
    void add_scaled(const Tensor& other, double scale = 1.0);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

/// Named learned weights. Paths are unique and iterate in lexical order.
class ParameterSet {
public:
    using Map = std::map<std::string, Tensor>;

    Tensor& add(const std::string& path, Tensor value);
    bool contains(const std::string& path) const { return tensors_.count(path) != 0; }
    Tensor& at(const std::string& path);
    const Tensor& at(const std::string& path) const;
    void erase(const std::string& path) { tensors_.erase(path); }

    std::size_t size() const { return tensors_.size(); }
    bool empty() const { return tensors_.empty(); }
    std::size_t scalar_count() const;
    auto begin() { return tensors_.begin(); }
    auto end() { return tensors_.end(); }
    auto begin() const { return tensors_.begin(); }
    auto end() const { return tensors_.end(); }
    const Map& tensors() const { return tensors_; }

    /// Adds `other` elementwise; paths missing here are inserted.
    void accumulate(const ParameterSet& other, double scale = 1.0);
    /// Entries whose path starts with `prefix`.
    ParameterSet subset(const std::string& prefix) const;
    /// Copies all entries of `other` into this set, replacing existing paths.
    void merge(const ParameterSet& other);

    bool operator==(const ParameterSet&) const = default;

private:
    Map tensors_;
};

} // namespace mme
