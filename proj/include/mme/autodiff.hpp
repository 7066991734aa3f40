#pragma once

// Tape-based reverse-mode differentiation over dense matrices.
//
// A Tape records every operation of one forward pass. Nodes hold their value;
// gradients are allocated lazily during backward(). A tape is single-threaded;
// independent tapes may run concurrently as long as the ParameterSet they
// read is not modified.

#include "mme/tensor.hpp"

#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mme::ad {

class Tape;

/// Handle to a node of a tape.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    Tape& tape() const { return *tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    int id_ = -1;
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Leaf whose gradient is kept and readable through grad().
    Var input(Tensor value);
    /// Leaf referencing a stored parameter (no copy); its gradient is reported under `path`.
    Var parameter(const ParameterSet& params, const std::string& path);

    /// Records an operation. `fn` is only invoked when some parent requires a gradient.
    Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
    Var record(Tensor value, std::span<const Var> parents, BackwardFn fn);

    const Tensor& value(Var v) const;
    bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
    /// Gradient buffer of v, zero-initialized on first access.
    Tensor& grad(Var v);
    bool has_grad(Var v) const { return nodes_[v.id()].has_grad; }

    /// Backpropagates from a 1×1 output.
    void backward(Var loss);
    void backward(Var output, const Tensor& seed);

    /// Adds parameter gradients (by path) into `into`.
    void accumulate_gradients(ParameterSet& into, double scale = 1.0) const;
    ParameterSet gradients() const;

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        const Tensor* ref = nullptr;
        Tensor grad;
        bool requires_grad = false;
        bool has_grad = false;
        std::string path;
        BackwardFn backward;
    };
    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }

// Linear algebra.
Var matmul(Var a, Var b);     // a[n×k] · b[k×m]
Var matmul_nt(Var a, Var b);  // a[n×k] · b[m×k]ᵀ
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);          // elementwise
Var add_row(Var a, Var row);    // broadcast 1×c over rows
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var mul_scalar(Var s, Var a);   // 1×1 variable times every element

// Elementwise nonlinearities.
Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var square(Var a);
/// log(max(a, floor)); zero gradient where clamped.
Var log_clamped(Var a, double floor);
Var minimum(Var a, Var b);
/// Hard clamp; zero gradient outside [lo, hi].
Var clamp(Var a, double lo, double hi);

// Reductions and reshaping.
Var sum_all(Var a);
Var mean_all(Var a);
Var mean_rows(Var a);                        // 1×c
Var sum_cols(Var a);                         // r×1
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var element(Var a, std::size_t r, std::size_t c);

// Neural building blocks.
Var softmax_rows(Var a);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
/// Multi-head scaled dot-product attention: per head softmax(Q_h K_hᵀ/√d_h) V_h,
/// heads concatenated along columns. q[n×d], k[m×d], v[m×dv].
Var attention(Var q, Var k, Var v, std::size_t heads);

inline constexpr double kProbabilityFloor = 1e-12;

/// Mean over rows of -log(max(p[r, target[r]], 1e-12)).
Var cross_entropy(Var probs, std::span<const int> targets);
/// Mean over rows of Σ_c P ln(P/Q) with both operands clamped below at 1e-12.
Var kl_divergence(Var p, Var q);

} // namespace mme::ad
