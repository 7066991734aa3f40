#include "mme/autodiff.hpp"

#include "mme/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mme::ad {

// ---------------------------------------------------------------------------
// Tape

Var Tape::constant(Tensor value) {
    Node node;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::input(Tensor value) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = true;
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::parameter(const ParameterSet& params, const std::string& path) {
    Node node;
    node.ref = &params.at(path);
    node.requires_grad = true;
    node.path = path;
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
    return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()), std::move(fn));
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn fn) {
    Node node;
    node.value = std::move(value);
    for (const Var& p : parents) {
        if (p.tape_ != this) throw std::logic_error("variable belongs to a different tape");
        node.requires_grad = node.requires_grad || nodes_[p.id_].requires_grad;
    }
    if (node.requires_grad) node.backward = std::move(fn);
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Tensor& Tape::value(Var v) const {
    const Node& n = nodes_[v.id()];
    return n.ref ? *n.ref : n.value;
}

Tensor& Tape::grad(Var v) {
    Node& n = nodes_[v.id()];
    if (!n.has_grad) {
        n.grad = Tensor(value(v).shape(), 0.0);
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::backward(Var loss) {
    if (value(loss).size() != 1) throw std::invalid_argument("backward() needs a scalar output");
    backward(loss, Tensor(value(loss).shape(), 1.0));
}

void Tape::backward(Var output, const Tensor& seed) {
    if (!seed.same_shape(value(output))) throw std::invalid_argument("backward seed shape mismatch");
    grad(output).add_scaled(seed);
    for (int i = output.id(); i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.has_grad || !n.backward) continue;
        n.backward(*this, n.grad);
    }
}

void Tape::accumulate_gradients(ParameterSet& into, double scale) const {
    for (const Node& n : nodes_) {
        if (n.path.empty() || !n.has_grad) continue;
        if (into.contains(n.path))
            into.at(n.path).add_scaled(n.grad, scale);
        else {
            Tensor g = n.grad;
            if (scale != 1.0)
                for (auto& x : g.values()) x *= scale;
            into.add(n.path, std::move(g));
        }
    }
}

ParameterSet Tape::gradients() const {
    ParameterSet out;
    accumulate_gradients(out);
    return out;
}

// ---------------------------------------------------------------------------
// Helpers

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

Tensor like(const Tensor& t, double fill = 0.0) { return Tensor(t.shape(), fill); }

Tensor mat(std::size_t r, std::size_t c) { return Tensor::matrix(r, c); }

} // namespace

// ---------------------------------------------------------------------------
// Linear algebra

Var matmul(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require(av.cols() == bv.rows(), "matmul: inner dimensions differ");
    const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
    Tensor out = mat(n, m);
    kernels::gemm_nn(av.values(), bv.values(), out.values(), n, k, m);
    return a.tape().record(std::move(out), {a, b}, [a, b, n, k, m](Tape& t, const Tensor& g) {
        if (t.requires_grad(a)) kernels::gemm_nt(g.values(), t.value(b).values(), t.grad(a).values(), n, m, k);
        if (t.requires_grad(b)) kernels::gemm_tn(t.value(a).values(), g.values(), t.grad(b).values(), k, n, m);
    });
}

Var matmul_nt(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require(av.cols() == bv.cols(), "matmul_nt: inner dimensions differ");
    const std::size_t n = av.rows(), k = av.cols(), m = bv.rows();
    Tensor out = mat(n, m);
    kernels::gemm_nt(av.values(), bv.values(), out.values(), n, k, m);
    return a.tape().record(std::move(out), {a, b}, [a, b, n, k, m](Tape& t, const Tensor& g) {
        if (t.requires_grad(a)) kernels::gemm_nn(g.values(), t.value(b).values(), t.grad(a).values(), n, m, k);
        if (t.requires_grad(b)) kernels::gemm_tn(g.values(), t.value(a).values(), t.grad(b).values(), m, n, k);
    });
}

Var add(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require(av.size() == bv.size() && av.rows() == bv.rows(), "add: shape mismatch");
    Tensor out = av;
    out.add_scaled(bv);
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        if (t.requires_grad(a)) t.grad(a).add_scaled(g);
        if (t.requires_grad(b)) t.grad(b).add_scaled(g);
    });
}

Var sub(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require(av.size() == bv.size() && av.rows() == bv.rows(), "sub: shape mismatch");
    Tensor out = av;
    out.add_scaled(bv, -1.0);
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        if (t.requires_grad(a)) t.grad(a).add_scaled(g);
        if (t.requires_grad(b)) t.grad(b).add_scaled(g, -1.0);
    });
}

Var mul(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require(av.size() == bv.size() && av.rows() == bv.rows(), "mul: shape mismatch");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad(a);
            const Tensor& bv = t.value(b);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.requires_grad(b)) {
            Tensor& gb = t.grad(b);
            const Tensor& av = t.value(a);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

Var add_row(Var a, Var row) {
    const Tensor& av = a.value();
    const Tensor& rv = row.value();
    require(rv.size() == av.cols(), "add_row: width mismatch");
    const std::size_t r = av.rows(), c = av.cols();
    Tensor out = av;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i * c + j] += rv[j];
    return a.tape().record(std::move(out), {a, row}, [a, row, r, c](Tape& t, const Tensor& g) {
        if (t.requires_grad(a)) t.grad(a).add_scaled(g);
        if (t.requires_grad(row)) {
            Tensor& gr = t.grad(row);
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gr[j] += g[i * c + j];
        }
    });
}

Var scale(Var a, double s) {
    Tensor out = a.value();
    for (auto& x : out.values()) x *= s;
    return a.tape().record(std::move(out), {a}, [a, s](Tape& t, const Tensor& g) { t.grad(a).add_scaled(g, s); });
}

Var add_scalar(Var a, double s) {
    Tensor out = a.value();
    for (auto& x : out.values()) x += s;
    return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) { t.grad(a).add_scaled(g); });
}

Var mul_scalar(Var s, Var a) {
    require(s.value().size() == 1, "mul_scalar: first operand must be 1x1");
    const double sv = s.value()[0];
    Tensor out = a.value();
    for (auto& x : out.values()) x *= sv;
    return a.tape().record(std::move(out), {s, a}, [s, a](Tape& t, const Tensor& g) {
        if (t.requires_grad(a)) t.grad(a).add_scaled(g, t.value(s)[0]);
        if (t.requires_grad(s)) {
            const Tensor& av = t.value(a);
            double acc = 0;
            for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
            t.grad(s)[0] += acc;
        }
    });
}

// ---------------------------------------------------------------------------
// Elementwise

namespace {

// Applies y = f(x) and records dy/dx computed from (x, y).
template <class F, class D>
Var elementwise(Var a, F f, D d) {
    const Tensor& av = a.value();
    Tensor out = like(av);
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
    Tensor y = out;
    return a.tape().record(std::move(out), {a}, [a, y = std::move(y), d](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(a);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g[i] * d(x[i], y[i]);
    });
}

} // namespace

Var relu(Var a) {
    return elementwise(a, [](double x) { return x > 0 ? x : 0.0; },
                       [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
    return elementwise(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
    return elementwise(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                       [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
    return elementwise(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var square(Var a) {
    return elementwise(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var log_clamped(Var a, double floor) {
    return elementwise(a, [floor](double x) { return std::log(std::max(x, floor)); },
                       [floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
}

Var clamp(Var a, double lo, double hi) {
    return elementwise(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
                       [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var minimum(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require(av.size() == bv.size() && av.rows() == bv.rows(), "minimum: shape mismatch");
    Tensor out = like(av);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(av[i], bv[i]);
    return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        const bool ga_needed = t.requires_grad(a), gb_needed = t.requires_grad(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            // Ties route the gradient to a.
            if (av[i] <= bv[i]) {
                if (ga_needed) t.grad(a)[i] += g[i];
            } else if (gb_needed) {
                t.grad(b)[i] += g[i];
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Reductions and reshaping

Var sum_all(Var a) {
    double s = 0;
    for (double x : a.value().values()) s += x;
    return a.tape().record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& g) {
        for (auto& x : t.grad(a).values()) x += g[0];
    });
}

Var mean_all(Var a) {
    const double n = static_cast<double>(a.value().size());
    double s = 0;
    for (double x : a.value().values()) s += x;
    return a.tape().record(Tensor::scalar(s / n), {a}, [a, n](Tape& t, const Tensor& g) {
        for (auto& x : t.grad(a).values()) x += g[0] / n;
    });
}

Var mean_rows(Var a) {
    const Tensor& av = a.value();
    const std::size_t r = av.rows(), c = av.cols();
    Tensor out = mat(1, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j] += av[i * c + j];
    for (auto& x : out.values()) x /= static_cast<double>(r);
    return a.tape().record(std::move(out), {a}, [a, r, c](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j] / static_cast<double>(r);
    });
}

Var sum_cols(Var a) {
    const Tensor& av = a.value();
    const std::size_t r = av.rows(), c = av.cols();
    Tensor out = mat(r, 1);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[i] += av[i * c + j];
    return a.tape().record(std::move(out), {a}, [a, r, c](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[i];
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
    const Tensor& av = a.value();
    const std::size_t r = av.rows(), c = av.cols();
    require(begin + count <= c && count > 0, "slice_cols: out of range");
    Tensor out = mat(r, count);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < count; ++j) out[i * count + j] = av[i * c + begin + j];
    return a.tape().record(std::move(out), {a}, [a, r, c, begin, count](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < count; ++j) ga[i * c + begin + j] += g[i * count + j];
    });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
    const Tensor& av = a.value();
    const std::size_t r = av.rows(), c = av.cols();
    require(begin + count <= r && count > 0, "slice_rows: out of range");
    Tensor out = mat(count, c);
    std::copy(av.data() + begin * c, av.data() + (begin + count) * c, out.data());
    return a.tape().record(std::move(out), {a}, [a, c, begin, count](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < count * c; ++i) ga[begin * c + i] += g[i];
    });
}

Var concat_cols(std::span<const Var> parts) {
    require(!parts.empty(), "concat_cols: no inputs");
    const std::size_t r = parts[0].rows();
    std::size_t total = 0;
    for (const Var& p : parts) {
        require(p.rows() == r, "concat_cols: row mismatch");
        total += p.cols();
    }
    Tensor out = mat(r, total);
    std::size_t offset = 0;
    for (const Var& p : parts) {
        const Tensor& pv = p.value();
        const std::size_t c = pv.cols();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) out[i * total + offset + j] = pv[i * c + j];
        offset += c;
    }
    std::vector<Var> saved(parts.begin(), parts.end());
    return parts[0].tape().record(std::move(out), parts, [saved, r, total](Tape& t, const Tensor& g) {
        std::size_t offset = 0;
        for (const Var& p : saved) {
            const std::size_t c = t.value(p).cols();
            if (t.requires_grad(p)) {
                Tensor& gp = t.grad(p);
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) gp[i * c + j] += g[i * total + offset + j];
            }
            offset += c;
        }
    });
}

Var concat_rows(std::span<const Var> parts) {
    require(!parts.empty(), "concat_rows: no inputs");
    const std::size_t c = parts[0].cols();
    std::size_t total = 0;
    for (const Var& p : parts) {
        require(p.cols() == c, "concat_rows: column mismatch");
        total += p.rows();
    }
    Tensor out = mat(total, c);
    std::size_t offset = 0;
    for (const Var& p : parts) {
        const Tensor& pv = p.value();
        std::copy(pv.data(), pv.data() + pv.size(), out.data() + offset);
        offset += pv.size();
    }
    std::vector<Var> saved(parts.begin(), parts.end());
    return parts[0].tape().record(std::move(out), parts, [saved](Tape& t, const Tensor& g) {
        std::size_t offset = 0;
        for (const Var& p : saved) {
            const std::size_t n = t.value(p).size();
            if (t.requires_grad(p)) {
                Tensor& gp = t.grad(p);
                for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
            }
            offset += n;
        }
    });
}

Var element(Var a, std::size_t r, std::size_t c) {
    const Tensor& av = a.value();
    require(r < av.rows() && c < av.cols(), "element: out of range");
    const std::size_t idx = r * av.cols() + c;
    return a.tape().record(Tensor::scalar(av[idx]), {a}, [a, idx](Tape& t, const Tensor& g) { t.grad(a)[idx] += g[0]; });
}

// ---------------------------------------------------------------------------
// Neural building blocks

namespace {

void softmax_row(const double* in, double* out, std::size_t n) {
    double mx = in[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, in[j]);
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = std::exp(in[j] - mx);
        s += out[j];
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= s;
}

// dx = y ⊙ (dy − <dy, y>) for one row.
void softmax_row_backward(const double* y, const double* dy, double* dx, std::size_t n) {
    double d = 0;
    for (std::size_t j = 0; j < n; ++j) d += dy[j] * y[j];
    for (std::size_t j = 0; j < n; ++j) dx[j] += y[j] * (dy[j] - d);
}

} // namespace

Var softmax_rows(Var a) {
    const Tensor& av = a.value();
    const std::size_t r = av.rows(), c = av.cols();
    Tensor out = like(av);
    for (std::size_t i = 0; i < r; ++i) softmax_row(av.data() + i * c, out.data() + i * c, c);
    Tensor y = out;
    return a.tape().record(std::move(out), {a}, [a, y = std::move(y), r, c](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < r; ++i)
            softmax_row_backward(y.data() + i * c, g.data() + i * c, ga.data() + i * c, c);
    });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
    const Tensor& xv = x.value();
    const std::size_t r = xv.rows(), c = xv.cols();
    require(gain.value().size() == c && bias.value().size() == c, "layer_norm: parameter width mismatch");
    const Tensor& gv = gain.value();
    const Tensor& bv = bias.value();
    Tensor out = like(xv);
    Tensor xhat = like(xv);
    std::vector<double> inv_std(r);
    for (std::size_t i = 0; i < r; ++i) {
        const double* row = xv.data() + i * c;
        double mean = 0;
        for (std::size_t j = 0; j < c; ++j) mean += row[j];
        mean /= static_cast<double>(c);
        double var = 0;
        for (std::size_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<double>(c);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < c; ++j) {
            xhat[i * c + j] = (row[j] - mean) * inv_std[i];
            out[i * c + j] = gv[j] * xhat[i * c + j] + bv[j];
        }
    }
    return x.tape().record(
        std::move(out), {x, gain, bias},
        [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std), r, c](Tape& t, const Tensor& g) {
            const Tensor& gv = t.value(gain);
            if (t.requires_grad(gain)) {
                Tensor& gg = t.grad(gain);
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) gg[j] += g[i * c + j] * xhat[i * c + j];
            }
            if (t.requires_grad(bias)) {
                Tensor& gb = t.grad(bias);
                for (std::size_t i = 0; i < r; ++i)
                    for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
            }
            if (t.requires_grad(x)) {
                Tensor& gx = t.grad(x);
                const double n = static_cast<double>(c);
                for (std::size_t i = 0; i < r; ++i) {
                    double m1 = 0, m2 = 0;
                    for (std::size_t j = 0; j < c; ++j) {
                        const double dxh = g[i * c + j] * gv[j];
                        m1 += dxh;
                        m2 += dxh * xhat[i * c + j];
                    }
                    m1 /= n;
                    m2 /= n;
                    for (std::size_t j = 0; j < c; ++j) {
                        const double dxh = g[i * c + j] * gv[j];
                        gx[i * c + j] += inv_std[i] * (dxh - m1 - xhat[i * c + j] * m2);
                    }
                }
            }
        });
}

Var attention(Var q, Var k, Var v, std::size_t heads) {
    const Tensor& qv = q.value();
    const Tensor& kv = k.value();
    const Tensor& vv = v.value();
    const std::size_t n = qv.rows(), d = qv.cols(), m = kv.rows(), dv = vv.cols();
    require(kv.cols() == d, "attention: query/key width mismatch");
    require(vv.rows() == m, "attention: key/value length mismatch");
    require(heads > 0 && d % heads == 0 && dv % heads == 0, "attention: width not divisible by head count");
    const std::size_t dh = d / heads, dvh = dv / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor out = mat(n, dv);
    Tensor probs({heads, n, m}, 0.0);  // saved for backward
    std::vector<double> scores(m);
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* qi = qv.data() + i * d + h * dh;
            for (std::size_t j = 0; j < m; ++j) {
                const double* kj = kv.data() + j * d + h * dh;
                double s = 0;
                for (std::size_t p = 0; p < dh; ++p) s += qi[p] * kj[p];
                scores[j] = s * inv_sqrt;
            }
            double* p = probs.data() + (h * n + i) * m;
            softmax_row(scores.data(), p, m);
            double* oi = out.data() + i * dv + h * dvh;
            for (std::size_t j = 0; j < m; ++j) {
                const double* vj = vv.data() + j * dv + h * dvh;
                const double pj = p[j];
                for (std::size_t c = 0; c < dvh; ++c) oi[c] += pj * vj[c];
            }
        }
    }
    return q.tape().record(
        std::move(out), {q, k, v},
        [q, k, v, probs = std::move(probs), n, d, m, dv, dh, dvh, heads, inv_sqrt](Tape& t, const Tensor& g) {
            const Tensor& qv = t.value(q);
            const Tensor& kv = t.value(k);
            const Tensor& vv = t.value(v);
            const bool need_q = t.requires_grad(q), need_k = t.requires_grad(k), need_v = t.requires_grad(v);
            double* gq = need_q ? t.grad(q).data() : nullptr;
            double* gk = need_k ? t.grad(k).data() : nullptr;
            double* gv = need_v ? t.grad(v).data() : nullptr;
            std::vector<double> dp(m), ds(m);
            for (std::size_t h = 0; h < heads; ++h) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double* p = probs.data() + (h * n + i) * m;
                    const double* gi = g.data() + i * dv + h * dvh;
                    for (std::size_t j = 0; j < m; ++j) {
                        const double* vj = vv.data() + j * dv + h * dvh;
                        double s = 0;
                        for (std::size_t c = 0; c < dvh; ++c) s += gi[c] * vj[c];
                        dp[j] = s;
                        if (gv) {
                            double* gvj = gv + j * dv + h * dvh;
                            for (std::size_t c = 0; c < dvh; ++c) gvj[c] += p[j] * gi[c];
                        }
                    }
                    std::fill(ds.begin(), ds.end(), 0.0);
                    softmax_row_backward(p, dp.data(), ds.data(), m);
                    const double* qi = qv.data() + i * d + h * dh;
                    for (std::size_t j = 0; j < m; ++j) {
                        const double sj = ds[j] * inv_sqrt;
                        if (sj == 0.0) continue;
                        const double* kj = kv.data() + j * d + h * dh;
                        if (gq) {
                            double* gqi = gq + i * d + h * dh;
                            for (std::size_t c = 0; c < dh; ++c) gqi[c] += sj * kj[c];
                        }
                        if (gk) {
                            double* gkj = gk + j * d + h * dh;
                            for (std::size_t c = 0; c < dh; ++c) gkj[c] += sj * qi[c];
                        }
                    }
                }
            }
        });
}

Var cross_entropy(Var probs, std::span<const int> targets) {
    const Tensor& pv = probs.value();
    const std::size_t r = pv.rows(), c = pv.cols();
    require(targets.size() == r, "cross_entropy: one target per row required");
    std::vector<int> tgt(targets.begin(), targets.end());
    double loss = 0;
    for (std::size_t i = 0; i < r; ++i) {
        if (tgt[i] < 0 || static_cast<std::size_t>(tgt[i]) >= c)
            throw std::invalid_argument("cross_entropy: invalid target index");
        loss -= std::log(std::max(pv[i * c + tgt[i]], kProbabilityFloor));
    }
    loss /= static_cast<double>(r);
    return probs.tape().record(Tensor::scalar(loss), {probs}, [probs, tgt = std::move(tgt), r, c](Tape& t, const Tensor& g) {
        const Tensor& pv = t.value(probs);
        Tensor& gp = t.grad(probs);
        for (std::size_t i = 0; i < r; ++i) {
            const double p = pv[i * c + tgt[i]];
            if (p > kProbabilityFloor) gp[i * c + tgt[i]] -= g[0] / (p * static_cast<double>(r));
        }
    });
}

Var kl_divergence(Var p, Var q) {
    const Tensor& pv = p.value();
    const Tensor& qv = q.value();
    require(pv.rows() == qv.rows() && pv.cols() == qv.cols(), "kl_divergence: length mismatch");
    const std::size_t r = pv.rows(), c = pv.cols();
    double loss = 0;
    for (std::size_t i = 0; i < r * c; ++i) {
        const double pc = std::max(pv[i], kProbabilityFloor);
        const double qc = std::max(qv[i], kProbabilityFloor);
        loss += pc * std::log(pc / qc);
    }
    loss /= static_cast<double>(r);
    return p.tape().record(Tensor::scalar(loss), {p, q}, [p, q, r, c](Tape& t, const Tensor& g) {
        const Tensor& pv = t.value(p);
        const Tensor& qv = t.value(q);
        const double w = g[0] / static_cast<double>(r);
        const bool need_p = t.requires_grad(p), need_q = t.requires_grad(q);
        for (std::size_t i = 0; i < r * c; ++i) {
            const double pc = std::max(pv[i], kProbabilityFloor);
            const double qc = std::max(qv[i], kProbabilityFloor);
            if (need_p && pv[i] > kProbabilityFloor) t.grad(p)[i] += w * (std::log(pc / qc) + 1.0);
            if (need_q && qv[i] > kProbabilityFloor) t.grad(q)[i] -= w * pc / qc;
        }
    });
}

} // namespace mme::ad
