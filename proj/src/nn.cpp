#include "mme/nn.hpp"

#include <cmath>

namespace mme::nn {

using ad::Tape;
using ad::Var;

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w = Tensor::matrix(fan_in, fan_out);
    for (auto& x : w.values()) x = rng.uniform(-limit, limit);
    return w;
}

void init_linear(ParameterSet& params, const std::string& path, std::size_t in, std::size_t out, Rng& rng) {
    params.add(path + "/W", xavier_uniform(in, out, rng));
    params.add(path + "/b", Tensor::matrix(1, out));
}

Var linear(Tape& tape, const ParameterSet& params, const std::string& path, Var x) {
    return ad::add_row(ad::matmul(x, tape.parameter(params, path + "/W")), tape.parameter(params, path + "/b"));
}

void init_layer_norm(ParameterSet& params, const std::string& path, std::size_t width) {
    params.add(path + "/gain", Tensor::matrix(1, width, 1.0));
    params.add(path + "/bias", Tensor::matrix(1, width));
}

Var layer_norm(Tape& tape, const ParameterSet& params, const std::string& path, Var x) {
    return ad::layer_norm(x, tape.parameter(params, path + "/gain"), tape.parameter(params, path + "/bias"));
}

void init_mlp(ParameterSet& params, const std::string& path, const std::vector<std::size_t>& widths, Rng& rng) {
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        init_linear(params, path + "/" + std::to_string(i), widths[i], widths[i + 1], rng);
}

Var mlp(Tape& tape, const ParameterSet& params, const std::string& path, std::size_t layers, Var x) {
    for (std::size_t i = 0; i < layers; ++i) {
        x = linear(tape, params, path + "/" + std::to_string(i), x);
        if (i + 1 < layers) x = ad::relu(x);
    }
    return x;
}

void init_multi_head_attention(ParameterSet& params, const std::string& path, std::size_t d_model, Rng& rng) {
    init_layer_norm(params, path + "/norm", d_model);
    for (const char* name : {"/q", "/k", "/v", "/o"}) init_linear(params, path + name, d_model, d_model, rng);
}

Var multi_head_attention(Tape& tape, const ParameterSet& params, const std::string& path, Var x, std::size_t heads) {
    Var h = layer_norm(tape, params, path + "/norm", x);
    Var q = linear(tape, params, path + "/q", h);
    Var k = linear(tape, params, path + "/k", h);
    Var v = linear(tape, params, path + "/v", h);
    Var attended = ad::attention(q, k, v, heads);
    return ad::add(x, linear(tape, params, path + "/o", attended));
}

Var cross_attention(Tape& tape, const ParameterSet& params, const std::string& path, Var x, Var memory,
                    std::size_t heads) {
    Var h = layer_norm(tape, params, path + "/norm", x);
    Var q = linear(tape, params, path + "/q", h);
    Var k = linear(tape, params, path + "/k", memory);
    Var v = linear(tape, params, path + "/v", memory);
    Var attended = ad::attention(q, k, v, heads);
    return ad::add(x, linear(tape, params, path + "/o", attended));
}

void init_feed_forward(ParameterSet& params, const std::string& path, std::size_t d_model, std::size_t width,
                       Rng& rng) {
    init_layer_norm(params, path + "/norm", d_model);
    init_linear(params, path + "/in", d_model, width, rng);
    init_linear(params, path + "/out", width, d_model, rng);
}

Var feed_forward(Tape& tape, const ParameterSet& params, const std::string& path, Var x) {
    Var h = layer_norm(tape, params, path + "/norm", x);
    h = ad::relu(linear(tape, params, path + "/in", h));
    return ad::add(x, linear(tape, params, path + "/out", h));
}

void init_recurrent_cell(ParameterSet& params, const std::string& path, std::size_t d_in, std::size_t d_hidden,
                         Rng& rng) {
    // Gate order along columns: update z, reset r, candidate n.
    Tensor wx = Tensor::matrix(d_in, 3 * d_hidden);
    Tensor wh = Tensor::matrix(d_hidden, 3 * d_hidden);
    for (int g = 0; g < 3; ++g) {
        Tensor a = xavier_uniform(d_in, d_hidden, rng);
        Tensor b = xavier_uniform(d_hidden, d_hidden, rng);
        for (std::size_t i = 0; i < d_in; ++i)
            for (std::size_t j = 0; j < d_hidden; ++j) wx.at(i, g * d_hidden + j) = a.at(i, j);
        for (std::size_t i = 0; i < d_hidden; ++i)
            for (std::size_t j = 0; j < d_hidden; ++j) wh.at(i, g * d_hidden + j) = b.at(i, j);
    }
    params.add(path + "/Wx", std::move(wx));
    params.add(path + "/bx", Tensor::matrix(1, 3 * d_hidden));
    params.add(path + "/Wh", std::move(wh));
    params.add(path + "/bh", Tensor::matrix(1, 3 * d_hidden));
}

Var recurrent_step(Tape& tape, const ParameterSet& params, const std::string& path, Var projected_input, Var hidden) {
    const std::size_t h = hidden.cols();
    Var hh = ad::add_row(ad::matmul(hidden, tape.parameter(params, path + "/Wh")), tape.parameter(params, path + "/bh"));
    Var z = ad::sigmoid(ad::add(ad::slice_cols(projected_input, 0, h), ad::slice_cols(hh, 0, h)));
    Var r = ad::sigmoid(ad::add(ad::slice_cols(projected_input, h, h), ad::slice_cols(hh, h, h)));
    Var n = ad::tanh(ad::add(ad::slice_cols(projected_input, 2 * h, h), ad::mul(r, ad::slice_cols(hh, 2 * h, h))));
    // h' = n + z ⊙ (h − n)
    return ad::add(n, ad::mul(z, ad::sub(hidden, n)));
}

Var recurrent_forward(Tape& tape, const ParameterSet& params, const std::string& path, Var x_seq) {
    const std::size_t d_hidden = params.at(path + "/Wh").rows();
    Var projected =
        ad::add_row(ad::matmul(x_seq, tape.parameter(params, path + "/Wx")), tape.parameter(params, path + "/bx"));
    Var hidden = tape.constant(Tensor::matrix(1, d_hidden));
    for (std::size_t t = 0; t < x_seq.rows(); ++t)
        hidden = recurrent_step(tape, params, path, ad::slice_rows(projected, t, 1), hidden);
    return hidden;
}

Tensor sinusoidal_encoding(std::size_t length, std::size_t width) {
    Tensor pe = Tensor::matrix(length, width);
    for (std::size_t pos = 0; pos < length; ++pos)
        for (std::size_t i = 0; i < width; ++i) {
            const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(width));
            const double angle = static_cast<double>(pos) * freq;
            pe.at(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    return pe;
}

} // namespace mme::nn
