#pragma once

// Parameterized layers built from autodiff primitives. Every layer stores its
// weights in a ParameterSet under a path prefix; `init_*` creates them and the
// matching forward function reads them.

#include "mme/autodiff.hpp"
#include "mme/rng.hpp"

#include <string>
#include <vector>

namespace mme::nn {

/// Uniform in ±sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

void init_linear(ParameterSet& params, const std::string& path, std::size_t in, std::size_t out, Rng& rng);
ad::Var linear(ad::Tape& tape, const ParameterSet& params, const std::string& path, ad::Var x);

void init_layer_norm(ParameterSet& params, const std::string& path, std::size_t width);
ad::Var layer_norm(ad::Tape& tape, const ParameterSet& params, const std::string& path, ad::Var x);

/// Dense layers "path/0" ... with ReLU between them and none after the last.
void init_mlp(ParameterSet& params, const std::string& path, const std::vector<std::size_t>& widths, Rng& rng);
ad::Var mlp(ad::Tape& tape, const ParameterSet& params, const std::string& path, std::size_t layers, ad::Var x);

/// Pre-norm self-attention block: x + W_o · MHA(LN(x)).
void init_multi_head_attention(ParameterSet& params, const std::string& path, std::size_t d_model, Rng& rng);
ad::Var multi_head_attention(ad::Tape& tape, const ParameterSet& params, const std::string& path, ad::Var x,
                             std::size_t heads);

/// Pre-norm cross-attention block: x + W_o · MHA(LN(x), memory).
ad::Var cross_attention(ad::Tape& tape, const ParameterSet& params, const std::string& path, ad::Var x,
                        ad::Var memory, std::size_t heads);

/// Pre-norm feed-forward block: x + W_2 · relu(W_1 · LN(x)).
void init_feed_forward(ParameterSet& params, const std::string& path, std::size_t d_model, std::size_t width,
                       Rng& rng);
ad::Var feed_forward(ad::Tape& tape, const ParameterSet& params, const std::string& path, ad::Var x);

/// Gated recurrent unit.
void init_recurrent_cell(ParameterSet& params, const std::string& path, std::size_t d_in, std::size_t d_hidden,
                         Rng& rng);
/// One step; `projected_input` is x_t·W_x + b_x (1×3h).
ad::Var recurrent_step(ad::Tape& tape, const ParameterSet& params, const std::string& path,
                       ad::Var projected_input, ad::Var hidden);
/// Runs the cell over the rows of x_seq from a zero state; returns the final hidden state (1×h).
ad::Var recurrent_forward(ad::Tape& tape, const ParameterSet& params, const std::string& path, ad::Var x_seq);

/// Standard sin/cos position table of shape length×width.
Tensor sinusoidal_encoding(std::size_t length, std::size_t width);

} // namespace mme::nn
