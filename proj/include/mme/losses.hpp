#pragma once

// Mixture-of-experts objectives. Per-mesh terms are built on a tape so they
// can be backpropagated into the gate and trainable experts; the batch-level
// value functions reuse the same code with constant inputs.

#include "mme/autodiff.hpp"

#include <span>
#include <string>
#include <vector>

namespace mme {

enum class SimilarityKind { kld, cosine, mse, none };

SimilarityKind parse_similarity(const std::string& name);
std::string similarity_name(SimilarityKind kind);

/// Σ_j Σ_{w≠j} D(V_j, V_w) for one mesh; D is averaged over prediction rows.
ad::Var similarity_term(ad::Tape& tape, std::span<const ad::Var> predictions, SimilarityKind kind);

/// Σ_j s_j · CE(V_j, T) for one mesh; weights is 1×J.
ad::Var diversity_term(ad::Var weights, std::span<const ad::Var> predictions, std::span<const int> targets);

ad::Var joint_loss(ad::Var similarity, ad::Var diversity, double lambda);
double joint_loss(double similarity, double diversity, double lambda);

/// Mean over rows of 1 − cos(a_r, b_r).
ad::Var cosine_distance(ad::Var a, ad::Var b);

/// [mesh][expert] prediction tensors.
using BatchPredictions = std::vector<std::vector<Tensor>>;

double similarity_loss(const BatchPredictions& predictions, SimilarityKind kind = SimilarityKind::kld);
double diversity_loss(const std::vector<std::vector<double>>& weights, const BatchPredictions& predictions,
                      const std::vector<std::vector<int>>& targets);

/// Index of the largest weight; ties go to the lowest index.
int choose_expert(std::span<const double> weights);
std::vector<int> expert_chooser(const std::vector<std::vector<double>>& weights);

/// Argmax of one row; ties go to the lowest index.
int argmax_row(const Tensor& t, std::size_t row = 0);

/// Majority vote per prediction row across experts; ties go to the lowest class.
std::vector<int> hard_vote(std::span<const Tensor> expert_predictions);

} // namespace mme
