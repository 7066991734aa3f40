#pragma once

#include "mme/kernels.hpp"
#include "mme/tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mme {

/// Ranking of the corpus for one query (the query itself excluded).
/// relevance[k] is 1 when ranked_ids[k] shares the query's class.
struct RetrievalResult {
    std::string query_id;
    std::vector<std::string> ranked_ids;
    std::vector<std::uint8_t> relevance;
    std::vector<double> distances;
};

double mean_instance_accuracy(std::span<const int> predictions, std::span<const int> targets);

/// AP = Σ_{relevant k ≤ cutoff} precision@k / min(total relevant, cutoff); zero-relevant queries score 0.
double average_precision(std::span<const std::uint8_t> relevance, std::size_t cutoff);
double mean_average_precision(std::span<const RetrievalResult> results, std::size_t cutoff);

/// Binary-gain NDCG with log2(k + 1) discount; 0 when no item is relevant.
double ndcg(std::span<const std::uint8_t> relevance, std::size_t cutoff);
double mean_ndcg(std::span<const RetrievalResult> results, std::size_t cutoff);

double face_accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Σ length·[pred = truth] / Σ length. Throws on a nonpositive length.
double edge_accuracy(std::span<const int> predicted, std::span<const int> truth, std::span<const double> lengths);

/// Ranks every item against all others by Euclidean distance between
/// descriptor rows (ascending, ties by id).
std::vector<RetrievalResult> rank_corpus(const Tensor& descriptors, std::span<const std::string> ids,
                                         std::span<const int> classes, Execution mode = Execution::parallel);

/// "query_id,rank,mesh_id,distance"
void write_rankings_csv(std::span<const RetrievalResult> results, std::ostream& out);

} // namespace mme
