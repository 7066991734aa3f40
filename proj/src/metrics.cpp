#include "mme/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace mme {

double mean_instance_accuracy(std::span<const int> predictions, std::span<const int> targets) {
    if (predictions.empty()) throw std::invalid_argument("accuracy of an empty prediction set");
    if (predictions.size() != targets.size()) throw std::invalid_argument("accuracy: length mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) hits += predictions[i] == targets[i];
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double average_precision(std::span<const std::uint8_t> relevance, std::size_t cutoff) {
    if (cutoff < 1) throw std::invalid_argument("cutoff must be >= 1");
    const std::size_t total = static_cast<std::size_t>(std::count_if(relevance.begin(), relevance.end(),
                                                                      [](std::uint8_t r) { return r != 0; }));
    if (total == 0) return 0.0;
    const std::size_t depth = std::min(cutoff, relevance.size());
    double sum = 0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < depth; ++k)
        if (relevance[k]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    return sum / static_cast<double>(std::min(total, cutoff));
}

double mean_average_precision(std::span<const RetrievalResult> results, std::size_t cutoff) {
    if (results.empty()) return 0.0;
    double sum = 0;
    for (const auto& r : results) sum += average_precision(r.relevance, cutoff);
    return sum / static_cast<double>(results.size());
}

double ndcg(std::span<const std::uint8_t> relevance, std::size_t cutoff) {
    if (cutoff < 1) throw std::invalid_argument("cutoff must be >= 1");
    const std::size_t depth = std::min(cutoff, relevance.size());
    const std::size_t total = static_cast<std::size_t>(std::count_if(relevance.begin(), relevance.end(),
                                                                      [](std::uint8_t r) { return r != 0; }));
    double dcg = 0, ideal = 0;
    for (std::size_t k = 0; k < depth; ++k) {
        const double discount = 1.0 / std::log2(static_cast<double>(k) + 2.0);
        if (relevance[k]) dcg += discount;
        if (k < total) ideal += discount;
    }
    return ideal > 0 ? dcg / ideal : 0.0;
}

double mean_ndcg(std::span<const RetrievalResult> results, std::size_t cutoff) {
    if (results.empty()) return 0.0;
    double sum = 0;
    for (const auto& r : results) sum += ndcg(r.relevance, cutoff);
    return sum / static_cast<double>(results.size());
}

double face_accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw std::invalid_argument("face_accuracy: length mismatch");
    if (predicted.empty()) throw std::invalid_argument("face_accuracy: no faces");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double edge_accuracy(std::span<const int> predicted, std::span<const int> truth, std::span<const double> lengths) {
    if (predicted.size() != truth.size() || truth.size() != lengths.size())
        throw std::invalid_argument("edge_accuracy: length mismatch");
    if (predicted.empty()) throw std::invalid_argument("edge_accuracy: no edges");
    double hit = 0, total = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (!(lengths[i] > 0)) throw std::invalid_argument("edge_accuracy: nonpositive edge length");
        total += lengths[i];
        if (predicted[i] == truth[i]) hit += lengths[i];
    }
    return hit / total;
}

std::vector<RetrievalResult> rank_corpus(const Tensor& descriptors, std::span<const std::string> ids,
                                         std::span<const int> classes, Execution mode) {
    const std::size_t n = ids.size();
    if (descriptors.rows() != n || classes.size() != n) throw std::invalid_argument("rank_corpus: size mismatch");
    std::vector<double> dist(n * n);
    if (mode == Execution::parallel)
        kernels::pairwise_sq_distances_omp(descriptors.values(), dist, n, descriptors.cols());
    else
        kernels::pairwise_sq_distances(descriptors.values(), dist, n, descriptors.cols());

    std::vector<RetrievalResult> results(n);
    for_each_index(n, mode, [&](std::size_t q) {
        std::vector<std::size_t> order;
        order.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != q) order.push_back(j);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double da = dist[q * n + a], db = dist[q * n + b];
            return da != db ? da < db : ids[a] < ids[b];
        });
        RetrievalResult& r = results[q];
        r.query_id = ids[q];
        for (std::size_t j : order) {
            r.ranked_ids.push_back(ids[j]);
            r.relevance.push_back(classes[j] == classes[q] ? 1 : 0);
            r.distances.push_back(std::sqrt(dist[q * n + j]));
        }
    });
    return results;
}

void write_rankings_csv(std::span<const RetrievalResult> results, std::ostream& out) {
    out << "query_id,rank,mesh_id,distance\n";
    for (const auto& r : results)
        for (std::size_t k = 0; k < r.ranked_ids.size(); ++k)
            out << r.query_id << ',' << k + 1 << ',' << r.ranked_ids[k] << ',' << r.distances[k] << '\n';
}

} // namespace mme
