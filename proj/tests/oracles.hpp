#pragma once

// Independent brute-force evaluators shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace oracles {

using Rel = std::vector<std::uint8_t>;

// Precision at every relevant rank, written as a naive double loop.
inline double brute_ap(const Rel& rel, std::size_t cutoff, std::size_t total_relevant) {
    const std::size_t denom = std::min(total_relevant, cutoff);
    if (denom == 0) return 0.0;
    double sum = 0;
    for (std::size_t k = 0; k < std::min(cutoff, rel.size()); ++k) {
        if (!rel[k]) continue;
        std::size_t hits = 0;
        for (std::size_t i = 0; i <= k; ++i) hits += rel[i];
        sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    return sum / static_cast<double>(denom);
}

inline double brute_ndcg(const Rel& rel, std::size_t cutoff) {
    double dcg = 0, idcg = 0;
    const std::size_t n = std::min(cutoff, rel.size());
    const std::size_t total = std::count(rel.begin(), rel.end(), 1);
    for (std::size_t k = 0; k < n; ++k) {
        if (rel[k]) dcg += 1.0 / std::log2(static_cast<double>(k) + 2.0);
        if (k < total) idcg += 1.0 / std::log2(static_cast<double>(k) + 2.0);
    }
    return idcg == 0 ? 0.0 : dcg / idcg;
}

inline double brute_edge_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth,
                                  const std::vector<double>& lengths) {
    double hit = 0, total = 0;
    for (std::size_t e = 0; e < predicted.size(); ++e) {
        total += lengths[e];
        if (predicted[e] == truth[e]) hit += lengths[e];
    }
    return hit / total;
}

// Relevance list of query q: every other row ordered by (Euclidean distance, id).
inline Rel brute_relevance(const std::vector<std::vector<double>>& rows, const std::vector<std::string>& ids,
                           const std::vector<int>& classes, std::size_t q) {
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t j = 0; j < rows.size(); ++j) {
        if (j == q) continue;
        double d = 0;
        for (std::size_t c = 0; c < rows[q].size(); ++c) d += std::pow(rows[q][c] - rows[j][c], 2);
        order.push_back({std::sqrt(d), j});
    }
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        return a.first != b.first ? a.first < b.first : ids[a.second] < ids[b.second];
    });
    Rel rel;
    for (const auto& [d, j] : order) rel.push_back(classes[j] == classes[q]);
    return rel;
}

} // namespace oracles
