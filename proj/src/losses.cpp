#include "mme/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace mme {

using ad::Tape;
using ad::Var;

SimilarityKind parse_similarity(const std::string& name) {
    if (name == "kld") return SimilarityKind::kld;
    if (name == "cosine") return SimilarityKind::cosine;
    if (name == "mse") return SimilarityKind::mse;
    if (name == "none") return SimilarityKind::none;
    throw std::invalid_argument("unknown similarity loss '" + name + "'");
}

std::string similarity_name(SimilarityKind kind) {
    switch (kind) {
    case SimilarityKind::kld: return "kld";
    case SimilarityKind::cosine: return "cosine";
    case SimilarityKind::mse: return "mse";
    case SimilarityKind::none: return "none";
    }
    return "kld";
}

Var cosine_distance(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) throw std::invalid_argument("cosine_distance: shape mismatch");
    const std::size_t r = av.rows(), c = av.cols();
    std::vector<double> dots(r), na(r), nb(r);
    double loss = 0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            dots[i] += av[i * c + j] * bv[i * c + j];
            na[i] += av[i * c + j] * av[i * c + j];
            nb[i] += bv[i * c + j] * bv[i * c + j];
        }
        na[i] = std::sqrt(na[i]);
        nb[i] = std::sqrt(nb[i]);
        const double denom = na[i] * nb[i];
        loss += 1.0 - (denom > 0 ? dots[i] / denom : 0.0);
    }
    loss /= static_cast<double>(r);
    return a.tape().record(Tensor::scalar(loss), {a, b}, [a, b, r, c, dots, na, nb](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        const double w = -g[0] / static_cast<double>(r);
        for (std::size_t i = 0; i < r; ++i) {
            const double denom = na[i] * nb[i];
            if (!(denom > 0)) continue;
            const double cosv = dots[i] / denom;
            for (std::size_t j = 0; j < c; ++j) {
                const double x = av[i * c + j], y = bv[i * c + j];
                if (t.requires_grad(a)) t.grad(a)[i * c + j] += w * (y / denom - cosv * x / (na[i] * na[i]));
                if (t.requires_grad(b)) t.grad(b)[i * c + j] += w * (x / denom - cosv * y / (nb[i] * nb[i]));
            }
        }
    });
}

namespace {

Var pair_distance(Var p, Var q, SimilarityKind kind) {
    switch (kind) {
    case SimilarityKind::kld: return ad::kl_divergence(p, q);
    case SimilarityKind::cosine: return cosine_distance(p, q);
    case SimilarityKind::mse: return ad::mean_all(ad::square(ad::sub(p, q)));
    case SimilarityKind::none: break;
    }
    throw std::logic_error("pair_distance: no distance for 'none'");
}

} // namespace

Var similarity_term(Tape& tape, std::span<const Var> predictions, SimilarityKind kind) {
    Var total = tape.constant(Tensor::scalar(0.0));
    if (kind == SimilarityKind::none) return total;
    for (std::size_t j = 0; j < predictions.size(); ++j)
        for (std::size_t w = 0; w < predictions.size(); ++w)
            if (w != j) total = ad::add(total, pair_distance(predictions[j], predictions[w], kind));
    return total;
}

Var diversity_term(Var weights, std::span<const Var> predictions, std::span<const int> targets) {
    if (weights.value().size() != predictions.size())
        throw std::invalid_argument("diversity_term: one weight per expert required");
    Var total;
    for (std::size_t j = 0; j < predictions.size(); ++j) {
        Var term = ad::mul_scalar(ad::element(weights, 0, j), ad::cross_entropy(predictions[j], targets));
        total = total.valid() ? ad::add(total, term) : term;
    }
    return total;
}

Var joint_loss(Var similarity, Var diversity, double lambda) {
    return ad::add(ad::scale(similarity, lambda), diversity);
}

double joint_loss(double similarity, double diversity, double lambda) { return lambda * similarity + diversity; }

double similarity_loss(const BatchPredictions& predictions, SimilarityKind kind) {
    if (predictions.empty()) return 0.0;
    double total = 0;
    for (const auto& mesh : predictions) {
        Tape tape;
        std::vector<Var> vars;
        for (const auto& p : mesh) vars.push_back(tape.constant(p));
        total += similarity_term(tape, vars, kind).value()[0];
    }
    return total / static_cast<double>(predictions.size());
}

double diversity_loss(const std::vector<std::vector<double>>& weights, const BatchPredictions& predictions,
                      const std::vector<std::vector<int>>& targets) {
    if (weights.size() != predictions.size() || targets.size() != predictions.size())
        throw std::invalid_argument("diversity_loss: batch size mismatch");
    if (predictions.empty()) return 0.0;
    double total = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        Tape tape;
        std::vector<Var> vars;
        for (const auto& p : predictions[i]) vars.push_back(tape.constant(p));
        Var w = tape.constant(Tensor::row(weights[i]));
        total += diversity_term(w, vars, targets[i]).value()[0];
    }
    return total / static_cast<double>(predictions.size());
}

int choose_expert(std::span<const double> weights) {
    if (weights.empty()) throw std::invalid_argument("choose_expert: no experts");
    std::size_t best = 0;
    for (std::size_t j = 1; j < weights.size(); ++j)
        if (weights[j] > weights[best]) best = j;
    return static_cast<int>(best);
}

std::vector<int> expert_chooser(const std::vector<std::vector<double>>& weights) {
    std::vector<int> out;
    out.reserve(weights.size());
    for (const auto& w : weights) out.push_back(choose_expert(w));
    return out;
}

int argmax_row(const Tensor& t, std::size_t row) {
    const std::size_t c = t.cols();
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
        if (t.at(row, j) > t.at(row, best)) best = j;
    return static_cast<int>(best);
}

std::vector<int> hard_vote(std::span<const Tensor> expert_predictions) {
    if (expert_predictions.empty()) throw std::invalid_argument("hard_vote: no experts");
    const std::size_t rows = expert_predictions[0].rows();
    const std::size_t classes = expert_predictions[0].cols();
    std::vector<int> out(rows);
    std::vector<int> votes(classes);
    for (std::size_t r = 0; r < rows; ++r) {
        std::fill(votes.begin(), votes.end(), 0);
        for (const auto& p : expert_predictions) ++votes[argmax_row(p, r)];
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c)
            if (votes[c] > votes[best]) best = c;
        out[r] = static_cast<int>(best);
    }
    return out;
}

} // namespace mme
