// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include "mme/checkpoint.hpp"
#include "mme/diagnostics.hpp"
#include "mme/losses.hpp"
#include "mme/metrics.hpp"
#include "mme/sac.hpp"
#include "mme/synth.hpp"
#include "mme/trainer.hpp"
#include "mme/walk.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace mme;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x, int precision = 4) {
    std::ostringstream out;
    out.precision(precision);
    out << x;
    return out.str();
}

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
    if (!pass) ++failures;
    std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

void note(const std::string& text) { std::cout << "  " << text << std::endl; }

// ---------------------------------------------------------------------------
// Oracle routing setup shared by routing, ensemble, pretraining and checkpoint.

constexpr std::size_t kClasses = 3;
constexpr std::size_t kPerClass = 20;
constexpr std::size_t kMaxEpochs = 30;
constexpr std::size_t kRoutingBatch = 8;
constexpr double kRoutingGateRate = 3e-4;
constexpr std::uint64_t kRoutingSeed = 1;

std::vector<std::string> oracle_ids() {
    std::vector<std::string> ids;
    for (std::size_t c = 0; c < kClasses; ++c) ids.push_back("oracle:" + std::to_string(c));
    return ids;
}

TrainerConfig routing_trainer() {
    TrainerConfig tc;
    tc.batch_size = kRoutingBatch;
    tc.gate_learning_rate = kRoutingGateRate;
    return tc;
}

bool routing_met(const Evaluation& ev, double& worst_selection) {
    worst_selection = 1.0;
    for (std::size_t c = 0; c < ev.selection.size(); ++c) worst_selection = std::min(worst_selection, ev.selection[c][c]);
    return ev.accuracy >= 0.95 && worst_selection >= 0.9;
}

struct RoutingRun {
    System system;
    Evaluation test;
    double seconds = 0;
};

RoutingRun train_oracle_routing(const Dataset& data, const GateConfig& gate, std::uint64_t seed) {
    RoutingRun run{make_system(oracle_ids(), kClasses, gate, seed), {}, 0};
    const auto start = Clock::now();
    MoeTrainer trainer(run.system, routing_trainer());
    SacAgent agent(kClasses, SacConfig{}, derive_seed(seed, 0x5AC));
    SacLambda controller(agent);
    train_run(trainer, data, controller, kMaxEpochs, seed);
    run.seconds = seconds_since(start);
    run.test = evaluate(run.system, data.test_meshes(), Task::classification, 32, seed);
    return run;
}

double monte_carlo_oracle_accuracy(const Dataset& data, std::size_t specialty, std::size_t draws) {
    double total = 0;
    for (std::size_t t = 0; t < draws; ++t) {
        const auto expert = make_expert("oracle:" + std::to_string(specialty), kClasses, derive_seed(t, 0x3C));
        std::size_t hits = 0;
        for (const auto& m : data.meshes) {
            const Tensor p = expert->predict_value({}, m, t);
            hits += argmax_row(p) == *m.class_label;
        }
        total += static_cast<double>(hits) / static_cast<double>(data.meshes.size());
    }
    return total / static_cast<double>(draws);
}

// Expected hard-vote accuracy of three one-class specialists, by simulation.
double monte_carlo_ensemble_expectation(std::size_t draws) {
    Rng rng(0xE45);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < draws; ++t) {
        const int truth = static_cast<int>(rng.uniform_index(kClasses));
        std::vector<Tensor> votes;
        for (std::size_t j = 0; j < kClasses; ++j) {
            const int label = static_cast<int>(j) == truth ? truth : static_cast<int>(rng.uniform_index(kClasses));
            Tensor v = Tensor::matrix(1, kClasses);
            v[static_cast<std::size_t>(label)] = 1.0;
            votes.push_back(v);
        }
        hits += hard_vote(votes)[0] == truth;
    }
    return static_cast<double>(hits) / static_cast<double>(draws);
}

void criterion_routing_and_ensemble(const Dataset& data, std::optional<RoutingRun>& out) {
    std::string mc;
    bool experts_ok = true;
    for (std::size_t c = 0; c < kClasses; ++c) {
        const double acc = monte_carlo_oracle_accuracy(data, c, 200);
        experts_ok = experts_ok && std::abs(acc - 5.0 / 9.0) <= 0.05;
        mc += (c ? ", " : "") + fmt(acc);
    }
    RoutingRun run = train_oracle_routing(data, GateConfig{}, kRoutingSeed);
    double worst = 0;
    const bool routed = routing_met(run.test, worst);
    const bool fast = run.seconds < 600.0;
    report(experts_ok && routed && fast, "oracle routing",
           "single-oracle accuracy (MC, 200 draws) " + mc + " vs 5/9 +- 0.05; test accuracy " +
               fmt(run.test.accuracy) + " (>= 0.95); worst specialty selection " + fmt(worst) + " (>= 0.9); " +
               std::to_string(kMaxEpochs) + " epochs in " + fmt(run.seconds, 3) + " s (< 600)");
    for (std::size_t c = 0; c < kClasses; ++c) {
        std::string row = "class " + std::to_string(c) + " routed to experts:";
        for (double f : run.test.selection[c]) row += " " + fmt(f, 3);
        note(row);
    }

    const Evaluation ens = evaluate_ensemble(run.system, data.test_meshes(), Task::classification, kRoutingSeed);
    const Evaluation ens_all = evaluate_ensemble(run.system, data.meshes, Task::classification, kRoutingSeed);
    const Evaluation moe_all = evaluate(run.system, data.meshes, Task::classification, 32, kRoutingSeed);
    report(ens.accuracy < run.test.accuracy, "ensemble below MoE",
           "hard-voting ensemble test accuracy " + fmt(ens.accuracy) + " < MoE " + fmt(run.test.accuracy) +
               " (all 60 meshes: " + fmt(ens_all.accuracy) + " vs " + fmt(moe_all.accuracy) +
               "; simulated ensemble expectation " + fmt(monte_carlo_ensemble_expectation(200000)) + ")");
    out = std::move(run);
}

// ---------------------------------------------------------------------------

Tensor random_distribution(std::size_t rows, std::size_t cols, Rng& rng, bool sharp) {
    Tensor t = Tensor::matrix(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double total = 0;
        for (std::size_t c = 0; c < cols; ++c) {
            double x = rng.uniform01();
            if (sharp) x = x * x * x * x;
            t.at(r, c) = x + 1e-3;
            total += t.at(r, c);
        }
        for (std::size_t c = 0; c < cols; ++c) t.at(r, c) /= total;
    }
    return t;
}

double reference_cross_entropy(const Tensor& p, const std::vector<int>& targets) {
    double total = 0;
    for (std::size_t r = 0; r < p.rows(); ++r) total -= std::log(std::max(p.at(r, targets[r]), 1e-12));
    return total / static_cast<double>(p.rows());
}

void criterion_loss_identities() {
    const auto start = Clock::now();
    Rng rng(0x1D5);
    std::size_t instances = 0, violations = 0;
    double cosine_agree = 0;
    const SimilarityKind kinds[] = {SimilarityKind::kld, SimilarityKind::cosine, SimilarityKind::mse};
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t batch = 1 + rng.uniform_index(4);
        const std::size_t experts = 1 + rng.uniform_index(4);
        const std::size_t classes = 2 + rng.uniform_index(5);
        const std::size_t rows = trial % 3 == 0 ? 1 + rng.uniform_index(6) : 1;
        BatchPredictions preds(batch), agree(batch);
        std::vector<std::vector<int>> targets(batch);
        std::vector<std::vector<double>> weights(batch);
        std::vector<std::size_t> pick(batch);
        for (std::size_t i = 0; i < batch; ++i) {
            const Tensor shared = random_distribution(rows, classes, rng, trial % 2 == 0);
            for (std::size_t j = 0; j < experts; ++j) {
                preds[i].push_back(random_distribution(rows, classes, rng, trial % 2 == 0));
                agree[i].push_back(shared);
            }
            for (std::size_t r = 0; r < rows; ++r) targets[i].push_back(static_cast<int>(rng.uniform_index(classes)));
            pick[i] = rng.uniform_index(experts);
            weights[i].assign(experts, 0.0);
            weights[i][pick[i]] = 1.0;
        }
        ++instances;
        const double div = diversity_loss(weights, preds, targets);
        for (SimilarityKind kind : kinds) {
            const double sim = similarity_loss(preds, kind);
            if (!(sim >= 0.0)) ++violations;
            if (joint_loss(sim, div, 0.0) != div) ++violations;
            {
                const double same = similarity_loss(agree, kind);
                if (kind == SimilarityKind::cosine ? std::abs(same) > 1e-12 : same != 0.0) ++violations;
                if (kind == SimilarityKind::cosine) cosine_agree = std::max(cosine_agree, std::abs(same));
            }
        }
        ad::Tape tape;
        ad::Var sim_var = tape.constant(Tensor::row({similarity_loss(preds)}));
        ad::Var div_var = tape.constant(Tensor::row({div}));
        if (joint_loss(sim_var, div_var, 0.0).value()[0] != div) ++violations;

        double chosen_ce = 0;
        for (std::size_t i = 0; i < batch; ++i) chosen_ce += reference_cross_entropy(preds[i][pick[i]], targets[i]);
        chosen_ce /= static_cast<double>(batch);
        BatchPredictions only(batch);
        std::vector<std::vector<double>> unit(batch, std::vector<double>{1.0});
        for (std::size_t i = 0; i < batch; ++i) only[i].push_back(preds[i][pick[i]]);
        if (div != diversity_loss(unit, only, targets)) ++violations;
        if (std::abs(div - chosen_ce) > 1e-12 * std::max(1.0, chosen_ce)) ++violations;
    }
    const double secs = seconds_since(start);
    report(violations == 0 && secs < 30.0, "loss identities",
           std::to_string(instances) + " random batches x 3 similarity kinds, " + std::to_string(violations) +
               " violations of: joint(lambda=0) == L_div bit-exact, L_sim == 0 for agreeing experts (kld/mse exact, "
               "cosine <= 1e-12, worst " + fmt(cosine_agree, 3) + "), L_sim >= 0, one-hot diversity == chosen "
               "expert CE; " + fmt(secs, 3) + " s (< 30)");
}

void criterion_gradients() {
    const auto start = Clock::now();
    GradCheckOptions options;
    options.max_coordinates_per_tensor = 8;
    std::size_t checks = 0, failed = 0, coords = 0, skipped = 0;
    double worst = 0;
    std::string worst_name;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        for (const auto& r : standard_gradient_checks(seed, options)) {
            ++checks;
            coords += r.report.coordinates_checked;
            skipped += r.report.coordinates_skipped;
            if (!r.report.passed) ++failed;
            if (r.report.max_relative_error > worst) {
                worst = r.report.max_relative_error;
                worst_name = r.name + " " + r.report.worst_coordinate;
            }
        }
    }
    // Negative control: a gradient off by 1% must be caught.
    ParameterSet point;
    point.add("x", Tensor::row({0.3, -1.2, 2.0}));
    const auto wrong = finite_difference_check(
        [](const ParameterSet& p) {
            double s = 0;
            for (double v : p.at("x").values()) s += v * v * v;
            return s;
        },
        [](const ParameterSet& p) {
            ParameterSet g;
            Tensor t = p.at("x");
            for (auto& v : t.values()) v = 3.0 * v * v * 1.01;
            g.add("x", t);
            return g;
        },
        point, options);
    const double secs = seconds_since(start);
    report(failed == 0 && !wrong.passed && secs < 120.0, "gradient suite",
           std::to_string(checks) + " checks over 3 seeds (attention, MHA/cross/feed-forward blocks, recurrent cell, "
               "CE, KL, gate end-to-end, joint loss with kld/cosine/mse, segmentation, imitation), " +
               std::to_string(coords) + " coordinates (" + std::to_string(skipped) + " at kinks skipped), " +
               std::to_string(failed) + " failed; worst relative error " + fmt(worst, 3) + " at " + worst_name +
               " (tolerance 1e-4); wrong-gradient control " + (wrong.passed ? "NOT caught" : "caught") + "; " +
               fmt(secs, 3) + " s (< 120)");
}

std::size_t expected_length(std::size_t v) { return std::max<std::size_t>(2, (2 * v + 4) / 5); }

void criterion_walks() {
    std::vector<Mesh> meshes = {fixtures::tetrahedron(), fixtures::icosahedron(), fixtures::strip(3),
                                fixtures::strip(17, "strip17")};
    for (const auto& m : generate_classification_set(10, 4, 21).meshes) meshes.push_back(m);
    for (const auto& m : generate_segmentation_set(4, 22).meshes) meshes.push_back(m);
    const std::size_t per_mesh = (10000 + meshes.size() - 1) / meshes.size();
    const auto first = extract_walks_batch(meshes, per_mesh, 0x3A1C, Execution::parallel);
    const auto second = extract_walks_batch(meshes, per_mesh, 0x3A1C, Execution::serial);
    std::size_t walks = 0, bad_distinct = 0, bad_edges = 0, bad_length = 0, jumps = 0;
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        std::set<std::pair<int, int>> edges;
        for (const auto& e : meshes[i].edges()) edges.insert({std::min(e.a, e.b), std::max(e.a, e.b)});
        const std::size_t len = expected_length(meshes[i].vertices().size());
        for (const auto& w : first[i]) {
            ++walks;
            if (w.vertex_indices.size() != len) ++bad_length;
            if (std::set<int>(w.vertex_indices.begin(), w.vertex_indices.end()).size() != w.vertex_indices.size())
                ++bad_distinct;
            for (std::size_t k = 1; k < w.vertex_indices.size(); ++k) {
                if (w.jump_flags[k]) {
                    ++jumps;
                    continue;
                }
                const int a = w.vertex_indices[k - 1], b = w.vertex_indices[k];
                if (!edges.count({std::min(a, b), std::max(a, b)})) ++bad_edges;
            }
        }
    }
    bool same = true;
    for (std::size_t i = 0; i < meshes.size(); ++i)
        for (std::size_t k = 0; k < per_mesh; ++k)
            same = same && first[i][k].vertex_indices == second[i][k].vertex_indices &&
                   first[i][k].jump_flags == second[i][k].jump_flags;
    report(walks >= 10000 && bad_distinct == 0 && bad_edges == 0 && bad_length == 0 && same, "walk contract",
           std::to_string(walks) + " walks on " + std::to_string(meshes.size()) + " meshes; " +
               std::to_string(bad_distinct) + " repeated-vertex walks, " + std::to_string(bad_edges) +
               " non-edge steps, " + std::to_string(bad_length) + " wrong lengths, " + std::to_string(jumps) +
               " jump steps; two runs " + (same ? "identical" : "DIFFER"));
}

void criterion_metrics() {
    Rng rng(0x3E7);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(24);
        const std::size_t dim = 1 + rng.uniform_index(4);
        Tensor desc = Tensor::matrix(n, dim);
        std::vector<std::vector<double>> rows(n);
        std::vector<std::string> ids;
        std::vector<int> classes;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < dim; ++c) {
                desc.at(i, c) = static_cast<double>(rng.uniform_index(5));
                rows[i].push_back(desc.at(i, c));
            }
            ids.push_back("q" + std::to_string(1000 + i));
            classes.push_back(static_cast<int>(rng.uniform_index(4)));
        }
        const std::size_t cutoff = 1 + rng.uniform_index(n + 2);
        const auto results = rank_corpus(desc, ids, classes);
        double map_ref = 0, ndcg_ref = 0;
        for (std::size_t q = 0; q < n; ++q) {
            const auto rel = oracles::brute_relevance(rows, ids, classes, q);
            if (rel != results[q].relevance) worst = std::numeric_limits<double>::infinity();
            map_ref += oracles::brute_ap(rel, cutoff, std::count(rel.begin(), rel.end(), 1));
            ndcg_ref += oracles::brute_ndcg(rel, cutoff);
        }
        worst = std::max(worst, std::abs(mean_average_precision(results, cutoff) - map_ref / static_cast<double>(n)));
        worst = std::max(worst, std::abs(mean_ndcg(results, cutoff) - ndcg_ref / static_cast<double>(n)));

        const std::size_t e = 1 + rng.uniform_index(40);
        std::vector<int> pred(e), truth(e);
        std::vector<double> len(e);
        for (std::size_t k = 0; k < e; ++k) {
            pred[k] = static_cast<int>(rng.uniform_index(3));
            truth[k] = static_cast<int>(rng.uniform_index(3));
            len[k] = 0.01 + rng.uniform01();
        }
        worst = std::max(worst, std::abs(edge_accuracy(pred, truth, len) - oracles::brute_edge_accuracy(pred, truth, len)));
    }
    const oracles::Rel worked = {1, 0, 1};
    const double ap = average_precision(worked, 1000);
    const double nd = ndcg(worked, 1000);
    const double ea = edge_accuracy(std::vector<int>{1, 0, 2}, std::vector<int>{1, 1, 2}, std::vector<double>{2, 1, 1});
    const bool worked_ok = ap == (1.0 + 2.0 / 3.0) / 2.0 && std::abs(nd - 1.5 / (1.0 + 1.0 / std::log2(3.0))) <= 1e-15 &&
                           std::abs(nd - 0.9197) < 5e-5 && ea == 0.75;
    report(worst <= 1e-12 && worked_ok, "metric oracles",
           "100 randomized retrieval + edge-accuracy instances, max deviation from brute force " + fmt(worst, 3) +
               " (<= 1e-12); worked examples AP " + fmt(ap, 16) + ", NDCG " + fmt(nd, 16) + ", edge accuracy " +
               fmt(ea));
}

void criterion_sac() {
    const auto start = Clock::now();
    std::string finals;
    int converged = 0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        SacAgent agent(3, SacConfig{}, seed);
        const std::vector<double> state = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        double lambda = agent.agent_step(state, 0.0, true);
        for (int it = 0; it < 2000; ++it) lambda = agent.agent_step(state, -(lambda - 0.3) * (lambda - 0.3), true);
        const double deterministic = agent.sample_action(state, false).lambda;
        converged += std::abs(deterministic - 0.3) <= 0.1;
        finals += (finals.empty() ? "" : ", ") + fmt(deterministic);
    }
    const double secs = seconds_since(start);
    report(converged == 3 && secs < 60.0, "SAC surrogate",
           "deterministic lambda after 2000 iterations on reward -(lambda-0.3)^2: " + finals + " (target 0.3 +- 0.1, " +
               std::to_string(converged) + "/3 seeds); " + fmt(secs, 3) + " s (< 60)");
}

// ---------------------------------------------------------------------------
// Dynamic vs static λ with two trainable experts.

constexpr std::size_t kLambdaClasses = 4;
constexpr std::size_t kLambdaPerClass = 20;
constexpr std::size_t kLambdaEpochs = 20;

GateConfig small_gate() {
    GateConfig g;
    g.encoder_layers = 2;
    g.decoder_layers = 2;
    g.d_model = 32;
    g.heads = 4;
    g.ff_width = 64;
    return g;
}

double lambda_run(std::uint64_t seed, std::optional<double> fixed, double& mean_lambda) {
    const Dataset data = generate_classification_set(kLambdaClasses, kLambdaPerClass, seed);
    System system = make_system({"walk_rnn", "face_mlp"}, kLambdaClasses, small_gate(), seed);
    TrainerConfig tc;
    tc.batch_size = 8;
    MoeTrainer trainer(system, tc);
    SacAgent agent(system.num_experts(), SacConfig{}, derive_seed(seed, 0x5AC));
    std::optional<StaticLambda> constant;
    std::optional<SacLambda> dynamic;
    LambdaController* controller = nullptr;
    if (fixed)
        controller = &constant.emplace(*fixed);
    else
        controller = &dynamic.emplace(agent);
    const auto log = train_run(trainer, data, *controller, kLambdaEpochs, seed);
    mean_lambda = 0;
    for (const auto& row : log) mean_lambda += row.lambda / static_cast<double>(log.size());
    return evaluate(system, data.test_meshes(), Task::classification, 32, seed).accuracy;
}

void criterion_dynamic_lambda() {
    const auto start = Clock::now();
    const double statics[] = {-1.0, 0.0, 0.1, 1.0};
    const std::uint64_t seeds[] = {1, 2, 3};
    double static_mean[4] = {0, 0, 0, 0};
    double dynamic_mean = 0, lambda_mean = 0;
    for (std::uint64_t seed : seeds) {
        double unused = 0, lam = 0;
        std::string row = "seed " + std::to_string(seed) + " static:";
        for (int k = 0; k < 4; ++k) {
            const double acc = lambda_run(seed, statics[k], unused);
            static_mean[k] += acc / 3.0;
            row += " " + fmt(acc);
        }
        const double acc = lambda_run(seed, std::nullopt, lam);
        dynamic_mean += acc / 3.0;
        lambda_mean += lam / 3.0;
        note(row + "; dynamic " + fmt(acc) + " (mean lambda " + fmt(lam, 3) + ")");
    }
    const double best = *std::max_element(static_mean, static_mean + 4);
    std::string table;
    for (int k = 0; k < 4; ++k) table += (k ? ", " : "") + fmt(statics[k]) + ": " + fmt(static_mean[k]);
    report(dynamic_mean >= best - 0.01, "dynamic vs static lambda",
           "mean test accuracy over 3 seeds, dynamic " + fmt(dynamic_mean) + " (mean lambda " + fmt(lambda_mean, 3) +
               ") vs static {" + table + "}; needs >= best - 0.01 = " + fmt(best - 0.01) + "; " +
               fmt(seconds_since(start), 3) + " s");
}

// ---------------------------------------------------------------------------
// Pretrained (averaged imitation gates) vs random gate initialization.

std::size_t epochs_to_routing(System& system, const Dataset& data, std::uint64_t seed) {
    MoeTrainer trainer(system, routing_trainer());
    SacAgent agent(kClasses, SacConfig{}, derive_seed(seed, 0x5AC));
    SacLambda controller(agent);
    const auto test = data.test_meshes();
    std::size_t reached = 0;
    train_run(trainer, data, controller, kMaxEpochs, seed, [&](std::size_t epoch) {
        double worst = 0;
        if (routing_met(evaluate(system, test, Task::classification, 32, seed), worst)) reached = epoch;
        return reached == 0;
    });
    return reached;
}

void criterion_pretraining(const GateConfig& gate) {
    const auto start = Clock::now();
    int wins = 0;
    std::string rows;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Dataset data = generate_classification_set(kClasses, kPerClass, seed);
        System random_init = make_system(oracle_ids(), kClasses, gate, seed);
        const std::size_t r = epochs_to_routing(random_init, data, seed);
        System pretrained = make_system(oracle_ids(), kClasses, gate, seed);
        ImitationConfig ic;
        ic.epochs = 5;
        ic.batch_size = kRoutingBatch;
        pretrain_gate(pretrained, data.train_meshes(), ic, seed);
        const std::size_t p = epochs_to_routing(pretrained, data, seed);
        const auto shown = [](std::size_t e) { return e ? std::to_string(e) : std::string(">") + std::to_string(kMaxEpochs); };
        const bool win = p != 0 && (r == 0 || p < r);
        wins += win;
        rows += (rows.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) + ": pretrained " + shown(p) +
                " vs random " + shown(r);
    }
    report(wins >= 2, "pretraining ablation",
           "epochs to reach 95% test accuracy with >= 90% specialty selection: " + rows + "; pretrained faster on " +
               std::to_string(wins) + "/3 seeds (needs >= 2); " + fmt(seconds_since(start), 3) + " s");
}

// ---------------------------------------------------------------------------

void criterion_checkpoint(const Dataset& data, const std::optional<RoutingRun>& run) {
    if (!run) {
        report(false, "checkpoint round trip", "no trained system available");
        return;
    }
    const auto dir = std::filesystem::temp_directory_path() / "mme_acceptance";
    std::filesystem::create_directories(dir);
    const auto path = dir / "system.ckpt";
    save_checkpoint(run->system.params, path);
    System restored = make_system(oracle_ids(), kClasses, GateConfig{}, kRoutingSeed + 99);
    restored.params = load_checkpoint(path);
    const auto path2 = dir / "system2.ckpt";
    save_checkpoint(restored.params, path2);

    bool same_params = restored.params.size() == run->system.params.size();
    for (const auto& [name, t] : run->system.params)
        same_params = same_params && restored.params.contains(name) && restored.params.at(name) == t;
    std::size_t mismatches = 0;
    for (const auto& m : data.meshes) {
        const auto a = infer(run->system, m, 32, 5);
        const auto b = infer(restored, m, 32, 5);
        if (a.weights != b.weights || a.chosen != b.chosen || !(a.prediction == b.prediction)) ++mismatches;
    }
    const Evaluation ea = evaluate(run->system, data.meshes, Task::classification, 32, 7);
    const Evaluation eb = evaluate(restored, data.meshes, Task::classification, 32, 7);
    const bool same_eval = ea.accuracy == eb.accuracy && ea.map == eb.map && ea.ndcg == eb.ndcg &&
                           ea.chosen == eb.chosen && ea.predicted == eb.predicted;
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string s1((std::istreambuf_iterator<char>(f1)), {}), s2((std::istreambuf_iterator<char>(f2)), {});
    std::filesystem::remove_all(dir);
    report(same_params && mismatches == 0 && same_eval && s1 == s2, "checkpoint round trip",
           std::to_string(run->system.params.size()) + " tensors " + (same_params ? "bit-identical" : "DIFFER") +
               "; gate weights, choices and predictions on 60 meshes: " + std::to_string(mismatches) +
               " mismatches; accuracy/mAP/NDCG " + (same_eval ? "identical" : "DIFFER") + "; re-saved file " +
               (s1 == s2 ? "byte-identical" : "DIFFERS"));
}

} // namespace

// Optional arguments select a subset: routing (includes ensemble and
// checkpoint), losses, gradients, walks, metrics, sac, lambda, pretraining.
int main(int argc, char** argv) {
    const std::vector<std::string> only(argv + 1, argv + argc);
    const auto wanted = [&](const char* key) { return only.empty() || std::find(only.begin(), only.end(), key) != only.end(); };
    const auto start = Clock::now();
    if (wanted("routing")) {
        const Dataset routing_data = generate_classification_set(kClasses, kPerClass, kRoutingSeed);
        std::optional<RoutingRun> routing;
        criterion_routing_and_ensemble(routing_data, routing);
        criterion_checkpoint(routing_data, routing);
    }
    if (wanted("losses")) criterion_loss_identities();
    if (wanted("gradients")) criterion_gradients();
    if (wanted("walks")) criterion_walks();
    if (wanted("metrics")) criterion_metrics();
    if (wanted("sac")) criterion_sac();
    if (wanted("lambda")) criterion_dynamic_lambda();
    if (wanted("pretraining")) criterion_pretraining(GateConfig{});
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
              << fmt(seconds_since(start), 4) << " s" << std::endl;
    return failures == 0 ? 0 : 1;
}
