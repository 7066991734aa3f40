#include "fixtures.hpp"
#include "mme/diagnostics.hpp"
#include "mme/losses.hpp"
#include "mme/synth.hpp"
#include "mme/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace mme;

namespace {

Tensor onehot(std::size_t n, int k) {
    Tensor t = Tensor::matrix(1, n);
    t[k] = 1;
    return t;
}

// Σ_j Σ_{w≠j} KL(V_j ‖ V_w) averaged over meshes, written out directly.
double similarity_oracle(const BatchPredictions& v) {
    double total = 0;
    for (const auto& mesh : v) {
        for (std::size_t j = 0; j < mesh.size(); ++j)
            for (std::size_t w = 0; w < mesh.size(); ++w) {
                if (j == w) continue;
                double kl = 0;
                for (std::size_t r = 0; r < mesh[j].rows(); ++r)
                    for (std::size_t c = 0; c < mesh[j].cols(); ++c) {
                        const double p = std::max(mesh[j].at(r, c), 1e-12), q = std::max(mesh[w].at(r, c), 1e-12);
                        kl += p * std::log(p / q);
                    }
                total += kl / static_cast<double>(mesh[j].rows());
            }
    }
    return total / static_cast<double>(v.size());
}

GateConfig tiny_gate(std::size_t j) {
    GateConfig g;
    g.num_experts = j;
    g.encoder_layers = 1;
    g.decoder_layers = 1;
    g.d_model = 8;
    g.heads = 2;
    g.ff_width = 16;
    return g;
}

} // namespace

TEST_SUITE("losses") {

TEST_CASE("expert chooser and hard vote") {
    CHECK(choose_expert(std::vector<double>{0.2, 0.5, 0.3}) == 1);
    CHECK(choose_expert(std::vector<double>{0.5, 0.5}) == 0);
    const std::vector<std::vector<double>> w = {{0.1, 0.7, 0.2}, {0.4, 0.1, 0.5}};
    CHECK(expert_chooser(w) == std::vector<int>{1, 2});
    const std::vector<int> perm = {2, 0, 1};
    for (const auto& row : w) {
        std::vector<double> p(3);
        for (std::size_t j = 0; j < 3; ++j) p[j] = row[perm[j]];
        CHECK(perm[choose_expert(p)] == choose_expert(row));
    }
    CHECK(hard_vote(std::vector<Tensor>{onehot(3, 2), onehot(3, 2), onehot(3, 0)}) == std::vector<int>{2});
    CHECK(hard_vote(std::vector<Tensor>{onehot(3, 1), onehot(3, 0)}) == std::vector<int>{0});
    CHECK(hard_vote(std::vector<Tensor>{Tensor::row({0.2, 0.3, 0.5})}) == std::vector<int>{2});
}

TEST_CASE("similarity loss examples") {
    const Tensor a = Tensor::row({0.2, 0.8});
    CHECK(similarity_loss({{a, a, a}}) == 0.0);
    CHECK(similarity_loss({{a}}) == 0.0);
    const Tensor v1 = Tensor::row({1, 0}), v2 = Tensor::row({0.5, 0.5});
    const double hand = (1.0 * std::log(1.0 / 0.5) + 1e-12 * std::log(1e-12 / 0.5)) +
                        (0.5 * std::log(0.5 / 1.0) + 0.5 * std::log(0.5 / 1e-12));
    CHECK(similarity_loss({{v1, v2}}) == doctest::Approx(hand).epsilon(1e-14));
    CHECK(similarity_loss({{v1, v2}}) == doctest::Approx(std::log(2.0) + 0.5 * std::log(0.5 / 1e-12) - 0.5 * std::log(2.0)));
}

TEST_CASE("similarity loss matches the direct oracle and is symmetric in expert order") {
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t b = 1 + rng.uniform_index(4), j = 1 + rng.uniform_index(4), c = 2 + rng.uniform_index(4);
        BatchPredictions v(b);
        for (auto& mesh : v)
            for (std::size_t k = 0; k < j; ++k) mesh.push_back(Tensor::row(fixtures::simplex_point(rng, c)));
        const double l = similarity_loss(v);
        CHECK(l >= 0.0);
        CHECK(l == doctest::Approx(similarity_oracle(v)).epsilon(1e-12));
        BatchPredictions rev = v;
        for (auto& mesh : rev) std::reverse(mesh.begin(), mesh.end());
        CHECK(similarity_loss(rev) == doctest::Approx(l).epsilon(1e-12));
        for (SimilarityKind kind : {SimilarityKind::cosine, SimilarityKind::mse}) CHECK(similarity_loss(v, kind) >= 0.0);
        CHECK(similarity_loss(v, SimilarityKind::none) == 0.0);
    }
}

TEST_CASE("cosine and mse variants") {
    const Tensor a = Tensor::row({1, 0}), b = Tensor::row({0, 1});
    CHECK(similarity_loss({{a, b}}, SimilarityKind::cosine) == doctest::Approx(2.0));
    CHECK(similarity_loss({{a, b}}, SimilarityKind::mse) == doctest::Approx(2.0));
    CHECK(similarity_loss({{a, a}}, SimilarityKind::cosine) == doctest::Approx(0.0));
    CHECK(parse_similarity("mse") == SimilarityKind::mse);
    CHECK_THROWS(parse_similarity("l1"));
}

TEST_CASE("diversity loss examples") {
    const Tensor v1 = Tensor::row({0.7, 0.3}), v2 = Tensor::row({0.1, 0.9});
    const std::vector<std::vector<int>> t = {{0}, {1}};
    CHECK(diversity_loss({{1.0}, {1.0}}, {{v1}, {v2}}, t) == doctest::Approx(-(std::log(0.7) + std::log(0.9)) / 2));
    CHECK(diversity_loss({{0.0, 1.0}, {0.0, 1.0}}, {{v1, v2}, {v2, v1}}, t) ==
          doctest::Approx(-(std::log(0.1) + std::log(0.3)) / 2));
    CHECK(diversity_loss({{0.3, 0.7}}, {{onehot(2, 1), onehot(2, 1)}}, {{1}}) == 0.0);
    // Identical experts: any convex weights give the plain CE.
    CHECK(diversity_loss({{0.2, 0.8}}, {{v1, v1}}, {{0}}) == doctest::Approx(-std::log(0.7)).epsilon(1e-14));
}

TEST_CASE("joint loss identities") {
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double s = rng.uniform(0, 50), d = rng.uniform(0, 50);
        CHECK(joint_loss(s, d, 0.0) == d);
    }
    CHECK(joint_loss(2.0, 3.0, 1.0) == 5.0);
    CHECK(joint_loss(2.0, 3.0, -1.0) == 1.0);
}

}

TEST_SUITE("trainer") {

TEST_CASE("batch reward") {
    std::vector<Mesh> meshes;
    for (int i = 0; i < 4; ++i) {
        Mesh m = fixtures::tetrahedron();
        m.class_label = i % 2;
        meshes.emplace_back(Mesh("b" + std::to_string(i), m.vertices(), m.faces()));
        meshes.back().class_label = i % 2;
    }
    std::vector<const Mesh*> ptr;
    for (const auto& m : meshes) ptr.push_back(&m);
    const std::vector<Tensor> all_right = {onehot(2, 0), onehot(2, 1), onehot(2, 0), onehot(2, 1)};
    CHECK(batch_reward(Task::classification, ptr, all_right, 10) == 1.0);
    const std::vector<Tensor> mixed = {onehot(2, 0), onehot(2, 0), onehot(2, 1), onehot(2, 1)};
    CHECK(batch_reward(Task::classification, ptr, mixed, 10) == 0.5);
    CHECK(batch_reward(Task::retrieval, ptr, all_right, 10) == 1.0);
}

TEST_CASE("train iteration outcome contract") {
    const Dataset d = generate_classification_set(3, 4, 3);
    System s = make_system({"oracle:0", "oracle:1", "face_mlp"}, 3, tiny_gate(3), 4);
    TrainerConfig tc;
    tc.batch_size = 4;
    tc.walks_train = 2;
    MoeTrainer trainer(s, tc);
    std::vector<const Mesh*> batch;
    for (std::size_t i = 0; i < 4; ++i) batch.push_back(&d.meshes[i * 3]);
    const ParameterSet before = s.params;
    const auto out = trainer.train_iteration(batch, 0.3, 11);
    CHECK(out.state.size() == 3);
    CHECK(std::accumulate(out.state.begin(), out.state.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& w : out.per_mesh_weights)
        CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.reward >= 0.0);
    CHECK(out.reward <= 1.0);

    std::vector<int> pred, truth;
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(out.chosen[i] == choose_expert(out.per_mesh_weights[i]));
        pred.push_back(argmax_row(out.predictions[i][out.chosen[i]]));
        truth.push_back(*batch[i]->class_label);
    }
    CHECK(out.reward == mean_instance_accuracy(pred, truth));
    CHECK(out.loss_joint == joint_loss(out.loss_sim, out.loss_div, 0.3));
    CHECK(out.loss_sim == doctest::Approx(similarity_loss(out.predictions)).epsilon(1e-12));

    // Oracles stay frozen, the gate and the trainable expert move.
    CHECK_FALSE(s.params.subset("gate/") == before.subset("gate/"));
    CHECK_FALSE(s.params.subset("expert/face_mlp/") == before.subset("expert/face_mlp/"));
    CHECK(s.params.size() == before.size());
}

TEST_CASE("lambda zero makes the joint batch loss equal the diversity term") {
    const Dataset d = generate_classification_set(3, 4, 5);
    System s = make_system({"walk_rnn", "face_mlp"}, 3, tiny_gate(2), 6);
    TrainerConfig tc;
    tc.walks_train = 2;
    MoeTrainer trainer(s, tc);
    std::vector<const Mesh*> batch = {&d.meshes[0], &d.meshes[5]};
    double div = 0;
    for (const Mesh* m : batch) {
        ad::Tape t;
        div += trainer.build_mesh_terms(t, s.params, *m, 0.0, 2, 9).diversity.value()[0] / 2.0;
    }
    CHECK(trainer.batch_loss(s.params, batch, 0.0, 9) == doctest::Approx(div).epsilon(1e-15));
}

TEST_CASE("zero epochs change nothing and static lambda is constant") {
    const Dataset d = generate_classification_set(3, 4, 7);
    System s = make_system({"oracle:0", "oracle:1"}, 3, tiny_gate(2), 8);
    const ParameterSet before = s.params;
    MoeTrainer trainer(s, {});
    StaticLambda lam(0.25);
    CHECK(train_run(trainer, d, lam, 0, 1).empty());
    CHECK(s.params == before);

    TrainerConfig tc;
    tc.batch_size = 4;
    tc.walks_train = 2;
    MoeTrainer t2(s, tc);
    const auto log = train_run(t2, d, lam, 2, 1);
    CHECK(log.size() == 2 * ((d.train.size() + 3) / 4));
    for (const auto& row : log) {
        CHECK(row.lambda == 0.25);
        CHECK(std::accumulate(row.selection_frequency.begin(), row.selection_frequency.end(), 0.0) ==
              doctest::Approx(1.0));
    }
    std::ostringstream csv;
    write_metrics_csv(log, 2, csv);
    CHECK(csv.str().rfind("epoch,iteration,lambda,L_sim,L_div,L_joint,reward,select_0,select_1\n", 0) == 0);
}

TEST_CASE("training is deterministic and independent of execution mode") {
    const Dataset d = generate_classification_set(3, 4, 9);
    auto run = [&](Execution mode) {
        System s = make_system({"walk_rnn", "oracle:1"}, 3, tiny_gate(2), 10);
        TrainerConfig tc;
        tc.batch_size = 3;
        tc.walks_train = 2;
        tc.mode = mode;
        MoeTrainer trainer(s, tc);
        StaticLambda lam(0.5);
        train_run(trainer, d, lam, 1, 3);
        return s.params;
    };
    CHECK(run(Execution::serial) == run(Execution::parallel));
}

TEST_CASE("inference contract") {
    const Dataset d = generate_classification_set(3, 4, 11);
    const System s = make_system({"oracle:0", "oracle:1", "oracle:2"}, 3, tiny_gate(3), 12);
    const auto r1 = infer(s, d.meshes[0], 32, 5), r2 = infer(s, d.meshes[0], 32, 5);
    CHECK(r1.prediction == r2.prediction);
    CHECK(r1.weights == r2.weights);
    CHECK(r1.chosen >= 0);
    CHECK(r1.chosen < 3);
    CHECK(TrainerConfig{}.walks_infer == 32);
    CHECK(TrainerConfig{}.batch_size == 32);
    const auto ev = evaluate(s, d.meshes, Task::classification, 4, 1, Execution::serial);
    const auto evp = evaluate(s, d.meshes, Task::classification, 4, 1, Execution::parallel);
    CHECK(ev.accuracy == evp.accuracy);
    CHECK(ev.chosen == evp.chosen);
    CHECK(retrieval_descriptor(s, d.meshes[1], 4, 1).cols() == 3);
}

TEST_CASE("joint loss gradient on a 2-mesh, 2-expert fixture") {
    const Dataset d = generate_classification_set(2, 4, 13);
    System s = make_system({"walk_rnn", "face_mlp"}, 2, tiny_gate(2), 14);
    TrainerConfig tc;
    tc.walks_train = 2;
    MoeTrainer trainer(s, tc);
    const std::vector<const Mesh*> batch = {&d.meshes[0], &d.meshes[4]};
    GradCheckOptions opt;
    opt.max_coordinates_per_tensor = 3;
    const auto report = finite_difference_check(
        [&](ad::Tape& t, const ParameterSet& p) {
            ad::Var a = trainer.build_mesh_terms(t, p, *batch[0], 0.7, 2, 3).loss;
            ad::Var b = trainer.build_mesh_terms(t, p, *batch[1], 0.7, 2, 3).loss;
            return ad::add(a, b);
        },
        s.params, opt);
    CHECK(report.passed);
}

TEST_CASE("standard gradient suite passes") {
    GradCheckOptions opt;
    opt.max_coordinates_per_tensor = 3;
    for (const auto& r : standard_gradient_checks(1, opt)) {
        INFO(r.name << " " << r.report.worst_coordinate << " " << r.report.max_relative_error);
        CHECK(r.report.passed);
    }
}

TEST_CASE("segmentation trainer runs with per-edge experts") {
    const Dataset d = generate_segmentation_set(4, 15);
    System s = make_system({"edge_seg", "oracle:0", "oracle:2"}, d.num_classes, tiny_gate(3), 16);
    TrainerConfig tc;
    tc.task = Task::segmentation;
    tc.batch_size = 3;
    tc.walks_train = 2;
    MoeTrainer trainer(s, tc);
    StaticLambda lam(0.1);
    const auto log = train_run(trainer, d, lam, 1, 1);
    for (const auto& row : log) {
        CHECK(std::isfinite(row.loss_joint));
        CHECK(row.reward >= 0.0);
        CHECK(row.reward <= 1.0);
    }
    const auto ev = evaluate(s, d.meshes, Task::segmentation, 4, 1);
    CHECK_THROWS(evaluate(s, d.test_meshes(), Task::segmentation, 4, 1));
    CHECK(ev.accuracy >= 0.0);
    CHECK(ev.face_accuracy >= 0.0);
    CHECK(ev.face_accuracy <= 1.0);
}

}
