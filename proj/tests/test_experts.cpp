#include "fixtures.hpp"
#include "mme/experts.hpp"
#include "mme/losses.hpp"
#include "mme/metrics.hpp"
#include "mme/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace mme;

namespace {

void check_rows_normalized(const Tensor& p) {
    for (std::size_t r = 0; r < p.rows(); ++r) {
        double s = 0;
        for (std::size_t c = 0; c < p.cols(); ++c) {
            CHECK(p.at(r, c) >= 0);
            s += p.at(r, c);
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
}

double test_accuracy(const Expert& e, const ParameterSet& p, const Dataset& d) {
    std::vector<int> pred, truth;
    for (const auto& m : d.test_meshes()) {
        pred.push_back(argmax_row(e.predict_value(p, m, 5)));
        truth.push_back(*m.class_label);
    }
    return mean_instance_accuracy(pred, truth);
}

double trained_accuracy(const std::string& id, std::uint64_t seed) {
    const Dataset d = generate_classification_set(3, 20, seed);
    auto e = make_expert(id, 3, seed);
    ParameterSet p;
    Rng rng(seed);
    e->init_params(p, rng);
    ExpertTrainingConfig cfg;
    cfg.epochs = 30;
    cfg.seed = seed;
    pretrain_expert(*e, p, d.train_meshes(), cfg);
    return test_accuracy(*e, p, d);
}

} // namespace

TEST_SUITE("experts") {

TEST_CASE("output normalization on all fixtures") {
    const Dataset d = generate_classification_set(4, 4, 1);
    for (const std::string id : {"walk_rnn", "face_mlp", "oracle:2", "oracle:0:0.5"}) {
        auto e = make_expert(id, 4, 3);
        ParameterSet p;
        Rng rng(2);
        e->init_params(p, rng);
        for (const auto& m : d.meshes) {
            const Tensor out = e->predict_value(p, m, 7);
            CHECK(out.rows() == 1);
            CHECK(out.cols() == 4);
            check_rows_normalized(out);
        }
    }
}

TEST_CASE("walk expert is deterministic given a seed") {
    WalkRnnExpert e(3);
    ParameterSet p;
    Rng rng(1);
    e.init_params(p, rng);
    const Mesh m = fixtures::icosahedron();
    CHECK(e.predict_value(p, m, 4) == e.predict_value(p, m, 4));
    CHECK(e.param_prefix() == "expert/walk_rnn/");
    for (const auto& [path, t] : p) CHECK(path.rfind("expert/walk_rnn/", 0) == 0);
}

TEST_CASE("face expert pools symmetrically") {
    FaceMlpExpert e(3);
    ParameterSet p;
    Rng rng(2);
    e.init_params(p, rng);
    const Mesh m = fixtures::icosahedron();
    std::vector<Face> reversed(m.faces().rbegin(), m.faces().rend());
    const Mesh shuffled("ico2", m.vertices(), reversed);
    const Tensor a = e.predict_value(p, m, 0), b = e.predict_value(p, shuffled, 0);
    for (std::size_t c = 0; c < 3; ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
    CHECK(FaceMlpExpert::face_features(m).rows() == m.faces().size());
}

TEST_CASE("edge segmenter shape and determinism") {
    EdgeSegmenterExpert e(4);
    ParameterSet p;
    Rng rng(3);
    e.init_params(p, rng);
    const Mesh m = segmented_cylinder(2, "c");
    const Tensor out = e.predict_value(p, m, 0);
    CHECK(out.rows() == m.edges().size());
    CHECK(out.cols() == 4);
    check_rows_normalized(out);
    CHECK(out == e.predict_value(p, m, 99));
}

TEST_CASE("oracle accuracy matches 5/9 by Monte Carlo") {
    const std::size_t n = 12000;
    std::vector<Mesh> meshes;
    const Mesh base = fixtures::tetrahedron();
    for (std::size_t i = 0; i < n; ++i) {
        Mesh m("mc_" + std::to_string(i), base.vertices(), base.faces());
        m.class_label = static_cast<int>(i % 3);
        meshes.push_back(std::move(m));
    }
    for (int specialty = 0; specialty < 3; ++specialty) {
        ScriptedOracleExpert e(3, specialty, 1.0, 77);
        std::size_t correct = 0, on_specialty = 0, on_specialty_total = 0;
        for (const auto& m : meshes) {
            const bool ok = e.predicted_class(m) == *m.class_label;
            correct += ok;
            if (*m.class_label == specialty) {
                ++on_specialty_total;
                on_specialty += ok;
            }
        }
        const double acc = static_cast<double>(correct) / n;
        CHECK(std::abs(acc - 5.0 / 9.0) < 0.015);
        CHECK(on_specialty == on_specialty_total);
    }
    ScriptedOracleExpert e(3, 0, 1.0, 77);
    CHECK_FALSE(e.trainable());
    ParameterSet none;
    Rng rng(0);
    e.init_params(none, rng);
    CHECK(none.empty());
    CHECK(e.id() == "oracle:0:1");
}

TEST_CASE("oracle answers do not depend on call order or call seed") {
    ScriptedOracleExpert e(5, 1, 0.5, 3);
    const Mesh m = fixtures::icosahedron();
    ParameterSet none;
    CHECK(e.predict_value(none, m, 1) == e.predict_value(none, m, 2));
}

TEST_CASE("registry") {
    CHECK(make_expert("walk_rnn", 3, 0)->name() == "walk_rnn");
    CHECK(make_expert("oracle:2:0.75", 3, 0)->id() == "oracle:2:0.75");
    CHECK_THROWS(make_expert("oracle:x", 3, 0));
    CHECK_THROWS(make_expert("meshcnn", 3, 0));
    CHECK(parse_task("retrieval") == Task::retrieval);
    CHECK_THROWS(parse_task("detection"));
}

TEST_CASE("training lowers each trainable expert's loss") {
    const Dataset d = generate_classification_set(3, 8, 4);
    for (const std::string id : {"walk_rnn", "face_mlp"}) {
        auto e = make_expert(id, 3, 1);
        ParameterSet p;
        Rng rng(1);
        e->init_params(p, rng);
        ExpertTrainingConfig cfg;
        cfg.epochs = 5;
        const auto losses = pretrain_expert(*e, p, d.train_meshes(), cfg);
        REQUIRE(losses.size() == 5);
        CHECK(losses.back() < losses.front());
        CHECK((losses[3] + losses[4]) < (losses[0] + losses[1]));
    }
    ScriptedOracleExpert oracle(3, 0, 1.0, 1);
    ParameterSet p;
    CHECK_THROWS(pretrain_expert(oracle, p, d.train_meshes(), {}));
}

TEST_CASE("trained walk expert exceeds 70% on held-out meshes") {
    for (std::uint64_t seed : {1u, 2u, 3u}) CHECK(trained_accuracy("walk_rnn", seed) > 0.7);
}

TEST_CASE("trained face expert exceeds 70% on held-out meshes") {
    for (std::uint64_t seed : {1u, 2u, 3u}) CHECK(trained_accuracy("face_mlp", seed) > 0.7);
}

TEST_CASE("edge segmenter learns the mid-height split") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Dataset d = generate_segmentation_set(6, seed);
        std::vector<Mesh> two;
        for (const auto& m : d.meshes)
            if (*m.class_label == 0) two.push_back(m);
        EdgeSegmenterExpert e(d.num_classes);
        ParameterSet p;
        Rng rng(seed);
        e.init_params(p, rng);
        ExpertTrainingConfig cfg;
        cfg.epochs = 40;
        cfg.task = Task::segmentation;
        cfg.seed = seed;
        pretrain_expert(e, p, std::span(two).first(4), cfg);
        double acc = 0;
        for (const auto& m : std::span(two).subspan(4)) {
            const Tensor out = e.predict_value(p, m, 0);
            std::vector<int> pred;
            std::vector<double> len;
            for (std::size_t r = 0; r < out.rows(); ++r) pred.push_back(argmax_row(out, r));
            for (const auto& edge : m.edges()) len.push_back(edge.length);
            acc += edge_accuracy(pred, *m.edge_labels, len);
        }
        CHECK(acc / 2.0 > 0.85);
    }
}

}
