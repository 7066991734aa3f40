#include "fixtures.hpp"
#include "mme/dataset.hpp"
#include "mme/synth.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace mme;

TEST_SUITE("mesh") {

TEST_CASE("tetrahedron has six edges") {
    const Mesh m = fixtures::tetrahedron();
    CHECK(m.edges().size() == 6);
    CHECK(m.vertices().size() - m.edges().size() + m.faces().size() == 2);
}

TEST_CASE("single triangle adjacency") {
    const Mesh m = fixtures::from_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
    CHECK(m.adjacency()[0] == std::vector<int>{1, 2});
    CHECK(m.adjacency()[1] == std::vector<int>{0, 2});
    CHECK(m.adjacency()[2] == std::vector<int>{0, 1});
}

TEST_CASE("off parser rejects malformed input") {
    CHECK_THROWS_WITH_AS(fixtures::from_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n"),
                         doctest::Contains("non-triangular face"), MeshError);
    CHECK_THROWS_WITH_AS(fixtures::from_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n"),
                         doctest::Contains("out of range"), MeshError);
    CHECK_THROWS_AS(fixtures::from_off("PLY\n"), MeshError);
    CHECK_THROWS_AS(fixtures::from_off("OFF\n3 1 0\n0 0 0\n1 0 0\n"), MeshError);
}

TEST_CASE("comments are skipped") {
    const Mesh m = fixtures::from_off("OFF\n# header comment\n3 1 0\n0 0 0\n# inside\n1 0 0\n0 1 0\n3 0 1 2\n");
    CHECK(m.faces().size() == 1);
}

TEST_CASE("build_adjacency deduplicates edges") {
    std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const auto one = build_adjacency(std::vector<Face>{{0, 1, 2}}, v);
    REQUIRE(one.edges.size() == 3);
    CHECK(one.edges[0].a == 0);
    CHECK(one.edges[0].b == 1);
    CHECK(one.edges[1].b == 2);
    CHECK(one.edges[2].a == 1);
    const auto two = build_adjacency(std::vector<Face>{{0, 1, 2}, {0, 1, 3}}, v);
    CHECK(two.edges.size() == 5);
    int count01 = 0;
    for (const auto& e : two.edges) count01 += (e.a == 0 && e.b == 1);
    CHECK(count01 == 1);
}

TEST_CASE("icosahedron satisfies Euler's formula") {
    const Mesh m = fixtures::icosahedron();
    CHECK(m.edges().size() == 30);
    const long v = m.vertices().size(), e = m.edges().size(), f = m.faces().size();
    CHECK(v - e + f == 2);
}

TEST_CASE("adjacency symmetric and edges positive on every fixture") {
    std::vector<Mesh> meshes = {fixtures::tetrahedron(), fixtures::icosahedron(), fixtures::strip(9)};
    for (const auto& m : generate_classification_set(10, 4, 3).meshes) meshes.push_back(m);
    for (const auto& m : meshes) {
        for (std::size_t u = 0; u < m.adjacency().size(); ++u)
            for (int v : m.adjacency()[u]) {
                const auto& back = m.adjacency()[v];
                CHECK(std::find(back.begin(), back.end(), static_cast<int>(u)) != back.end());
            }
        std::set<std::pair<int, int>> seen;
        for (const auto& e : m.edges()) {
            CHECK(e.a < e.b);
            CHECK(e.length > 0);
            CHECK(seen.insert({e.a, e.b}).second);
        }
        CHECK_NOTHROW(m.validate());
    }
}

TEST_CASE("normalization centers and scales") {
    const Mesh two("two", {{0, 0, 0}, {2, 0, 0}, {1, 1, 0}}, {{0, 1, 2}});
    const Mesh n = normalize_coordinates(two);
    double max_r = 0;
    Vec3 c{0, 0, 0};
    for (const auto& p : n.vertices()) {
        max_r = std::max(max_r, norm(p));
        c = c + p;
    }
    CHECK(max_r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norm(c) < 1e-12);

    const Mesh seg("seg", {{0, 0, 0}, {2, 0, 0}, {1, 0, 0}}, {{0, 1, 2}});
    const Mesh ns = normalize_coordinates(seg);
    CHECK(ns.vertices()[0].x == doctest::Approx(-1.0));
    CHECK(ns.vertices()[1].x == doctest::Approx(1.0));

    const Mesh again = normalize_coordinates(n);
    for (std::size_t i = 0; i < n.vertices().size(); ++i) CHECK(norm(again.vertices()[i] - n.vertices()[i]) < 1e-12);
}

TEST_CASE("cube of side 10 normalizes to the origin with radius one") {
    std::vector<Vec3> v;
    for (int i = 0; i < 8; ++i) v.push_back({10.0 * (i & 1), 10.0 * ((i >> 1) & 1), 10.0 * ((i >> 2) & 1)});
    const std::vector<Face> f = {{0, 1, 3}, {0, 3, 2}, {4, 6, 7}, {4, 7, 5}, {0, 4, 5}, {0, 5, 1},
                                 {2, 3, 7}, {2, 7, 6}, {0, 2, 6}, {0, 6, 4}, {1, 5, 7}, {1, 7, 3}};
    const Mesh n = normalize_coordinates(Mesh("cube", v, f));
    for (const auto& p : n.vertices()) CHECK(norm(p) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(n.vertices()[7].x == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK_THROWS_AS(normalize_coordinates(Mesh("pt", {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}, {{0, 1, 2}})), MeshError);
}

TEST_CASE("off round trip keeps topology and coordinates") {
    const Mesh m = normalize_coordinates(fixtures::icosahedron());
    std::stringstream s;
    write_off(m, s);
    const Mesh back = parse_off(s, "ico");
    CHECK(back.faces() == m.faces());
    CHECK(back.vertices() == m.vertices());
}

TEST_CASE("label sidecars load with the mesh") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mme_mesh_labels";
    fs::create_directories(dir);
    const Mesh m = segmented_cylinder(2, "cyl");
    save_off(m, dir / "cyl.off");
    save_labels(*m.edge_labels, dir / "cyl.eseg");
    save_labels(*m.face_labels, dir / "cyl.fseg");
    const Mesh loaded = load_mesh(dir / "cyl.off");
    REQUIRE(loaded.edge_labels);
    CHECK(*loaded.edge_labels == *m.edge_labels);
    CHECK(*loaded.face_labels == *m.face_labels);

    std::ofstream(dir / "cyl.eseg") << "0\n1\n";
    CHECK_THROWS_AS(load_mesh(dir / "cyl.off"), MeshError);
    fs::remove_all(dir);
}

TEST_CASE("dataset round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mme_dataset_rt";
    fs::remove_all(dir);
    const Dataset d = generate_segmentation_set(4, 5);
    save_dataset(d, dir);
    const Dataset back = load_dataset(dir);
    CHECK(back.meshes.size() == d.meshes.size());
    CHECK(back.train == d.train);
    CHECK(back.test == d.test);
    CHECK(back.task == Task::segmentation);
    CHECK(back.num_classes == d.num_classes);
    for (std::size_t i = 0; i < d.meshes.size(); ++i) {
        CHECK(back.meshes[i].id() == d.meshes[i].id());
        CHECK(back.meshes[i].class_label == d.meshes[i].class_label);
        CHECK(back.meshes[i].edge_labels == d.meshes[i].edge_labels);
        CHECK(back.meshes[i].faces() == d.meshes[i].faces());
    }
    CHECK_NOTHROW(back.validate());
    fs::remove_all(dir);
}

TEST_CASE("connected components") {
    CHECK(connected_components(fixtures::icosahedron()) == 1);
    const Mesh two("two", {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 0, 0}, {6, 0, 0}, {5, 1, 0}}, {{0, 1, 2}, {3, 4, 5}});
    CHECK(connected_components(two) == 2);
}

}
