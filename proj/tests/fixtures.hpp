#pragma once

#include "mme/mesh.hpp"
#include "mme/rng.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace fixtures {

inline mme::Mesh from_off(const std::string& text, const std::string& id = "m") {
    std::istringstream in(text);
    return mme::parse_off(in, id);
}

inline mme::Mesh tetrahedron() {
    return from_off("OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n", "tetra");
}

inline mme::Mesh icosahedron() {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<mme::Vec3> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                                {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    std::vector<mme::Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                                {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                                {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    return mme::Mesh("ico", v, f);
}

/// Triangle strip with n vertices: faces (i, i+1, i+2).
inline mme::Mesh strip(int n, const std::string& id = "strip") {
    std::vector<mme::Vec3> v;
    std::vector<mme::Face> f;
    for (int i = 0; i < n; ++i) v.push_back({static_cast<double>(i / 2), static_cast<double>(i % 2), 0.0});
    for (int i = 0; i + 2 < n; ++i) f.push_back({i, i + 1, i + 2});
    return mme::Mesh(id, v, f);
}

/// Uniform random point on the probability simplex of size n.
inline std::vector<double> simplex_point(mme::Rng& rng, std::size_t n) {
    std::vector<double> p(n);
    double s = 0;
    for (auto& x : p) s += (x = -std::log(1.0 - rng.uniform01()));
    for (auto& x : p) x /= s;
    return p;
}

} // namespace fixtures
