#include "mme/synth.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace mme {

namespace {

constexpr double kPi = std::numbers::pi;

Mesh icosphere(const std::string& id) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                           {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                           {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    // One midpoint subdivision.
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
        auto key = std::minmax(a, b);
        if (auto it = mid.find(key); it != mid.end()) return it->second;
        v.push_back((v[a] + v[b]) * 0.5);
        return mid[key] = static_cast<int>(v.size()) - 1;
    };
    std::vector<Face> out;
    for (const auto& tri : f) {
        const int a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
        out.push_back({tri[0], a, c});
        out.push_back({tri[1], b, a});
        out.push_back({tri[2], c, b});
        out.push_back({a, b, c});
    }
    for (auto& p : v) p = p * (1.0 / norm(p));
    return Mesh(id, std::move(v), std::move(out));
}

Mesh subdivided_box(const std::string& id, int n = 3) {
    std::map<std::tuple<int, int, int>, int> index;
    std::vector<Vec3> v;
    auto vertex = [&](int x, int y, int z) {
        auto key = std::make_tuple(x, y, z);
        if (auto it = index.find(key); it != index.end()) return it->second;
        v.push_back({2.0 * x / n - 1.0, 2.0 * y / n - 1.0, 2.0 * z / n - 1.0});
        return index[key] = static_cast<int>(v.size()) - 1;
    };
    std::vector<Face> f;
    // Each face: fixed axis `axis` at side s; (u, w) grid over the other two axes.
    for (int axis = 0; axis < 3; ++axis)
        for (int side = 0; side < 2; ++side)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    auto at = [&](int a, int b) {
                        int c[3];
                        c[axis] = side * n;
                        c[(axis + 1) % 3] = a;
                        c[(axis + 2) % 3] = b;
                        return vertex(c[0], c[1], c[2]);
                    };
                    const int p00 = at(i, j), p10 = at(i + 1, j), p11 = at(i + 1, j + 1), p01 = at(i, j + 1);
                    if (side == 1) {
                        f.push_back({p00, p10, p11});
                        f.push_back({p00, p11, p01});
                    } else {
                        f.push_back({p00, p11, p10});
                        f.push_back({p00, p01, p11});
                    }
                }
    return Mesh(id, std::move(v), std::move(f));
}

// Stack of rings with radius(level) from bottom (z=-1) to top (z=1), closed by
// a center vertex (or apex) at each end. Ring r vertex k has index r*around + k.
struct RingStack {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    int bottom = -1;
    int top = -1;
};

RingStack ring_stack(const std::vector<double>& radii, const std::vector<double>& heights, std::size_t around,
                     bool apex_top) {
    RingStack s;
    const std::size_t rings = radii.size();
    for (std::size_t r = 0; r < rings; ++r)
        for (std::size_t k = 0; k < around; ++k) {
            const double a = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(around);
            s.vertices.push_back({radii[r] * std::cos(a), radii[r] * std::sin(a), heights[r]});
        }
    auto id = [&](std::size_t r, std::size_t k) { return static_cast<int>(r * around + (k % around)); };
    for (std::size_t r = 0; r + 1 < rings; ++r)
        for (std::size_t k = 0; k < around; ++k) {
            s.faces.push_back({id(r, k), id(r, k + 1), id(r + 1, k + 1)});
            s.faces.push_back({id(r, k), id(r + 1, k + 1), id(r + 1, k)});
        }
    s.vertices.push_back({0, 0, heights.front()});
    s.bottom = static_cast<int>(s.vertices.size()) - 1;
    s.vertices.push_back({0, 0, apex_top ? 1.0 : heights.back()});
    s.top = static_cast<int>(s.vertices.size()) - 1;
    for (std::size_t k = 0; k < around; ++k) {
        s.faces.push_back({s.bottom, id(0, k + 1), id(0, k)});
        s.faces.push_back({s.top, id(rings - 1, k), id(rings - 1, k + 1)});
    }
    return s;
}

Mesh cylinder(const std::string& id) {
    std::vector<double> radii(5, 1.0), heights;
    for (int r = 0; r < 5; ++r) heights.push_back(-1.0 + 0.5 * r);
    auto s = ring_stack(radii, heights, 10, false);
    return Mesh(id, std::move(s.vertices), std::move(s.faces));
}

Mesh cone(const std::string& id) {
    auto s = ring_stack({1.0, 2.0 / 3.0, 1.0 / 3.0}, {-1.0, -1.0 / 3.0, 1.0 / 3.0}, 10, true);
    return Mesh(id, std::move(s.vertices), std::move(s.faces));
}

Mesh torus(const std::string& id, std::size_t major = 10, std::size_t minor = 5) {
    std::vector<Vec3> v;
    for (std::size_t i = 0; i < major; ++i)
        for (std::size_t j = 0; j < minor; ++j) {
            const double u = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(major);
            const double w = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(minor);
            const double r = 1.0 + 0.4 * std::cos(w);
            v.push_back({r * std::cos(u), r * std::sin(u), 0.4 * std::sin(w)});
        }
    auto id_of = [&](std::size_t i, std::size_t j) { return static_cast<int>((i % major) * minor + (j % minor)); };
    std::vector<Face> f;
    for (std::size_t i = 0; i < major; ++i)
        for (std::size_t j = 0; j < minor; ++j) {
            f.push_back({id_of(i, j), id_of(i + 1, j), id_of(i + 1, j + 1)});
            f.push_back({id_of(i, j), id_of(i + 1, j + 1), id_of(i, j + 1)});
        }
    return Mesh(id, std::move(v), std::move(f));
}

void shuffle(std::vector<std::size_t>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.uniform_index(i)]);
}

void split_per_class(Dataset& data, const std::vector<std::vector<std::size_t>>& by_class, std::uint64_t seed) {
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto members = by_class[c];
        Rng rng(derive_seed(seed, c, 0x5B11));
        shuffle(members, rng);
        const std::size_t test = members.size() / 5;
        for (std::size_t k = 0; k < members.size(); ++k) (k < test ? data.test : data.train).push_back(members[k]);
    }
    std::sort(data.train.begin(), data.train.end());
    std::sort(data.test.begin(), data.test.end());
}

} // namespace

std::string family_name(std::size_t cls) {
    static const char* names[kShapeFamilies] = {"sphere", "torus", "cone", "box", "cylinder"};
    if (cls >= kMaxSyntheticClasses) throw std::invalid_argument("unsupported class index");
    std::string name = names[cls % kShapeFamilies];
    return cls < kShapeFamilies ? name : "tall_" + name;
}

Mesh shape_template(std::size_t cls, const std::string& id) {
    if (cls >= kMaxSyntheticClasses) throw std::invalid_argument("unsupported class index");
    Mesh base;
    switch (cls % kShapeFamilies) {
    case 0: base = icosphere(id); break;
    case 1: base = torus(id); break;
    case 2: base = cone(id); break;
    case 3: base = subdivided_box(id); break;
    default: base = cylinder(id); break;
    }
    if (cls < kShapeFamilies) return base;
    std::vector<Vec3> v = base.vertices();
    for (auto& p : v) p.z *= 2.0;
    return with_vertices(base, std::move(v));
}

Mesh jitter_mesh(const Mesh& mesh, const JitterConfig& config, Rng& rng) {
    const double angle = config.rotate ? rng.uniform(0.0, 2.0 * kPi) : 0.0;
    const double sx = rng.uniform(config.scale_min, config.scale_max);
    const double sy = rng.uniform(config.scale_min, config.scale_max);
    const double sz = rng.uniform(config.scale_min, config.scale_max);
    const double c = std::cos(angle), s = std::sin(angle);
    std::vector<Vec3> out;
    out.reserve(mesh.vertices().size());
    for (const auto& p : mesh.vertices()) {
        Vec3 q{p.x * sx, p.y * sy, p.z * sz};
        q = {c * q.x - s * q.y, s * q.x + c * q.y, q.z};
        q.x += config.noise_sigma * rng.normal();
        q.y += config.noise_sigma * rng.normal();
        q.z += config.noise_sigma * rng.normal();
        out.push_back(q);
    }
    return normalize_coordinates(with_vertices(mesh, std::move(out)));
}

Dataset generate_classification_set(std::size_t classes, std::size_t per_class, std::uint64_t seed, Task task,
                                    const JitterConfig& jitter) {
    if (classes < 2 || classes > kMaxSyntheticClasses)
        throw std::invalid_argument("unsupported class count " + std::to_string(classes) + " (2.." +
                                    std::to_string(kMaxSyntheticClasses) + ")");
    if (per_class < 4) throw std::invalid_argument("per_class must be >= 4");
    Dataset data;
    data.num_classes = classes;
    data.task = task;
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t k = 0; k < per_class; ++k) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s_%03zu", family_name(c).c_str(), k);
            Rng rng(derive_seed(seed, c, k));
            Mesh m = jitter_mesh(shape_template(c, buf), jitter, rng);
            m.class_label = static_cast<int>(c);
            by_class[c].push_back(data.meshes.size());
            data.meshes.push_back(std::move(m));
        }
    split_per_class(data, by_class, seed);
    data.validate();
    return data;
}

Mesh segmented_cylinder(std::size_t segments, const std::string& id, std::size_t bands, std::size_t around) {
    if (segments < 1 || segments > bands) throw std::invalid_argument("segment count out of range");
    const std::size_t rings = bands + 1;
    std::vector<double> radii(rings, 0.5), heights;
    for (std::size_t r = 0; r < rings; ++r) heights.push_back(-1.0 + 2.0 * static_cast<double>(r) / bands);
    auto s = ring_stack(radii, heights, around, false);
    const int n_ring = static_cast<int>(rings * around);
    auto ring_of = [&](int v) -> int {
        if (v == s.bottom) return 0;
        if (v == s.top) return static_cast<int>(rings) - 1;
        return v / static_cast<int>(around);
    };
    auto band_segment = [&](std::size_t band) { return static_cast<int>(band * segments / bands); };

    Mesh mesh(id, s.vertices, s.faces);
    std::vector<int> face_labels;
    for (const auto& f : mesh.faces()) {
        if (f[0] == s.bottom) face_labels.push_back(0);
        else if (f[0] == s.top) face_labels.push_back(static_cast<int>(segments) - 1);
        else face_labels.push_back(band_segment(std::min({ring_of(f[0]), ring_of(f[1]), ring_of(f[2])})));
    }
    std::vector<int> edge_labels;
    for (const auto& e : mesh.edges()) {
        const int ra = ring_of(e.a), rb = ring_of(e.b);
        const int lo = std::min(ra, rb);
        if (ra != rb) {
            edge_labels.push_back(band_segment(lo));
        } else if (e.a >= n_ring || e.b >= n_ring || lo == 0) {
            edge_labels.push_back(lo == 0 ? 0 : static_cast<int>(segments) - 1);
        } else if (lo == static_cast<int>(rings) - 1) {
            edge_labels.push_back(static_cast<int>(segments) - 1);
        } else {
            // Ring shared by bands lo-1 and lo: a boundary ring takes the lower segment.
            edge_labels.push_back(band_segment(lo - 1));
        }
    }
    mesh.face_labels = std::move(face_labels);
    mesh.edge_labels = std::move(edge_labels);
    return mesh;
}

Dataset generate_segmentation_set(std::size_t per_class, std::uint64_t seed, const JitterConfig& jitter) {
    if (per_class < 4) throw std::invalid_argument("per_class must be >= 4");
    Dataset data;
    data.num_classes = 4;
    data.task = Task::segmentation;
    std::vector<std::vector<std::size_t>> by_class(3);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t k = 0; k < per_class; ++k) {
            const std::size_t segments = c + 2;
            char buf[64];
            std::snprintf(buf, sizeof buf, "cyl%zu_%03zu", segments, k);
            Rng rng(derive_seed(seed, c + 100, k));
            Mesh m = jitter_mesh(segmented_cylinder(segments, buf), jitter, rng);
            m.class_label = static_cast<int>(c);
            by_class[c].push_back(data.meshes.size());
            data.meshes.push_back(std::move(m));
        }
    split_per_class(data, by_class, seed);
    data.validate();
    return data;
}

} // namespace mme
