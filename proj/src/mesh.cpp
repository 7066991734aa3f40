#include "mme/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <sstream>

namespace mme {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    throw MeshError("line " + std::to_string(line) + ": " + what);
}

// Splits the next non-empty, non-comment line into tokens.
bool next_tokens(std::istream& in, std::size_t& line_no, std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        tokens.clear();
        for (std::string tok; ss >> tok;) tokens.push_back(tok);
        if (!tokens.empty()) return true;
    }
    return false;
}

long parse_int(const std::string& tok, std::size_t line) {
    long value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) fail(line, "expected integer, got '" + tok + "'");
    return value;
}

double parse_real(const std::string& tok, std::size_t line) {
    double value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) fail(line, "expected real number, got '" + tok + "'");
    return value;
}

} // namespace

Connectivity build_adjacency(std::span<const Face> faces, std::span<const Vec3> vertices) {
    const int n = static_cast<int>(vertices.size());
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(faces.size() * 3);
    for (std::size_t f = 0; f < faces.size(); ++f) {
        for (int k = 0; k < 3; ++k) {
            const int u = faces[f][k];
            const int v = faces[f][(k + 1) % 3];
            if (u < 0 || u >= n || v < 0 || v >= n)
                throw MeshError("face " + std::to_string(f) + ": vertex index out of range");
            if (u == v) throw MeshError("face " + std::to_string(f) + ": repeated vertex index");
            pairs.emplace_back(std::min(u, v), std::max(u, v));
        }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

    Connectivity out;
    out.adjacency.resize(vertices.size());
    out.edges.reserve(pairs.size());
    for (auto [a, b] : pairs) {
        out.adjacency[a].push_back(b);
        out.adjacency[b].push_back(a);
        out.edges.push_back({a, b, norm(vertices[a] - vertices[b])});
    }
    for (auto& nb : out.adjacency) std::sort(nb.begin(), nb.end());
    return out;
}

Mesh::Mesh(std::string id, std::vector<Vec3> vertices, std::vector<Face> faces)
    : id_(std::move(id)), vertices_(std::move(vertices)), faces_(std::move(faces)) {
    auto conn = build_adjacency(faces_, vertices_);
    adjacency_ = std::move(conn.adjacency);
    edges_ = std::move(conn.edges);
}

int Mesh::find_edge(int u, int v) const {
    const Edge key{std::min(u, v), std::max(u, v), 0};
    auto it = std::lower_bound(edges_.begin(), edges_.end(), key, [](const Edge& l, const Edge& r) {
        return l.a != r.a ? l.a < r.a : l.b < r.b;
    });
    if (it == edges_.end() || it->a != key.a || it->b != key.b) return -1;
    return static_cast<int>(it - edges_.begin());
}

std::vector<std::vector<int>> Mesh::edge_faces() const {
    std::vector<std::vector<int>> out(edges_.size());
    for (std::size_t f = 0; f < faces_.size(); ++f)
        for (int k = 0; k < 3; ++k)
            out[find_edge(faces_[f][k], faces_[f][(k + 1) % 3])].push_back(static_cast<int>(f));
    return out;
}

void Mesh::validate() const {
    const int n = static_cast<int>(vertices_.size());
    for (const auto& f : faces_)
        for (int v : f)
            if (v < 0 || v >= n) throw MeshError(id_ + ": face index out of range");
    for (int v = 0; v < n; ++v)
        for (int u : adjacency_[v])
            if (!std::binary_search(adjacency_[u].begin(), adjacency_[u].end(), v))
                throw MeshError(id_ + ": adjacency is not symmetric");
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        if (!(edges_[e].length > 0)) throw MeshError(id_ + ": edge of zero length");
        if (e > 0 && !(edges_[e - 1].a < edges_[e].a ||
                       (edges_[e - 1].a == edges_[e].a && edges_[e - 1].b < edges_[e].b)))
            throw MeshError(id_ + ": duplicate or unsorted edge");
    }
    if (edge_labels && edge_labels->size() != edges_.size())
        throw MeshError(id_ + ": edge label count does not match edge count");
    if (face_labels && face_labels->size() != faces_.size())
        throw MeshError(id_ + ": face label count does not match face count");
}

Mesh parse_off(std::istream& in, const std::string& mesh_id) {
    std::size_t line = 0;
    std::vector<std::string> tok;
    if (!next_tokens(in, line, tok) || tok[0] != "OFF") fail(line, "malformed header, expected 'OFF'");
    tok.erase(tok.begin());
    if (tok.empty() && !next_tokens(in, line, tok)) fail(line, "missing counts line");
    if (tok.size() < 2) fail(line, "malformed counts line, expected 'V F E'");
    const long nv = parse_int(tok[0], line);
    const long nf = parse_int(tok[1], line);
    if (nv < 0 || nf < 0) fail(line, "negative element count");

    std::vector<Vec3> vertices;
    vertices.reserve(nv);
    for (long i = 0; i < nv; ++i) {
        if (!next_tokens(in, line, tok))
            fail(line, "fewer vertices than declared (" + std::to_string(i) + " of " + std::to_string(nv) + ")");
        if (tok.size() < 3) fail(line, "vertex needs 3 coordinates");
        vertices.push_back({parse_real(tok[0], line), parse_real(tok[1], line), parse_real(tok[2], line)});
    }
    std::vector<Face> faces;
    faces.reserve(nf);
    for (long i = 0; i < nf; ++i) {
        if (!next_tokens(in, line, tok))
            fail(line, "fewer faces than declared (" + std::to_string(i) + " of " + std::to_string(nf) + ")");
        const long k = parse_int(tok[0], line);
        if (k != 3) fail(line, "non-triangular face");
        if (tok.size() < 4) fail(line, "face lists fewer than 3 indices");
        Face f{};
        for (int j = 0; j < 3; ++j) {
            const long idx = parse_int(tok[1 + j], line);
            if (idx < 0 || idx >= nv) fail(line, "index out of range");
            f[j] = static_cast<int>(idx);
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) fail(line, "repeated vertex index in face");
        faces.push_back(f);
    }
    return Mesh(mesh_id, std::move(vertices), std::move(faces));
}

Mesh load_off(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MeshError("cannot open " + path.string());
    try {
        return parse_off(in, path.stem().string());
    } catch (const MeshError& e) {
        throw MeshError(path.string() + ": " + e.what());
    }
}

void write_off(const Mesh& mesh, std::ostream& out) {
    out << "OFF\n" << mesh.vertices().size() << ' ' << mesh.faces().size() << ' ' << mesh.edges().size() << '\n';
    out << std::setprecision(17);
    for (const auto& v : mesh.vertices()) out << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

void save_off(const Mesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw MeshError("cannot write " + path.string());
    write_off(mesh, out);
}

Mesh with_vertices(const Mesh& mesh, std::vector<Vec3> vertices) {
    Mesh out(mesh.id(), std::move(vertices), mesh.faces());
    out.class_label = mesh.class_label;
    out.face_labels = mesh.face_labels;
    out.edge_labels = mesh.edge_labels;
    return out;
}

Mesh normalize_coordinates(const Mesh& mesh) {
    const auto& vs = mesh.vertices();
    if (vs.empty()) throw MeshError(mesh.id() + ": empty mesh");
    Vec3 c;
    for (const auto& v : vs) c = c + v;
    c = c * (1.0 / static_cast<double>(vs.size()));
    double radius = 0;
    for (const auto& v : vs) radius = std::max(radius, norm(v - c));
    if (!(radius > 0)) throw MeshError(mesh.id() + ": zero extent");
    std::vector<Vec3> out;
    out.reserve(vs.size());
    for (const auto& v : vs) out.push_back((v - c) * (1.0 / radius));
    return with_vertices(mesh, std::move(out));
}

std::vector<int> load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MeshError("cannot open " + path.string());
    std::vector<int> labels;
    std::size_t line = 0;
    std::vector<std::string> tok;
    while (next_tokens(in, line, tok)) labels.push_back(static_cast<int>(parse_int(tok[0], line)));
    return labels;
}

void save_labels(std::span<const int> labels, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw MeshError("cannot write " + path.string());
    for (int l : labels) out << l << '\n';
}

Mesh load_mesh(const std::filesystem::path& path) {
    Mesh mesh = normalize_coordinates(load_off(path));
    auto eseg = path;
    eseg.replace_extension(".eseg");
    auto fseg = path;
    fseg.replace_extension(".fseg");
    if (std::filesystem::exists(eseg)) mesh.edge_labels = load_labels(eseg);
    if (std::filesystem::exists(fseg)) mesh.face_labels = load_labels(fseg);
    mesh.validate();
    return mesh;
}

Vec3 face_normal(const Mesh& mesh, int face) {
    const auto& f = mesh.faces()[face];
    const auto& v = mesh.vertices();
    Vec3 n = cross(v[f[1]] - v[f[0]], v[f[2]] - v[f[0]]);
    const double len = norm(n);
    return len > 0 ? n * (1.0 / len) : Vec3{};
}

double face_area(const Mesh& mesh, int face) {
    const auto& f = mesh.faces()[face];
    const auto& v = mesh.vertices();
    return 0.5 * norm(cross(v[f[1]] - v[f[0]], v[f[2]] - v[f[0]]));
}

Vec3 face_centroid(const Mesh& mesh, int face) {
    const auto& f = mesh.faces()[face];
    const auto& v = mesh.vertices();
    return (v[f[0]] + v[f[1]] + v[f[2]]) * (1.0 / 3.0);
}

int connected_components(const Mesh& mesh) {
    const auto& adj = mesh.adjacency();
    std::vector<int> seen(adj.size(), 0);
    int components = 0;
    std::vector<int> stack;
    for (std::size_t s = 0; s < adj.size(); ++s) {
        if (seen[s]) continue;
        ++components;
        stack.assign(1, static_cast<int>(s));
        seen[s] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int u : adj[v])
                if (!seen[u]) {
                    seen[u] = 1;
                    stack.push_back(u);
                }
        }
    }
    return components;
}

} // namespace mme
