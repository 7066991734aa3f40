#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mme {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    bool operator==(const Vec3&) const = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

using Face = std::array<int, 3>;

/// Undirected edge, canonical order a < b.
struct Edge {
    int a = 0;
    int b = 0;
    double length = 0;
};

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Connectivity {
    std::vector<std::vector<int>> adjacency;
    std::vector<Edge> edges;  // sorted by (a, b)
};

/// Builds symmetric vertex adjacency and the deduplicated edge list.
/// Neighbor lists and edges are sorted, so output is independent of face order.
Connectivity build_adjacency(std::span<const Face> faces, std::span<const Vec3> vertices);

/// Triangle mesh with derived connectivity. Immutable after construction.
class Mesh {
public:
    Mesh() = default;
    Mesh(std::string id, std::vector<Vec3> vertices, std::vector<Face> faces);

    const std::string& id() const { return id_; }
    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    const std::vector<std::vector<int>>& adjacency() const { return adjacency_; }
    const std::vector<Edge>& edges() const { return edges_; }

    std::optional<int> class_label;
    std::optional<std::vector<int>> face_labels;
    std::optional<std::vector<int>> edge_labels;

    /// Index of the edge (u, v) in edges(), or -1.
    int find_edge(int u, int v) const;

    /// Faces incident to each edge (one entry for boundary edges).
    std::vector<std::vector<int>> edge_faces() const;

    /// Throws MeshError when a stored invariant does not hold.
    void validate() const;

private:
    std::string id_;
    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<Edge> edges_;
};

Mesh parse_off(std::istream& in, const std::string& mesh_id);
Mesh load_off(const std::filesystem::path& path);
void write_off(const Mesh& mesh, std::ostream& out);
void save_off(const Mesh& mesh, const std::filesystem::path& path);

/// Centers at the vertex centroid and scales the max radius to 1.
Mesh normalize_coordinates(const Mesh& mesh);

/// Same mesh with vertex positions replaced; labels are kept.
Mesh with_vertices(const Mesh& mesh, std::vector<Vec3> vertices);

/// Integer label sidecar (one per line). `.eseg` follows edges() order, `.fseg` faces().
std::vector<int> load_labels(const std::filesystem::path& path);
void save_labels(std::span<const int> labels, const std::filesystem::path& path);

/// Loads an OFF file, normalizes it, and attaches `.eseg`/`.fseg` sidecars when present.
Mesh load_mesh(const std::filesystem::path& path);

Vec3 face_normal(const Mesh& mesh, int face);  // unit, zero when degenerate
double face_area(const Mesh& mesh, int face);
Vec3 face_centroid(const Mesh& mesh, int face);

/// Number of connected components over the vertex adjacency.
int connected_components(const Mesh& mesh);

} // namespace mme
