#include "mme/walk.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace mme {

std::size_t walk_length(std::size_t vertex_count) {
    if (vertex_count < 2) throw std::invalid_argument("mesh too small to walk");
    // ceil(0.4 * V) in integer arithmetic.
    const std::size_t l = (2 * vertex_count + 4) / 5;
    return std::max<std::size_t>(2, l);
}

Walk extract_walk_from(std::span<const std::vector<int>> adjacency, std::span<const Vec3> positions,
                       int start, std::size_t length, Rng& rng, std::string source_id) {
    const std::size_t n = adjacency.size();
    if (length > n) throw std::invalid_argument("walk longer than vertex count");
    if (start < 0 || static_cast<std::size_t>(start) >= n) throw std::invalid_argument("walk start out of range");

    Walk walk;
    walk.source_mesh_id = std::move(source_id);
    walk.vertex_indices.reserve(length);
    walk.jump_flags.reserve(length);
    std::vector<std::uint8_t> visited(n, 0);
    std::vector<int> candidates;

    int current = start;
    visited[current] = 1;
    walk.vertex_indices.push_back(current);
    walk.jump_flags.push_back(0);
    while (walk.vertex_indices.size() < length) {
        candidates.clear();
        for (int u : adjacency[current])
            if (!visited[u]) candidates.push_back(u);
        std::uint8_t jumped = 0;
        if (candidates.empty()) {
            for (std::size_t v = 0; v < n; ++v)
                if (!visited[v]) candidates.push_back(static_cast<int>(v));
            jumped = 1;
        }
        current = candidates[rng.uniform_index(candidates.size())];
        visited[current] = 1;
        walk.vertex_indices.push_back(current);
        walk.jump_flags.push_back(jumped);
    }
    walk.coordinates.reserve(length);
    for (int v : walk.vertex_indices) walk.coordinates.push_back(positions[v]);
    return walk;
}

Walk extract_walk(const Mesh& mesh, Rng& rng) {
    const std::size_t length = walk_length(mesh.vertices().size());
    const int start = static_cast<int>(rng.uniform_index(mesh.vertices().size()));
    return extract_walk_from(mesh.adjacency(), mesh.vertices(), start, length, rng, mesh.id());
}

std::vector<Walk> extract_walks(const Mesh& mesh, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("walk count must be >= 1");
    std::vector<Walk> walks;
    walks.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Rng rng(derive_seed(seed, k));
        walks.push_back(extract_walk(mesh, rng));
    }
    return walks;
}

std::vector<std::vector<Walk>> extract_walks_batch(std::span<const Mesh> meshes, std::size_t count,
                                                   std::uint64_t seed, Execution mode) {
    std::vector<std::vector<Walk>> out(meshes.size());
    for_each_index(meshes.size(), mode,
                   [&](std::size_t i) { out[i] = extract_walks(meshes[i], count, derive_seed(seed, i)); });
    return out;
}

void write_walk_line(const Walk& walk, std::ostream& out) {
    out << walk.source_mesh_id << ' ' << walk.length();
    for (int v : walk.vertex_indices) out << ' ' << v;
    out << '\n';
}

} // namespace mme
