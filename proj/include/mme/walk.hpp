#pragma once

#include "mme/kernels.hpp"
#include "mme/mesh.hpp"
#include "mme/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mme {

/// Ordered sequence of distinct vertices. Consecutive positions are mesh
/// edges unless the later position has its jump flag set.
struct Walk {
    std::vector<int> vertex_indices;
    std::vector<Vec3> coordinates;
    std::vector<std::uint8_t> jump_flags;
    std::string source_mesh_id;

    std::size_t length() const { return vertex_indices.size(); }
    bool operator==(const Walk&) const = default;
};

/// max(2, ceil(0.4 * vertex_count)). Throws for fewer than 2 vertices.
std::size_t walk_length(std::size_t vertex_count);

/// Walk of `length` distinct vertices starting at `start` over an arbitrary
/// graph. Each step picks a uniformly random unvisited neighbor; at a dead end
/// it jumps to a uniformly random unvisited vertex and flags the position.
Walk extract_walk_from(std::span<const std::vector<int>> adjacency, std::span<const Vec3> positions,
                       int start, std::size_t length, Rng& rng, std::string source_id = {});

/// One walk with a uniformly random start and length walk_length(|V|).
Walk extract_walk(const Mesh& mesh, Rng& rng);

/// `count` walks; walk k draws from an independent stream derived from (seed, k).
std::vector<Walk> extract_walks(const Mesh& mesh, std::size_t count, std::uint64_t seed);

/// Walks for many meshes; mesh i uses seed derive_seed(seed, i).
std::vector<std::vector<Walk>> extract_walks_batch(std::span<const Mesh> meshes, std::size_t count,
                                                   std::uint64_t seed, Execution mode);

/// "mesh_id L i0 i1 ... i(L-1)"
void write_walk_line(const Walk& walk, std::ostream& out);

} // namespace mme
