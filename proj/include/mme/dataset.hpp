#pragma once

#include "mme/experts.hpp"
#include "mme/mesh.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace mme {

/// Meshes with a train/test partition (indices into `meshes`).
struct Dataset {
    std::vector<Mesh> meshes;
    std::size_t num_classes = 0;  // class count, or segment label count for segmentation
    Task task = Task::classification;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;

    std::vector<Mesh> subset(std::span<const std::size_t> indices) const;
    std::vector<Mesh> train_meshes() const { return subset(train); }
    std::vector<Mesh> test_meshes() const { return subset(test); }

    /// Labels in range, every mesh valid, splits disjoint and covering.
    void validate() const;
};

/// Writes <id>.off (+ .eseg/.fseg), manifest.csv (mesh_id,file,class,split) and dataset.info.
void save_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

} // namespace mme
