#pragma once

#include "mme/dataset.hpp"

#include <cstdint>
#include <string>

namespace mme {

/// Base shape families used for class generation, in class order.
/// Classes past the family count reuse the families stretched 2× along z.
inline constexpr std::size_t kShapeFamilies = 5;
inline constexpr std::size_t kMaxSyntheticClasses = 2 * kShapeFamilies;

std::string family_name(std::size_t cls);

/// Undeformed template of a class (before jitter and normalization).
Mesh shape_template(std::size_t cls, const std::string& id);

struct JitterConfig {
    double scale_min = 0.7;
    double scale_max = 1.3;
    double noise_sigma = 0.01;
    bool rotate = true;  // random rotation about z
};

/// Random z-rotation, anisotropic per-axis scale, Gaussian vertex noise, then normalization.
Mesh jitter_mesh(const Mesh& mesh, const JitterConfig& config, Rng& rng);

/// Balanced classed set; 20% of each class (seeded shuffle) goes to test.
Dataset generate_classification_set(std::size_t classes, std::size_t per_class, std::uint64_t seed,
                                    Task task = Task::classification, const JitterConfig& jitter = {});

/// Capped cylinders cut into 2, 3 and 4 axial segments (`per_class` each), with
/// per-edge and per-face labels. Labels are 0..3; class label = segments − 2.
Dataset generate_segmentation_set(std::size_t per_class, std::uint64_t seed, const JitterConfig& jitter = {});

/// Cylinder with `bands` ring bands split into `segments` axial parts, labels attached.
Mesh segmented_cylinder(std::size_t segments, const std::string& id, std::size_t bands = 12,
                        std::size_t around = 8);

} // namespace mme
