#pragma once

#include "mme/gradcheck.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mme {

struct NamedGradCheck {
    std::string name;
    GradCheckReport report;
};

/// Finite-difference checks of the core operations (attention, transformer
/// blocks, recurrent cell, CE, KL), the gate, every trainable expert and each
/// similarity variant of the joint loss on small synthetic meshes.
std::vector<NamedGradCheck> standard_gradient_checks(std::uint64_t seed, const GradCheckOptions& options = {});

} // namespace mme
