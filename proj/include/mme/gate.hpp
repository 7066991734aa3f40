#pragma once

// Transformer gate: an encoder over one random walk and a decoder whose single
// learned query token reads the encoded walk, followed by a linear head with
// one output per expert (or per class during imitation pre-training).

#include "mme/autodiff.hpp"
#include "mme/kernels.hpp"
#include "mme/mesh.hpp"
#include "mme/rng.hpp"
#include "mme/walk.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace mme {

enum class HeadMode { expert_weights, class_imitation };

struct GateConfig {
    std::size_t num_experts = 3;
    std::size_t encoder_layers = 8;
    std::size_t decoder_layers = 8;
    std::size_t d_model = 64;
    std::size_t heads = 4;
    std::size_t ff_width = 128;
    HeadMode head_mode = HeadMode::expert_weights;
    std::size_t num_classes = 0;

    /// x, y, z and the jump flag.
    static constexpr std::size_t kInputChannels = 4;

    std::size_t output_size() const { return output_size_for(head_mode); }
    std::size_t output_size_for(HeadMode mode) const {
        return mode == HeadMode::expert_weights ? num_experts : num_classes;
    }
    void validate() const;
};

inline constexpr const char* kGatePrefix = "gate/";
inline constexpr const char* kExpertHead = "gate/head/experts";
inline constexpr const char* kClassHead = "gate/head/classes";
inline constexpr double kHeadInitScale = 0.01;

/// Body plus the expert head (if num_experts > 0) and class head (if num_classes > 0).
void init_gate(ParameterSet& params, const GateConfig& config, Rng& rng);
void init_gate_head(ParameterSet& params, const GateConfig& config, HeadMode mode, Rng& rng);
bool is_gate_head(const std::string& path);

/// L×4 matrix of walk coordinates and jump flags.
Tensor walk_features(const Walk& walk);

/// Logits (1 × output_size) for one walk.
ad::Var gate_forward_walk(ad::Tape& tape, const ParameterSet& params, const GateConfig& config, const Walk& walk);

/// Mean of per-walk logits.
ad::Var gate_mesh_logits(ad::Tape& tape, const ParameterSet& params, const GateConfig& config,
                         std::span<const Walk> walks);

/// Softmax of the mean per-walk logits over `walk_count` walks drawn with `seed`.
std::vector<double> gate_forward_mesh(const Mesh& mesh, std::size_t walk_count, const ParameterSet& params,
                                      const GateConfig& config, std::uint64_t seed);

/// Elementwise mean of the gate bodies; the expert head is freshly initialized.
ParameterSet average_pretrained_gates(std::span<const ParameterSet> gates, const GateConfig& config, Rng& rng);

struct ImitationConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 8;
    std::size_t walks = 8;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    Execution mode = Execution::parallel;
};

struct ImitationResult {
    ParameterSet params;
    std::vector<double> epoch_losses;  // mean training KL per epoch
};

/// Mean KL(expert ‖ gate) over meshes, walks drawn with `seed`.
double imitation_loss(const ParameterSet& params, const GateConfig& config, std::span<const Mesh> meshes,
                      std::span<const Tensor> expert_predictions, std::size_t walks, std::uint64_t seed);

/// Trains the class head and body to reproduce one expert's prediction vectors.
/// `config.head_mode` must be class_imitation.
ImitationResult pretrain_imitation(ParameterSet params, const GateConfig& config, std::span<const Mesh> meshes,
                                   std::span<const Tensor> expert_predictions, const ImitationConfig& options);

} // namespace mme
