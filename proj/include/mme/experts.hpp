#pragma once

// Experts behind one interface. Trainable experts keep their weights in the
// shared ParameterSet under "expert/<name>/"; scripted oracles have none.

#include "mme/autodiff.hpp"
#include "mme/kernels.hpp"
#include "mme/mesh.hpp"
#include "mme/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mme {

enum class Task { classification, retrieval, segmentation };

Task parse_task(const std::string& name);
std::string task_name(Task task);

/// Target label per prediction row: the class label, or edge labels for segmentation.
std::vector<int> prediction_targets(const Mesh& mesh, Task task);

class Expert {
public:
    explicit Expert(std::string name, std::size_t num_classes) : name_(std::move(name)), num_classes_(num_classes) {}
    virtual ~Expert() = default;

    const std::string& name() const { return name_; }
    std::size_t num_classes() const { return num_classes_; }
    std::string param_prefix() const { return "expert/" + name_ + "/"; }

    virtual bool trainable() const = 0;
    /// Registry id that recreates this expert through make_expert().
    virtual std::string id() const = 0;
    virtual void init_params(ParameterSet& /*params*/, Rng& /*rng*/) const {}

    /// Softmax-normalized prediction: 1×num_classes, or |edges|×num_classes for
    /// per-edge experts. Differentiable w.r.t. this expert's parameters.
    virtual ad::Var predict(ad::Tape& tape, const ParameterSet& params, const Mesh& mesh,
                            std::uint64_t seed) const = 0;

    Tensor predict_value(const ParameterSet& params, const Mesh& mesh, std::uint64_t seed) const;

private:
    std::string name_;
    std::size_t num_classes_;
};

/// Recurrent network over random walks; class logits averaged over walks.
class WalkRnnExpert final : public Expert {
public:
    WalkRnnExpert(std::size_t num_classes, std::size_t hidden = 32, std::size_t walks = 8);
    bool trainable() const override { return true; }
    std::string id() const override { return "walk_rnn"; }
    void init_params(ParameterSet& params, Rng& rng) const override;
    ad::Var predict(ad::Tape& tape, const ParameterSet& params, const Mesh& mesh, std::uint64_t seed) const override;

    static constexpr std::size_t kFeatures = 7;  // xyz, step delta, jump flag

private:
    std::size_t hidden_;
    std::size_t walks_;
};

/// Shared perceptron over per-face (centroid, normal, relative area), mean-pooled.
class FaceMlpExpert final : public Expert {
public:
    explicit FaceMlpExpert(std::size_t num_classes, std::size_t hidden = 32);
    bool trainable() const override { return true; }
    std::string id() const override { return "face_mlp"; }
    void init_params(ParameterSet& params, Rng& rng) const override;
    ad::Var predict(ad::Tape& tape, const ParameterSet& params, const Mesh& mesh, std::uint64_t seed) const override;

    static Tensor face_features(const Mesh& mesh);
    static constexpr std::size_t kFeatures = 7;

private:
    std::size_t hidden_;
};

/// Per-edge labeler over (relative length, dihedral proxy, midpoint height, radial distance).
class EdgeSegmenterExpert final : public Expert {
public:
    explicit EdgeSegmenterExpert(std::size_t num_labels, std::size_t hidden = 32);
    bool trainable() const override { return true; }
    std::string id() const override { return "edge_seg"; }
    void init_params(ParameterSet& params, Rng& rng) const override;
    ad::Var predict(ad::Tape& tape, const ParameterSet& params, const Mesh& mesh, std::uint64_t seed) const override;

    static Tensor edge_features(const Mesh& mesh);
    static constexpr std::size_t kFeatures = 4;

private:
    std::size_t hidden_;
};

/// Frozen test double. On its specialty class it emits the true one-hot with
/// probability `accuracy_on_specialty`; every other draw is a uniformly random
/// one-hot. Draws are keyed by (seed, mesh id), so a mesh always gets the same answer.
/// Meshes with edge labels get one row per edge (true labels or random ones).
class ScriptedOracleExpert final : public Expert {
public:
    ScriptedOracleExpert(std::size_t num_classes, int specialty_class, double accuracy_on_specialty,
                         std::uint64_t seed);
    bool trainable() const override { return false; }
    std::string id() const override;
    ad::Var predict(ad::Tape& tape, const ParameterSet& params, const Mesh& mesh, std::uint64_t seed) const override;

    int specialty_class() const { return specialty_; }
    int predicted_class(const Mesh& mesh) const;

private:
    int specialty_;
    double accuracy_;
    std::uint64_t seed_;
};

/// Ids: "walk_rnn", "face_mlp", "edge_seg", "oracle:<class>[:<accuracy>]".
std::unique_ptr<Expert> make_expert(const std::string& id, std::size_t num_classes, std::uint64_t seed);

/// Writes "mesh_id,class,p0,p1,..." rows (one per prediction row).
void write_prediction_csv(std::span<const Mesh> meshes, std::span<const Tensor> predictions, std::ostream& out);

struct ExpertTrainingConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 8;
    double learning_rate = 1e-2;
    std::uint64_t seed = 0;
    Task task = Task::classification;
    Execution mode = Execution::parallel;
};

/// Supervised cross-entropy training of one trainable expert. Returns the mean
/// training loss per epoch.
std::vector<double> pretrain_expert(const Expert& expert, ParameterSet& params, std::span<const Mesh> meshes,
                                    const ExpertTrainingConfig& config);

} // namespace mme
