#pragma once

// Expert environment: experts and gate run on a batch, the chooser picks one
// expert per mesh, the joint loss is backpropagated, and the batch-mean gate
// weights plus the batch score are handed to the λ controller.

#include "mme/dataset.hpp"
#include "mme/experts.hpp"
#include "mme/gate.hpp"
#include "mme/losses.hpp"
#include "mme/metrics.hpp"
#include "mme/optim.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace mme {

/// Gate, experts and all learned weights ("gate/..." and "expert/<name>/...").
struct System {
    GateConfig gate;
    std::vector<std::unique_ptr<Expert>> experts;
    ParameterSet params;

    std::size_t num_experts() const { return experts.size(); }
    std::size_t num_classes() const { return experts.empty() ? 0 : experts[0]->num_classes(); }
};

/// Builds experts from registry ids and initializes every weight.
System make_system(const std::vector<std::string>& expert_ids, std::size_t num_classes, const GateConfig& gate,
                   std::uint64_t seed);

/// Imitation pre-training of one gate per expert, all from the same starting
/// weights, then the averaged body plus a fresh expert head replace the gate in
/// `system.params`. Returns the final imitation loss of each expert's gate.
std::vector<double> pretrain_gate(System& system, std::span<const Mesh> meshes, const ImitationConfig& options,
                                  std::uint64_t seed);

struct TrainerConfig {
    Task task = Task::classification;
    std::size_t batch_size = 32;
    std::size_t walks_train = 8;
    std::size_t walks_infer = 32;
    double gate_learning_rate = 1e-3;
    double expert_learning_rate = 1e-3;
    SimilarityKind similarity = SimilarityKind::kld;
    std::size_t retrieval_cutoff = 1000;
    Execution mode = Execution::parallel;
};

struct BatchOutcome {
    std::vector<double> state;                          // column mean of per_mesh_weights
    double reward = 0;                                  // batch score of the chosen predictions
    std::vector<int> chosen;                            // expert index per mesh
    std::vector<std::vector<double>> per_mesh_weights;  // B×J
    BatchPredictions predictions;                       // [mesh][expert], before the update
    double loss_sim = 0;
    double loss_div = 0;
    double loss_joint = 0;
};

/// Score of chosen predictions on a batch: mean instance accuracy, batch mAP
/// (retrieval) or mean per-mesh edge accuracy (segmentation).
double batch_reward(Task task, std::span<const Mesh* const> meshes, std::span<const Tensor> chosen,
                    std::size_t retrieval_cutoff);

class MoeTrainer {
public:
    MoeTrainer(System& system, TrainerConfig config);

    /// One forward/backward/update on `batch`. The outcome is measured on the
    /// forward pass before the update.
    BatchOutcome train_iteration(std::span<const Mesh* const> batch, double lambda, std::uint64_t seed);

    /// Per-mesh contribution (λ·L_sim + L_div)/batch_size on a tape, plus the
    /// gate weights and expert predictions it was computed from.
    struct MeshTerms {
        ad::Var loss;
        ad::Var similarity;
        ad::Var diversity;
        ad::Var weights;
        std::vector<ad::Var> predictions;
    };
    MeshTerms build_mesh_terms(ad::Tape& tape, const ParameterSet& params, const Mesh& mesh, double lambda,
                               std::size_t batch_size, std::uint64_t seed) const;

    /// Batch joint loss without updating anything.
    double batch_loss(const ParameterSet& params, std::span<const Mesh* const> batch, double lambda,
                      std::uint64_t seed) const;

    const TrainerConfig& config() const { return config_; }
    System& system() { return system_; }

private:
    System& system_;
    TrainerConfig config_;
    Adam optimizer_;
};

/// Chooses λ_{t+1} from (s_t, r_t). The first call (no outcome yet) returns λ_0.
class LambdaController {
public:
    virtual ~LambdaController() = default;
    virtual double initial(std::span<const double> state) = 0;
    virtual double next(std::span<const double> state, double reward, bool terminal) = 0;
};

class StaticLambda final : public LambdaController {
public:
    explicit StaticLambda(double value) : value_(value) {}
    double initial(std::span<const double>) override { return value_; }
    double next(std::span<const double>, double, bool) override { return value_; }

private:
    double value_;
};

struct IterationLog {
    std::size_t epoch = 0;
    std::size_t iteration = 0;
    double lambda = 0;
    double loss_sim = 0;
    double loss_div = 0;
    double loss_joint = 0;
    double reward = 0;
    std::vector<double> selection_frequency;  // per expert, within the batch
};

void write_metrics_csv(std::span<const IterationLog> log, std::size_t num_experts, std::ostream& out);

/// Alternates environment iterations and controller actions. `on_epoch` runs
/// after every epoch (1-based epoch count); returning false stops training.
std::vector<IterationLog> train_run(MoeTrainer& trainer, const Dataset& data, LambdaController& controller,
                                    std::size_t epochs, std::uint64_t seed,
                                    const std::function<bool(std::size_t)>& on_epoch = {});

struct InferenceResult {
    Tensor prediction;
    int chosen = 0;
    std::vector<double> weights;
};

/// Gate weights from `walks` walks, then the argmax expert's prediction.
InferenceResult infer(const System& system, const Mesh& mesh, std::size_t walks, std::uint64_t seed);

struct Evaluation {
    double accuracy = 0;  // instance accuracy, or mean edge accuracy for segmentation
    double face_accuracy = 0;
    double map = 0;
    double ndcg = 0;
    std::vector<int> chosen;
    std::vector<std::vector<int>> predicted;  // per mesh, per row
    /// selection[c][j]: fraction of class-c meshes routed to expert j.
    std::vector<std::vector<double>> selection;
};

/// Runs inference on every mesh (in parallel) and scores the result.
Evaluation evaluate(const System& system, std::span<const Mesh> meshes, Task task, std::size_t walks,
                    std::uint64_t seed, Execution mode = Execution::parallel, std::size_t cutoff = 1000);

/// Hard-voting ensemble over all experts.
Evaluation evaluate_ensemble(const System& system, std::span<const Mesh> meshes, Task task, std::uint64_t seed,
                             std::size_t cutoff = 1000);

/// Inference output used as retrieval descriptor.
Tensor retrieval_descriptor(const System& system, const Mesh& mesh, std::size_t walks, std::uint64_t seed);

} // namespace mme
