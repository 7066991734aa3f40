#include "mme/trainer.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mme {

using ad::Tape;
using ad::Var;

namespace {

constexpr std::uint64_t kGateStream = 0x6A7E;

std::uint64_t mesh_seed(std::uint64_t seed, const Mesh& mesh, std::uint64_t stream) {
    return derive_seed(seed, hash_string(mesh.id()), stream);
}

// Majority of the three edge labels of each face; ties go to the lowest label.
std::vector<int> face_labels_from_edges(const Mesh& mesh, std::span<const int> edge_labels) {
    std::vector<int> out;
    out.reserve(mesh.faces().size());
    for (const auto& f : mesh.faces()) {
        int l[3];
        for (int k = 0; k < 3; ++k) l[k] = edge_labels[mesh.find_edge(f[k], f[(k + 1) % 3])];
        if (l[0] == l[1] || l[0] == l[2]) out.push_back(l[0]);
        else if (l[1] == l[2]) out.push_back(l[1]);
        else out.push_back(std::min({l[0], l[1], l[2]}));
    }
    return out;
}

std::vector<int> row_argmax(const Tensor& p) {
    std::vector<int> out(p.rows());
    for (std::size_t r = 0; r < p.rows(); ++r) out[r] = argmax_row(p, r);
    return out;
}

double mesh_edge_accuracy(const Mesh& mesh, std::span<const int> predicted) {
    std::vector<double> lengths;
    lengths.reserve(mesh.edges().size());
    for (const auto& e : mesh.edges()) lengths.push_back(e.length);
    return edge_accuracy(predicted, *mesh.edge_labels, lengths);
}

Evaluation score(std::span<const Mesh> meshes, Task task, std::vector<Tensor> predictions,
                 std::vector<int> chosen, std::size_t num_experts, std::size_t cutoff, Execution mode) {
    if (meshes.empty()) throw std::invalid_argument("evaluation needs at least one mesh");
    Evaluation ev;
    ev.chosen = std::move(chosen);
    for (const auto& p : predictions) ev.predicted.push_back(row_argmax(p));
    if (task == Task::segmentation) {
        double edge = 0, face = 0;
        for (std::size_t i = 0; i < meshes.size(); ++i) {
            edge += mesh_edge_accuracy(meshes[i], ev.predicted[i]);
            if (meshes[i].face_labels)
                face += face_accuracy(face_labels_from_edges(meshes[i], ev.predicted[i]), *meshes[i].face_labels);
        }
        ev.accuracy = edge / static_cast<double>(meshes.size());
        ev.face_accuracy = face / static_cast<double>(meshes.size());
    } else {
        std::vector<int> pred, truth;
        for (std::size_t i = 0; i < meshes.size(); ++i) {
            pred.push_back(ev.predicted[i][0]);
            truth.push_back(meshes[i].class_label.value_or(-1));
        }
        ev.accuracy = mean_instance_accuracy(pred, truth);
        if (task == Task::retrieval && meshes.size() > 1) {
            Tensor desc = Tensor::matrix(meshes.size(), predictions[0].cols());
            std::vector<std::string> ids;
            for (std::size_t i = 0; i < meshes.size(); ++i) {
                std::copy(predictions[i].data(), predictions[i].data() + desc.cols(), desc.data() + i * desc.cols());
                ids.push_back(meshes[i].id());
            }
            const auto results = rank_corpus(desc, ids, truth, mode);
            ev.map = mean_average_precision(results, cutoff);
            ev.ndcg = mean_ndcg(results, cutoff);
        }
    }
    // Routing table per class label.
    int max_class = -1;
    for (const auto& m : meshes) max_class = std::max(max_class, m.class_label.value_or(-1));
    if (max_class >= 0 && !ev.chosen.empty()) {
        ev.selection.assign(max_class + 1, std::vector<double>(num_experts, 0.0));
        std::vector<double> counts(max_class + 1, 0.0);
        for (std::size_t i = 0; i < meshes.size(); ++i) {
            if (!meshes[i].class_label) continue;
            ev.selection[*meshes[i].class_label][ev.chosen[i]] += 1.0;
            counts[*meshes[i].class_label] += 1.0;
        }
        for (std::size_t c = 0; c < counts.size(); ++c)
            for (auto& x : ev.selection[c]) x = counts[c] > 0 ? x / counts[c] : 0.0;
    }
    return ev;
}

} // namespace

System make_system(const std::vector<std::string>& expert_ids, std::size_t num_classes, const GateConfig& gate,
                   std::uint64_t seed) {
    if (expert_ids.empty()) throw std::invalid_argument("at least one expert is required");
    System system;
    system.gate = gate;
    system.gate.num_experts = expert_ids.size();
    system.gate.head_mode = HeadMode::expert_weights;
    for (std::size_t j = 0; j < expert_ids.size(); ++j) {
        system.experts.push_back(make_expert(expert_ids[j], num_classes, derive_seed(seed, j, 0x0AC1E)));
        for (std::size_t k = 0; k < j; ++k)
            if (system.experts[k]->name() == system.experts[j]->name())
                throw std::invalid_argument("duplicate expert '" + system.experts[j]->name() + "'");
    }
    Rng gate_rng(derive_seed(seed, 0x6A7E));
    init_gate(system.params, system.gate, gate_rng);
    for (std::size_t j = 0; j < system.experts.size(); ++j) {
        Rng rng(derive_seed(seed, j, 0xE1));
        system.experts[j]->init_params(system.params, rng);
    }
    return system;
}

double batch_reward(Task task, std::span<const Mesh* const> meshes, std::span<const Tensor> chosen,
                    std::size_t retrieval_cutoff) {
    if (meshes.empty()) return 0.0;
    if (task == Task::segmentation) {
        double sum = 0;
        for (std::size_t i = 0; i < meshes.size(); ++i) sum += mesh_edge_accuracy(*meshes[i], row_argmax(chosen[i]));
        return sum / static_cast<double>(meshes.size());
    }
    std::vector<int> truth;
    for (const Mesh* m : meshes) truth.push_back(m->class_label.value_or(-1));
    if (task == Task::retrieval) {
        if (meshes.size() < 2) return 0.0;
        Tensor desc = Tensor::matrix(meshes.size(), chosen[0].cols());
        std::vector<std::string> ids;
        for (std::size_t i = 0; i < meshes.size(); ++i) {
            std::copy(chosen[i].data(), chosen[i].data() + desc.cols(), desc.data() + i * desc.cols());
            ids.push_back(meshes[i]->id());
        }
        const auto results = rank_corpus(desc, ids, truth, Execution::serial);
        return mean_average_precision(results, std::min(retrieval_cutoff, meshes.size() - 1));
    }
    std::vector<int> pred;
    for (const auto& p : chosen) pred.push_back(argmax_row(p));
    return mean_instance_accuracy(pred, truth);
}

std::vector<double> pretrain_gate(System& system, std::span<const Mesh> meshes, const ImitationConfig& options,
                                  std::uint64_t seed) {
    GateConfig imitation = system.gate;
    imitation.head_mode = HeadMode::class_imitation;
    imitation.num_experts = 0;
    imitation.num_classes = system.num_classes();
    std::vector<ParameterSet> gates;
    std::vector<double> losses;
    for (std::size_t j = 0; j < system.experts.size(); ++j) {
        std::vector<Tensor> targets;
        for (const auto& m : meshes) {
            const Tensor p = system.experts[j]->predict_value(system.params, m, derive_seed(seed, hash_string(m.id()), j));
            Tensor row = Tensor::matrix(1, p.cols());
            for (std::size_t r = 0; r < p.rows(); ++r)
                for (std::size_t k = 0; k < p.cols(); ++k) row[k] += p.at(r, k) / static_cast<double>(p.rows());
            targets.push_back(std::move(row));
        }
        ParameterSet start;
        Rng rng(derive_seed(seed, 0x6A7E));
        init_gate(start, imitation, rng);
        ImitationConfig ic = options;
        ic.seed = derive_seed(seed, j, 0x1A17);
        auto result = pretrain_imitation(std::move(start), imitation, meshes, targets, ic);
        losses.push_back(result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back());
        gates.push_back(std::move(result.params));
    }
    Rng head_rng(derive_seed(seed, 0x4EAD));
    for (auto& [path, value] : average_pretrained_gates(gates, system.gate, head_rng)) system.params.add(path, value);
    return losses;
}

MoeTrainer::MoeTrainer(System& system, TrainerConfig config)
    : system_(system), config_(config), optimizer_(AdamConfig{config.gate_learning_rate}) {
    optimizer_.set_learning_rate("expert/", config.expert_learning_rate);
    if (config_.batch_size == 0) throw std::invalid_argument("batch size must be positive");
}

MoeTrainer::MeshTerms MoeTrainer::build_mesh_terms(Tape& tape, const ParameterSet& params, const Mesh& mesh,
                                                   double lambda, std::size_t batch_size, std::uint64_t seed) const {
    MeshTerms terms;
    for (std::size_t j = 0; j < system_.experts.size(); ++j)
        terms.predictions.push_back(system_.experts[j]->predict(tape, params, mesh, mesh_seed(seed, mesh, j)));
    const auto walks = extract_walks(mesh, config_.walks_train, mesh_seed(seed, mesh, kGateStream));
    terms.weights = ad::softmax_rows(gate_mesh_logits(tape, params, system_.gate, walks));
    const auto targets = prediction_targets(mesh, config_.task);
    terms.similarity = similarity_term(tape, terms.predictions, config_.similarity);
    terms.diversity = diversity_term(terms.weights, terms.predictions, targets);
    terms.loss = ad::scale(joint_loss(terms.similarity, terms.diversity, lambda), 1.0 / static_cast<double>(batch_size));
    return terms;
}

double MoeTrainer::batch_loss(const ParameterSet& params, std::span<const Mesh* const> batch, double lambda,
                              std::uint64_t seed) const {
    std::vector<double> parts(batch.size());
    for_each_index(batch.size(), config_.mode, [&](std::size_t i) {
        Tape tape;
        parts[i] = build_mesh_terms(tape, params, *batch[i], lambda, batch.size(), seed).loss.value()[0];
    });
    return std::accumulate(parts.begin(), parts.end(), 0.0);
}

BatchOutcome MoeTrainer::train_iteration(std::span<const Mesh* const> batch, double lambda, std::uint64_t seed) {
    const std::size_t b = batch.size();
    if (b == 0) throw std::invalid_argument("empty batch");
    const std::size_t j_count = system_.experts.size();
    BatchOutcome out;
    out.per_mesh_weights.resize(b);
    out.predictions.resize(b);
    std::vector<double> sims(b), divs(b);
    std::vector<ParameterSet> grads(b);

    for_each_index(b, config_.mode, [&](std::size_t i) {
        Tape tape;
        MeshTerms terms = build_mesh_terms(tape, system_.params, *batch[i], lambda, b, seed);
        const auto w = terms.weights.value().values();
        out.per_mesh_weights[i].assign(w.begin(), w.end());
        for (const Var& p : terms.predictions) out.predictions[i].push_back(p.value());
        sims[i] = terms.similarity.value()[0];
        divs[i] = terms.diversity.value()[0];
        tape.backward(terms.loss);
        tape.accumulate_gradients(grads[i]);
    });

    for (std::size_t i = 0; i < b; ++i) {
        out.loss_sim += sims[i];
        out.loss_div += divs[i];
    }
    out.loss_sim /= static_cast<double>(b);
    out.loss_div /= static_cast<double>(b);
    out.loss_joint = joint_loss(out.loss_sim, out.loss_div, lambda);
    if (!std::isfinite(out.loss_joint)) {
        std::ostringstream msg;
        msg << "non-finite loss: L_sim=" << out.loss_sim << " L_div=" << out.loss_div << " lambda=" << lambda;
        throw std::runtime_error(msg.str());
    }

    out.chosen = expert_chooser(out.per_mesh_weights);
    std::vector<Tensor> chosen_predictions;
    for (std::size_t i = 0; i < b; ++i) chosen_predictions.push_back(out.predictions[i][out.chosen[i]]);
    out.reward = batch_reward(config_.task, batch, chosen_predictions, config_.retrieval_cutoff);
    out.state.assign(j_count, 0.0);
    for (const auto& w : out.per_mesh_weights)
        for (std::size_t j = 0; j < j_count; ++j) out.state[j] += w[j] / static_cast<double>(b);

    ParameterSet total;
    for (const auto& g : grads) total.accumulate(g);
    optimizer_.step(system_.params, total);
    return out;
}

void write_metrics_csv(std::span<const IterationLog> log, std::size_t num_experts, std::ostream& out) {
    out << "epoch,iteration,lambda,L_sim,L_div,L_joint,reward";
    for (std::size_t j = 0; j < num_experts; ++j) out << ",select_" << j;
    out << '\n';
    out.precision(10);
    for (const auto& row : log) {
        out << row.epoch << ',' << row.iteration << ',' << row.lambda << ',' << row.loss_sim << ',' << row.loss_div
            << ',' << row.loss_joint << ',' << row.reward;
        for (double f : row.selection_frequency) out << ',' << f;
        out << '\n';
    }
}

std::vector<IterationLog> train_run(MoeTrainer& trainer, const Dataset& data, LambdaController& controller,
                                    std::size_t epochs, std::uint64_t seed,
                                    const std::function<bool(std::size_t)>& on_epoch) {
    std::vector<IterationLog> log;
    if (epochs == 0) return log;
    const std::size_t j_count = trainer.system().num_experts();
    std::vector<double> initial_state(j_count, 1.0 / static_cast<double>(j_count));
    double lambda = controller.initial(initial_state);
    std::vector<std::size_t> order = data.train;
    const std::size_t batch = trainer.config().batch_size;
    std::size_t iteration = 0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Rng rng(derive_seed(seed, epoch, 0xBA7C));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t count = std::min(batch, order.size() - start);
            std::vector<const Mesh*> meshes;
            for (std::size_t k = 0; k < count; ++k) meshes.push_back(&data.meshes[order[start + k]]);
            const BatchOutcome outcome = trainer.train_iteration(meshes, lambda, derive_seed(seed, iteration, 0x17E));

            IterationLog row;
            row.epoch = epoch;
            row.iteration = iteration;
            row.lambda = lambda;
            row.loss_sim = outcome.loss_sim;
            row.loss_div = outcome.loss_div;
            row.loss_joint = outcome.loss_joint;
            row.reward = outcome.reward;
            row.selection_frequency.assign(j_count, 0.0);
            for (int c : outcome.chosen) row.selection_frequency[c] += 1.0 / static_cast<double>(count);
            log.push_back(std::move(row));

            const bool terminal = start + batch >= order.size();
            lambda = controller.next(outcome.state, outcome.reward, terminal);
            ++iteration;
        }
        if (on_epoch && !on_epoch(epoch + 1)) break;
    }
    return log;
}

InferenceResult infer(const System& system, const Mesh& mesh, std::size_t walks, std::uint64_t seed) {
    InferenceResult r;
    r.weights = gate_forward_mesh(mesh, walks, system.params, system.gate, mesh_seed(seed, mesh, kGateStream));
    r.chosen = choose_expert(r.weights);
    r.prediction = system.experts[r.chosen]->predict_value(system.params, mesh, mesh_seed(seed, mesh, r.chosen));
    return r;
}

Tensor retrieval_descriptor(const System& system, const Mesh& mesh, std::size_t walks, std::uint64_t seed) {
    return infer(system, mesh, walks, seed).prediction;
}

Evaluation evaluate(const System& system, std::span<const Mesh> meshes, Task task, std::size_t walks,
                    std::uint64_t seed, Execution mode, std::size_t cutoff) {
    std::vector<Tensor> predictions(meshes.size());
    std::vector<int> chosen(meshes.size());
    for_each_index(meshes.size(), mode, [&](std::size_t i) {
        auto r = infer(system, meshes[i], walks, seed);
        predictions[i] = std::move(r.prediction);
        chosen[i] = r.chosen;
    });
    return score(meshes, task, std::move(predictions), std::move(chosen), system.num_experts(), cutoff, mode);
}

Evaluation evaluate_ensemble(const System& system, std::span<const Mesh> meshes, Task task, std::uint64_t seed,
                             std::size_t cutoff) {
    std::vector<Tensor> predictions(meshes.size());
    for_each_index(meshes.size(), Execution::parallel, [&](std::size_t i) {
        std::vector<Tensor> votes;
        for (std::size_t j = 0; j < system.experts.size(); ++j)
            votes.push_back(system.experts[j]->predict_value(system.params, meshes[i], mesh_seed(seed, meshes[i], j)));
        const auto labels = hard_vote(votes);
        Tensor onehot = Tensor::matrix(labels.size(), votes[0].cols());
        for (std::size_t r = 0; r < labels.size(); ++r) onehot.at(r, labels[r]) = 1.0;
        predictions[i] = std::move(onehot);
    });
    return score(meshes, task, std::move(predictions), {}, system.num_experts(), cutoff, Execution::parallel);
}

} // namespace mme
