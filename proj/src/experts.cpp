#include "mme/experts.hpp"

#include "mme/nn.hpp"
#include "mme/optim.hpp"
#include "mme/walk.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mme {

using ad::Tape;
using ad::Var;

Task parse_task(const std::string& name) {
    if (name == "classification") return Task::classification;
    if (name == "retrieval") return Task::retrieval;
    if (name == "segmentation") return Task::segmentation;
    throw std::invalid_argument("unknown task '" + name + "'");
}

std::string task_name(Task task) {
    switch (task) {
    case Task::classification: return "classification";
    case Task::retrieval: return "retrieval";
    case Task::segmentation: return "segmentation";
    }
    return "classification";
}

std::vector<int> prediction_targets(const Mesh& mesh, Task task) {
    if (task == Task::segmentation) {
        if (!mesh.edge_labels) throw std::invalid_argument(mesh.id() + ": missing edge labels");
        return *mesh.edge_labels;
    }
    if (!mesh.class_label) throw std::invalid_argument(mesh.id() + ": missing class label");
    return {*mesh.class_label};
}

Tensor Expert::predict_value(const ParameterSet& params, const Mesh& mesh, std::uint64_t seed) const {
    Tape tape;
    return predict(tape, params, mesh, seed).value();
}

// ---------------------------------------------------------------------------

WalkRnnExpert::WalkRnnExpert(std::size_t num_classes, std::size_t hidden, std::size_t walks)
    : Expert("walk_rnn", num_classes), hidden_(hidden), walks_(walks) {}

void WalkRnnExpert::init_params(ParameterSet& params, Rng& rng) const {
    nn::init_recurrent_cell(params, param_prefix() + "rnn", kFeatures, hidden_, rng);
    nn::init_linear(params, param_prefix() + "head", hidden_, num_classes(), rng);
}

Var WalkRnnExpert::predict(Tape& tape, const ParameterSet& params, const Mesh& mesh, std::uint64_t seed) const {
    const auto walks = extract_walks(mesh, walks_, seed);
    std::vector<Var> logits;
    for (const Walk& w : walks) {
        Tensor x = Tensor::matrix(w.length(), kFeatures);
        for (std::size_t i = 0; i < w.length(); ++i) {
            const Vec3& p = w.coordinates[i];
            const Vec3 d = (i == 0 || w.jump_flags[i]) ? Vec3{} : p - w.coordinates[i - 1];
            const double row[kFeatures] = {p.x, p.y, p.z, d.x, d.y, d.z, w.jump_flags[i] ? 1.0 : 0.0};
            for (std::size_t c = 0; c < kFeatures; ++c) x.at(i, c) = row[c];
        }
        Var h = nn::recurrent_forward(tape, params, param_prefix() + "rnn", tape.constant(std::move(x)));
        logits.push_back(nn::linear(tape, params, param_prefix() + "head", h));
    }
    Var mean = logits.size() == 1 ? logits[0] : ad::mean_rows(ad::concat_rows(logits));
    return ad::softmax_rows(mean);
}

// ---------------------------------------------------------------------------

FaceMlpExpert::FaceMlpExpert(std::size_t num_classes, std::size_t hidden)
    : Expert("face_mlp", num_classes), hidden_(hidden) {}

void FaceMlpExpert::init_params(ParameterSet& params, Rng& rng) const {
    nn::init_mlp(params, param_prefix() + "mlp", {kFeatures, hidden_, hidden_}, rng);
    nn::init_linear(params, param_prefix() + "head", hidden_, num_classes(), rng);
}

Tensor FaceMlpExpert::face_features(const Mesh& mesh) {
    const std::size_t f = mesh.faces().size();
    if (f == 0) throw std::invalid_argument(mesh.id() + ": face expert needs faces");
    double total_area = 0;
    for (std::size_t i = 0; i < f; ++i) total_area += face_area(mesh, static_cast<int>(i));
    Tensor x = Tensor::matrix(f, kFeatures);
    for (std::size_t i = 0; i < f; ++i) {
        const Vec3 c = face_centroid(mesh, static_cast<int>(i));
        const Vec3 n = face_normal(mesh, static_cast<int>(i));
        const double rel_area = total_area > 0 ? face_area(mesh, static_cast<int>(i)) * f / total_area : 0.0;
        const double row[kFeatures] = {c.x, c.y, c.z, n.x, n.y, n.z, rel_area};
        for (std::size_t k = 0; k < kFeatures; ++k) x.at(i, k) = row[k];
    }
    return x;
}

Var FaceMlpExpert::predict(Tape& tape, const ParameterSet& params, const Mesh& mesh, std::uint64_t) const {
    Var h = ad::relu(nn::mlp(tape, params, param_prefix() + "mlp", 2, tape.constant(face_features(mesh))));
    Var pooled = ad::mean_rows(h);
    return ad::softmax_rows(nn::linear(tape, params, param_prefix() + "head", pooled));
}

// ---------------------------------------------------------------------------

EdgeSegmenterExpert::EdgeSegmenterExpert(std::size_t num_labels, std::size_t hidden)
    : Expert("edge_seg", num_labels), hidden_(hidden) {}

void EdgeSegmenterExpert::init_params(ParameterSet& params, Rng& rng) const {
    nn::init_mlp(params, param_prefix() + "mlp", {kFeatures, hidden_, hidden_, num_classes()}, rng);
}

Tensor EdgeSegmenterExpert::edge_features(const Mesh& mesh) {
    const auto& edges = mesh.edges();
    if (edges.empty()) throw std::invalid_argument(mesh.id() + ": edge expert needs edges");
    const auto incident = mesh.edge_faces();
    double mean_length = 0;
    for (const auto& e : edges) mean_length += e.length;
    mean_length /= static_cast<double>(edges.size());
    Tensor x = Tensor::matrix(edges.size(), kFeatures);
    const auto& v = mesh.vertices();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        double dihedral = 0;
        if (incident[i].size() >= 2)
            dihedral = 1.0 - dot(face_normal(mesh, incident[i][0]), face_normal(mesh, incident[i][1]));
        const Vec3 mid = (v[edges[i].a] + v[edges[i].b]) * 0.5;
        x.at(i, 0) = edges[i].length / mean_length;
        x.at(i, 1) = dihedral;
        x.at(i, 2) = mid.z;
        x.at(i, 3) = std::sqrt(mid.x * mid.x + mid.y * mid.y);
    }
    return x;
}

Var EdgeSegmenterExpert::predict(Tape& tape, const ParameterSet& params, const Mesh& mesh, std::uint64_t) const {
    return ad::softmax_rows(nn::mlp(tape, params, param_prefix() + "mlp", 3, tape.constant(edge_features(mesh))));
}

// ---------------------------------------------------------------------------

ScriptedOracleExpert::ScriptedOracleExpert(std::size_t num_classes, int specialty_class, double accuracy,
                                           std::uint64_t seed)
    : Expert("oracle" + std::to_string(specialty_class), num_classes),
      specialty_(specialty_class),
      accuracy_(accuracy),
      seed_(seed) {
    if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw std::invalid_argument("oracle accuracy must lie in [0, 1]");
    if (specialty_class < 0 || static_cast<std::size_t>(specialty_class) >= num_classes)
        throw std::invalid_argument("oracle specialty class out of range");
}

std::string ScriptedOracleExpert::id() const {
    std::ostringstream out;
    out << "oracle:" << specialty_ << ':' << accuracy_;
    return out.str();
}

int ScriptedOracleExpert::predicted_class(const Mesh& mesh) const {
    Rng rng(derive_seed(seed_, hash_string(mesh.id()), static_cast<std::uint64_t>(specialty_)));
    const double draw = rng.uniform01();
    if (mesh.class_label && *mesh.class_label == specialty_ && draw < accuracy_) return specialty_;
    return static_cast<int>(rng.uniform_index(num_classes()));
}

Var ScriptedOracleExpert::predict(Tape& tape, const ParameterSet&, const Mesh& mesh, std::uint64_t) const {
    if (!mesh.edge_labels) {
        Tensor p = Tensor::matrix(1, num_classes());
        p[predicted_class(mesh)] = 1.0;
        return tape.constant(std::move(p));
    }
    // Labelled edges: the true labelling on the specialty, random labels elsewhere.
    Rng rng(derive_seed(seed_, hash_string(mesh.id()), static_cast<std::uint64_t>(specialty_)));
    const bool right = mesh.class_label && *mesh.class_label == specialty_ && rng.uniform01() < accuracy_;
    const auto& truth = *mesh.edge_labels;
    Tensor p = Tensor::matrix(truth.size(), num_classes());
    for (std::size_t e = 0; e < truth.size(); ++e)
        p.at(e, right ? truth[e] : rng.uniform_index(num_classes())) = 1.0;
    return tape.constant(std::move(p));
}

// ---------------------------------------------------------------------------

std::unique_ptr<Expert> make_expert(const std::string& id, std::size_t num_classes, std::uint64_t seed) {
    if (id == "walk_rnn") return std::make_unique<WalkRnnExpert>(num_classes);
    if (id == "face_mlp") return std::make_unique<FaceMlpExpert>(num_classes);
    if (id == "edge_seg") return std::make_unique<EdgeSegmenterExpert>(num_classes);
    if (id.starts_with("oracle:")) {
        const std::string rest = id.substr(7);
        const auto colon = rest.find(':');
        try {
            const int cls = std::stoi(rest.substr(0, colon));
            const double acc = colon == std::string::npos ? 1.0 : std::stod(rest.substr(colon + 1));
            return std::make_unique<ScriptedOracleExpert>(num_classes, cls, acc, seed);
        } catch (const std::logic_error& e) {
            throw std::invalid_argument("malformed oracle expert id '" + id + "'");
        }
    }
    throw std::invalid_argument("unknown expert id '" + id + "'");
}

void write_prediction_csv(std::span<const Mesh> meshes, std::span<const Tensor> predictions, std::ostream& out) {
    out << "mesh_id,class";
    const std::size_t c = predictions.empty() ? 0 : predictions[0].cols();
    for (std::size_t k = 0; k < c; ++k) out << ",p" << k;
    out << '\n';
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        const Tensor& p = predictions[i];
        for (std::size_t r = 0; r < p.rows(); ++r) {
            out << meshes[i].id() << ',' << (meshes[i].class_label ? *meshes[i].class_label : -1);
            for (std::size_t k = 0; k < p.cols(); ++k) out << ',' << p.at(r, k);
            out << '\n';
        }
    }
}

std::vector<double> pretrain_expert(const Expert& expert, ParameterSet& params, std::span<const Mesh> meshes,
                                    const ExpertTrainingConfig& config) {
    if (!expert.trainable()) throw std::invalid_argument(expert.name() + " is not trainable");
    Adam adam(AdamConfig{config.learning_rate});
    std::vector<std::size_t> order(meshes.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
    std::vector<double> epoch_losses;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(derive_seed(config.seed, epoch, 0xE));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
        double total = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t count = std::min(batch, order.size() - start);
            std::vector<ParameterSet> grads(count);
            std::vector<double> losses(count);
            for_each_index(count, config.mode, [&](std::size_t k) {
                const std::size_t i = order[start + k];
                const auto targets = prediction_targets(meshes[i], config.task);
                Tape tape;
                Var p = expert.predict(tape, params, meshes[i], derive_seed(config.seed, epoch, i));
                Var loss = ad::cross_entropy(p, targets);
                losses[k] = loss.value()[0];
                tape.backward(loss);
                tape.accumulate_gradients(grads[k], 1.0 / static_cast<double>(count));
            });
            ParameterSet sum;
            for (const auto& g : grads) sum.accumulate(g);
            adam.step(params, sum);
            for (double l : losses) total += l;
        }
        epoch_losses.push_back(total / static_cast<double>(order.size()));
    }
    return epoch_losses;
}

} // namespace mme
