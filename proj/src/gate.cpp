#include "mme/gate.hpp"

#include "mme/nn.hpp"
#include "mme/optim.hpp"

#include <numeric>
#include <stdexcept>

namespace mme {

using ad::Tape;
using ad::Var;

namespace {

std::string enc(std::size_t i) { return "gate/enc/" + std::to_string(i); }
std::string dec(std::size_t i) { return "gate/dec/" + std::to_string(i); }

void shuffle(std::vector<std::size_t>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.uniform_index(i)]);
}

} // namespace

void GateConfig::validate() const {
    if (d_model == 0 || heads == 0 || d_model % heads != 0)
        throw std::invalid_argument("gate: d_model must be divisible by heads");
    if (ff_width == 0) throw std::invalid_argument("gate: ff_width must be positive");
    if (output_size() == 0) throw std::invalid_argument("gate: head size must be positive");
}

void init_gate(ParameterSet& params, const GateConfig& config, Rng& rng) {
    config.validate();
    const std::size_t d = config.d_model;
    nn::init_linear(params, "gate/embed", GateConfig::kInputChannels, d, rng);
    for (std::size_t i = 0; i < config.encoder_layers; ++i) {
        nn::init_multi_head_attention(params, enc(i) + "/attn", d, rng);
        nn::init_feed_forward(params, enc(i) + "/ff", d, config.ff_width, rng);
    }
    nn::init_layer_norm(params, "gate/enc/norm", d);

    nn::init_linear(params, "gate/dec/embed", d, d, rng);
    Tensor query = Tensor::matrix(1, d);
    for (auto& x : query.values()) x = rng.uniform(-0.1, 0.1);
    params.add("gate/dec/query", std::move(query));
    for (std::size_t i = 0; i < config.decoder_layers; ++i) {
        nn::init_multi_head_attention(params, dec(i) + "/cross", d, rng);
        nn::init_feed_forward(params, dec(i) + "/ff", d, config.ff_width, rng);
    }
    nn::init_layer_norm(params, "gate/dec/norm", d);

    if (config.num_experts > 0) init_gate_head(params, config, HeadMode::expert_weights, rng);
    if (config.num_classes > 0) init_gate_head(params, config, HeadMode::class_imitation, rng);
}

// Heads start close to zero so the first softmax is nearly uniform.
void init_gate_head(ParameterSet& params, const GateConfig& config, HeadMode mode, Rng& rng) {
    const std::string path = mode == HeadMode::expert_weights ? kExpertHead : kClassHead;
    nn::init_linear(params, path, config.d_model, config.output_size_for(mode), rng);
    for (auto& w : params.at(path + "/W").values()) w *= kHeadInitScale;
}

bool is_gate_head(const std::string& path) { return path.starts_with("gate/head/"); }

Tensor walk_features(const Walk& walk) {
    Tensor x = Tensor::matrix(walk.length(), GateConfig::kInputChannels);
    for (std::size_t i = 0; i < walk.length(); ++i) {
        x.at(i, 0) = walk.coordinates[i].x;
        x.at(i, 1) = walk.coordinates[i].y;
        x.at(i, 2) = walk.coordinates[i].z;
        x.at(i, 3) = walk.jump_flags[i] ? 1.0 : 0.0;
    }
    return x;
}

Var gate_forward_walk(Tape& tape, const ParameterSet& params, const GateConfig& config, const Walk& walk) {
    const std::size_t length = walk.length();
    Var x = nn::linear(tape, params, "gate/embed", tape.constant(walk_features(walk)));
    x = ad::add(x, tape.constant(nn::sinusoidal_encoding(length, config.d_model)));
    for (std::size_t i = 0; i < config.encoder_layers; ++i) {
        x = nn::multi_head_attention(tape, params, enc(i) + "/attn", x, config.heads);
        x = nn::feed_forward(tape, params, enc(i) + "/ff", x);
    }
    Var memory = nn::layer_norm(tape, params, "gate/enc/norm", x);
    memory = nn::linear(tape, params, "gate/dec/embed", memory);

    Var q = tape.parameter(params, "gate/dec/query");
    for (std::size_t i = 0; i < config.decoder_layers; ++i) {
        q = nn::cross_attention(tape, params, dec(i) + "/cross", q, memory, config.heads);
        q = nn::feed_forward(tape, params, dec(i) + "/ff", q);
    }
    q = nn::layer_norm(tape, params, "gate/dec/norm", q);
    const char* head = config.head_mode == HeadMode::expert_weights ? kExpertHead : kClassHead;
    return nn::linear(tape, params, head, q);
}

Var gate_mesh_logits(Tape& tape, const ParameterSet& params, const GateConfig& config, std::span<const Walk> walks) {
    if (walks.empty()) throw std::invalid_argument("gate needs at least one walk");
    std::vector<Var> logits;
    logits.reserve(walks.size());
    for (const Walk& w : walks) logits.push_back(gate_forward_walk(tape, params, config, w));
    if (logits.size() == 1) return logits[0];
    return ad::mean_rows(ad::concat_rows(logits));
}

std::vector<double> gate_forward_mesh(const Mesh& mesh, std::size_t walk_count, const ParameterSet& params,
                                      const GateConfig& config, std::uint64_t seed) {
    const auto walks = extract_walks(mesh, walk_count, seed);
    Tape tape;
    Var weights = ad::softmax_rows(gate_mesh_logits(tape, params, config, walks));
    const auto v = weights.value().values();
    return {v.begin(), v.end()};
}

ParameterSet average_pretrained_gates(std::span<const ParameterSet> gates, const GateConfig& config, Rng& rng) {
    if (gates.empty()) throw std::invalid_argument("average_pretrained_gates: no gates given");
    ParameterSet out;
    for (const auto& [path, t] : gates[0]) {
        if (!path.starts_with(kGatePrefix) || is_gate_head(path)) continue;
        Tensor mean(t.shape(), 0.0);
        for (const auto& g : gates) {
            if (!g.contains(path) || !g.at(path).same_shape(t))
                throw std::invalid_argument("average_pretrained_gates: body shape mismatch at " + path);
            mean.add_scaled(g.at(path));
        }
        for (auto& x : mean.values()) x /= static_cast<double>(gates.size());
        out.add(path, std::move(mean));
    }
    for (std::size_t k = 1; k < gates.size(); ++k)
        for (const auto& [path, t] : gates[k])
            if (path.starts_with(kGatePrefix) && !is_gate_head(path) && !out.contains(path))
                throw std::invalid_argument("average_pretrained_gates: body shape mismatch at " + path);
    GateConfig head_config = config;
    if (head_config.num_experts == 0) throw std::invalid_argument("average_pretrained_gates: num_experts is zero");
    init_gate_head(out, head_config, HeadMode::expert_weights, rng);
    return out;
}

double imitation_loss(const ParameterSet& params, const GateConfig& config, std::span<const Mesh> meshes,
                      std::span<const Tensor> expert_predictions, std::size_t walks, std::uint64_t seed) {
    if (meshes.size() != expert_predictions.size()) throw std::invalid_argument("imitation: one prediction per mesh");
    std::vector<double> losses(meshes.size());
    for_each_index(meshes.size(), Execution::parallel, [&](std::size_t i) {
        const auto w = extract_walks(meshes[i], walks, derive_seed(seed, i));
        Tape tape;
        Var q = ad::softmax_rows(gate_mesh_logits(tape, params, config, w));
        losses[i] = ad::kl_divergence(tape.constant(expert_predictions[i]), q).value()[0];
    });
    return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(meshes.size());
}

ImitationResult pretrain_imitation(ParameterSet params, const GateConfig& config, std::span<const Mesh> meshes,
                                   std::span<const Tensor> expert_predictions, const ImitationConfig& options) {
    if (config.head_mode != HeadMode::class_imitation)
        throw std::invalid_argument("imitation pre-training needs the class_imitation head");
    if (meshes.size() != expert_predictions.size()) throw std::invalid_argument("imitation: one prediction per mesh");
    for (const auto& p : expert_predictions)
        if (p.cols() != config.num_classes)
            throw std::invalid_argument("imitation: expert prediction length differs from num_classes");

    Adam adam(AdamConfig{options.learning_rate});
    ImitationResult result;
    std::vector<std::size_t> order(meshes.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        Rng rng(derive_seed(options.seed, epoch, 0x5EED));
        shuffle(order, rng);
        double epoch_loss = 0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t count = std::min(batch, order.size() - start);
            std::vector<ParameterSet> grads(count);
            std::vector<double> losses(count);
            for_each_index(count, options.mode, [&](std::size_t k) {
                const std::size_t i = order[start + k];
                const auto w = extract_walks(meshes[i], options.walks, derive_seed(options.seed, epoch, i));
                Tape tape;
                Var q = ad::softmax_rows(gate_mesh_logits(tape, params, config, w));
                Var loss = ad::kl_divergence(tape.constant(expert_predictions[i]), q);
                losses[k] = loss.value()[0];
                tape.backward(loss);
                tape.accumulate_gradients(grads[k], 1.0 / static_cast<double>(count));
            });
            ParameterSet total;
            for (const auto& g : grads) total.accumulate(g);
            adam.step(params, total);
            for (double l : losses) epoch_loss += l;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    result.params = std::move(params);
    return result;
}

} // namespace mme
