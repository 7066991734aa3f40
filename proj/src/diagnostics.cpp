#include "mme/diagnostics.hpp"

#include "mme/nn.hpp"
#include "mme/synth.hpp"
#include "mme/trainer.hpp"

namespace mme {

namespace {

GateConfig tiny_gate(std::size_t experts) {
    GateConfig g;
    g.num_experts = experts;
    g.encoder_layers = 1;
    g.decoder_layers = 1;
    g.d_model = 8;
    g.heads = 2;
    g.ff_width = 16;
    return g;
}

NamedGradCheck check_joint(const std::string& name, const std::vector<std::string>& ids, std::size_t classes,
                           const Mesh& mesh, Task task, SimilarityKind kind, std::uint64_t seed,
                           const GradCheckOptions& options) {
    System system = make_system(ids, classes, tiny_gate(ids.size()), seed);
    TrainerConfig tc;
    tc.task = task;
    tc.walks_train = 2;
    tc.similarity = kind;
    tc.mode = Execution::serial;
    MoeTrainer trainer(system, tc);
    auto loss = [&](ad::Tape& tape, const ParameterSet& p) {
        return trainer.build_mesh_terms(tape, p, mesh, 0.5, 1, seed).loss;
    };
    return {name, finite_difference_check(loss, system.params, options)};
}

Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor t = Tensor::matrix(rows, cols);
    for (auto& x : t.values()) x = rng.uniform(-1.0, 1.0);
    return t;
}

// Scalar read-out of a matrix through fixed random weights.
ad::Var probe(ad::Tape& tape, ad::Var x, const Tensor& weights) {
    return ad::sum_all(ad::mul(x, tape.constant(weights)));
}

void operation_checks(std::uint64_t seed, const GradCheckOptions& options, std::vector<NamedGradCheck>& out) {
    Rng rng(derive_seed(seed, 0x0B5));
    const std::size_t n = 4, d = 8, heads = 2;
    const Tensor read = random_matrix(n, d, rng);

    ParameterSet qkv;
    qkv.add("q", random_matrix(n, d, rng));
    qkv.add("k", random_matrix(n, d, rng));
    qkv.add("v", random_matrix(n, d, rng));
    out.push_back({"op/attention", finite_difference_check(
                                       [&](ad::Tape& t, const ParameterSet& p) {
                                           return probe(t, ad::attention(t.parameter(p, "q"), t.parameter(p, "k"),
                                                                         t.parameter(p, "v"), heads),
                                                        read);
                                       },
                                       qkv, options)});

    ParameterSet block;
    block.add("x", random_matrix(n, d, rng));
    block.add("memory", random_matrix(n + 2, d, rng));
    nn::init_multi_head_attention(block, "mha", d, rng);
    nn::init_multi_head_attention(block, "cross", d, rng);
    nn::init_feed_forward(block, "ff", d, 2 * d, rng);
    out.push_back({"op/mha_block", finite_difference_check(
                                       [&](ad::Tape& t, const ParameterSet& p) {
                                           ad::Var x = nn::multi_head_attention(t, p, "mha", t.parameter(p, "x"), heads);
                                           x = nn::cross_attention(t, p, "cross", x, t.parameter(p, "memory"), heads);
                                           return probe(t, nn::feed_forward(t, p, "ff", x), read);
                                       },
                                       block, options)});

    ParameterSet cell;
    cell.add("x", random_matrix(5, 3, rng));
    nn::init_recurrent_cell(cell, "rnn", 3, d, rng);
    const Tensor hidden_read = random_matrix(1, d, rng);
    out.push_back({"op/recurrent_cell", finite_difference_check(
                                            [&](ad::Tape& t, const ParameterSet& p) {
                                                return probe(t, nn::recurrent_forward(t, p, "rnn", t.parameter(p, "x")),
                                                             hidden_read);
                                            },
                                            cell, options)});

    ParameterSet dist;
    dist.add("z", random_matrix(3, 5, rng));
    dist.add("target", random_matrix(3, 5, rng));
    const std::vector<int> labels = {0, 3, 4};
    out.push_back({"op/cross_entropy", finite_difference_check(
                                           [&](ad::Tape& t, const ParameterSet& p) {
                                               return ad::cross_entropy(ad::softmax_rows(t.parameter(p, "z")), labels);
                                           },
                                           dist, options)});
    out.push_back({"op/kl_divergence", finite_difference_check(
                                           [&](ad::Tape& t, const ParameterSet& p) {
                                               ad::Var a = ad::softmax_rows(t.parameter(p, "target"));
                                               ad::Var b = ad::softmax_rows(t.parameter(p, "z"));
                                               return ad::add(ad::kl_divergence(a, b), ad::kl_divergence(b, a));
                                           },
                                           dist, options)});
}

} // namespace

std::vector<NamedGradCheck> standard_gradient_checks(std::uint64_t seed, const GradCheckOptions& options) {
    std::vector<NamedGradCheck> out;
    operation_checks(seed, options, out);
    const Dataset cls = generate_classification_set(3, 4, seed);
    const Mesh& mesh = cls.meshes[0];
    const std::vector<std::string> experts = {"walk_rnn", "face_mlp"};
    for (SimilarityKind kind : {SimilarityKind::kld, SimilarityKind::cosine, SimilarityKind::mse}) {
        out.push_back(check_joint("joint/" + similarity_name(kind), experts, 3, mesh, Task::classification, kind,
                                  seed, options));
    }
    const Mesh seg = segmented_cylinder(3, "seg");
    out.push_back(check_joint("segmentation", {"edge_seg"}, 4, seg, Task::segmentation,
                              SimilarityKind::kld, seed, options));

    GateConfig imitation = tiny_gate(0);
    imitation.head_mode = HeadMode::class_imitation;
    imitation.num_classes = 3;
    ParameterSet params;
    Rng rng(seed);
    init_gate(params, imitation, rng);
    const std::vector<Mesh> meshes = {mesh};
    const std::vector<Tensor> targets = {Tensor::row({0.2, 0.5, 0.3})};
    auto loss = [&](ad::Tape& tape, const ParameterSet& p) {
        const auto walks = extract_walks(mesh, 2, seed);
        ad::Var probs = ad::softmax_rows(gate_mesh_logits(tape, p, imitation, walks));
        return ad::kl_divergence(tape.constant(targets[0]), probs);
    };
    out.push_back({"gate/imitation", finite_difference_check(loss, params, options)});

    const GateConfig routing = tiny_gate(3);
    ParameterSet gate_params;
    init_gate(gate_params, routing, rng);
    auto route = [&](ad::Tape& tape, const ParameterSet& p) {
        const auto walks = extract_walks(mesh, 2, seed);
        return ad::cross_entropy(ad::softmax_rows(gate_mesh_logits(tape, p, routing, walks)), std::vector<int>{1});
    };
    out.push_back({"gate/end_to_end", finite_difference_check(route, gate_params, options)});
    return out;
}

} // namespace mme
