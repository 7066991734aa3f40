#include "mme/checkpoint.hpp"
#include "mme/config.hpp"
#include "mme/dataset.hpp"
#include "mme/diagnostics.hpp"
#include "mme/manifest.hpp"
#include "mme/sac.hpp"
#include "mme/synth.hpp"
#include "mme/trainer.hpp"
#include "mme/walk.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace mme;

namespace {

struct Options {
    std::optional<std::uint64_t> seed;
    std::string config_path;
    std::string out_dir = "run";
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch_size;
    std::optional<std::string> experts;
    std::optional<std::size_t> walks_train;
    std::optional<std::size_t> walks_infer;
    std::optional<std::string> lambda_range;

    std::optional<std::string> data_dir;
    std::optional<std::string> task;
    std::optional<std::size_t> classes;
    std::optional<std::size_t> per_class;
    std::string checkpoint;
    std::optional<double> static_lambda;
    std::optional<std::string> loss_sim;
    bool ensemble = false;
    std::string split = "test";
    std::string mesh_file;
    std::size_t walk_count = 1;
    std::string metrics = "metrics.csv";
    std::string output;
};

void add_shared(CLI::App* cmd, Options& o) {
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_option("--config", o.config_path, "Configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", o.out_dir, "Output directory");
    cmd->add_option("--epochs", o.epochs, "Training epochs");
    cmd->add_option("--batch-size", o.batch_size, "Batch size");
    cmd->add_option("--experts", o.experts, "Comma-separated expert ids");
    cmd->add_option("--walks-train", o.walks_train, "Walks per mesh during training");
    cmd->add_option("--walks-infer", o.walks_infer, "Walks per mesh at inference");
    cmd->add_option("--lambda-range", o.lambda_range, "lo,hi range of the agent's λ");
    cmd->add_option("--data", o.data_dir, "Dataset directory");
}

RunConfig resolve_config(const Options& o, const std::string& command) {
    RunConfig c;
    if (!o.config_path.empty()) c = load_config(o.config_path);
    else if (!o.checkpoint.empty() && fs::exists(fs::path(o.checkpoint).parent_path() / "config.cfg"))
        c = load_config(fs::path(o.checkpoint).parent_path() / "config.cfg");
    if (o.seed) c.seed = *o.seed;
    if (o.epochs) {
        if (command == "pretrain-experts") c.experts.epochs = *o.epochs;
        else if (command == "pretrain-gate") c.experts.imitation_epochs = *o.epochs;
        else c.epochs = *o.epochs;
    }
    if (o.batch_size) {
        if (command == "pretrain-experts" || command == "pretrain-gate") c.experts.batch_size = *o.batch_size;
        else c.trainer.batch_size = *o.batch_size;
    }
    if (o.experts) set_config_value(c, "experts.ids", *o.experts);
    if (o.walks_train) c.trainer.walks_train = *o.walks_train;
    if (o.walks_infer) c.trainer.walks_infer = *o.walks_infer;
    if (o.lambda_range) {
        const auto parts = split_list(*o.lambda_range);
        if (parts.size() != 2) throw ConfigError("--lambda-range expects lo,hi");
        set_config_value(c, "agent.lambda_min", parts[0]);
        set_config_value(c, "agent.lambda_max", parts[1]);
    }
    if (o.data_dir) c.data.dir = *o.data_dir;
    if (o.task) set_config_value(c, "data.task", *o.task);
    if (o.classes) c.data.classes = *o.classes;
    if (o.per_class) c.data.per_class = *o.per_class;
    if (o.static_lambda) {
        c.lambda_mode = "static";
        c.static_lambda = *o.static_lambda;
    }
    if (o.loss_sim) set_config_value(c, "trainer.similarity", *o.loss_sim);
    c.agent.validate();
    return c;
}

void finish_run(const RunConfig& c, const std::string& command, int argc, char** argv,
                std::vector<fs::path> inputs, const fs::path& dir) {
    fs::create_directories(dir);
    save_config(c, dir / "config.cfg");
    RunManifest m;
    m.command = command;
    m.arguments.assign(argv, argv + argc);
    m.config = c;
    m.inputs = std::move(inputs);
    write_manifest(m, dir);
}

System build_system(const RunConfig& c, std::size_t num_classes, const std::string& checkpoint) {
    System system = make_system(c.experts.ids, num_classes, c.gate, c.seed);
    if (!checkpoint.empty()) {
        const ParameterSet stored = load_checkpoint(checkpoint);
        for (const auto& [path, value] : stored) {
            if (!system.params.contains(path)) continue;
            if (!system.params.at(path).same_shape(value))
                throw CheckpointError("checkpoint shape mismatch at " + path);
            system.params.at(path) = value;
        }
    }
    return system;
}

int cmd_gen_data(const RunConfig& c, const fs::path& out) {
    const Dataset data = c.data.task == Task::segmentation
                             ? generate_segmentation_set(c.data.per_class, c.seed)
                             : generate_classification_set(c.data.classes, c.data.per_class, c.seed, c.data.task);
    save_dataset(data, out);
    std::cout << "wrote " << data.meshes.size() << " meshes (" << data.train.size() << " train, "
              << data.test.size() << " test) to " << out << '\n';
    return 0;
}

int cmd_pretrain_experts(const RunConfig& c, const Options& o, const fs::path& out) {
    const Dataset data = load_dataset(c.data.dir);
    System system = build_system(c, data.num_classes, o.checkpoint);
    const auto train = data.train_meshes();
    for (std::size_t j = 0; j < system.experts.size(); ++j) {
        const Expert& e = *system.experts[j];
        if (!e.trainable()) continue;
        ExpertTrainingConfig tc;
        tc.epochs = c.experts.epochs;
        tc.batch_size = c.experts.batch_size;
        tc.learning_rate = c.experts.learning_rate;
        tc.seed = derive_seed(c.seed, j, 0xE7);
        tc.task = data.task;
        const auto losses = pretrain_expert(e, system.params, train, tc);
        std::cout << e.name() << ": final loss " << (losses.empty() ? 0.0 : losses.back()) << '\n';
    }
    fs::create_directories(out);
    save_checkpoint(system.params, out / "system.ckpt");
    return 0;
}

int cmd_pretrain_gate(const RunConfig& c, const Options& o, const fs::path& out) {
    const Dataset data = load_dataset(c.data.dir);
    System system = build_system(c, data.num_classes, o.checkpoint);
    const auto train = data.train_meshes();
    ImitationConfig ic;
    ic.epochs = c.experts.imitation_epochs;
    ic.batch_size = c.experts.batch_size;
    ic.walks = c.trainer.walks_train;
    ic.learning_rate = c.experts.imitation_learning_rate;
    const auto losses = pretrain_gate(system, train, ic, c.seed);
    for (std::size_t j = 0; j < losses.size(); ++j)
        std::cout << "gate imitating " << system.experts[j]->name() << ": final KL " << losses[j] << '\n';
    fs::create_directories(out);
    save_checkpoint(system.params, out / "system.ckpt");
    return 0;
}

int cmd_train(const RunConfig& c, const Options& o, const fs::path& out) {
    const Dataset data = load_dataset(c.data.dir);
    System system = build_system(c, data.num_classes, o.checkpoint);
    TrainerConfig tc = c.trainer;
    tc.task = data.task;
    MoeTrainer trainer(system, tc);
    std::optional<SacAgent> agent;
    std::unique_ptr<LambdaController> controller;
    if (c.lambda_mode == "static") {
        controller = std::make_unique<StaticLambda>(c.static_lambda);
    } else {
        agent.emplace(system.num_experts(), c.agent, derive_seed(c.seed, 0x5AC));
        controller = std::make_unique<SacLambda>(*agent);
    }
    const auto log = train_run(trainer, data, *controller, c.epochs, c.seed, [&](std::size_t epoch) {
        std::cout << "epoch " << epoch << " done\n";
        return true;
    });
    fs::create_directories(out);
    std::ofstream metrics(out / "metrics.csv");
    write_metrics_csv(log, system.num_experts(), metrics);
    save_checkpoint(system.params, out / "system.ckpt");
    if (agent) save_checkpoint(agent->params(), out / "agent.ckpt");
    return 0;
}

int cmd_eval(const RunConfig& c, const Options& o, const fs::path& out) {
    if (o.checkpoint.empty()) throw CheckpointError("missing checkpoint: pass --checkpoint");
    const Dataset data = load_dataset(c.data.dir);
    const System system = build_system(c, data.num_classes, o.checkpoint);
    const auto meshes = o.split == "train" ? data.train_meshes() : o.split == "all" ? data.meshes : data.test_meshes();
    const Evaluation ev = o.ensemble
                              ? evaluate_ensemble(system, meshes, data.task, c.seed, c.trainer.retrieval_cutoff)
                              : evaluate(system, meshes, data.task, c.trainer.walks_infer, c.seed,
                                         Execution::parallel, c.trainer.retrieval_cutoff);
    fs::create_directories(out);
    const fs::path csv = out / "eval.csv";
    const bool fresh = !fs::exists(csv);
    std::ofstream f(csv, std::ios::app);
    if (fresh) f << "mode,task,split,meshes,accuracy,face_accuracy,map,ndcg\n";
    f << (o.ensemble ? "ensemble" : "moe") << ',' << task_name(data.task) << ',' << o.split << ',' << meshes.size()
      << ',' << ev.accuracy << ',' << ev.face_accuracy << ',' << ev.map << ',' << ev.ndcg << '\n';
    std::cout << (o.ensemble ? "ensemble" : "moe") << " accuracy=" << ev.accuracy;
    if (data.task == Task::retrieval) std::cout << " mAP=" << ev.map << " NDCG=" << ev.ndcg;
    if (data.task == Task::segmentation) std::cout << " face_accuracy=" << ev.face_accuracy;
    std::cout << '\n';
    return 0;
}

int cmd_dump_walks(const RunConfig& c, const Options& o) {
    std::vector<Mesh> meshes;
    if (!o.mesh_file.empty()) meshes.push_back(load_mesh(o.mesh_file));
    else meshes = load_dataset(c.data.dir).meshes;
    std::ofstream file;
    if (!o.output.empty()) file.open(o.output);
    std::ostream& out = o.output.empty() ? std::cout : file;
    for (const auto& m : meshes)
        for (const auto& w : extract_walks(m, o.walk_count, derive_seed(c.seed, hash_string(m.id()))))
            write_walk_line(w, out);
    return 0;
}

int cmd_gradcheck(const RunConfig& c) {
    GradCheckOptions opt;
    opt.max_coordinates_per_tensor = 3;
    bool ok = true;
    for (const auto& r : standard_gradient_checks(c.seed, opt)) {
        std::cout << (r.report.passed ? "ok   " : "FAIL ") << r.name << " max_rel=" << r.report.max_relative_error
                  << " checked=" << r.report.coordinates_checked;
        if (!r.report.passed) std::cout << " worst=" << r.report.worst_coordinate;
        std::cout << '\n';
        ok = ok && r.report.passed;
    }
    return ok ? 0 : 1;
}

int cmd_plot_lambda(const Options& o) {
    std::ifstream in(o.metrics);
    if (!in) throw std::runtime_error("cannot open metrics " + o.metrics);
    std::ofstream file;
    if (!o.output.empty()) file.open(o.output);
    std::ostream& out = o.output.empty() ? std::cout : file;
    std::string line;
    std::getline(in, line);
    const auto header = split_list(line);
    const auto col = [&](const std::string& name) {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return k;
        throw std::runtime_error("metrics file lacks column " + name);
    };
    const std::size_t ci = col("iteration"), ce = col("epoch"), cl = col("lambda"), cr = col("reward");
    out << "iteration,epoch,lambda,reward\n";
    while (std::getline(in, line)) {
        const auto f = split_list(line);
        if (f.size() != header.size()) continue;
        out << f[ci] << ',' << f[ce] << ',' << f[cl] << ',' << f[cr] << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixture of mesh experts with an RL-tuned loss balance"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    add_shared(gen, o);
    gen->add_option("--task", o.task, "classification, retrieval or segmentation");
    gen->add_option("--classes", o.classes, "Number of classes");
    gen->add_option("--per-class", o.per_class, "Meshes per class");

    auto* pe = app.add_subcommand("pretrain-experts", "Supervised training of trainable experts");
    add_shared(pe, o);
    pe->add_option("--checkpoint", o.checkpoint, "Start from this checkpoint");

    auto* pg = app.add_subcommand("pretrain-gate", "Imitation pre-training of the gate, then averaging");
    add_shared(pg, o);
    pg->add_option("--checkpoint", o.checkpoint, "Checkpoint holding the experts");

    auto* tr = app.add_subcommand("train", "Joint MoE training with the λ agent");
    add_shared(tr, o);
    tr->add_option("--checkpoint", o.checkpoint, "Start from this checkpoint");
    tr->add_option("--static-lambda", o.static_lambda, "Use a constant λ instead of the agent");
    tr->add_option("--loss-sim", o.loss_sim, "Similarity term")->check(CLI::IsMember({"kld", "cosine", "mse", "none"}));

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
    add_shared(ev, o);
    ev->add_option("--checkpoint", o.checkpoint, "System checkpoint")->required();
    ev->add_flag("--ensemble", o.ensemble, "Hard-voting ensemble of all experts");
    ev->add_option("--split", o.split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));

    auto* dw = app.add_subcommand("dump-walks", "Print random walks");
    add_shared(dw, o);
    dw->add_option("--mesh", o.mesh_file, "Single OFF file instead of a dataset")->check(CLI::ExistingFile);
    dw->add_option("--count", o.walk_count, "Walks per mesh");
    dw->add_option("--output", o.output, "Output file (default stdout)");

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
    add_shared(gc, o);

    auto* pl = app.add_subcommand("plot-lambda", "Extract the λ trace from a metrics CSV");
    add_shared(pl, o);
    pl->add_option("--metrics", o.metrics, "metrics.csv of a training run");
    pl->add_option("--output", o.output, "Output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* cmd = app.get_subcommands().front();
        const std::string name = cmd->get_name();
        const RunConfig c = resolve_config(o, name);
        const fs::path out = o.out_dir;
        std::vector<fs::path> inputs;
        if (!o.config_path.empty()) inputs.emplace_back(o.config_path);
        if (!o.checkpoint.empty()) inputs.emplace_back(o.checkpoint);
        int code = 0;
        if (name == "gen-data") {
            code = cmd_gen_data(c, out);
        } else if (name == "pretrain-experts") {
            inputs.emplace_back(c.data.dir);
            code = cmd_pretrain_experts(c, o, out);
        } else if (name == "pretrain-gate") {
            inputs.emplace_back(c.data.dir);
            code = cmd_pretrain_gate(c, o, out);
        } else if (name == "train") {
            inputs.emplace_back(c.data.dir);
            code = cmd_train(c, o, out);
        } else if (name == "eval") {
            inputs.emplace_back(c.data.dir);
            code = cmd_eval(c, o, out);
        } else if (name == "dump-walks") {
            return cmd_dump_walks(c, o);
        } else if (name == "gradcheck") {
            return cmd_gradcheck(c);
        } else if (name == "plot-lambda") {
            return cmd_plot_lambda(o);
        }
        if (name != "eval") finish_run(c, name, argc, argv, inputs, out);
        else {
            RunManifest m{name, {argv, argv + argc}, c, inputs};
            write_manifest(m, out);
        }
        return code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
