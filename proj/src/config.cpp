#include "mme/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mme {

namespace {

struct Binding {
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
};

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    std::istringstream in(text);
    T v{};
    if (!(in >> v) || !(in >> std::ws).eof()) throw ConfigError("invalid value '" + text + "' for " + key);
    if constexpr (std::is_unsigned_v<T>)
        if (text.find('-') != std::string::npos) throw ConfigError("invalid value '" + text + "' for " + key);
    return v;
}

template <class T>
Binding number(const std::string& key, T& field) {
    return {[&field] {
                if constexpr (std::is_floating_point_v<T>) return fmt(field);
                else return std::to_string(field);
            },
            [&field, key](const std::string& v) { field = parse_number<T>(key, v); }};
}

Binding text(std::string& field) {
    return {[&field] { return field; }, [&field](const std::string& v) { field = v; }};
}

std::map<std::string, Binding> bindings(RunConfig& c) {
    std::map<std::string, Binding> b;
    b["run.seed"] = number("run.seed", c.seed);
    b["data.dir"] = text(c.data.dir);
    b["data.task"] = {[&c] { return task_name(c.data.task); },
                      [&c](const std::string& v) {
                          try {
                              c.data.task = parse_task(v);
                          } catch (const std::exception& e) {
                              throw ConfigError(e.what());
                          }
                      }};
    b["data.classes"] = number("data.classes", c.data.classes);
    b["data.per_class"] = number("data.per_class", c.data.per_class);
    b["gate.encoder_layers"] = number("gate.encoder_layers", c.gate.encoder_layers);
    b["gate.decoder_layers"] = number("gate.decoder_layers", c.gate.decoder_layers);
    b["gate.d_model"] = number("gate.d_model", c.gate.d_model);
    b["gate.heads"] = number("gate.heads", c.gate.heads);
    b["gate.ff_width"] = number("gate.ff_width", c.gate.ff_width);
    b["experts.ids"] = {[&c] {
                            std::string out;
                            for (const auto& id : c.experts.ids) out += (out.empty() ? "" : ",") + id;
                            return out;
                        },
                        [&c](const std::string& v) { c.experts.ids = split_list(v); }};
    b["experts.epochs"] = number("experts.epochs", c.experts.epochs);
    b["experts.batch_size"] = number("experts.batch_size", c.experts.batch_size);
    b["experts.learning_rate"] = number("experts.learning_rate", c.experts.learning_rate);
    b["experts.imitation_epochs"] = number("experts.imitation_epochs", c.experts.imitation_epochs);
    b["experts.imitation_learning_rate"] = number("experts.imitation_learning_rate", c.experts.imitation_learning_rate);
    b["trainer.epochs"] = number("trainer.epochs", c.epochs);
    b["trainer.batch_size"] = number("trainer.batch_size", c.trainer.batch_size);
    b["trainer.walks_train"] = number("trainer.walks_train", c.trainer.walks_train);
    b["trainer.walks_infer"] = number("trainer.walks_infer", c.trainer.walks_infer);
    b["trainer.gate_learning_rate"] = number("trainer.gate_learning_rate", c.trainer.gate_learning_rate);
    b["trainer.expert_learning_rate"] = number("trainer.expert_learning_rate", c.trainer.expert_learning_rate);
    b["trainer.similarity"] = {[&c] { return similarity_name(c.trainer.similarity); },
                               [&c](const std::string& v) {
                                   try {
                                       c.trainer.similarity = parse_similarity(v);
                                   } catch (const std::exception& e) {
                                       throw ConfigError(e.what());
                                   }
                               }};
    b["trainer.retrieval_cutoff"] = number("trainer.retrieval_cutoff", c.trainer.retrieval_cutoff);
    b["trainer.lambda_mode"] = {[&c] { return c.lambda_mode; },
                                [&c](const std::string& v) {
                                    if (v != "sac" && v != "static") throw ConfigError("lambda_mode must be sac or static");
                                    c.lambda_mode = v;
                                }};
    b["trainer.static_lambda"] = number("trainer.static_lambda", c.static_lambda);
    b["agent.gamma"] = number("agent.gamma", c.agent.gamma);
    b["agent.tau"] = number("agent.tau", c.agent.tau);
    b["agent.actor_learning_rate"] = number("agent.actor_learning_rate", c.agent.actor_learning_rate);
    b["agent.critic_learning_rate"] = number("agent.critic_learning_rate", c.agent.critic_learning_rate);
    b["agent.alpha_learning_rate"] = number("agent.alpha_learning_rate", c.agent.alpha_learning_rate);
    b["agent.buffer_capacity"] = number("agent.buffer_capacity", c.agent.buffer_capacity);
    b["agent.batch_size"] = number("agent.batch_size", c.agent.batch_size);
    b["agent.hidden"] = number("agent.hidden", c.agent.hidden);
    b["agent.lambda_min"] = number("agent.lambda_min", c.agent.lambda_min);
    b["agent.lambda_max"] = number("agent.lambda_max", c.agent.lambda_max);
    b["agent.target_entropy"] = number("agent.target_entropy", c.agent.target_entropy);
    b["agent.initial_alpha"] = number("agent.initial_alpha", c.agent.initial_alpha);
    b["agent.updates_per_step"] = number("agent.updates_per_step", c.agent.updates_per_step);
    return b;
}

} // namespace

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        if (first != std::string::npos) out.push_back(item.substr(first, last - first + 1));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
    RunConfig copy = config;
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [key, binding] : bindings(copy)) out.emplace_back(key, binding.get());
    return out;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
    auto b = bindings(config);
    auto it = b.find(key);
    if (it == b.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second.set(value);
}

RunConfig parse_config(std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("config parse error: " + e.message() + " at line " + std::to_string(e.line()));
    }
    RunConfig config;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config parse error: key '" + section + "' outside a section");
        for (const auto& [key, value] : body) set_config_value(config, section + "." + key, value.data());
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    return parse_config(in);
}

void write_config(const RunConfig& config, std::ostream& out) {
    std::string section;
    for (const auto& [key, value] : config_entries(config)) {
        const auto dot = key.find('.');
        const std::string s = key.substr(0, dot);
        if (s != section) {
            out << (section.empty() ? "" : "\n") << '[' << s << "]\n";
            section = s;
        }
        out << key.substr(dot + 1) << '=' << value << '\n';
    }
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config " + path.string());
    write_config(config, out);
}

} // namespace mme
