#pragma once

// Run configuration: flat key=value text grouped in [data], [gate], [experts],
// [trainer] and [agent] sections. Unknown keys are errors.

#include "mme/experts.hpp"
#include "mme/gate.hpp"
#include "mme/sac.hpp"
#include "mme/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace mme {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DataConfig {
    std::string dir = "data";
    Task task = Task::classification;
    std::size_t classes = 4;
    std::size_t per_class = 10;
};

struct ExpertsConfig {
    std::vector<std::string> ids = {"oracle:0", "oracle:1", "oracle:2"};
    std::size_t epochs = 20;
    std::size_t batch_size = 8;
    double learning_rate = 1e-2;
    std::size_t imitation_epochs = 10;
    double imitation_learning_rate = 1e-3;
};

struct RunConfig {
    std::uint64_t seed = 0;
    DataConfig data;
    GateConfig gate;
    ExpertsConfig experts;
    TrainerConfig trainer;
    std::size_t epochs = 10;
    std::string lambda_mode = "sac";  // "sac" or "static"
    double static_lambda = 0.0;
    SacConfig agent;
};

/// Dotted key ("trainer.batch_size") → value as text.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);
void write_config(const RunConfig& config, std::ostream& out);
void save_config(const RunConfig& config, const std::filesystem::path& path);

std::vector<std::string> split_list(const std::string& text, char sep = ',');

} // namespace mme
