#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"
#include "nhde/hga.hpp"
#include "nhde/inference.hpp"
#include "nhde/training.hpp"

namespace nhde {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Everything a run needs. Config keys use the short symbol names
// (K, J, N, N_prime, B, d, L, Y, C, E_f, eps0, T_m, ...); sections are only
// for readability.
struct RunConfig {
    ProblemKind kind = ProblemKind::MOTSP;
    int M = 2;
    int n = 10;
    int N = 20;          // preferences at inference
    int instances = 20;  // dataset size for gen
    bool shuffle = true; // shuffle the preference schedule
    ModelConfig model;
    TrainConfig train;
    MetaConfig meta;
    SolveConfig solve;
    int log_every = 10;
    int checkpoint_every = 0;
    int val_instances = 4;
    int ls_iterations = 100; // Pareto local search budget

    std::uint64_t seed() const { return train.seed; }
    void set_seed(std::uint64_t s);
    // Propagates problem fields into the nested configs.
    void sync();
    void validate() const;
};

RunConfig default_run_config(ProblemKind kind, int M);

// Applies key = value pairs; unknown keys and malformed values raise ConfigError.
void apply_setting(RunConfig& cfg, std::string const& key, std::string const& value);
RunConfig load_run_config(std::filesystem::path const& path);
RunConfig parse_run_config(std::string const& text, std::string const& origin = "<config>");

nlohmann::json to_json(RunConfig const& cfg);

} // namespace nhde
