#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crossfit/spec.hpp"
#include "crossfit/tabular.hpp"

namespace crossfit {

// Declarative experiment description. Learners, targets, and aggregators are
// referenced by registry name; custom callables stay on the library API.

struct NuisanceConfig {
    std::string name;
    std::string learner;
    nlohmann::json params = nlohmann::json::object();
    int train_fold = 1;
    std::vector<std::string> deps;
};

struct MethodConfig {
    std::string name;
    std::string target;
    nlohmann::json target_params = nlohmann::json::object();
    std::string mode = "estimate";
    int k = 2;
    int repeats = 1;
    int eval_fold = 1;
    std::string allocation = "overlap";
    std::string aggregate_panels = "mean";
    std::string aggregate_repeats = "median";
    std::optional<int> max_fail;
    std::vector<NuisanceConfig> nuisances;
};

struct DataConfig {
    std::string csv;                                    // exactly one of csv / dgp
    std::string dgp;
    nlohmann::json dgp_params = nlohmann::json::object();
};

struct ExperimentConfig {
    DataConfig data;
    std::vector<MethodConfig> methods;
    std::uint64_t seed = 0;
    int monte_carlo_reps = 1;
    std::string output;
};

ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

// Reads and parses the file; when the config has no "seed", the CROSSFIT_SEED
// environment variable (if set) supplies the default.
ExperimentConfig load_config(const std::string& path);

// Builds the method without construction-time validation so `validate` can
// report violations instead of throwing.
MethodSpec build_method(const MethodConfig& mc);

std::vector<std::pair<std::string, MethodSpec>> build_methods(const ExperimentConfig& cfg);

// CSV data or one DGP draw (seed: dgp_params.seed, else derived from cfg.seed).
Dataset load_dataset(const ExperimentConfig& cfg);

// Ground truth for bias reporting, when the DGP defines one.
std::optional<double> config_theta0(const ExperimentConfig& cfg);

} // namespace crossfit
