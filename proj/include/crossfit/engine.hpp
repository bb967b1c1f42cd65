#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crossfit/folds.hpp"
#include "crossfit/spec.hpp"
#include "crossfit/tabular.hpp"

namespace crossfit {

struct EngineOptions {
    // Reuse-aware caching of fitted instances within each repetition. Results
    // must be bit-identical with the cache off; only fit counts change.
    bool cache_enabled = true;
};

struct ErrorRecord {
    int repetition = 0;
    int panel = -1;        // -1 when the failure is not panel-bound
    std::string where;     // instance label or "target"
    std::string message;
};

/// Per-method run output. `estimate` / `predictor` are absent exactly when
/// no repetition succeeded.
struct RunResult {
    std::optional<double> estimate;          // estimate mode
    std::optional<Predictor> predictor;      // predict mode
    std::vector<double> per_repetition;      // successful repetition values (estimate mode)
    int n_success = 0;
    int n_fail = 0;
    std::vector<ErrorRecord> errors;
    long fit_calls = 0;   // actual fits, cache misses included
    long cache_hits = 0;

    // Audit extras, not part of the canonical JSON payload.
    std::map<std::string, long> node_fit_calls;
    std::map<std::string, long> node_cache_hits;
    std::vector<std::uint64_t> fold_digests; // one per attempted repetition
};

/// Executes the full cross-fitting schedule for one method.
RunResult crossfit(const Dataset& data, const MethodSpec& m, std::uint64_t seed,
                   const EngineOptions& options = {});

/// Runs several methods in one call. Methods that agree on (K, repeats, fold
/// splitter) share fold assignments and a per-repetition fit cache; failures
/// stay isolated per method.
std::vector<std::pair<std::string, RunResult>>
crossfit_multi(const Dataset& data,
               const std::vector<std::pair<std::string, MethodSpec>>& methods,
               std::uint64_t seed, const EngineOptions& options = {});

} // namespace crossfit
