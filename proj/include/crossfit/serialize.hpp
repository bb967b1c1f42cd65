#pragma once

#include <json.hpp>

#include "crossfit/engine.hpp"
#include "crossfit/spec.hpp"

namespace crossfit {

nlohmann::json to_json(const ValidationReport& report);

// Canonical payload: {estimate|null, per_repetition, n_success, n_fail,
// fit_calls, cache_hits, errors}. Audit counters and wall-clock data stay out
// so reruns are byte-identical.
nlohmann::json to_json(const RunResult& result);

} // namespace crossfit
