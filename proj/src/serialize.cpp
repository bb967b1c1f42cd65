#include "crossfit/serialize.hpp"

namespace crossfit {

nlohmann::json to_json(const ValidationReport& report) {
    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : report.violations) {
        violations.push_back({{"check", v.check}, {"message", v.message}});
    }
    return nlohmann::json{{"ok", report.ok}, {"violations", violations}};
}

nlohmann::json to_json(const RunResult& result) {
    nlohmann::json errors = nlohmann::json::array();
    for (const auto& e : result.errors) {
        errors.push_back({{"rep", e.repetition}, {"panel", e.panel}, {"where", e.where}, {"message", e.message}});
    }
    nlohmann::json j{{"per_repetition", result.per_repetition},
                     {"n_success", result.n_success},
                     {"n_fail", result.n_fail},
                     {"fit_calls", result.fit_calls},
                     {"cache_hits", result.cache_hits},
                     {"errors", errors}};
    if (result.estimate) {
        j["estimate"] = *result.estimate;
    } else {
        j["estimate"] = nullptr;
    }
    return j;
}

} // namespace crossfit
