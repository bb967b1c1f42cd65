#include "crossfit/spec.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "crossfit/folds.hpp"

namespace crossfit {

// ---------------------------------------------------------------------------
// Nuisance construction
// ---------------------------------------------------------------------------

NuisancePtr create_nuisance(std::string id, FitFn fit, PredictFn predict,
                            int train_fold, std::vector<std::string> deps) {
    if (id.empty()) throw SpecError("create_nuisance: id must be non-empty");
    if (!fit) throw SpecError("create_nuisance '" + id + "': fit function required");
    if (!predict) throw SpecError("create_nuisance '" + id + "': predict function required");
    if (train_fold < 1) {
        throw SpecError("create_nuisance '" + id + "': train_fold must be >= 1, got " +
                        std::to_string(train_fold));
    }
    std::set<std::string> seen;
    for (const auto& dep : deps) {
        if (dep == id) throw SpecError("create_nuisance '" + id + "': self-dependency");
        if (!seen.insert(dep).second) {
            throw SpecError("create_nuisance '" + id + "': duplicate dependency '" + dep + "'");
        }
    }
    auto spec = std::make_shared<NuisanceSpec>();
    spec->id = std::move(id);
    spec->fit = std::move(fit);
    spec->predict = std::move(predict);
    spec->train_fold = train_fold;
    spec->deps = std::move(deps);
    return spec;
}

// ---------------------------------------------------------------------------
// Aggregators
// ---------------------------------------------------------------------------

double mean_estimate(const std::vector<double>& xs) {
    if (xs.empty()) throw std::runtime_error("mean_estimate: empty list");
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double median_estimate(const std::vector<double>& xs) {
    if (xs.empty()) throw std::runtime_error("median_estimate: empty list");
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (n % 2 == 1) return sorted[n / 2];
    return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

namespace {

std::vector<std::vector<double>> evaluate_components(const std::vector<Predictor>& ps,
                                                     const Dataset& d) {
    std::vector<std::vector<double>> outs;
    outs.reserve(ps.size());
    for (const auto& p : ps) outs.push_back(p(d).num());
    for (std::size_t i = 1; i < outs.size(); ++i) {
        if (outs[i].size() != outs[0].size()) {
            throw std::runtime_error("predictor aggregation: component outputs differ in length (" +
                                     std::to_string(outs[i].size()) + " vs " +
                                     std::to_string(outs[0].size()) + ")");
        }
    }
    return outs;
}

} // namespace

Predictor mean_predictor(const std::vector<Predictor>& ps) {
    if (ps.empty()) throw std::runtime_error("mean_predictor: empty list");
    return [ps](const Dataset& d) {
        const auto outs = evaluate_components(ps, d);
        std::vector<double> result(outs[0].size(), 0.0);
        for (const auto& out : outs) {
            for (std::size_t r = 0; r < out.size(); ++r) result[r] += out[r];
        }
        for (double& v : result) v /= static_cast<double>(outs.size());
        return PredictionVector::numeric(std::move(result));
    };
}

Predictor median_predictor(const std::vector<Predictor>& ps) {
    if (ps.empty()) throw std::runtime_error("median_predictor: empty list");
    return [ps](const Dataset& d) {
        const auto outs = evaluate_components(ps, d);
        std::vector<double> result(outs[0].size());
        std::vector<double> slice(outs.size());
        for (std::size_t r = 0; r < result.size(); ++r) {
            for (std::size_t c = 0; c < outs.size(); ++c) slice[c] = outs[c][r];
            result[r] = median_estimate(slice);
        }
        return PredictionVector::numeric(std::move(result));
    };
}

// ---------------------------------------------------------------------------
// Enums
// ---------------------------------------------------------------------------

std::string to_string(Mode m) {
    return m == Mode::Estimate ? "estimate" : "predict";
}

std::string to_string(Allocation a) {
    switch (a) {
        case Allocation::Overlap: return "overlap";
        case Allocation::Disjoint: return "disjoint";
        case Allocation::Independence: return "independence";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    if (s == "estimate") return Mode::Estimate;
    if (s == "predict") return Mode::Predict;
    throw SpecError("unknown mode '" + s + "' (expected estimate|predict)");
}

Allocation allocation_from_string(const std::string& s) {
    if (s == "overlap") return Allocation::Overlap;
    if (s == "disjoint") return Allocation::Disjoint;
    if (s == "independence") return Allocation::Independence;
    throw SpecError("unknown allocation '" + s + "' (expected overlap|disjoint|independence)");
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

const NuisancePtr* MethodSpec::find_nuisance(const std::string& name) const {
    for (const auto& [n, spec] : nuisances) {
        if (n == name) return &spec;
    }
    return nullptr;
}

namespace {

void add(ValidationReport& report, std::string check, std::string message) {
    report.ok = false;
    report.violations.push_back(Violation{std::move(check), std::move(message)});
}

// Coverage + per-node sanity. Returns false when the graph cannot be walked.
bool check_coverage(const MethodSpec& m, ValidationReport& report) {
    bool walkable = true;
    std::set<std::string> names;
    std::map<std::string, const NuisanceSpec*> id_owner;
    for (const auto& [name, spec] : m.nuisances) {
        if (!names.insert(name).second) {
            add(report, "argument_coverage", "duplicate nuisance mapping '" + name + "'");
            walkable = false;
            continue;
        }
        if (!spec) {
            add(report, "argument_coverage", "nuisance '" + name + "' is null");
            walkable = false;
            continue;
        }
        if (spec->id.empty()) add(report, "argument_coverage", "nuisance mapped as '" + name + "' has an empty id");
        if (!spec->fit) add(report, "argument_coverage", "nuisance '" + spec->id + "' has no fit function");
        if (!spec->predict) add(report, "argument_coverage", "nuisance '" + spec->id + "' has no predict function");
        // Aliasing (two names -> one spec) is fine; distinct specs sharing an
        // id would alias cache signatures, so reject that.
        auto it = id_owner.find(spec->id);
        if (it != id_owner.end() && it->second != spec.get()) {
            add(report, "argument_coverage", "two distinct nuisance specs share id '" + spec->id + "'");
        }
        id_owner[spec->id] = spec.get();
    }
    for (const auto& [name, spec] : m.nuisances) {
        if (!spec) continue;
        std::set<std::string> dep_seen;
        for (const auto& dep : spec->deps) {
            if (!dep_seen.insert(dep).second) {
                add(report, "argument_coverage", "nuisance '" + spec->id + "' declares dependency '" + dep + "' twice");
            }
            if (!names.count(dep)) {
                add(report, "argument_coverage",
                    "nuisance '" + spec->id + "' requires '" + dep + "' which has no nuisance mapping");
                walkable = false;
            }
        }
    }
    return walkable;
}

bool check_cycles(const MethodSpec& m, ValidationReport& report) {
    // DFS over mapping names; 0 = unvisited, 1 = on stack, 2 = done.
    std::map<std::string, int> state;
    std::vector<std::string> stack;
    bool acyclic = true;

    auto visit = [&](auto&& self, const std::string& name) -> void {
        state[name] = 1;
        stack.push_back(name);
        const NuisancePtr* spec = m.find_nuisance(name);
        if (spec && *spec) {
            for (const auto& dep : (*spec)->deps) {
                if (!m.find_nuisance(dep)) continue; // coverage reports it
                const int s = state.count(dep) ? state[dep] : 0;
                if (s == 0) {
                    self(self, dep);
                } else if (s == 1) {
                    std::string cycle;
                    const auto begin = std::find(stack.begin(), stack.end(), dep);
                    for (auto it = begin; it != stack.end(); ++it) cycle += *it + "->";
                    cycle += dep;
                    add(report, "cycle", "cycle: " + cycle);
                    acyclic = false;
                }
            }
        }
        stack.pop_back();
        state[name] = 2;
    };

    for (const auto& [name, spec] : m.nuisances) {
        if ((state.count(name) ? state[name] : 0) == 0) visit(visit, name);
    }
    return acyclic;
}

void check_target(const MethodSpec& m, ValidationReport& report) {
    std::set<std::string> arg_seen;
    for (const auto& arg : m.target.args) {
        if (!arg_seen.insert(arg).second) {
            add(report, "target_consistency", "target argument '" + arg + "' declared twice");
        }
        if (!m.find_nuisance(arg)) {
            add(report, "target_consistency",
                "target argument '" + arg + "' has no nuisance mapping");
        }
    }
    if (m.mode == Mode::Estimate && !m.target.scalar) {
        add(report, "target_consistency", "estimate mode requires a scalar target function");
    }
    if (m.mode == Mode::Predict && !m.target.vector_fn) {
        add(report, "target_consistency", "predict mode requires a vector target function");
    }
}

void check_fold_constraints(const MethodSpec& m, ValidationReport& report) {
    if (m.folds < 2) {
        add(report, "fold_constraints", "K must be >= 2, got " + std::to_string(m.folds));
    }
    if (m.repeats < 1) {
        add(report, "fold_constraints", "repeats must be >= 1, got " + std::to_string(m.repeats));
    }
    if (m.eval_fold < 0) {
        add(report, "fold_constraints", "eval_fold must be >= 0, got " + std::to_string(m.eval_fold));
    }
    if (m.folds >= 2 && m.eval_fold >= m.folds) {
        add(report, "fold_constraints", "eval_fold = " + std::to_string(m.eval_fold) +
                                            " must be < K = " + std::to_string(m.folds));
    }
    if (m.mode == Mode::Estimate && m.eval_fold < 1) {
        add(report, "fold_constraints", "estimate mode requires eval_fold >= 1");
    }
    const int eval_floor = std::max(m.eval_fold, m.mode == Mode::Estimate ? 1 : 0);
    for (const auto& [name, spec] : m.nuisances) {
        if (!spec) continue;
        if (spec->train_fold < 1) {
            add(report, "fold_constraints",
                "nuisance '" + spec->id + "' train_fold must be >= 1, got " + std::to_string(spec->train_fold));
        } else if (m.folds >= 2 && spec->train_fold > m.folds - eval_floor) {
            add(report, "fold_constraints",
                "nuisance '" + spec->id + "' train_fold = " + std::to_string(spec->train_fold) +
                    " exceeds K - eval window = " + std::to_string(m.folds - eval_floor));
        }
    }
    if (m.max_fail && *m.max_fail < 0) {
        add(report, "fold_constraints", "max_fail must be >= 0");
    }
    if (m.mode == Mode::Estimate && (!m.aggregate_panels || !m.aggregate_repeats)) {
        add(report, "fold_constraints", "estimate mode requires scalar panel and repeat aggregators");
    }
    if (m.mode == Mode::Predict && (!m.aggregate_panels_pred || !m.aggregate_repeats_pred)) {
        add(report, "fold_constraints", "predict mode requires predictor panel and repeat aggregators");
    }
}

void check_feasibility(const MethodSpec& m, ValidationReport& report) {
    const int required = min_folds_required(m);
    if (m.folds < required) {
        add(report, "feasibility",
            to_string(m.allocation) + " allocation requires K >= " + std::to_string(required) +
                ", got K = " + std::to_string(m.folds));
    }
}

} // namespace

ValidationReport validate_method(const MethodSpec& m) {
    ValidationReport report;
    const bool covered = check_coverage(m, report);
    const bool acyclic = covered ? check_cycles(m, report) : false;
    check_target(m, report);
    check_fold_constraints(m, report);
    // Feasibility needs a walkable, acyclic graph with every target argument mapped.
    bool roots_ok = true;
    for (const auto& arg : m.target.args) {
        if (!m.find_nuisance(arg)) roots_ok = false;
    }
    if (covered && acyclic && roots_ok && m.folds >= 2) {
        check_feasibility(m, report);
    }
    return report;
}

MethodSpec create_method(MethodSpec m) {
    const ValidationReport report = validate_method(m);
    if (!report.ok) {
        std::ostringstream msg;
        msg << "invalid method specification:";
        for (const auto& v : report.violations) msg << "\n  [" << v.check << "] " << v.message;
        throw SpecError(msg.str());
    }
    return m;
}

} // namespace crossfit
