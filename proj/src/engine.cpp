#include "crossfit/engine.hpp"

#include <memory>
#include <tuple>
#include <unordered_map>

namespace crossfit {

namespace {

// Failure of one fit/predict/target call; fails the enclosing repetition.
// Derives from runtime_error so it stays catchable when it escapes through a
// deferred panel predictor applied to new data.
struct PanelError : std::runtime_error {
    int panel;
    std::string where;
    std::string message;

    PanelError(int panel_, std::string where_, std::string message_)
        : std::runtime_error(where_ + ": " + message_),
          panel(panel_),
          where(std::move(where_)),
          message(std::move(message_)) {}
};

// Fitted-model cache, scoped to one (method group, repetition). Keys encode
// node identity, the exact training window, and the upstream fit context.
struct RepCache {
    bool enabled = true;
    std::unordered_map<std::string, ModelPtr> models;
    std::map<const NuisanceSpec*, int> tokens;

    // Token per distinct spec object; assigned in execution order so keys are
    // deterministic. Object identity (not id) keeps distinct specs apart even
    // across methods sharing this cache.
    int token_for(const NuisanceSpec* spec) {
        auto it = tokens.find(spec);
        if (it != tokens.end()) return it->second;
        const int tok = static_cast<int>(tokens.size());
        tokens.emplace(spec, tok);
        return tok;
    }

    ModelPtr find(const std::string& key) const {
        auto it = models.find(key);
        return it == models.end() ? nullptr : it->second;
    }
};

struct MethodCounters {
    RunResult* result;

    void count_fit(const NuisanceInstance& inst) {
        ++result->fit_calls;
        ++result->node_fit_calls[inst.node->id];
    }
    void count_hit(const NuisanceInstance& inst) {
        ++result->cache_hits;
        ++result->node_cache_hits[inst.node->id];
    }
};

std::vector<std::string> resolve_keys(const InstancePlan& plan, const PanelAllocation& alloc,
                                      RepCache& cache) {
    std::vector<std::string> keys(plan.instances.size());
    for (std::size_t i = 0; i < plan.instances.size(); ++i) {
        const auto& inst = plan.instances[i];
        const Window& w = alloc.training[i];
        std::string key = std::to_string(cache.token_for(inst.node.get())) + "@" +
                          std::to_string(w.start) + "+" + std::to_string(w.width);
        if (!inst.children.empty()) {
            key += "(";
            for (std::size_t c = 0; c < inst.children.size(); ++c) {
                if (c) key += ";";
                key += keys[static_cast<std::size_t>(inst.children[c])]; // children precede parents
            }
            key += ")";
        }
        keys[i] = std::move(key);
    }
    return keys;
}

PredictionVector predict_instance(int idx, const InstancePlan& plan,
                                  const std::vector<ModelPtr>& models, const Dataset& rows,
                                  int panel) {
    const auto& inst = plan.instances[static_cast<std::size_t>(idx)];
    PredMap dep_preds;
    for (std::size_t d = 0; d < inst.node->deps.size(); ++d) {
        dep_preds[inst.node->deps[d]] =
            predict_instance(inst.children[d], plan, models, rows, panel);
    }
    try {
        PredictionVector out = inst.node->predict(*models[static_cast<std::size_t>(idx)], rows, dep_preds);
        if (out.size() != rows.n_rows()) {
            throw std::runtime_error("predict returned " + std::to_string(out.size()) +
                                     " values for " + std::to_string(rows.n_rows()) + " rows");
        }
        return out;
    } catch (const PanelError&) {
        throw;
    } catch (const std::exception& e) {
        throw PanelError{panel, instance_label(inst), e.what()};
    }
}

ModelPtr fit_instance(int idx, const InstancePlan& plan, const PanelAllocation& alloc,
                      const std::vector<std::string>& keys, const FoldAssignment& folds,
                      const Dataset& data, RepCache& cache, MethodCounters& counters,
                      const std::vector<ModelPtr>& models) {
    const auto& inst = plan.instances[static_cast<std::size_t>(idx)];
    if (cache.enabled) {
        if (ModelPtr hit = cache.find(keys[static_cast<std::size_t>(idx)])) {
            counters.count_hit(inst);
            return hit;
        }
    }
    const Window& window = alloc.training[static_cast<std::size_t>(idx)];
    std::vector<std::size_t> train_rows;
    for (std::size_t r = 0; r < folds.labels.size(); ++r) {
        if (window.contains(folds.labels[r], folds.k)) train_rows.push_back(r);
    }
    const Dataset train = data.select_rows(train_rows);

    // Dependency predictions are computed on this instance's training rows
    // with the dependencies' own fitted models (children fit first).
    PredMap dep_preds;
    for (std::size_t d = 0; d < inst.node->deps.size(); ++d) {
        dep_preds[inst.node->deps[d]] =
            predict_instance(inst.children[d], plan, models, train, alloc.panel);
    }
    try {
        Model fitted = inst.node->fit(train, dep_preds);
        counters.count_fit(inst);
        auto ptr = std::make_shared<const Model>(std::move(fitted));
        if (cache.enabled) cache.models.emplace(keys[static_cast<std::size_t>(idx)], ptr);
        return ptr;
    } catch (const PanelError&) {
        throw;
    } catch (const std::exception& e) {
        throw PanelError{alloc.panel, instance_label(inst), e.what()};
    }
}

Predictor build_panel_predictor(const std::shared_ptr<const InstancePlan>& plan,
                                std::vector<ModelPtr> models, const Target& target) {
    auto fn = target.vector_fn;
    return [plan, models = std::move(models), fn](const Dataset& newdata) {
        PredMap preds;
        for (const auto& [arg, root] : plan->arg_roots) {
            preds[arg] = predict_instance(root, *plan, models, newdata, -1);
        }
        return fn(newdata, preds);
    };
}

struct RepetitionOutcome {
    bool ok = false;
    double value = 0.0;    // estimate mode
    Predictor predictor;   // predict mode
};

RepetitionOutcome run_repetition(const Dataset& data, const MethodSpec& m,
                                 const std::shared_ptr<const InstancePlan>& plan,
                                 const FoldAssignment& folds, int rep, RepCache& cache,
                                 RunResult& result) {
    MethodCounters counters{&result};
    RepetitionOutcome outcome;
    std::vector<double> panel_values;
    std::vector<Predictor> panel_predictors;

    try {
        for (int p = 0; p < m.folds; ++p) {
            const PanelAllocation alloc = allocate(m.allocation, *plan, p, m.eval_fold, m.folds);
            std::vector<std::string> keys;
            if (cache.enabled) keys = resolve_keys(*plan, alloc, cache);
            else keys.resize(plan->instances.size());

            std::vector<ModelPtr> models(plan->instances.size());
            for (std::size_t i = 0; i < plan->instances.size(); ++i) {
                models[i] = fit_instance(static_cast<int>(i), *plan, alloc, keys, folds, data,
                                         cache, counters, models);
            }

            if (m.mode == Mode::Estimate) {
                std::vector<std::size_t> eval_rows;
                for (std::size_t r = 0; r < folds.labels.size(); ++r) {
                    if (alloc.eval_window.contains(folds.labels[r], folds.k)) eval_rows.push_back(r);
                }
                const Dataset eval_data = data.select_rows(eval_rows);
                PredMap preds;
                for (const auto& [arg, root] : plan->arg_roots) {
                    preds[arg] = predict_instance(root, *plan, models, eval_data, p);
                }
                try {
                    panel_values.push_back(m.target.scalar(eval_data, preds));
                } catch (const PanelError&) {
                    throw;
                } catch (const std::exception& e) {
                    throw PanelError{p, "target", e.what()};
                }
            } else {
                panel_predictors.push_back(build_panel_predictor(plan, std::move(models), m.target));
            }
        }

        if (m.mode == Mode::Estimate) {
            outcome.value = m.aggregate_panels(panel_values);
        } else {
            outcome.predictor = m.aggregate_panels_pred(panel_predictors);
        }
        outcome.ok = true;
    } catch (const SpecError&) {
        throw; // specification errors are never swallowed
    } catch (const PanelError& e) {
        ++result.n_fail;
        result.errors.push_back(ErrorRecord{rep, e.panel, e.where, e.message});
    } catch (const std::exception& e) {
        ++result.n_fail;
        result.errors.push_back(ErrorRecord{rep, -1, "aggregate_panels", e.what()});
    }
    return outcome;
}

struct MethodState {
    std::string name;
    const MethodSpec* spec = nullptr;
    std::shared_ptr<const InstancePlan> plan;
    RunResult result;
    std::vector<Predictor> rep_predictors;
    bool stopped = false; // max_fail budget exhausted

    bool over_budget() const {
        return spec->max_fail && result.n_fail > *spec->max_fail;
    }
};

void finalize(MethodState& state) {
    const MethodSpec& m = *state.spec;
    if (state.result.n_success == 0) return;
    if (m.mode == Mode::Estimate) {
        state.result.estimate = m.aggregate_repeats(state.result.per_repetition);
    } else {
        state.result.predictor = m.aggregate_repeats_pred(state.rep_predictors);
    }
}

} // namespace

std::vector<std::pair<std::string, RunResult>>
crossfit_multi(const Dataset& data,
               const std::vector<std::pair<std::string, MethodSpec>>& methods,
               std::uint64_t seed, const EngineOptions& options) {
    std::vector<MethodState> states(methods.size());
    for (std::size_t i = 0; i < methods.size(); ++i) {
        const auto& [name, m] = methods[i];
        const ValidationReport report = validate_method(m);
        if (!report.ok) {
            std::string msg = "method '" + name + "' is invalid:";
            for (const auto& v : report.violations) msg += " [" + v.check + "] " + v.message + ";";
            throw SpecError(msg);
        }
        if (data.n_rows() < static_cast<std::size_t>(m.folds)) {
            throw SpecError("method '" + name + "': n_rows = " + std::to_string(data.n_rows()) +
                            " < K = " + std::to_string(m.folds));
        }
        states[i].name = name;
        states[i].spec = &m;
        states[i].plan = std::make_shared<const InstancePlan>(instance_set(m));
    }

    // Shared scheduling: methods with identical (K, repeats, splitter) share
    // fold assignments and a per-repetition cache.
    using GroupKey = std::tuple<int, int, const void*>;
    std::map<GroupKey, std::vector<std::size_t>> group_map;
    std::vector<GroupKey> group_order;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const MethodSpec& m = *states[i].spec;
        GroupKey key{m.folds, m.repeats, static_cast<const void*>(m.fold_split.get())};
        if (!group_map.count(key)) group_order.push_back(key);
        group_map[key].push_back(i);
    }

    for (const GroupKey& key : group_order) {
        const auto& members = group_map[key];
        const MethodSpec& lead = *states[members.front()].spec;
        for (int rep = 0; rep < lead.repeats; ++rep) {
            bool anyone_active = false;
            for (std::size_t i : members) {
                if (!states[i].stopped) anyone_active = true;
            }
            if (!anyone_active) break;

            FoldAssignment folds;
            if (lead.fold_split) {
                folds = (*lead.fold_split)(data.n_rows(), lead.folds, seed, rep);
                check_fold_assignment(folds, data.n_rows(), lead.folds);
            } else {
                folds = default_fold_split(data.n_rows(), lead.folds, seed, rep);
            }
            const std::uint64_t digest = fold_assignment_digest(folds);

            RepCache cache;
            cache.enabled = options.cache_enabled;
            for (std::size_t i : members) {
                MethodState& state = states[i];
                if (state.stopped) continue;
                state.result.fold_digests.push_back(digest);
                RepetitionOutcome outcome =
                    run_repetition(data, *state.spec, state.plan, folds, rep, cache, state.result);
                if (outcome.ok) {
                    ++state.result.n_success;
                    if (state.spec->mode == Mode::Estimate) {
                        state.result.per_repetition.push_back(outcome.value);
                    } else {
                        state.rep_predictors.push_back(std::move(outcome.predictor));
                    }
                } else if (state.over_budget()) {
                    state.stopped = true;
                }
            }
        }
    }

    std::vector<std::pair<std::string, RunResult>> out;
    out.reserve(states.size());
    for (auto& state : states) {
        finalize(state);
        out.emplace_back(state.name, std::move(state.result));
    }
    return out;
}

RunResult crossfit(const Dataset& data, const MethodSpec& m, std::uint64_t seed,
                   const EngineOptions& options) {
    auto results = crossfit_multi(data, {{"method_1", m}}, seed, options);
    return std::move(results.front().second);
}

} // namespace crossfit
