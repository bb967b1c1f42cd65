#pragma once

// Shared test fixtures: tiny learners, the trace target, brute-force oracles,
// and a random method-spec generator. Everything here is independent of the
// engine internals it is used to check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "crossfit/engine.hpp"
#include "crossfit/folds.hpp"
#include "crossfit/learners.hpp"
#include "crossfit/rng.hpp"
#include "crossfit/spec.hpp"
#include "crossfit/tabular.hpp"

namespace crossfit::testing {

// ---------------------------------------------------------------------------
// Nuisance builders
// ---------------------------------------------------------------------------

inline NuisancePtr constant_nuisance(const std::string& id, double c, int train_fold = 1,
                                     std::vector<std::string> deps = {}) {
    LearnerFns fns = constant_learner(c);
    return create_nuisance(id, fns.fit, fns.predict, train_fold, std::move(deps));
}

inline NuisancePtr trace_nuisance(const std::string& id, int train_fold = 1,
                                  std::vector<std::string> deps = {}) {
    LearnerFns fns = trace_learner("fold");
    return create_nuisance(id, fns.fit, fns.predict, train_fold, std::move(deps));
}

inline NuisancePtr failing_nuisance(const std::string& id, int train_fold = 1) {
    return create_nuisance(
        id, [](const Dataset&, const PredMap&) -> Model { throw std::runtime_error("deliberate fit failure"); },
        [](const Model&, const Dataset& rows, const PredMap&) {
            return PredictionVector::numeric(std::vector<double>(rows.n_rows(), 0.0));
        },
        train_fold);
}

// Predicts the training mean of `col` everywhere.
inline NuisancePtr mean_nuisance(const std::string& id, const std::string& col, int train_fold = 1) {
    return create_nuisance(
        id,
        [col](const Dataset& train, const PredMap&) -> Model {
            const auto& y = train.column(col);
            double s = 0.0;
            for (double v : y) s += v;
            return s / static_cast<double>(y.size());
        },
        [](const Model& m, const Dataset& rows, const PredMap&) {
            return PredictionVector::numeric(
                std::vector<double>(rows.n_rows(), std::any_cast<double>(m)));
        },
        train_fold);
}

// ---------------------------------------------------------------------------
// Fold-label embedding for trace runs
// ---------------------------------------------------------------------------

// Deterministic splitter: row i -> fold i % K, independent of seed/rep.
inline FoldSplitPtr modulo_splitter() {
    return std::make_shared<const FoldSplitFn>(
        [](std::size_t n, int k, std::uint64_t, int) {
            FoldAssignment fa;
            fa.k = k;
            fa.labels.resize(n);
            for (std::size_t i = 0; i < n; ++i) fa.labels[i] = static_cast<int>(i % static_cast<std::size_t>(k));
            return fa;
        });
}

// Dataset whose "fold" column matches modulo_splitter's labels.
inline Dataset fold_labelled_data(std::size_t n, int k) {
    std::vector<double> fold(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        fold[i] = static_cast<double>(i % static_cast<std::size_t>(k));
        y[i] = static_cast<double>(i);
    }
    return Dataset::from_columns({{"fold", fold}, {"y", y}});
}

// ---------------------------------------------------------------------------
// Trace target: asserts the no-leakage invariant row by row
// ---------------------------------------------------------------------------

// Every prediction token reaching the target must not contain the row's own
// fold among its (upstream-inclusive) training folds. Returns the violation
// count for the panel and accumulates into *counter.
inline Target trace_target(std::vector<std::string> args, long* counter) {
    Target t;
    t.args = std::move(args);
    t.scalar = [counter](const Dataset&, const PredMap& nuis) -> double {
        long violations = 0;
        for (const auto& [name, pred] : nuis) {
            for (const auto& token : pred.tokens()) {
                const TraceToken parsed = parse_trace_token(token);
                if (parsed.train_folds.count(parsed.pred_fold)) ++violations;
            }
        }
        *counter += violations;
        return static_cast<double>(violations);
    };
    return t;
}

// ---------------------------------------------------------------------------
// Brute-force allocation oracle
// ---------------------------------------------------------------------------

// Exhaustive search: can `widths` be placed as cyclic contiguous windows,
// pairwise disjoint, all avoiding the eval window [0, eval_fold)? Independent
// of the consecutive-packing rule used by the implementation.
inline bool packable_exhaustive(int k, int eval_fold, const std::vector<int>& widths) {
    const Window eval{0, eval_fold};
    std::vector<int> starts(widths.size(), 0);
    const std::size_t m = widths.size();
    std::size_t combos = 1;
    for (std::size_t i = 0; i < m; ++i) combos *= static_cast<std::size_t>(k);
    for (std::size_t c = 0; c < combos; ++c) {
        std::size_t rest = c;
        for (std::size_t i = 0; i < m; ++i) {
            starts[i] = static_cast<int>(rest % static_cast<std::size_t>(k));
            rest /= static_cast<std::size_t>(k);
        }
        bool ok = true;
        for (std::size_t i = 0; i < m && ok; ++i) {
            const Window wi{starts[i], widths[i]};
            if (widths[i] > k || wi.intersects(eval, k)) ok = false;
            for (std::size_t j = 0; j < i && ok; ++j) {
                if (wi.intersects(Window{starts[j], widths[j]}, k)) ok = false;
            }
        }
        if (ok) return true;
    }
    return m == 0;
}

// ---------------------------------------------------------------------------
// Random method specs (property tests)
// ---------------------------------------------------------------------------

struct RandomSpecOptions {
    int max_k = 12;
    int max_width = 3;
    bool allow_predict = true;
};

// DAG shapes: 0 single, 1 two independent, 2 chain of 3, 3 triangle, 4 diamond.
inline MethodSpec random_method_spec(Rng& rng, const RandomSpecOptions& opts = {}) {
    const int shape = static_cast<int>(rng.next_below(5));
    auto width = [&rng, &opts]() { return 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(opts.max_width))); };

    std::vector<std::pair<std::string, NuisancePtr>> nuisances;
    std::vector<std::string> args;
    switch (shape) {
        case 0:
            nuisances = {{"a", constant_nuisance("a", 1.0, width())}};
            args = {"a"};
            break;
        case 1:
            nuisances = {{"a", constant_nuisance("a", 1.0, width())},
                         {"b", constant_nuisance("b", 2.0, width())}};
            args = {"a", "b"};
            break;
        case 2:
            nuisances = {{"a", constant_nuisance("a", 1.0, width(), {"b"})},
                         {"b", constant_nuisance("b", 2.0, width(), {"c"})},
                         {"c", constant_nuisance("c", 3.0, width())}};
            args = {"a"};
            break;
        case 3:
            nuisances = {{"a", constant_nuisance("a", 1.0, width(), {"b"})},
                         {"b", constant_nuisance("b", 2.0, width())}};
            args = {"a", "b"};
            break;
        default:
            nuisances = {{"a", constant_nuisance("a", 1.0, width(), {"b", "c"})},
                         {"b", constant_nuisance("b", 2.0, width(), {"d"})},
                         {"c", constant_nuisance("c", 3.0, width(), {"d"})},
                         {"d", constant_nuisance("d", 4.0, width())}};
            args = {"a"};
            break;
    }

    MethodSpec m;
    m.nuisances = std::move(nuisances);
    m.folds = 2 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(opts.max_k - 1)));
    m.repeats = 1 + static_cast<int>(rng.next_below(3));
    m.mode = (opts.allow_predict && rng.next_below(4) == 0) ? Mode::Predict : Mode::Estimate;
    m.eval_fold = m.mode == Mode::Predict ? static_cast<int>(rng.next_below(3))
                                          : 1 + static_cast<int>(rng.next_below(2));
    const int alloc = static_cast<int>(rng.next_below(3));
    m.allocation = alloc == 0 ? Allocation::Overlap
                   : alloc == 1 ? Allocation::Disjoint
                                : Allocation::Independence;

    Target t;
    t.args = args;
    t.scalar = [](const Dataset&, const PredMap& nuis) {
        double s = 0.0;
        for (const auto& [name, pred] : nuis) {
            for (double v : pred.num()) s += v;
        }
        return s;
    };
    t.vector_fn = [](const Dataset& rows, const PredMap& nuis) {
        std::vector<double> out(rows.n_rows(), 0.0);
        for (const auto& [name, pred] : nuis) {
            const auto& v = pred.num();
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
        }
        return PredictionVector::numeric(std::move(out));
    };
    m.target = std::move(t);
    m.aggregate_panels = mean_estimate;
    m.aggregate_repeats = median_estimate;
    m.aggregate_panels_pred = mean_predictor;
    m.aggregate_repeats_pred = median_predictor;
    return m;
}

} // namespace crossfit::testing
