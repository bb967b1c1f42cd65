#pragma once

#include <any>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "crossfit/tabular.hpp"

namespace crossfit {

/// Specification error: invalid nuisance graphs, fold geometry, config.
/// Thrown eagerly at construction/validation; never swallowed by the engine.
struct SpecError : std::runtime_error {
    explicit SpecError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Prediction vectors
// ---------------------------------------------------------------------------

/// Per-row predictions, aligned 1:1 with the rows of the dataset predicted
/// on. Numeric in normal use; opaque textual tokens are permitted so trace
/// learners can flow fold provenance through the engine.
class PredictionVector {
public:
    PredictionVector() : values_(std::vector<double>{}) {}

    static PredictionVector numeric(std::vector<double> v) {
        PredictionVector p;
        p.values_ = std::move(v);
        return p;
    }
    static PredictionVector text(std::vector<std::string> v) {
        PredictionVector p;
        p.values_ = std::move(v);
        return p;
    }

    bool is_text() const { return std::holds_alternative<std::vector<std::string>>(values_); }

    std::size_t size() const {
        return is_text() ? std::get<std::vector<std::string>>(values_).size()
                         : std::get<std::vector<double>>(values_).size();
    }

    const std::vector<double>& num() const& {
        if (is_text()) throw std::runtime_error("PredictionVector: textual, not numeric");
        return std::get<std::vector<double>>(values_);
    }
    std::vector<double> num() && {
        if (is_text()) throw std::runtime_error("PredictionVector: textual, not numeric");
        return std::get<std::vector<double>>(std::move(values_));
    }

    const std::vector<std::string>& tokens() const& {
        if (!is_text()) throw std::runtime_error("PredictionVector: numeric, not textual");
        return std::get<std::vector<std::string>>(values_);
    }
    std::vector<std::string> tokens() && {
        if (!is_text()) throw std::runtime_error("PredictionVector: numeric, not textual");
        return std::get<std::vector<std::string>>(std::move(values_));
    }

private:
    std::variant<std::vector<double>, std::vector<std::string>> values_;
};

/// Named dependency / nuisance predictions, keyed by argument name.
using PredMap = std::map<std::string, PredictionVector>;

/// Opaque fitted model object; whatever fit() returns, predict() consumes.
using Model = std::any;
using ModelPtr = std::shared_ptr<const Model>;

using FitFn = std::function<Model(const Dataset& train, const PredMap& deps)>;
using PredictFn = std::function<PredictionVector(const Model& model, const Dataset& rows, const PredMap& deps)>;

/// A cross-fitted predictor: applies to any dataset with the required columns.
using Predictor = std::function<PredictionVector(const Dataset&)>;

// ---------------------------------------------------------------------------
// Nuisance specifications
// ---------------------------------------------------------------------------

/// One node of the nuisance graph. fit/predict must be deterministic given
/// identical inputs; the cache relies on it.
struct NuisanceSpec {
    std::string id;
    FitFn fit;
    PredictFn predict;
    int train_fold = 1;             // contiguous folds used for training
    std::vector<std::string> deps;  // dependency names, resolved via the method's nuisance map
};

using NuisancePtr = std::shared_ptr<const NuisanceSpec>;

NuisancePtr create_nuisance(std::string id, FitFn fit, PredictFn predict,
                            int train_fold = 1, std::vector<std::string> deps = {});

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

/// Target functional with its declared nuisance argument names. `scalar` is
/// used in estimate mode, `vector_fn` in predict mode; only the one matching
/// the method's mode needs to be set.
struct Target {
    std::vector<std::string> args;
    std::function<double(const Dataset& eval, const PredMap& nuisances)> scalar;
    std::function<PredictionVector(const Dataset& rows, const PredMap& nuisances)> vector_fn;
};

// ---------------------------------------------------------------------------
// Aggregators
// ---------------------------------------------------------------------------

using ScalarAggregator = std::function<double(const std::vector<double>&)>;
using PredictorAggregator = std::function<Predictor(const std::vector<Predictor>&)>;

double mean_estimate(const std::vector<double>& xs);
// Even-length median is the midpoint of the two middle order statistics.
double median_estimate(const std::vector<double>& xs);

// Pointwise mean/median of the component predictors' outputs.
Predictor mean_predictor(const std::vector<Predictor>& ps);
Predictor median_predictor(const std::vector<Predictor>& ps);

// ---------------------------------------------------------------------------
// Method specifications
// ---------------------------------------------------------------------------

enum class Mode { Estimate, Predict };
enum class Allocation { Overlap, Disjoint, Independence };

std::string to_string(Mode m);
std::string to_string(Allocation a);
Mode mode_from_string(const std::string& s);
Allocation allocation_from_string(const std::string& s);

/// Deterministic fold splitter: (n, K, seed, rep_index) -> labels.
struct FoldAssignment {
    std::vector<int> labels; // per-row fold index in [0, K)
    int k = 0;
};
using FoldSplitFn = std::function<FoldAssignment(std::size_t n, int k, std::uint64_t seed, int rep_index)>;
using FoldSplitPtr = std::shared_ptr<const FoldSplitFn>;

/// Target functional + nuisance map + fold geometry + aggregation + failure
/// policy. Construct through create_method, which validates the whole spec.
struct MethodSpec {
    Target target;
    std::vector<std::pair<std::string, NuisancePtr>> nuisances; // name -> node; aliasing allowed
    int folds = 0;     // K
    int repeats = 1;
    int eval_fold = 1; // evaluation window width; 0 only in predict mode
    Mode mode = Mode::Estimate;
    Allocation allocation = Allocation::Overlap;
    ScalarAggregator aggregate_panels;        // estimate mode
    ScalarAggregator aggregate_repeats;       // estimate mode
    PredictorAggregator aggregate_panels_pred;  // predict mode
    PredictorAggregator aggregate_repeats_pred; // predict mode
    std::optional<int> max_fail;              // failed-repetition budget; unset = unlimited
    FoldSplitPtr fold_split;                  // null = built-in splitter

    const NuisancePtr* find_nuisance(const std::string& name) const;
};

/// Validates and returns the spec; throws SpecError listing every violation.
MethodSpec create_method(MethodSpec m);

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Violation {
    std::string check;   // argument_coverage | cycle | target_consistency | fold_constraints | feasibility
    std::string message;
};

struct ValidationReport {
    bool ok = true;
    std::vector<Violation> violations;
};

// Re-runnable standalone (CLI `validate`); create_method calls it too.
ValidationReport validate_method(const MethodSpec& m);

} // namespace crossfit
