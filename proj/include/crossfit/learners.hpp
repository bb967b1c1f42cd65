#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossfit/spec.hpp"
#include "crossfit/tabular.hpp"

namespace crossfit {

// ---------------------------------------------------------------------------
// Linear models
// ---------------------------------------------------------------------------

struct LinearModel {
    std::vector<double> coefficients; // parallel to feature_names
    double intercept = 0.0;
    std::vector<std::string> feature_names;
    bool rank_deficient = false; // ridge jitter was applied

    std::vector<double> predict(const Dataset& data) const;
};

struct LogisticModel {
    std::vector<double> coefficients;
    double intercept = 0.0;
    std::vector<std::string> feature_names;
    bool converged = false;
    int iterations = 0;

    // P(y = 1 | x), strictly inside (0, 1).
    std::vector<double> predict(const Dataset& data) const;
};

struct LogisticOptions {
    int max_iter = 50;
    double tol = 1e-8;
    double ridge_eps = 1e-6; // fixed L2 on all parameters, keeps IRLS finite
};

// Least squares via normal equations; on rank deficiency retries with a
// 1e-8 ridge jitter and flags the model.
LinearModel ols_fit(const Dataset& data, const std::string& y_col,
                    const std::vector<std::string>& x_cols);

// Minimizes ||y - Xb - a||^2 + lambda ||b||^2 with the intercept unpenalized.
LinearModel ridge_fit(const Dataset& data, const std::string& y_col,
                      const std::vector<std::string>& x_cols, double lambda);

// IRLS, beta starting at zero. Requires y in {0, 1}.
LogisticModel logistic_fit(const Dataset& data, const std::string& y_col,
                           const std::vector<std::string>& x_cols,
                           const LogisticOptions& opts = {});

// ---------------------------------------------------------------------------
// Nuisance-ready learners
// ---------------------------------------------------------------------------

/// fit/predict pair conforming to the NuisanceSpec contract.
struct LearnerFns {
    FitFn fit;
    PredictFn predict;
};

// dep_features lists dependency names whose predictions are appended to the
// regressor set; the matching names must appear in the nuisance's deps.
LearnerFns ols_learner(std::string y_col, std::vector<std::string> x_cols,
                       std::vector<std::string> dep_features = {});
LearnerFns ridge_learner(std::string y_col, std::vector<std::string> x_cols, double lambda,
                         std::vector<std::string> dep_features = {});
LearnerFns logistic_learner(std::string y_col, std::vector<std::string> x_cols,
                            LogisticOptions opts = {}, std::vector<std::string> dep_features = {});

// Ignores the data entirely; predicts c for every row.
LearnerFns constant_learner(double c);

// ---------------------------------------------------------------------------
// Trace learner
// ---------------------------------------------------------------------------

// Structured trace tokens: fit returns "T<sorted training folds>", predict
// returns "T<...>|P<row fold>" per row. Dependency traces are folded into the
// fit token so upstream training folds stay visible downstream. The dataset
// must carry its fold labels in `fold_col`, matching the splitter in use.
LearnerFns trace_learner(std::string fold_col = "fold");

struct TraceToken {
    std::set<int> train_folds;
    int pred_fold = -1;
};

TraceToken parse_trace_token(const std::string& token);
std::string format_trace_fit(const std::set<int>& train_folds);

// ---------------------------------------------------------------------------
// Registry (CLI configs reference learners by name)
// ---------------------------------------------------------------------------

// Names: ols, ridge, logistic, constant, trace.
LearnerFns make_learner(const std::string& name, const nlohmann::json& params);

} // namespace crossfit
