#include "crossfit/learners.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace crossfit {

// ---------------------------------------------------------------------------
// Dense symmetric solve
// ---------------------------------------------------------------------------

namespace {

// Cholesky solve of A x = b for symmetric positive definite A (row-major).
// Returns false when a pivot collapses, i.e. A is (numerically) singular.
bool cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n,
                    std::vector<double>& out) {
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a[i * n + i]));
    const double pivot_tol = std::max(max_diag, 1.0) * 1e-12;

    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (!(d > pivot_tol)) return false;
        const double l = std::sqrt(d);
        a[j * n + j] = l;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) v -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = v / l;
        }
    }
    // forward then backward substitution
    for (std::size_t i = 0; i < n; ++i) {
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= a[i * n + k] * b[k];
        b[i] = v / a[i * n + i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double v = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) v -= a[k * n + ii] * b[k];
        b[ii] = v / a[ii * n + ii];
    }
    out = std::move(b);
    return true;
}

struct DesignView {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<const std::vector<double>*> cols;
};

DesignView gather_design(const Dataset& data, const std::vector<std::string>& x_cols) {
    DesignView d;
    d.n = data.n_rows();
    d.p = x_cols.size();
    d.cols.reserve(d.p);
    for (const auto& name : x_cols) d.cols.push_back(&data.column(name));
    return d;
}

} // namespace

// ---------------------------------------------------------------------------
// Linear / ridge regression
// ---------------------------------------------------------------------------

std::vector<double> LinearModel::predict(const Dataset& data) const {
    std::vector<double> out(data.n_rows(), intercept);
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
        const auto& col = data.column(feature_names[j]);
        const double w = coefficients[j];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * col[i];
    }
    return out;
}

namespace {

// Shared core: centered normal equations with penalty lambda on the slopes.
// The intercept is recovered as mean(y) - beta . mean(x), so it is never
// penalized. `jitter_on_singular` governs the rank-deficiency fallback.
LinearModel linear_solve(const Dataset& data, const std::string& y_col,
                         const std::vector<std::string>& x_cols, double lambda,
                         bool jitter_on_singular) {
    const auto& y = data.column(y_col);
    const std::size_t n = data.n_rows();
    if (n == 0) throw std::runtime_error("linear fit on zero rows");
    const DesignView X = gather_design(data, x_cols);
    const std::size_t p = X.p;

    LinearModel model;
    model.feature_names = x_cols;

    double y_mean = 0.0;
    for (double v : y) y_mean += v;
    y_mean /= static_cast<double>(n);

    if (p == 0) {
        model.intercept = y_mean;
        return model;
    }

    std::vector<double> x_mean(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        const auto& col = *X.cols[j];
        for (double v : col) x_mean[j] += v;
        x_mean[j] /= static_cast<double>(n);
    }

    std::vector<double> xtx(p * p, 0.0);
    std::vector<double> xty(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        const auto& cj = *X.cols[j];
        for (std::size_t k = j; k < p; ++k) {
            const auto& ck = *X.cols[k];
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += (cj[i] - x_mean[j]) * (ck[i] - x_mean[k]);
            xtx[j * p + k] = s;
            xtx[k * p + j] = s;
        }
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (cj[i] - x_mean[j]) * (y[i] - y_mean);
        xty[j] = s;
    }
    if (lambda > 0.0) {
        for (std::size_t j = 0; j < p; ++j) xtx[j * p + j] += lambda;
    }

    std::vector<double> beta;
    if (!cholesky_solve(xtx, xty, p, beta)) {
        if (!jitter_on_singular) throw std::runtime_error("ridge fit: singular normal equations");
        double max_diag = 0.0;
        for (std::size_t j = 0; j < p; ++j) max_diag = std::max(max_diag, xtx[j * p + j]);
        const double jitter = 1e-8 * std::max(max_diag, 1.0);
        for (std::size_t j = 0; j < p; ++j) xtx[j * p + j] += jitter;
        if (!cholesky_solve(xtx, xty, p, beta)) {
            throw std::runtime_error("linear fit: normal equations singular even with jitter");
        }
        model.rank_deficient = true;
    }

    model.coefficients = std::move(beta);
    model.intercept = y_mean;
    for (std::size_t j = 0; j < p; ++j) model.intercept -= model.coefficients[j] * x_mean[j];
    return model;
}

} // namespace

LinearModel ols_fit(const Dataset& data, const std::string& y_col,
                    const std::vector<std::string>& x_cols) {
    return linear_solve(data, y_col, x_cols, 0.0, true);
}

LinearModel ridge_fit(const Dataset& data, const std::string& y_col,
                      const std::vector<std::string>& x_cols, double lambda) {
    if (lambda < 0.0) throw std::runtime_error("ridge_fit: lambda must be >= 0");
    return linear_solve(data, y_col, x_cols, lambda, lambda == 0.0);
}

// ---------------------------------------------------------------------------
// Logistic regression (IRLS)
// ---------------------------------------------------------------------------

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

} // namespace

std::vector<double> LogisticModel::predict(const Dataset& data) const {
    std::vector<double> out(data.n_rows(), intercept);
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
        const auto& col = data.column(feature_names[j]);
        const double w = coefficients[j];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * col[i];
    }
    for (double& v : out) v = sigmoid(v);
    return out;
}

LogisticModel logistic_fit(const Dataset& data, const std::string& y_col,
                           const std::vector<std::string>& x_cols,
                           const LogisticOptions& opts) {
    const auto& y = data.column(y_col);
    const std::size_t n = data.n_rows();
    if (n == 0) throw std::runtime_error("logistic fit on zero rows");
    for (double v : y) {
        if (v != 0.0 && v != 1.0) {
            throw std::runtime_error("logistic fit: response '" + y_col + "' must be 0/1, found " +
                                     std::to_string(v));
        }
    }
    const DesignView X = gather_design(data, x_cols);
    const std::size_t p = X.p;
    const std::size_t q = p + 1; // parameters including intercept

    // beta[0] is the intercept; ridge_eps penalizes every parameter, which
    // keeps separable problems finite.
    std::vector<double> beta(q, 0.0);
    std::vector<double> eta(n), mu(n);

    LogisticModel model;
    model.feature_names = x_cols;

    auto feature = [&](std::size_t i, std::size_t j) -> double {
        return j == 0 ? 1.0 : (*X.cols[j - 1])[i];
    };

    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double z = beta[0];
            for (std::size_t j = 0; j < p; ++j) z += beta[j + 1] * (*X.cols[j])[i];
            eta[i] = z;
            mu[i] = sigmoid(z);
        }
        // Newton step: (X'WX + eps I) d = X'(y - mu) - eps beta
        std::vector<double> h(q * q, 0.0);
        std::vector<double> g(q, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = mu[i] * (1.0 - mu[i]);
            const double r = y[i] - mu[i];
            for (std::size_t a = 0; a < q; ++a) {
                const double fa = feature(i, a);
                g[a] += fa * r;
                for (std::size_t b = a; b < q; ++b) {
                    h[a * q + b] += w * fa * feature(i, b);
                }
            }
        }
        for (std::size_t a = 0; a < q; ++a) {
            for (std::size_t b = 0; b < a; ++b) h[a * q + b] = h[b * q + a];
            h[a * q + a] += opts.ridge_eps;
            g[a] -= opts.ridge_eps * beta[a];
        }
        std::vector<double> step;
        if (!cholesky_solve(std::move(h), std::move(g), q, step)) {
            throw std::runtime_error("logistic fit: singular IRLS system");
        }
        double max_step = 0.0;
        for (std::size_t a = 0; a < q; ++a) {
            beta[a] += step[a];
            max_step = std::max(max_step, std::abs(step[a]));
        }
        model.iterations = iter;
        if (max_step < opts.tol) {
            model.converged = true;
            break;
        }
    }

    model.intercept = beta[0];
    model.coefficients.assign(beta.begin() + 1, beta.end());
    return model;
}

// ---------------------------------------------------------------------------
// Learner wrappers
// ---------------------------------------------------------------------------

namespace {

// Appends dependency predictions as extra columns; predictions must be numeric.
Dataset augment(const Dataset& data, const PredMap& deps,
                const std::vector<std::string>& dep_features) {
    Dataset out = data;
    for (const auto& name : dep_features) {
        auto it = deps.find(name);
        if (it == deps.end()) {
            throw std::runtime_error("learner expects dependency '" + name + "' which was not supplied");
        }
        out = out.with_column(name, it->second.num());
    }
    return out;
}

std::vector<std::string> full_features(std::vector<std::string> x_cols,
                                       const std::vector<std::string>& dep_features) {
    for (const auto& d : dep_features) x_cols.push_back(d);
    return x_cols;
}

} // namespace

LearnerFns ols_learner(std::string y_col, std::vector<std::string> x_cols,
                       std::vector<std::string> dep_features) {
    return ridge_learner(std::move(y_col), std::move(x_cols), 0.0, std::move(dep_features));
}

LearnerFns ridge_learner(std::string y_col, std::vector<std::string> x_cols, double lambda,
                         std::vector<std::string> dep_features) {
    auto features = full_features(x_cols, dep_features);
    LearnerFns fns;
    fns.fit = [y_col, features, lambda, dep_features](const Dataset& train, const PredMap& deps) -> Model {
        const Dataset full = augment(train, deps, dep_features);
        return lambda == 0.0 ? ols_fit(full, y_col, features) : ridge_fit(full, y_col, features, lambda);
    };
    fns.predict = [dep_features](const Model& model, const Dataset& rows, const PredMap& deps) {
        const Dataset full = augment(rows, deps, dep_features);
        return PredictionVector::numeric(std::any_cast<const LinearModel&>(model).predict(full));
    };
    return fns;
}

LearnerFns logistic_learner(std::string y_col, std::vector<std::string> x_cols,
                            LogisticOptions opts, std::vector<std::string> dep_features) {
    auto features = full_features(x_cols, dep_features);
    LearnerFns fns;
    fns.fit = [y_col, features, opts, dep_features](const Dataset& train, const PredMap& deps) -> Model {
        const Dataset full = augment(train, deps, dep_features);
        return logistic_fit(full, y_col, features, opts);
    };
    fns.predict = [dep_features](const Model& model, const Dataset& rows, const PredMap& deps) {
        const Dataset full = augment(rows, deps, dep_features);
        return PredictionVector::numeric(std::any_cast<const LogisticModel&>(model).predict(full));
    };
    return fns;
}

LearnerFns constant_learner(double c) {
    LearnerFns fns;
    fns.fit = [c](const Dataset&, const PredMap&) -> Model { return c; };
    fns.predict = [](const Model& model, const Dataset& rows, const PredMap&) {
        return PredictionVector::numeric(
            std::vector<double>(rows.n_rows(), std::any_cast<double>(model)));
    };
    return fns;
}

// ---------------------------------------------------------------------------
// Trace learner
// ---------------------------------------------------------------------------

std::string format_trace_fit(const std::set<int>& train_folds) {
    std::string out = "T";
    bool first = true;
    for (int f : train_folds) {
        if (!first) out += ",";
        out += std::to_string(f);
        first = false;
    }
    return out;
}

TraceToken parse_trace_token(const std::string& token) {
    if (token.empty() || token[0] != 'T') {
        throw std::runtime_error("malformed trace token '" + token + "'");
    }
    TraceToken t;
    const auto bar = token.find('|');
    const std::string train = token.substr(1, bar == std::string::npos ? std::string::npos : bar - 1);
    std::stringstream ss(train);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        if (!piece.empty()) t.train_folds.insert(std::stoi(piece));
    }
    if (bar != std::string::npos) {
        if (bar + 1 >= token.size() || token[bar + 1] != 'P') {
            throw std::runtime_error("malformed trace token '" + token + "'");
        }
        t.pred_fold = std::stoi(token.substr(bar + 2));
    }
    return t;
}

LearnerFns trace_learner(std::string fold_col) {
    LearnerFns fns;
    fns.fit = [fold_col](const Dataset& train, const PredMap& deps) -> Model {
        std::set<int> folds;
        for (double v : train.column(fold_col)) folds.insert(static_cast<int>(v));
        for (const auto& [name, pred] : deps) {
            for (const auto& token : pred.tokens()) {
                const TraceToken t = parse_trace_token(token);
                folds.insert(t.train_folds.begin(), t.train_folds.end());
            }
        }
        return format_trace_fit(folds);
    };
    fns.predict = [fold_col](const Model& model, const Dataset& rows, const PredMap& deps) {
        const auto& base = std::any_cast<const std::string&>(model);
        std::set<int> folds = parse_trace_token(base).train_folds;
        const auto& labels = rows.column(fold_col);
        std::vector<std::string> out;
        out.reserve(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            std::set<int> row_folds = folds;
            for (const auto& [name, pred] : deps) {
                const TraceToken t = parse_trace_token(pred.tokens()[i]);
                row_folds.insert(t.train_folds.begin(), t.train_folds.end());
            }
            out.push_back(format_trace_fit(row_folds) + "|P" +
                          std::to_string(static_cast<int>(labels[i])));
        }
        return PredictionVector::text(std::move(out));
    };
    return fns;
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> string_list(const nlohmann::json& params, const std::string& key) {
    std::vector<std::string> out;
    if (!params.contains(key)) return out;
    for (const auto& v : params.at(key)) out.push_back(v.get<std::string>());
    return out;
}

} // namespace

LearnerFns make_learner(const std::string& name, const nlohmann::json& params) {
    if (name == "ols") {
        return ols_learner(params.at("y").get<std::string>(), string_list(params, "x"),
                           string_list(params, "dep_features"));
    }
    if (name == "ridge") {
        return ridge_learner(params.at("y").get<std::string>(), string_list(params, "x"),
                             params.at("lambda").get<double>(), string_list(params, "dep_features"));
    }
    if (name == "logistic") {
        LogisticOptions opts;
        if (params.contains("max_iter")) opts.max_iter = params.at("max_iter").get<int>();
        if (params.contains("tol")) opts.tol = params.at("tol").get<double>();
        if (params.contains("ridge_eps")) opts.ridge_eps = params.at("ridge_eps").get<double>();
        return logistic_learner(params.at("y").get<std::string>(), string_list(params, "x"), opts,
                                string_list(params, "dep_features"));
    }
    if (name == "constant") {
        return constant_learner(params.at("value").get<double>());
    }
    if (name == "trace") {
        return trace_learner(params.value("fold_col", "fold"));
    }
    throw SpecError("unknown learner '" + name + "' (known: ols, ridge, logistic, constant, trace)");
}

} // namespace crossfit
