#include "crossfit/recipes.hpp"

#include <cmath>
#include <stdexcept>

#include "crossfit/learners.hpp"
#include "crossfit/rng.hpp"

namespace crossfit {

Target plr_target(std::string y_col, std::string d_col) {
    Target t;
    t.args = {"nuis_g", "nuis_m"};
    t.scalar = [y_col, d_col](const Dataset& eval, const PredMap& nuis) {
        const auto& y = eval.column(y_col);
        const auto& d = eval.column(d_col);
        const auto& g_hat = nuis.at("nuis_g").num();
        const auto& m_hat = nuis.at("nuis_m").num();
        if (g_hat.size() != y.size() || m_hat.size() != y.size()) {
            throw std::runtime_error("plr target: prediction length mismatch");
        }
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double y_tilde = y[i] - g_hat[i];
            const double d_tilde = d[i] - m_hat[i];
            num += d_tilde * y_tilde;
            den += d_tilde * d_tilde;
        }
        if (den == 0.0) {
            throw std::runtime_error("plr target: residualized treatment is degenerate (sum d_tilde^2 = 0)");
        }
        return num / den;
    };
    return t;
}

Target mse_target(std::string y_col, std::string nuis_arg) {
    Target t;
    t.args = {nuis_arg};
    t.scalar = [y_col, nuis_arg](const Dataset& eval, const PredMap& nuis) {
        const auto& y = eval.column(y_col);
        const auto& y_hat = nuis.at(nuis_arg).num();
        if (y_hat.size() != y.size()) {
            throw std::runtime_error("mse target: prediction length mismatch");
        }
        if (y.empty()) throw std::runtime_error("mse target: no evaluation rows");
        double sum = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double r = y[i] - y_hat[i];
            sum += r * r;
        }
        return sum / static_cast<double>(y.size());
    };
    return t;
}

Target identity_pred_target(std::string nuis_arg) {
    Target t;
    t.args = {nuis_arg};
    t.vector_fn = [nuis_arg](const Dataset&, const PredMap& nuis) {
        return nuis.at(nuis_arg);
    };
    return t;
}

Target make_target(const std::string& name, const nlohmann::json& params) {
    if (name == "plr") {
        return plr_target(params.value("y", "y"), params.value("d", "d"));
    }
    if (name == "mse") {
        return mse_target(params.value("y", "y"), params.value("nuisance", "nuis_y"));
    }
    if (name == "identity") {
        return identity_pred_target(params.value("nuisance", "nuis_y"));
    }
    throw SpecError("unknown target '" + name + "' (known: plr, mse, identity)");
}

NuisancePtr ps_augmented_outcome_nuisance(std::string id, std::string y_col,
                                          std::vector<std::string> x_cols, std::string dep,
                                          double lambda, int train_fold) {
    LearnerFns fns = ridge_learner(std::move(y_col), std::move(x_cols), lambda, {dep});
    return create_nuisance(std::move(id), std::move(fns.fit), std::move(fns.predict),
                           train_fold, {std::move(dep)});
}

PLRParams default_plr_params() {
    PLRParams p;
    p.theta0 = 2.0;
    p.g_coefs = {1.0, 0.5, 0.0, 0.0, -1.0};
    p.m_coefs = {0.8, 0.0, -0.8, 0.0, 0.0};
    p.n = 2000;
    p.p = 5;
    p.noise_sd = 1.0;
    p.seed = 1;
    return p;
}

Dataset dgp_plr(const PLRParams& params) {
    if (params.p < 1) throw SpecError("dgp_plr: p must be >= 1");
    if (params.n < 10) throw SpecError("dgp_plr: n must be >= 10");
    if (params.g_coefs.size() != params.p || params.m_coefs.size() != params.p) {
        throw SpecError("dgp_plr: g_coefs and m_coefs must have length p = " + std::to_string(params.p));
    }

    Rng rng(params.seed);
    std::vector<std::vector<double>> x(params.p, std::vector<double>(params.n));
    std::vector<double> y(params.n), d(params.n);

    // Draw order per row: covariates, noise, treatment uniform.
    for (std::size_t i = 0; i < params.n; ++i) {
        double xg = 0.0, xm = 0.0;
        for (std::size_t j = 0; j < params.p; ++j) {
            const double v = rng.next_normal();
            x[j][i] = v;
            xg += v * params.g_coefs[j];
            xm += v * params.m_coefs[j];
        }
        const double u = params.noise_sd * rng.next_normal();
        const double propensity = 1.0 / (1.0 + std::exp(-xm));
        d[i] = rng.next_double() < propensity ? 1.0 : 0.0;
        y[i] = params.theta0 * d[i] + xg + u;
    }

    std::vector<std::pair<std::string, std::vector<double>>> cols;
    cols.emplace_back("y", std::move(y));
    cols.emplace_back("d", std::move(d));
    for (std::size_t j = 0; j < params.p; ++j) {
        cols.emplace_back("x" + std::to_string(j + 1), std::move(x[j]));
    }
    return Dataset::from_columns(std::move(cols));
}

PLRParams plr_params_from_json(const nlohmann::json& j) {
    PLRParams p = default_plr_params();
    if (j.contains("theta0")) p.theta0 = j.at("theta0").get<double>();
    if (j.contains("n")) p.n = j.at("n").get<std::size_t>();
    if (j.contains("p")) p.p = j.at("p").get<std::size_t>();
    if (j.contains("noise_sd")) p.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("g_coefs")) p.g_coefs = j.at("g_coefs").get<std::vector<double>>();
    if (j.contains("m_coefs")) p.m_coefs = j.at("m_coefs").get<std::vector<double>>();
    // Coefficient vectors follow p when only p was given.
    if (!j.contains("g_coefs") && p.g_coefs.size() != p.p) p.g_coefs.resize(p.p, 0.0);
    if (!j.contains("m_coefs") && p.m_coefs.size() != p.p) p.m_coefs.resize(p.p, 0.0);
    return p;
}

nlohmann::json plr_params_to_json(const PLRParams& p) {
    return nlohmann::json{{"theta0", p.theta0}, {"g_coefs", p.g_coefs}, {"m_coefs", p.m_coefs},
                          {"n", p.n},           {"p", p.p},             {"noise_sd", p.noise_sd},
                          {"seed", p.seed}};
}

} // namespace crossfit
