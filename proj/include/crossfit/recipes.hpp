#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossfit/spec.hpp"
#include "crossfit/tabular.hpp"

namespace crossfit {

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

// Partialling-out estimator over the evaluation rows:
//   theta = sum(d_tilde * y_tilde) / sum(d_tilde^2)
// with y_tilde = y - nuis_g and d_tilde = d - nuis_m. Throws when the
// residualized treatment is degenerate (sum d_tilde^2 = 0).
Target plr_target(std::string y_col = "y", std::string d_col = "d");

// mean((y - nuis_y)^2) over the evaluation rows.
Target mse_target(std::string y_col = "y", std::string nuis_arg = "nuis_y");

// Predict-mode pass-through of one named nuisance (cross-fitted regression /
// propensity predictors).
Target identity_pred_target(std::string nuis_arg);

// Registry for CLI configs: plr | mse | identity.
Target make_target(const std::string& name, const nlohmann::json& params);

// ---------------------------------------------------------------------------
// Nuisance-of-nuisance recipe
// ---------------------------------------------------------------------------

// Outcome regression whose feature set is x_cols plus the propensity
// prediction supplied by dependency `dep`; induces the edge dep -> id.
NuisancePtr ps_augmented_outcome_nuisance(std::string id, std::string y_col,
                                          std::vector<std::string> x_cols,
                                          std::string dep = "nuis_m", double lambda = 0.0,
                                          int train_fold = 1);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Partially linear DGP:
///   X ~ N(0, I_p), D ~ Bernoulli(sigmoid(X m_coefs)),
///   Y = theta0 D + X g_coefs + noise_sd * N(0, 1).
struct PLRParams {
    double theta0 = 2.0;
    std::vector<double> g_coefs;
    std::vector<double> m_coefs;
    std::size_t n = 2000;
    std::size_t p = 5;
    double noise_sd = 1.0;
    std::uint64_t seed = 1;
};

// Fixed reference parameterization used by the simulation defaults.
PLRParams default_plr_params();

// Columns: y, d, x1..xp. Deterministic given params.seed.
Dataset dgp_plr(const PLRParams& params);

PLRParams plr_params_from_json(const nlohmann::json& j);
nlohmann::json plr_params_to_json(const PLRParams& p);

} // namespace crossfit
