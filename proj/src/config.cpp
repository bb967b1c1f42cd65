#include "crossfit/config.hpp"

#include <cstdlib>
#include <fstream>

#include "crossfit/learners.hpp"
#include "crossfit/recipes.hpp"
#include "crossfit/rng.hpp"

namespace crossfit {

namespace {

NuisanceConfig parse_nuisance(const nlohmann::json& j) {
    NuisanceConfig nc;
    nc.name = j.at("name").get<std::string>();
    nc.learner = j.at("learner").get<std::string>();
    if (j.contains("params")) nc.params = j.at("params");
    nc.train_fold = j.value("train_fold", 1);
    if (j.contains("deps")) nc.deps = j.at("deps").get<std::vector<std::string>>();
    return nc;
}

MethodConfig parse_method(const nlohmann::json& j) {
    MethodConfig mc;
    mc.name = j.at("name").get<std::string>();
    mc.target = j.at("target").get<std::string>();
    if (j.contains("target_params")) mc.target_params = j.at("target_params");
    mc.mode = j.value("mode", std::string("estimate"));
    mc.k = j.at("K").get<int>();
    mc.repeats = j.value("repeats", 1);
    mc.eval_fold = j.value("eval_fold", mc.mode == "predict" ? 0 : 1);
    mc.allocation = j.value("allocation", std::string("overlap"));
    mc.aggregate_panels = j.value("aggregate_panels", std::string("mean"));
    mc.aggregate_repeats = j.value("aggregate_repeats", std::string("median"));
    if (j.contains("max_fail") && !j.at("max_fail").is_null()) {
        mc.max_fail = j.at("max_fail").get<int>();
    }
    for (const auto& nj : j.at("nuisances")) mc.nuisances.push_back(parse_nuisance(nj));
    return mc;
}

} // namespace

ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    const auto& data = j.at("data");
    if (data.contains("csv") == data.contains("dgp")) {
        throw SpecError("config: data must specify exactly one of 'csv' or 'dgp'");
    }
    if (data.contains("csv")) cfg.data.csv = data.at("csv").get<std::string>();
    if (data.contains("dgp")) {
        cfg.data.dgp = data.at("dgp").get<std::string>();
        if (data.contains("params")) cfg.data.dgp_params = data.at("params");
    }
    if (!j.contains("methods") || j.at("methods").empty()) {
        throw SpecError("config: at least one method required");
    }
    for (const auto& mj : j.at("methods")) cfg.methods.push_back(parse_method(mj));
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.monte_carlo_reps = j.value("monte_carlo_reps", 1);
    cfg.output = j.value("output", std::string());
    return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
    nlohmann::json data;
    if (!cfg.data.csv.empty()) {
        data["csv"] = cfg.data.csv;
    } else {
        data["dgp"] = cfg.data.dgp;
        data["params"] = cfg.data.dgp_params;
    }
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& mc : cfg.methods) {
        nlohmann::json nuisances = nlohmann::json::array();
        for (const auto& nc : mc.nuisances) {
            nuisances.push_back({{"name", nc.name},
                                 {"learner", nc.learner},
                                 {"params", nc.params},
                                 {"train_fold", nc.train_fold},
                                 {"deps", nc.deps}});
        }
        nlohmann::json mj{{"name", mc.name},
                          {"target", mc.target},
                          {"target_params", mc.target_params},
                          {"mode", mc.mode},
                          {"K", mc.k},
                          {"repeats", mc.repeats},
                          {"eval_fold", mc.eval_fold},
                          {"allocation", mc.allocation},
                          {"aggregate_panels", mc.aggregate_panels},
                          {"aggregate_repeats", mc.aggregate_repeats},
                          {"nuisances", nuisances}};
        if (mc.max_fail) mj["max_fail"] = *mc.max_fail;
        methods.push_back(mj);
    }
    return nlohmann::json{{"data", data},
                          {"methods", methods},
                          {"seed", cfg.seed},
                          {"monte_carlo_reps", cfg.monte_carlo_reps},
                          {"output", cfg.output}};
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json j;
    in >> j;
    if (!j.contains("seed")) {
        if (const char* env = std::getenv("CROSSFIT_SEED")) {
            j["seed"] = static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
        }
    }
    return parse_config(j);
}

namespace {

ScalarAggregator scalar_aggregator(const std::string& name) {
    if (name == "mean") return mean_estimate;
    if (name == "median") return median_estimate;
    throw SpecError("unknown aggregator '" + name + "' (known: mean, median)");
}

PredictorAggregator predictor_aggregator(const std::string& name) {
    if (name == "mean") return mean_predictor;
    if (name == "median") return median_predictor;
    throw SpecError("unknown aggregator '" + name + "' (known: mean, median)");
}

} // namespace

MethodSpec build_method(const MethodConfig& mc) {
    MethodSpec m;
    m.target = make_target(mc.target, mc.target_params);
    for (const auto& nc : mc.nuisances) {
        LearnerFns fns = make_learner(nc.learner, nc.params);
        auto spec = std::make_shared<NuisanceSpec>();
        spec->id = nc.name;
        spec->fit = std::move(fns.fit);
        spec->predict = std::move(fns.predict);
        spec->train_fold = nc.train_fold;
        spec->deps = nc.deps;
        m.nuisances.emplace_back(nc.name, std::move(spec));
    }
    m.folds = mc.k;
    m.repeats = mc.repeats;
    m.eval_fold = mc.eval_fold;
    m.mode = mode_from_string(mc.mode);
    m.allocation = allocation_from_string(mc.allocation);
    if (m.mode == Mode::Estimate) {
        m.aggregate_panels = scalar_aggregator(mc.aggregate_panels);
        m.aggregate_repeats = scalar_aggregator(mc.aggregate_repeats);
    } else {
        m.aggregate_panels_pred = predictor_aggregator(mc.aggregate_panels);
        m.aggregate_repeats_pred = predictor_aggregator(mc.aggregate_repeats);
    }
    m.max_fail = mc.max_fail;
    return m;
}

std::vector<std::pair<std::string, MethodSpec>> build_methods(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, MethodSpec>> out;
    out.reserve(cfg.methods.size());
    for (const auto& mc : cfg.methods) {
        out.emplace_back(mc.name, build_method(mc));
    }
    return out;
}

Dataset load_dataset(const ExperimentConfig& cfg) {
    if (!cfg.data.csv.empty()) return read_csv(cfg.data.csv, true);
    if (cfg.data.dgp == "plr") {
        PLRParams params = plr_params_from_json(cfg.data.dgp_params);
        if (!cfg.data.dgp_params.contains("seed")) {
            params.seed = mix_seed(cfg.seed, 0xDA7A);
        }
        return dgp_plr(params);
    }
    throw SpecError("unknown dgp '" + cfg.data.dgp + "' (known: plr)");
}

std::optional<double> config_theta0(const ExperimentConfig& cfg) {
    if (cfg.data.dgp == "plr") {
        return plr_params_from_json(cfg.data.dgp_params).theta0;
    }
    return std::nullopt;
}

} // namespace crossfit
