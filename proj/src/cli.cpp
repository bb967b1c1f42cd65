#include "crossfit/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "crossfit/config.hpp"
#include "crossfit/engine.hpp"
#include "crossfit/folds.hpp"
#include "crossfit/recipes.hpp"
#include "crossfit/rng.hpp"
#include "crossfit/serialize.hpp"

namespace crossfit::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitPartialFailure = 3;
constexpr int kExitIo = 4;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_folds(const Window& w, int k) {
    std::string out;
    for (int f : w.folds(k)) {
        if (!out.empty()) out += " ";
        out += std::to_string(f);
    }
    return out;
}

std::optional<ExperimentConfig> read_config(const std::string& path, std::ostream& out, int& code) {
    std::ifstream probe(path);
    if (!probe) {
        out << "error: cannot open config: " << path << "\n";
        code = kExitIo;
        return std::nullopt;
    }
    probe.close();
    try {
        return load_config(path);
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        code = kExitValidation;
        return std::nullopt;
    }
}

} // namespace

int cmd_validate(const std::string& config_path, std::ostream& out) {
    int code = kExitOk;
    auto cfg = read_config(config_path, out, code);
    if (!cfg) return code;

    nlohmann::json reports;
    bool all_ok = true;
    for (const auto& mc : cfg->methods) {
        try {
            const MethodSpec m = build_method(mc);
            const ValidationReport report = validate_method(m);
            reports[mc.name] = to_json(report);
            all_ok = all_ok && report.ok;
        } catch (const std::exception& e) {
            reports[mc.name] = {{"ok", false},
                                {"violations", {{{"check", "config"}, {"message", e.what()}}}}};
            all_ok = false;
        }
    }
    out << reports.dump(2) << "\n";
    return all_ok ? kExitOk : kExitValidation;
}

int cmd_schedule(const std::string& config_path, const std::string& method_name, int rep,
                 const std::string& format, std::ostream& out) {
    int code = kExitOk;
    auto cfg = read_config(config_path, out, code);
    if (!cfg) return code;

    const MethodConfig* mc = nullptr;
    for (const auto& candidate : cfg->methods) {
        if (candidate.name == method_name) mc = &candidate;
    }
    if (!mc) {
        out << "error: unknown method '" << method_name << "'\n";
        return kExitValidation;
    }
    if (format != "text" && format != "csv") {
        out << "error: unknown format '" << format << "' (expected text|csv)\n";
        return kExitValidation;
    }

    try {
        const MethodSpec m = build_method(*mc);
        const ValidationReport report = validate_method(m);
        if (!report.ok) {
            out << to_json(report).dump(2) << "\n";
            return kExitValidation;
        }
        if (rep < 0 || rep >= m.repeats) {
            out << "error: rep " << rep << " out of range [0, " << m.repeats << ")\n";
            return kExitValidation;
        }
        const InstancePlan plan = instance_set(m);

        if (format == "csv") {
            out << "panel,instance,path,train_folds,eval_folds\n";
        } else {
            out << "method " << mc->name << ": K=" << m.folds << " eval_fold=" << m.eval_fold
                << " allocation=" << to_string(m.allocation) << " rep=" << rep << "\n";
            out << std::left << std::setw(7) << "panel" << std::setw(18) << "instance"
                << std::setw(18) << "path" << std::setw(16) << "train_folds"
                << "eval_folds" << "\n";
        }
        for (int p = 0; p < m.folds; ++p) {
            const PanelAllocation alloc = allocate(m.allocation, plan, p, m.eval_fold, m.folds);
            for (std::size_t i = 0; i < plan.instances.size(); ++i) {
                const auto& inst = plan.instances[i];
                std::string path;
                for (std::size_t s = 0; s < inst.path.size(); ++s) {
                    if (s) path += ".";
                    path += inst.path[s];
                }
                const std::string train = join_folds(alloc.training[i], m.folds);
                const std::string eval = join_folds(alloc.eval_window, m.folds);
                if (format == "csv") {
                    out << p << "," << inst.node->id << "," << path << "," << train << "," << eval
                        << "\n";
                } else {
                    out << std::left << std::setw(7) << p << std::setw(18) << inst.node->id
                        << std::setw(18) << (path.empty() ? "-" : path) << std::setw(16) << train
                        << eval << "\n";
                }
            }
        }
        return kExitOk;
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

int cmd_run(const std::string& config_path, const std::string& output_override, std::ostream& out) {
    int code = kExitOk;
    auto cfg = read_config(config_path, out, code);
    if (!cfg) return code;

    std::vector<std::pair<std::string, MethodSpec>> methods;
    try {
        methods = build_methods(*cfg);
        for (auto& [name, m] : methods) m = create_method(std::move(m));
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    Dataset data;
    try {
        data = load_dataset(*cfg);
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return kExitIo;
    }

    std::vector<std::pair<std::string, RunResult>> results;
    try {
        results = crossfit_multi(data, methods, cfg->seed);
    } catch (const SpecError& e) {
        out << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    nlohmann::json payload;
    bool all_succeeded = true;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& [name, result] = results[i];
        nlohmann::json rj = to_json(result);
        // Predict mode: the cross-fitted predictor applied to the input data,
        // since the predictor itself is not serializable.
        if (methods[i].second.mode == Mode::Predict && result.predictor) {
            rj["predictions"] = (*result.predictor)(data).num();
        }
        payload[name] = rj;
        all_succeeded = all_succeeded && result.n_success > 0;
        out << name << ": "
            << (result.estimate ? format_double(*result.estimate)
                                : (result.predictor ? "<predictor>" : "NA"))
            << " (" << result.n_success << " ok, " << result.n_fail << " failed)\n";
    }

    const std::string path = !output_override.empty() ? output_override
                             : !cfg->output.empty()   ? cfg->output
                                                      : "crossfit_run.json";
    std::ofstream file(path);
    if (!file) {
        out << "error: cannot write " << path << "\n";
        return kExitIo;
    }
    file << payload.dump(2) << "\n";
    if (!file.good()) {
        out << "error: write failed: " << path << "\n";
        return kExitIo;
    }
    out << "wrote " << path << "\n";
    return all_succeeded ? kExitOk : kExitPartialFailure;
}

int cmd_simulate(const std::string& config_path, const std::string& output_override,
                 std::ostream& out) {
    int code = kExitOk;
    auto cfg = read_config(config_path, out, code);
    if (!cfg) return code;

    if (cfg->data.dgp.empty()) {
        out << "error: simulate requires a dgp data source\n";
        return kExitValidation;
    }
    if (cfg->monte_carlo_reps < 1) {
        out << "error: monte_carlo_reps must be >= 1\n";
        return kExitValidation;
    }

    std::vector<std::pair<std::string, MethodSpec>> methods;
    try {
        methods = build_methods(*cfg);
        for (auto& [name, m] : methods) m = create_method(std::move(m));
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    // Independent seed streams: one for data draws, one for fold splitting.
    PLRParams base_params = plr_params_from_json(cfg->data.dgp_params);
    const std::uint64_t data_stream = cfg->data.dgp_params.contains("seed")
                                          ? base_params.seed
                                          : mix_seed(cfg->seed, 0xDA7A);

    struct Row {
        int rep;
        std::string method;
        std::optional<double> estimate;
        int n_success;
        long fit_calls;
        long cache_hits;
    };
    std::vector<Row> rows;
    std::map<std::string, std::vector<double>> estimates_by_method;
    std::map<std::string, int> successes_by_method;

    try {
        for (int r = 0; r < cfg->monte_carlo_reps; ++r) {
            PLRParams params = base_params;
            params.seed = mix_seed(data_stream, static_cast<std::uint64_t>(r));
            const Dataset data = dgp_plr(params);
            const auto results =
                crossfit_multi(data, methods, mix_seed(cfg->seed, static_cast<std::uint64_t>(r)));
            for (const auto& [name, result] : results) {
                rows.push_back(Row{r, name, result.estimate, result.n_success, result.fit_calls,
                                   result.cache_hits});
                if (result.estimate) estimates_by_method[name].push_back(*result.estimate);
                successes_by_method[name] += result.n_success;
            }
        }
    } catch (const std::exception& e) {
        out << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    const std::string path = !output_override.empty() ? output_override
                             : !cfg->output.empty()   ? cfg->output
                                                      : "crossfit_sim.csv";
    std::ofstream file(path);
    if (!file) {
        out << "error: cannot write " << path << "\n";
        return kExitIo;
    }
    file << "replication,method,estimate,n_success,fit_calls,cache_hits\n";
    for (const auto& row : rows) {
        file << row.rep << "," << row.method << ","
             << (row.estimate ? format_double(*row.estimate) : "NA") << "," << row.n_success << ","
             << row.fit_calls << "," << row.cache_hits << "\n";
    }
    const std::optional<double> theta0 = config_theta0(*cfg);
    bool any_method_dead = false;
    for (const auto& [name, m] : methods) {
        const auto& xs = estimates_by_method[name];
        if (successes_by_method[name] == 0) any_method_dead = true;
        std::string mean_s = "NA", bias_s = "NA", std_s = "NA";
        if (!xs.empty()) {
            const double mean = mean_estimate(xs);
            mean_s = format_double(mean);
            if (theta0) bias_s = format_double(mean - *theta0);
            if (xs.size() > 1) {
                double ss = 0.0;
                for (double x : xs) ss += (x - mean) * (x - mean);
                std_s = format_double(std::sqrt(ss / static_cast<double>(xs.size() - 1)));
            }
        }
        file << "# method=" << name << " mean=" << mean_s << " bias=" << bias_s
             << " mc_std=" << std_s << "\n";
    }
    if (!file.good()) {
        out << "error: write failed: " << path << "\n";
        return kExitIo;
    }
    out << "wrote " << path << " (" << rows.size() << " rows)\n";
    return any_method_dead ? kExitPartialFailure : kExitOk;
}

} // namespace crossfit::cli
