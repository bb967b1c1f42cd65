#include "crossfit/folds.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "crossfit/rng.hpp"

namespace crossfit {

namespace {

const NuisancePtr& resolve(const std::vector<std::pair<std::string, NuisancePtr>>& nuisances,
                           const std::string& name) {
    for (const auto& [n, spec] : nuisances) {
        if (n == name) return spec;
    }
    throw SpecError("nuisance name '" + name + "' is not mapped");
}

} // namespace

std::string instance_label(const NuisanceInstance& inst) {
    if (inst.path.empty()) return inst.node->id;
    std::string label = inst.node->id + "@";
    for (std::size_t i = 0; i < inst.path.size(); ++i) {
        if (i) label += ".";
        label += inst.path[i];
    }
    return label;
}

InstancePlan tree_expand(const std::vector<std::pair<std::string, NuisancePtr>>& nuisances,
                         const std::vector<std::string>& target_args) {
    InstancePlan plan;
    // Every dependency edge materializes a fresh child: instance count equals
    // the number of distinct paths from the target to each node.
    auto visit = [&](auto&& self, const std::string& name,
                     const std::vector<std::string>& path) -> int {
        const NuisancePtr& node = resolve(nuisances, name);
        std::vector<std::string> child_path = path;
        child_path.push_back(node->id);
        std::vector<int> children;
        children.reserve(node->deps.size());
        for (const auto& dep : node->deps) {
            children.push_back(self(self, dep, child_path));
        }
        plan.instances.push_back(NuisanceInstance{node, path, std::move(children)});
        return static_cast<int>(plan.instances.size()) - 1;
    };
    for (const auto& arg : target_args) {
        plan.arg_roots[arg] = visit(visit, arg, {});
    }
    return plan;
}

InstancePlan dag_instances(const std::vector<std::pair<std::string, NuisancePtr>>& nuisances,
                           const std::vector<std::string>& target_args) {
    InstancePlan plan;
    std::map<const NuisanceSpec*, int> done; // node identity, so aliases collapse
    auto visit = [&](auto&& self, const std::string& name) -> int {
        const NuisancePtr& node = resolve(nuisances, name);
        auto it = done.find(node.get());
        if (it != done.end()) return it->second;
        std::vector<int> children;
        children.reserve(node->deps.size());
        for (const auto& dep : node->deps) {
            children.push_back(self(self, dep));
        }
        plan.instances.push_back(NuisanceInstance{node, {}, std::move(children)});
        const int idx = static_cast<int>(plan.instances.size()) - 1;
        done[node.get()] = idx;
        return idx;
    };
    for (const auto& arg : target_args) {
        plan.arg_roots[arg] = visit(visit, arg);
    }
    return plan;
}

InstancePlan instance_set(const MethodSpec& m) {
    if (m.allocation == Allocation::Independence) {
        return tree_expand(m.nuisances, m.target.args);
    }
    return dag_instances(m.nuisances, m.target.args);
}

Window panel_eval_window(int panel, int eval_fold, int k) {
    if (panel < 0 || panel >= k) {
        throw SpecError("panel " + std::to_string(panel) + " out of range [0, " + std::to_string(k) + ")");
    }
    if (eval_fold < 0 || eval_fold >= k) {
        throw SpecError("eval_fold " + std::to_string(eval_fold) + " out of range [0, " + std::to_string(k) + ")");
    }
    return Window{panel, eval_fold};
}

PanelAllocation allocate(Allocation mode, const InstancePlan& plan,
                         int panel, int eval_fold, int k) {
    PanelAllocation out;
    out.panel = panel;
    out.eval_window = panel_eval_window(panel, eval_fold, k);
    out.training.resize(plan.instances.size());

    if (mode == Allocation::Overlap) {
        const int start = (panel + eval_fold) % k;
        for (std::size_t i = 0; i < plan.instances.size(); ++i) {
            const int w = plan.instances[i].node->train_fold;
            if (w > k - eval_fold) {
                throw SpecError("overlap: train_fold " + std::to_string(w) + " of '" +
                                instance_label(plan.instances[i]) + "' exceeds K - eval_fold = " +
                                std::to_string(k - eval_fold));
            }
            out.training[i] = Window{start, w};
        }
        return out;
    }

    // disjoint / independence: consecutive packing after the eval window
    int total = 0;
    for (const auto& inst : plan.instances) total += inst.node->train_fold;
    if (total > k - eval_fold) {
        throw SpecError("infeasible packing: total train width " + std::to_string(total) +
                        " exceeds K - eval_fold = " + std::to_string(k - eval_fold));
    }
    int offset = eval_fold;
    for (std::size_t i = 0; i < plan.instances.size(); ++i) {
        const int w = plan.instances[i].node->train_fold;
        out.training[i] = Window{(panel + offset) % k, w};
        offset += w;
    }
    return out;
}

int min_folds_required(const MethodSpec& m) {
    const InstancePlan plan = instance_set(m);
    const int eval_floor = m.eval_fold;
    if (m.allocation == Allocation::Overlap) {
        int widest = 0;
        for (const auto& inst : plan.instances) widest = std::max(widest, inst.node->train_fold);
        return eval_floor + widest;
    }
    int total = 0;
    for (const auto& inst : plan.instances) total += inst.node->train_fold;
    return eval_floor + total;
}

FoldAssignment default_fold_split(std::size_t n, int k, std::uint64_t seed, int rep_index) {
    if (k < 1) throw SpecError("fold split: K must be >= 1, got " + std::to_string(k));
    if (n < static_cast<std::size_t>(k)) {
        throw SpecError("fold split: n = " + std::to_string(n) + " < K = " + std::to_string(k));
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(rep_index)));
    for (std::size_t i = n - 1; i > 0; --i) { // Fisher-Yates, fully specified
        const std::size_t j = rng.next_below(i + 1);
        std::swap(perm[i], perm[j]);
    }
    FoldAssignment fa;
    fa.k = k;
    fa.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        fa.labels[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return fa;
}

void check_fold_assignment(const FoldAssignment& fa, std::size_t n, int k) {
    if (fa.k != k) {
        throw SpecError("fold split returned K = " + std::to_string(fa.k) + ", expected " + std::to_string(k));
    }
    if (fa.labels.size() != n) {
        throw SpecError("fold split returned " + std::to_string(fa.labels.size()) +
                        " labels for " + std::to_string(n) + " rows");
    }
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (int label : fa.labels) {
        if (label < 0 || label >= k) {
            throw SpecError("fold split produced label " + std::to_string(label) +
                            " outside [0, " + std::to_string(k) + ")");
        }
        ++counts[static_cast<std::size_t>(label)];
    }
    for (int f = 0; f < k; ++f) {
        if (counts[static_cast<std::size_t>(f)] == 0) {
            throw SpecError("fold split left fold " + std::to_string(f) + " empty");
        }
    }
}

std::uint64_t fold_assignment_digest(const FoldAssignment& fa) {
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (b * 8)) & 0xFFu;
            h *= 1099511628211ULL;
        }
    };
    mix(static_cast<std::uint64_t>(fa.k));
    for (int label : fa.labels) mix(static_cast<std::uint64_t>(label));
    return h;
}

} // namespace crossfit
