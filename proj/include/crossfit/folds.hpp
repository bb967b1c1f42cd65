#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crossfit/spec.hpp"

namespace crossfit {

// ---------------------------------------------------------------------------
// Windows
// ---------------------------------------------------------------------------

/// Cyclic contiguous fold set {start, start+1, ..., start+width-1} mod K.
/// width may be 0 (empty window, predict mode with eval_fold = 0).
struct Window {
    int start = 0;
    int width = 0;

    bool contains(int fold, int k) const {
        if (width == 0) return false;
        int off = fold - start;
        off %= k;
        if (off < 0) off += k;
        return off < width;
    }

    std::vector<int> folds(int k) const {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(width));
        for (int i = 0; i < width; ++i) out.push_back((start + i) % k);
        return out;
    }

    bool intersects(const Window& other, int k) const {
        for (int i = 0; i < width; ++i) {
            if (other.contains((start + i) % k, k)) return true;
        }
        return false;
    }
};

// ---------------------------------------------------------------------------
// Instances
// ---------------------------------------------------------------------------

/// One schedulable copy of a nuisance node. In overlap/disjoint modes there
/// is exactly one instance per node; independence mode duplicates a node once
/// per dependency path from the target (tree expansion).
struct NuisanceInstance {
    NuisancePtr node;
    std::vector<std::string> path; // consumer node ids, root first; empty for roots
    std::vector<int> children;     // indices into InstancePlan::instances, parallel to node->deps
};

/// Instances in deterministic execution order: depth-first over the target's
/// arguments in declared order, dependencies before dependents.
struct InstancePlan {
    std::vector<NuisanceInstance> instances;
    std::map<std::string, int> arg_roots; // target argument -> root instance index
};

std::string instance_label(const NuisanceInstance& inst);

// Tree expansion: a fresh instance per dependency path (independence mode).
InstancePlan tree_expand(const std::vector<std::pair<std::string, NuisancePtr>>& nuisances,
                         const std::vector<std::string>& target_args);

// DAG instances: one per node, deduplicated by node identity (overlap/disjoint).
InstancePlan dag_instances(const std::vector<std::pair<std::string, NuisancePtr>>& nuisances,
                           const std::vector<std::string>& target_args);

// Dispatches on m.allocation. Requires an acyclic, covered dependency graph.
InstancePlan instance_set(const MethodSpec& m);

// ---------------------------------------------------------------------------
// Panel allocation
// ---------------------------------------------------------------------------

/// Per-panel assignment of training windows to instances plus the evaluation
/// window. training[i] belongs to plan.instances[i].
struct PanelAllocation {
    int panel = 0;
    Window eval_window;
    std::vector<Window> training;
};

Window panel_eval_window(int panel, int eval_fold, int k);

// overlap: every instance starts at (p + eval_fold) mod K.
// disjoint/independence: consecutive non-overlapping windows in plan order.
PanelAllocation allocate(Allocation mode, const InstancePlan& plan,
                         int panel, int eval_fold, int k);

// Smallest K for which the method's allocation is feasible.
int min_folds_required(const MethodSpec& m);

// ---------------------------------------------------------------------------
// Fold splitting
// ---------------------------------------------------------------------------

// Seeded permutation dealt round-robin into K folds; sizes differ by at most
// one. Deterministic given (n, k, seed, rep_index).
FoldAssignment default_fold_split(std::size_t n, int k, std::uint64_t seed, int rep_index);

// Partition sanity for user-supplied splitters; throws SpecError on violation.
void check_fold_assignment(const FoldAssignment& fa, std::size_t n, int k);

std::uint64_t fold_assignment_digest(const FoldAssignment& fa);

} // namespace crossfit
