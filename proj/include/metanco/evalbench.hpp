#pragma once

#include "metanco/metatrain.hpp"
#include "metanco/oracles.hpp"
#include "metanco/policy.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace metanco::evalbench {

enum class OracleKind { BruteForceTsp, HeldKarp, BruteForceCvrp, Auto };

/// A solver maps an instance to a feasible solution cost.
struct NamedSolver {
    std::string id;
    std::function<double(const Instance&)> cost;
};

NamedSolver policy_solver(const ParameterSet& theta, const std::string& id = "policy-greedy");
NamedSolver edgenet_solver(const ParameterSet& theta, const std::string& id = "edgenet-greedy");
NamedSolver farthest_insertion_solver();
NamedSolver nearest_neighbor_solver();
NamedSolver random_tour_solver(std::uint64_t seed);
NamedSolver oracle_solver(OracleKind kind);

/// Memoizing store of exact reference costs, keyed by instance content.
class OracleCache {
public:
    double reference(const Instance& inst, OracleKind kind);
    std::size_t size() const { return costs_.size(); }

private:
    std::map<std::uint64_t, double> costs_;
};

/// Mean optimality gap of `solver` against the exact oracle over `dataset`.
/// An external cache lets repeated evaluations reuse stored exact solutions.
GapReport evaluate(const NamedSolver& solver, const std::vector<Instance>& dataset,
                   OracleKind reference = OracleKind::Auto, OracleCache* cache = nullptr);

struct GenMatrixConfig {
    policy::PolicyArch arch;              // policy size (problem field follows the task)
    rltrain::TrainConfig train;
    int train_batches = 200;
    int eval_size = 100;
    std::uint64_t seed = 0;
};

struct GenMatrix {
    std::vector<std::string> task_ids;        // row = training task, col = test task
    std::vector<std::vector<double>> mean_gap; // percent
};

/// Trains one policy per row task from scratch and evaluates it on every
/// column task; the diagonal is in-distribution performance.
GenMatrix generalization_matrix(const std::vector<TaskSpec>& tasks, const GenMatrixConfig& cfg);

struct MethodCurve {
    std::string method;
    std::vector<int> k_values;
    std::vector<double> mean_gap; // percent, aligned with k_values
};

struct ComparisonReport {
    std::string target_id;
    int eval_size = 0;
    std::uint64_t seed = 0;
    std::vector<MethodCurve> curves;
};

struct ComparisonConfig {
    policy::PolicyArch arch;              // policy size (problem field follows the task)
    metatrain::MetaConfig meta;           // prior-training budget for the meta model
    rltrain::TrainConfig fine_tune;       // per-step config used during fine-tuning
    int fine_tune_pool = 64;              // target instances available for adaptation
    int eval_size = 100;
    std::uint64_t seed = 0;
};

/// Gap-vs-K curves for {meta, multi, oracle-from-scratch, farthest_insertion}
/// on a held-out target task. Throws "target leaks into prior" when the
/// target is one of the prior's training tasks.
ComparisonReport meta_vs_multi_report(const TaskSet& prior, const TaskSpec& target,
                                      const std::vector<int>& k_list,
                                      const ComparisonConfig& cfg);

struct AblationRow {
    std::string eps_label;  // "0.5" or "decaying"
    double gap_k0 = 0.0;    // zero-shot, percent
    double gap_k50 = 0.0;   // after K = 50 fine-tuning steps, percent
};

struct AblationReport {
    std::string target_id;
    int eval_size = 0;
    std::uint64_t seed = 0;
    std::vector<AblationRow> rows;
};

/// One meta-training run per epsilon setting; reports zero-shot and K = 50
/// fine-tuned gaps on the target task.
AblationReport epsilon_ablation(const TaskSet& prior, const TaskSpec& target,
                                const std::vector<double>& eps_values, bool plus_decaying,
                                const ComparisonConfig& cfg);

struct FineTuneResult {
    policy::Rollout best;            // best greedy solution seen
    double best_cost = 0.0;
    std::vector<double> best_seen;   // running minimum, K + 1 entries
    double gap = -1.0;               // percent; -1 when no reference given
};

/// K REINFORCE steps where every batch is copies of the single instance with
/// fresh rollout sampling; returns the best greedy solution seen.
FineTuneResult per_instance_fine_tune(const ParameterSet& theta, const Instance& inst, int k_steps,
                                      rltrain::TrainConfig cfg, std::uint64_t seed = 0,
                                      double reference_cost = -1.0);

} // namespace metanco::evalbench
