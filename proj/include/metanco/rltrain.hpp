#pragma once

#include "metanco/edgenet.hpp"
#include "metanco/policy.hpp"

#include <vector>

namespace metanco::rltrain {

struct TrainConfig {
    double alpha = 1e-3;            // inner learning rate
    int batch_size = 32;
    double ttest_threshold = 0.05;  // beta
    int baseline_eval_size = 256;
    int baseline_refresh_every = 50; // plain-training cadence, in batches
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AdamState {
    GradMap m;
    GradMap v;
    long step = 0;

    static AdamState init(const ParameterSet& theta);
};

struct TTestResult {
    double t_statistic = 0.0;
    double p_value = 1.0;
    int sample_size = 0;
};

struct BatchStats {
    double mean_sampled_cost = 0.0;
    double mean_baseline_cost = 0.0;
    double mean_advantage = 0.0;
};

/// Source of training batches: either fresh instances from a task spec or a
/// finite pool sampled with replacement (fine-tuning).
class InstancePool {
public:
    static InstancePool from_spec(const TaskSpec& spec, std::uint64_t stream_seed);
    static InstancePool from_instances(std::vector<Instance> pool, std::uint64_t sample_seed);

    std::vector<Instance> next_batch(int size);
    std::string task_id() const { return task_id_; }

private:
    InstancePool() = default;
    bool from_spec_ = false;
    TaskSpec spec_;
    std::uint64_t next_index_ = 0;
    std::vector<Instance> pool_;
    RandomStream rng_{0};
    std::string task_id_;
};

/// REINFORCE estimator with greedy-rollout baseline:
/// grad = sum_k (c(sigma_k) - c(sigma_k^b)) * grad log pi(sigma_k) / B.
GradMap reinforce_batch_gradient(const ParameterSet& theta, const ParameterSet& theta_b,
                                 const std::vector<Instance>& batch, RandomStream& rng,
                                 BatchStats* stats = nullptr);

/// Standard Adam update with bias correction.
void adam_step(ParameterSet& theta, const GradMap& grad, AdamState& state,
               double alpha, const TrainConfig& cfg);

/// Regularized incomplete beta I_x(a, b) (continued fraction).
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t with nu degrees of freedom.
double student_t_cdf(double t, int nu);

/// Tests H1: mean(cand - base) < 0; requires length >= 2.
TTestResult one_sided_paired_ttest(const std::vector<double>& cand,
                                   const std::vector<double>& base);

std::vector<double> greedy_costs(const ParameterSet& theta, const std::vector<Instance>& instances);

/// Replaces theta_b with theta_i iff the paired t-test p-value < beta.
/// Returns true when the baseline was replaced.
bool maybe_update_baseline(const ParameterSet& theta_i, ParameterSet& theta_b,
                           const std::vector<Instance>& eval_set, double beta);

/// One sampled-vs-baseline REINFORCE batch plus an Adam step. Non-finite
/// losses or gradients trigger the alpha backoff (halve and skip).
BatchStats rl_inner_step(ParameterSet& theta, const ParameterSet& theta_b,
                         InstancePool& pool, TrainConfig& cfg, AdamState& adam,
                         RandomStream& rng);

using LabeledInstance = std::pair<Instance, edgenet::EdgeLabels>;

/// One Adam step on the batch-mean weighted BCE; returns the loss. Class
/// weights default to w1 = #neg/#pos, w0 = 1 computed on the batch.
double supervised_batch_step(ParameterSet& theta, const std::vector<LabeledInstance>& batch,
                             TrainConfig& cfg, AdamState& adam);

double supervised_batch_loss(const ParameterSet& theta, const std::vector<LabeledInstance>& batch);

} // namespace metanco::rltrain
