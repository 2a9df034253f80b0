#pragma once

#include "metanco/rltrain.hpp"

#include <map>
#include <string>
#include <vector>

namespace metanco::metatrain {

struct MetaConfig {
    int inner_steps = 50;            // K
    double eps0 = 0.99;
    double eps_decay = 1.0003;
    double fixed_eps = -1.0;         // > 0: constant step size (ablation)
    double eps_floor = 1e-6;
    int outer_iters = 100;
    double wall_clock_limit_sec = -1.0; // > 0: stop on wall clock too
    rltrain::TrainConfig inner;
    std::uint64_t seed = 0;

    void validate() const;
};

struct LogRecord {
    long outer = 0;
    long inner = 0;
    std::string task_id;
    double mean_cost = 0.0;
    double loss = 0.0;
    double eps = 0.0;
};

/// theta + eps * (theta_iK - theta), elementwise.
ParameterSet reptile_update(const ParameterSet& theta, const ParameterSet& theta_ik, double eps);

/// eps / eps_decay, floored (below the floor the schedule freezes).
double decay_epsilon(double eps, double eps_decay, double floor = 1e-6);

struct MetaRlResult {
    ParameterSet theta;
    std::map<int, ParameterSet> task_baselines; // lazily created per task index
    std::vector<LogRecord> log;
};

MetaRlResult meta_train_rl(const TaskSet& tasks, const ParameterSet& theta0, MetaConfig cfg);

struct LabeledTask {
    TaskSpec spec;
    std::vector<rltrain::LabeledInstance> data;
};

struct MetaSupResult {
    ParameterSet theta;
    std::vector<LogRecord> log;
};

MetaSupResult meta_train_supervised(const std::vector<LabeledTask>& tasks,
                                    const ParameterSet& theta0, MetaConfig cfg);

struct PlainRlResult {
    ParameterSet theta;
    ParameterSet baseline;
    std::vector<LogRecord> log;
};

/// Plain REINFORCE training on one task, in chunks of `chunk` batches with a
/// baseline t-test refresh after each chunk. With reset_adam_per_chunk the
/// batch/eval schedules match meta_train_rl on a single task with eps = 1.
PlainRlResult train_rl(const TaskSpec& task, const ParameterSet& theta0,
                       rltrain::TrainConfig cfg, int n_batches, int chunk = 50,
                       bool reset_adam_per_chunk = false, std::uint64_t seed = 0,
                       std::vector<LogRecord>* log = nullptr);

/// Multi-task baseline: every batch is drawn from a uniformly random task.
PlainRlResult multi_task_train(const TaskSet& tasks, const ParameterSet& theta0,
                               rltrain::TrainConfig cfg, int n_batches, std::uint64_t seed = 0,
                               std::vector<LogRecord>* log = nullptr);

ParameterSet multi_task_train_supervised(const std::vector<LabeledTask>& tasks,
                                         const ParameterSet& theta0, rltrain::TrainConfig cfg,
                                         int n_batches, std::uint64_t seed = 0,
                                         std::vector<LogRecord>* log = nullptr);

/// K fine-tuning steps from theta; returns the trajectory theta^0..theta^K.
/// Adam moments are reset at theta^0.
std::vector<ParameterSet> fine_tune_rl(const ParameterSet& theta, rltrain::InstancePool& pool,
                                       int k_steps, rltrain::TrainConfig cfg,
                                       std::uint64_t seed = 0);

std::vector<ParameterSet> fine_tune_supervised(const ParameterSet& theta,
                                               const std::vector<rltrain::LabeledInstance>& data,
                                               int k_steps, rltrain::TrainConfig cfg,
                                               std::uint64_t seed = 0);

} // namespace metanco::metatrain
