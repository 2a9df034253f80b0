#include "metanco/metatrain.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace metanco::metatrain {

using rltrain::AdamState;
using rltrain::InstancePool;
using rltrain::TrainConfig;

void MetaConfig::validate() const {
    if (inner_steps < 0) throw std::invalid_argument("MetaConfig: inner_steps must be >= 0");
    if (eps0 <= 0.0 || eps0 > 1.0) throw std::invalid_argument("MetaConfig: eps0 must be in (0,1]");
    if (eps_decay <= 1.0) throw std::invalid_argument("MetaConfig: eps_decay must be > 1");
    if (outer_iters < 0) throw std::invalid_argument("MetaConfig: outer_iters must be >= 0");
    inner.validate();
}

ParameterSet reptile_update(const ParameterSet& theta, const ParameterSet& theta_ik, double eps) {
    if (theta.values.size() != theta_ik.values.size())
        throw std::invalid_argument("reptile_update: parameter sets differ");
    ParameterSet out = theta;
    for (auto& [name, arr] : out.values) {
        const auto it = theta_ik.values.find(name);
        if (it == theta_ik.values.end() || !arr.same_shape(it->second))
            throw std::invalid_argument("reptile_update: shape mismatch for " + name);
        // eps = 0 and eps = 1 are exact endpoints: an unchanged inner result
        // must leave theta bit-identical, and a full step must land exactly
        // on theta_iK.
        if (eps == 1.0) {
            arr = it->second;
            continue;
        }
        for (std::size_t i = 0; i < arr.size(); ++i)
            arr.data[i] += eps * (it->second.data[i] - arr.data[i]);
    }
    return out;
}

double decay_epsilon(double eps, double eps_decay, double floor) {
    if (eps_decay <= 1.0) throw std::invalid_argument("decay_epsilon: eps_decay must be > 1");
    return std::max(eps / eps_decay, floor);
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    std::uint64_t s = seed ^ (tag * 0x9e3779b97f4a7c15ULL);
    splitmix64_next(s);
    s ^= index * 0xbf58476d1ce4e5b9ULL;
    return splitmix64_next(s);
}

constexpr std::uint64_t kTagPool = 1;
constexpr std::uint64_t kTagEval = 2;
constexpr std::uint64_t kTagRollout = 3;
constexpr std::uint64_t kTagTask = 4;
constexpr std::uint64_t kTagBatch = 5;

std::vector<Instance> eval_set_for(const TaskSpec& task, int size, std::uint64_t seed,
                                   std::uint64_t chunk) {
    TaskSpec eval_spec = task;
    eval_spec.seed = mix_seed(seed, kTagEval, chunk);
    return taskgen::generate_dataset(eval_spec, size);
}

/// One chunk of K REINFORCE inner steps on a task; shared by the meta and
/// plain loops so their batch/eval schedules are identical.
void rl_chunk(ParameterSet& theta_i, const ParameterSet& baseline, const TaskSpec& task,
              TrainConfig& cfg, AdamState& adam, std::uint64_t seed, std::uint64_t chunk,
              int k_steps, long outer, double eps, std::vector<LogRecord>* log) {
    InstancePool pool = InstancePool::from_spec(task, mix_seed(seed, kTagPool, chunk));
    RandomStream rng = RandomStream::substream(mix_seed(seed, kTagRollout, 0), chunk);
    for (int k = 0; k < k_steps; ++k) {
        const auto stats = rltrain::rl_inner_step(theta_i, baseline, pool, cfg, adam, rng);
        if (log) {
            log->push_back({outer, k, task.id(), stats.mean_sampled_cost,
                            stats.mean_advantage, eps});
        }
    }
}

} // namespace

MetaRlResult meta_train_rl(const TaskSet& tasks, const ParameterSet& theta0, MetaConfig cfg) {
    tasks.validate();
    cfg.validate();
    MetaRlResult result;
    result.theta = theta0;
    double eps = cfg.fixed_eps > 0.0 ? cfg.fixed_eps : cfg.eps0;
    RandomStream task_rng(mix_seed(cfg.seed, kTagTask, 0));
    const auto start = std::chrono::steady_clock::now();

    for (int outer = 0; outer < cfg.outer_iters; ++outer) {
        if (cfg.wall_clock_limit_sec > 0.0) {
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (elapsed >= cfg.wall_clock_limit_sec) break;
        }
        const int task_idx = static_cast<int>(task_rng.next_below(tasks.tasks.size()));
        const TaskSpec& task = tasks.tasks[task_idx];
        // Task-specific baselines are created lazily at first sampling.
        auto [bit, inserted] = result.task_baselines.try_emplace(task_idx, result.theta);
        (void)inserted;

        ParameterSet theta_i = result.theta;
        AdamState adam = AdamState::init(theta_i);
        TrainConfig inner_cfg = cfg.inner;
        rl_chunk(theta_i, bit->second, task, inner_cfg, adam, cfg.seed,
                 static_cast<std::uint64_t>(outer), cfg.inner_steps, outer, eps, &result.log);

        if (cfg.inner_steps > 0) {
            const auto eval = eval_set_for(task, cfg.inner.baseline_eval_size, cfg.seed,
                                           static_cast<std::uint64_t>(outer));
            rltrain::maybe_update_baseline(theta_i, bit->second, eval, cfg.inner.ttest_threshold);
        }

        result.theta = reptile_update(result.theta, theta_i, eps);
        if (cfg.fixed_eps <= 0.0) eps = decay_epsilon(eps, cfg.eps_decay, cfg.eps_floor);
    }
    return result;
}

namespace {

std::vector<rltrain::LabeledInstance> sample_labeled_batch(
    const std::vector<rltrain::LabeledInstance>& data, int size, RandomStream& rng) {
    std::vector<rltrain::LabeledInstance> batch;
    batch.reserve(size);
    for (int i = 0; i < size; ++i) batch.push_back(data[rng.next_below(data.size())]);
    return batch;
}

} // namespace

MetaSupResult meta_train_supervised(const std::vector<LabeledTask>& tasks,
                                    const ParameterSet& theta0, MetaConfig cfg) {
    if (tasks.empty()) throw std::invalid_argument("meta_train_supervised: no tasks");
    for (const auto& t : tasks) {
        if (t.data.empty())
            throw std::invalid_argument("meta_train_supervised: task " + t.spec.id() +
                                        " has no labeled data");
    }
    cfg.validate();
    MetaSupResult result;
    result.theta = theta0;
    double eps = cfg.fixed_eps > 0.0 ? cfg.fixed_eps : cfg.eps0;
    RandomStream task_rng(mix_seed(cfg.seed, kTagTask, 0));
    const auto start = std::chrono::steady_clock::now();

    for (int outer = 0; outer < cfg.outer_iters; ++outer) {
        if (cfg.wall_clock_limit_sec > 0.0) {
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (elapsed >= cfg.wall_clock_limit_sec) break;
        }
        const int task_idx = static_cast<int>(task_rng.next_below(tasks.size()));
        const LabeledTask& task = tasks[task_idx];

        ParameterSet theta_i = result.theta;
        AdamState adam = AdamState::init(theta_i);
        TrainConfig inner_cfg = cfg.inner;
        RandomStream batch_rng = RandomStream::substream(mix_seed(cfg.seed, kTagBatch, 0),
                                                         static_cast<std::uint64_t>(outer));
        for (int k = 0; k < cfg.inner_steps; ++k) {
            const auto batch = sample_labeled_batch(task.data, inner_cfg.batch_size, batch_rng);
            const double loss = rltrain::supervised_batch_step(theta_i, batch, inner_cfg, adam);
            result.log.push_back({outer, k, task.spec.id(), 0.0, loss, eps});
        }

        result.theta = reptile_update(result.theta, theta_i, eps);
        if (cfg.fixed_eps <= 0.0) eps = decay_epsilon(eps, cfg.eps_decay, cfg.eps_floor);
    }
    return result;
}

PlainRlResult train_rl(const TaskSpec& task, const ParameterSet& theta0,
                       rltrain::TrainConfig cfg, int n_batches, int chunk,
                       bool reset_adam_per_chunk, std::uint64_t seed,
                       std::vector<LogRecord>* log) {
    task.validate();
    cfg.validate();
    if (chunk < 1) throw std::invalid_argument("train_rl: chunk must be >= 1");
    PlainRlResult result;
    result.theta = theta0;
    result.baseline = theta0;
    AdamState adam = AdamState::init(result.theta);

    int done = 0;
    std::uint64_t chunk_idx = 0;
    while (done < n_batches) {
        const int steps = std::min(chunk, n_batches - done);
        if (reset_adam_per_chunk) adam = AdamState::init(result.theta);
        rl_chunk(result.theta, result.baseline, task, cfg, adam, seed, chunk_idx, steps,
                 static_cast<long>(chunk_idx), 1.0, log);
        const auto eval = eval_set_for(task, cfg.baseline_eval_size, seed, chunk_idx);
        rltrain::maybe_update_baseline(result.theta, result.baseline, eval, cfg.ttest_threshold);
        done += steps;
        ++chunk_idx;
    }
    if (log) {
        result.log = *log;
    }
    return result;
}

PlainRlResult multi_task_train(const TaskSet& tasks, const ParameterSet& theta0,
                               rltrain::TrainConfig cfg, int n_batches, std::uint64_t seed,
                               std::vector<LogRecord>* log) {
    tasks.validate();
    cfg.validate();
    PlainRlResult result;
    result.theta = theta0;
    result.baseline = theta0;
    AdamState adam = AdamState::init(result.theta);
    RandomStream task_rng(mix_seed(seed, kTagTask, 0));
    RandomStream rollout_rng(mix_seed(seed, kTagRollout, 0));

    std::vector<InstancePool> pools;
    for (std::size_t i = 0; i < tasks.tasks.size(); ++i) {
        pools.push_back(InstancePool::from_spec(tasks.tasks[i], mix_seed(seed, kTagPool, i)));
    }

    for (int b = 0; b < n_batches; ++b) {
        const int task_idx = static_cast<int>(task_rng.next_below(tasks.tasks.size()));
        const auto stats = rltrain::rl_inner_step(result.theta, result.baseline, pools[task_idx],
                                                  cfg, adam, rollout_rng);
        if (log) {
            log->push_back({b, 0, tasks.tasks[task_idx].id(), stats.mean_sampled_cost,
                            stats.mean_advantage, 0.0});
        }
        if ((b + 1) % cfg.baseline_refresh_every == 0) {
            // Mixture eval set: round-robin over tasks for a fixed composition.
            std::vector<Instance> eval;
            for (int i = 0; i < cfg.baseline_eval_size; ++i) {
                const TaskSpec& t = tasks.tasks[i % tasks.tasks.size()];
                eval.push_back(
                    taskgen::generate_instance(t, mix_seed(seed, kTagEval, b) + i));
            }
            rltrain::maybe_update_baseline(result.theta, result.baseline, eval,
                                           cfg.ttest_threshold);
        }
    }
    if (log) result.log = *log;
    return result;
}

ParameterSet multi_task_train_supervised(const std::vector<LabeledTask>& tasks,
                                         const ParameterSet& theta0, rltrain::TrainConfig cfg,
                                         int n_batches, std::uint64_t seed,
                                         std::vector<LogRecord>* log) {
    if (tasks.empty()) throw std::invalid_argument("multi_task_train_supervised: no tasks");
    cfg.validate();
    ParameterSet theta = theta0;
    AdamState adam = AdamState::init(theta);
    RandomStream task_rng(mix_seed(seed, kTagTask, 0));
    RandomStream batch_rng(mix_seed(seed, kTagBatch, 0));
    for (int b = 0; b < n_batches; ++b) {
        const auto& task = tasks[task_rng.next_below(tasks.size())];
        const auto batch = sample_labeled_batch(task.data, cfg.batch_size, batch_rng);
        const double loss = rltrain::supervised_batch_step(theta, batch, cfg, adam);
        if (log) log->push_back({b, 0, task.spec.id(), 0.0, loss, 0.0});
    }
    return theta;
}

std::vector<ParameterSet> fine_tune_rl(const ParameterSet& theta, rltrain::InstancePool& pool,
                                       int k_steps, rltrain::TrainConfig cfg, std::uint64_t seed) {
    if (k_steps < 0) throw std::invalid_argument("fine_tune_rl: k_steps must be >= 0");
    cfg.validate();
    std::vector<ParameterSet> trajectory;
    trajectory.reserve(k_steps + 1);
    trajectory.push_back(theta);

    ParameterSet theta_t = theta;
    ParameterSet baseline = theta;
    AdamState adam = AdamState::init(theta_t); // moments reset at theta^0
    RandomStream rng(mix_seed(seed, kTagRollout, 1));
    for (int k = 0; k < k_steps; ++k) {
        rltrain::rl_inner_step(theta_t, baseline, pool, cfg, adam, rng);
        trajectory.push_back(theta_t);
        if ((k + 1) % cfg.baseline_refresh_every == 0) {
            const auto eval = pool.next_batch(cfg.baseline_eval_size);
            rltrain::maybe_update_baseline(theta_t, baseline, eval, cfg.ttest_threshold);
        }
    }
    return trajectory;
}

std::vector<ParameterSet> fine_tune_supervised(const ParameterSet& theta,
                                               const std::vector<rltrain::LabeledInstance>& data,
                                               int k_steps, rltrain::TrainConfig cfg,
                                               std::uint64_t seed) {
    if (k_steps < 0) throw std::invalid_argument("fine_tune_supervised: k_steps must be >= 0");
    if (data.empty()) throw std::invalid_argument("fine_tune_supervised: empty labeled set");
    cfg.validate();
    std::vector<ParameterSet> trajectory;
    trajectory.reserve(k_steps + 1);
    trajectory.push_back(theta);

    ParameterSet theta_t = theta;
    AdamState adam = AdamState::init(theta_t);
    RandomStream rng(mix_seed(seed, kTagBatch, 1));
    for (int k = 0; k < k_steps; ++k) {
        const auto batch = sample_labeled_batch(data, std::min<int>(cfg.batch_size,
                                                                    static_cast<int>(data.size())),
                                                rng);
        rltrain::supervised_batch_step(theta_t, batch, cfg, adam);
        trajectory.push_back(theta_t);
    }
    return trajectory;
}

} // namespace metanco::metatrain
