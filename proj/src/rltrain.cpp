#include "metanco/rltrain.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace metanco::rltrain {

void TrainConfig::validate() const {
    if (alpha <= 0.0) throw std::invalid_argument("TrainConfig: alpha must be > 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (ttest_threshold <= 0.0 || ttest_threshold >= 1.0)
        throw std::invalid_argument("TrainConfig: ttest_threshold must be in (0,1)");
    if (baseline_eval_size < 2)
        throw std::invalid_argument("TrainConfig: baseline_eval_size must be >= 2");
}

AdamState AdamState::init(const ParameterSet& theta) {
    AdamState state;
    for (const auto& [name, arr] : theta.values) {
        state.m.emplace(name, ad::Array(arr.rows, arr.cols));
        state.v.emplace(name, ad::Array(arr.rows, arr.cols));
    }
    return state;
}

InstancePool InstancePool::from_spec(const TaskSpec& spec, std::uint64_t stream_seed) {
    InstancePool p;
    p.from_spec_ = true;
    p.spec_ = spec;
    p.spec_.seed = stream_seed;
    p.task_id_ = spec.id();
    return p;
}

InstancePool InstancePool::from_instances(std::vector<Instance> pool, std::uint64_t sample_seed) {
    if (pool.empty()) throw std::invalid_argument("InstancePool: empty instance pool");
    InstancePool p;
    p.pool_ = std::move(pool);
    p.rng_ = RandomStream(sample_seed);
    p.task_id_ = p.pool_.front().source_tag.empty() ? "pool" : p.pool_.front().source_tag;
    return p;
}

std::vector<Instance> InstancePool::next_batch(int size) {
    std::vector<Instance> batch;
    batch.reserve(size);
    if (from_spec_) {
        for (int i = 0; i < size; ++i)
            batch.push_back(taskgen::generate_instance(spec_, next_index_++));
    } else {
        for (int i = 0; i < size; ++i)
            batch.push_back(pool_[rng_.next_below(pool_.size())]);
    }
    return batch;
}

GradMap reinforce_batch_gradient(const ParameterSet& theta, const ParameterSet& theta_b,
                                 const std::vector<Instance>& batch, RandomStream& rng,
                                 BatchStats* stats) {
    if (batch.empty()) throw std::invalid_argument("reinforce_batch_gradient: empty batch");
    GradMap total;
    for (const auto& [name, arr] : theta.values) total.emplace(name, ad::Array(arr.rows, arr.cols));

    double sum_cost = 0.0, sum_base = 0.0;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (const Instance& inst : batch) {
        ParamBinding binding(theta);
        auto [rollout, log_prob] = policy::sample_rollout_graph(binding, inst, rng);
        const policy::Rollout baseline = policy::greedy_rollout(theta_b, inst);
        const double advantage = rollout.cost - baseline.cost;
        sum_cost += rollout.cost;
        sum_base += baseline.cost;
        if (advantage != 0.0) {
            ad::backward(ad::scale(log_prob, advantage * inv_b));
            for (auto& [name, acc] : total) {
                const ad::Array g = binding.grads().at(name);
                for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += g.data[i];
            }
        }
    }
    if (stats) {
        stats->mean_sampled_cost = sum_cost * inv_b;
        stats->mean_baseline_cost = sum_base * inv_b;
        stats->mean_advantage = (sum_cost - sum_base) * inv_b;
    }
    return total;
}

void adam_step(ParameterSet& theta, const GradMap& grad, AdamState& state,
               double alpha, const TrainConfig& cfg) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
    for (auto& [name, arr] : theta.values) {
        auto git = grad.find(name);
        if (git == grad.end() || !git->second.same_shape(arr))
            throw std::invalid_argument("adam_step: gradient shape mismatch for " + name);
        ad::Array& m = state.m.at(name);
        ad::Array& v = state.v.at(name);
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const double g = git->second.data[i];
            m.data[i] = cfg.adam_beta1 * m.data[i] + (1.0 - cfg.adam_beta1) * g;
            v.data[i] = cfg.adam_beta2 * v.data[i] + (1.0 - cfg.adam_beta2) * g * g;
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            arr.data[i] -= alpha * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    }
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    // I_x(a,b) = x^a (1-x)^b / (a B(a,b)) * CF; use the symmetry relation
    // when x > (a+1)/(a+b+2) for convergence.
    if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - incomplete_beta(b, a, 1.0 - x);
    const double log_front = a * std::log(x) + b * std::log(1.0 - x) +
                             std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    // Modified Lentz continued fraction.
    const double tiny = 1e-300;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double f = d;
    for (int m = 1; m <= 300; ++m) {
        const double m2 = 2.0 * m;
        double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        f *= d * c;
        num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-14) break;
    }
    return std::exp(log_front) * f / a;
}

double student_t_cdf(double t, int nu) {
    if (nu < 1) throw std::invalid_argument("student_t_cdf: nu must be >= 1");
    if (t == 0.0) return 0.5;
    const double x = nu / (nu + t * t);
    const double half_tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, x);
    return t < 0.0 ? half_tail : 1.0 - half_tail;
}

TTestResult one_sided_paired_ttest(const std::vector<double>& cand,
                                   const std::vector<double>& base) {
    if (cand.size() != base.size())
        throw std::invalid_argument("one_sided_paired_ttest: length mismatch");
    const int n = static_cast<int>(cand.size());
    if (n < 2) throw std::invalid_argument("one_sided_paired_ttest: need at least 2 pairs");

    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += cand[i] - base[i];
    mean /= n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = cand[i] - base[i] - mean;
        var += d * d;
    }
    var /= (n - 1);

    TTestResult result;
    result.sample_size = n;
    if (var == 0.0) {
        result.t_statistic = mean < 0.0 ? -std::numeric_limits<double>::infinity()
                             : mean > 0.0 ? std::numeric_limits<double>::infinity()
                                          : 0.0;
        result.p_value = mean < 0.0 ? 0.0 : mean > 0.0 ? 1.0 : 0.5;
        return result;
    }
    result.t_statistic = mean / std::sqrt(var / n);
    result.p_value = student_t_cdf(result.t_statistic, n - 1);
    return result;
}

std::vector<double> greedy_costs(const ParameterSet& theta, const std::vector<Instance>& instances) {
    std::vector<double> costs;
    costs.reserve(instances.size());
    for (const Instance& inst : instances)
        costs.push_back(policy::greedy_rollout(theta, inst).cost);
    return costs;
}

bool maybe_update_baseline(const ParameterSet& theta_i, ParameterSet& theta_b,
                           const std::vector<Instance>& eval_set, double beta) {
    if (eval_set.empty()) throw std::invalid_argument("maybe_update_baseline: empty eval set");
    const auto cand = greedy_costs(theta_i, eval_set);
    const auto base = greedy_costs(theta_b, eval_set);
    const TTestResult result = one_sided_paired_ttest(cand, base);
    if (result.p_value < beta) {
        theta_b = theta_i;
        return true;
    }
    return false;
}

BatchStats rl_inner_step(ParameterSet& theta, const ParameterSet& theta_b,
                         InstancePool& pool, TrainConfig& cfg, AdamState& adam,
                         RandomStream& rng) {
    const auto batch = pool.next_batch(cfg.batch_size);
    BatchStats stats;
    const GradMap grad = reinforce_batch_gradient(theta, theta_b, batch, rng, &stats);
    bool finite = std::isfinite(stats.mean_sampled_cost) && std::isfinite(stats.mean_advantage);
    for (const auto& [name, g] : grad) finite = finite && ad::all_finite(g);
    if (!finite) {
        cfg.alpha *= 0.5; // backoff; skip the poisoned step
        return stats;
    }
    adam_step(theta, grad, adam, cfg.alpha, cfg);
    return stats;
}

double supervised_batch_step(ParameterSet& theta, const std::vector<LabeledInstance>& batch,
                             TrainConfig& cfg, AdamState& adam) {
    if (batch.empty()) throw std::invalid_argument("supervised_batch_step: empty batch");
    std::vector<edgenet::EdgeLabels> labels;
    labels.reserve(batch.size());
    for (const auto& [inst, lab] : batch) labels.push_back(lab);
    const auto [w0, w1] = edgenet::default_class_weights(labels);

    ParamBinding binding(theta);
    ad::Var loss;
    for (const auto& [inst, lab] : batch) {
        ad::Var pred = edgenet::predict_graph(binding, inst);
        ad::Var term = edgenet::weighted_bce_loss_graph(pred, lab, w0, w1);
        loss = loss ? ad::add(loss, term) : term;
    }
    loss = ad::scale(loss, 1.0 / static_cast<double>(batch.size()));
    const double loss_value = loss->value.data[0];
    if (!std::isfinite(loss_value)) {
        cfg.alpha *= 0.5;
        return loss_value;
    }
    ad::backward(loss);
    adam_step(theta, binding.grads(), adam, cfg.alpha, cfg);
    return loss_value;
}

double supervised_batch_loss(const ParameterSet& theta, const std::vector<LabeledInstance>& batch) {
    if (batch.empty()) throw std::invalid_argument("supervised_batch_loss: empty batch");
    std::vector<edgenet::EdgeLabels> labels;
    labels.reserve(batch.size());
    for (const auto& [inst, lab] : batch) labels.push_back(lab);
    const auto [w0, w1] = edgenet::default_class_weights(labels);
    double total = 0.0;
    for (const auto& [inst, lab] : batch) {
        const auto pred = edgenet::predict(theta, inst);
        total += edgenet::weighted_bce_loss(pred, lab, w0, w1);
    }
    return total / static_cast<double>(batch.size());
}

} // namespace metanco::rltrain
