#include "metanco/evalbench.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>

namespace metanco::evalbench {

NamedSolver policy_solver(const ParameterSet& theta, const std::string& id) {
    return {id, [theta](const Instance& inst) { return policy::greedy_rollout(theta, inst).cost; }};
}

NamedSolver edgenet_solver(const ParameterSet& theta, const std::string& id) {
    return {id, [theta](const Instance& inst) {
                if (inst.is_cvrp)
                    throw std::invalid_argument("edgenet solver: greedy decode is TSP-only");
                const auto pred = edgenet::predict(theta, inst);
                return solutions::tour_length(inst, edgenet::greedy_decode(pred, inst));
            }};
}

NamedSolver farthest_insertion_solver() {
    return {"farthest-insertion",
            [](const Instance& inst) { return oracles::farthest_insertion(inst).cost; }};
}

NamedSolver nearest_neighbor_solver() {
    return {"nearest-neighbor",
            [](const Instance& inst) { return oracles::nearest_neighbor(inst).cost; }};
}

NamedSolver random_tour_solver(std::uint64_t seed) {
    // Fisher-Yates over nodes; shared stream across the dataset.
    auto rng = std::make_shared<RandomStream>(seed);
    return {"random-tour", [rng](const Instance& inst) {
                if (inst.is_cvrp)
                    throw std::invalid_argument("random-tour solver: TSP-only");
                Tour t;
                t.order.resize(inst.n());
                for (int i = 0; i < inst.n(); ++i) t.order[i] = i;
                for (int i = inst.n() - 1; i > 0; --i) {
                    const int j = static_cast<int>(rng->next_below(i + 1));
                    std::swap(t.order[i], t.order[j]);
                }
                return solutions::tour_length(inst, t);
            }};
}

namespace {

OracleKind resolve(OracleKind kind, const Instance& inst) {
    if (kind != OracleKind::Auto) return kind;
    return inst.is_cvrp ? OracleKind::BruteForceCvrp : OracleKind::HeldKarp;
}

int size_limit(OracleKind kind) {
    switch (kind) {
        case OracleKind::BruteForceTsp: return 10;
        case OracleKind::HeldKarp: return 16;
        case OracleKind::BruteForceCvrp: return 8;
        default: throw std::invalid_argument("size_limit: unresolved oracle kind");
    }
}

std::string oracle_id(OracleKind kind) {
    switch (kind) {
        case OracleKind::BruteForceTsp: return "brute-force-tsp";
        case OracleKind::HeldKarp: return "held-karp";
        case OracleKind::BruteForceCvrp: return "brute-force-cvrp";
        default: return "auto";
    }
}

double oracle_cost(const Instance& inst, OracleKind kind) {
    switch (resolve(kind, inst)) {
        case OracleKind::BruteForceTsp: return oracles::brute_force_tsp(inst).cost;
        case OracleKind::HeldKarp: return oracles::held_karp(inst).cost;
        case OracleKind::BruteForceCvrp: return oracles::brute_force_cvrp(inst).cost;
        default: throw std::invalid_argument("oracle_cost: unresolved oracle kind");
    }
}

void fnv_mix(std::uint64_t& h, const void* bytes, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
}

std::uint64_t instance_key(const Instance& inst, OracleKind kind) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const int k = static_cast<int>(kind);
    fnv_mix(h, &k, sizeof(k));
    const int cvrp = inst.is_cvrp ? 1 : 0;
    fnv_mix(h, &cvrp, sizeof(cvrp));
    for (const Point& p : inst.coords) {
        fnv_mix(h, &p.x, sizeof(double));
        fnv_mix(h, &p.y, sizeof(double));
    }
    if (inst.is_cvrp) {
        fnv_mix(h, &inst.depot.x, sizeof(double));
        fnv_mix(h, &inst.depot.y, sizeof(double));
        fnv_mix(h, inst.demands.data(), inst.demands.size() * sizeof(int));
        fnv_mix(h, &inst.capacity, sizeof(int));
    }
    return h;
}

} // namespace

NamedSolver oracle_solver(OracleKind kind) {
    return {oracle_id(kind), [kind](const Instance& inst) { return oracle_cost(inst, kind); }};
}

double OracleCache::reference(const Instance& inst, OracleKind kind) {
    const OracleKind resolved = resolve(kind, inst);
    const std::uint64_t key = instance_key(inst, resolved);
    auto it = costs_.find(key);
    if (it != costs_.end()) return it->second;
    const double cost = oracle_cost(inst, resolved);
    costs_.emplace(key, cost);
    return cost;
}

GapReport evaluate(const NamedSolver& solver, const std::vector<Instance>& dataset,
                   OracleKind reference, OracleCache* cache) {
    if (dataset.empty()) throw std::invalid_argument("evaluate: empty dataset");

    std::string oversized;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Instance& inst = dataset[i];
        const int limit = size_limit(resolve(reference, inst));
        const int n = inst.n();
        if (n > limit) {
            if (!oversized.empty()) oversized += ", ";
            oversized += std::to_string(i) + " (N=" + std::to_string(n) + ")";
        }
    }
    if (!oversized.empty())
        throw std::invalid_argument("evaluate: oracle size exceeded for instances " + oversized);

    std::vector<double> costs, refs;
    costs.reserve(dataset.size());
    refs.reserve(dataset.size());
    OracleCache local;
    OracleCache& store = cache ? *cache : local;
    for (const Instance& inst : dataset) {
        costs.push_back(solver.cost(inst));
        refs.push_back(store.reference(inst, reference));
    }
    return solutions::make_gap_report(costs, refs, solver.id, oracle_id(reference));
}

namespace {

std::uint64_t bench_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    std::uint64_t s = seed ^ (tag * 0xd1342543de82ef95ULL);
    splitmix64_next(s);
    s ^= index * 0x2545f4914f6cdd1dULL;
    return splitmix64_next(s);
}

constexpr std::uint64_t kTagEval = 11;
constexpr std::uint64_t kTagInit = 12;
constexpr std::uint64_t kTagTrain = 13;
constexpr std::uint64_t kTagPool = 14;
constexpr std::uint64_t kTagFineTune = 15;

std::vector<Instance> eval_dataset(const TaskSpec& task, int size, std::uint64_t seed) {
    TaskSpec s = task;
    s.seed = bench_seed(seed, kTagEval, 0);
    return taskgen::generate_dataset(s, size);
}

ParameterSet fresh_policy(const TaskSpec& task, policy::PolicyArch arch, std::uint64_t seed) {
    arch.problem = task.problem;
    return policy::init_params(arch, bench_seed(seed, kTagInit, 0));
}

} // namespace

GenMatrix generalization_matrix(const std::vector<TaskSpec>& tasks, const GenMatrixConfig& cfg) {
    if (tasks.empty()) throw std::invalid_argument("generalization_matrix: no tasks");
    for (const auto& t : tasks) t.validate();
    cfg.train.validate();

    GenMatrix matrix;
    std::vector<std::vector<Instance>> test_sets;
    for (const auto& t : tasks) {
        matrix.task_ids.push_back(t.id());
        test_sets.push_back(eval_dataset(t, cfg.eval_size, cfg.seed));
    }

    OracleCache cache;
    for (std::size_t row = 0; row < tasks.size(); ++row) {
        ParameterSet theta0 = fresh_policy(tasks[row], cfg.arch, cfg.seed);
        const auto trained =
            metatrain::train_rl(tasks[row], theta0, cfg.train, cfg.train_batches,
                                cfg.train.baseline_refresh_every, /*reset_adam_per_chunk=*/false,
                                bench_seed(cfg.seed, kTagTrain, row));
        const NamedSolver solver = policy_solver(trained.theta, "policy@" + tasks[row].id());
        std::vector<double> row_gaps;
        for (const auto& test_set : test_sets)
            row_gaps.push_back(evaluate(solver, test_set, OracleKind::Auto, &cache).mean_gap);
        matrix.mean_gap.push_back(std::move(row_gaps));
    }
    return matrix;
}

namespace {

/// Fine-tunes theta for the largest K requested and evaluates the greedy
/// policy at each K in k_list against the shared test set.
MethodCurve fine_tune_curve(const std::string& method, const ParameterSet& theta,
                            const TaskSpec& target, const std::vector<int>& k_list,
                            const std::vector<Instance>& test_set, const ComparisonConfig& cfg,
                            OracleCache& cache) {
    int max_k = 0;
    for (int k : k_list) {
        if (k < 0) throw std::invalid_argument("fine-tune curve: negative K");
        max_k = std::max(max_k, k);
    }
    TaskSpec pool_spec = target;
    pool_spec.seed = bench_seed(cfg.seed, kTagPool, 0);
    auto pool = rltrain::InstancePool::from_instances(
        taskgen::generate_dataset(pool_spec, cfg.fine_tune_pool),
        bench_seed(cfg.seed, kTagPool, 1));
    const auto trajectory = metatrain::fine_tune_rl(theta, pool, max_k, cfg.fine_tune,
                                                    bench_seed(cfg.seed, kTagFineTune, 0));
    MethodCurve curve;
    curve.method = method;
    for (int k : k_list) {
        curve.k_values.push_back(k);
        const NamedSolver solver = policy_solver(trajectory[k], method + "@K" + std::to_string(k));
        curve.mean_gap.push_back(evaluate(solver, test_set, OracleKind::Auto, &cache).mean_gap);
    }
    return curve;
}

} // namespace

ComparisonReport meta_vs_multi_report(const TaskSet& prior, const TaskSpec& target,
                                      const std::vector<int>& k_list,
                                      const ComparisonConfig& cfg) {
    prior.validate();
    target.validate();
    cfg.meta.validate();
    cfg.fine_tune.validate();
    if (k_list.empty()) throw std::invalid_argument("meta_vs_multi_report: empty K list");
    for (const auto& t : prior.tasks) {
        if (t.id() == target.id())
            throw std::invalid_argument("meta_vs_multi_report: target leaks into prior");
    }

    ComparisonReport report;
    report.target_id = target.id();
    report.eval_size = cfg.eval_size;
    report.seed = cfg.seed;
    const auto test_set = eval_dataset(target, cfg.eval_size, cfg.seed);
    OracleCache cache;

    const ParameterSet theta0 = fresh_policy(target, cfg.arch, cfg.seed);
    const int budget = cfg.meta.outer_iters * cfg.meta.inner_steps;

    const auto meta = metatrain::meta_train_rl(prior, theta0, cfg.meta);
    report.curves.push_back(
        fine_tune_curve("meta", meta.theta, target, k_list, test_set, cfg, cache));

    const auto multi = metatrain::multi_task_train(prior, theta0, cfg.meta.inner, budget,
                                                   bench_seed(cfg.seed, kTagTrain, 1));
    report.curves.push_back(
        fine_tune_curve("multi", multi.theta, target, k_list, test_set, cfg, cache));

    // Declared protocol difference: the from-scratch oracle model gets the
    // same step budget as the meta/multi runs.
    const auto oracle = metatrain::train_rl(target, theta0, cfg.meta.inner, budget,
                                            cfg.meta.inner_steps, /*reset_adam_per_chunk=*/false,
                                            bench_seed(cfg.seed, kTagTrain, 2));
    report.curves.push_back(
        fine_tune_curve("oracle-from-scratch", oracle.theta, target, k_list, test_set, cfg, cache));

    MethodCurve fi;
    fi.method = "farthest-insertion";
    const double fi_gap =
        evaluate(farthest_insertion_solver(), test_set, OracleKind::Auto, &cache).mean_gap;
    for (int k : k_list) {
        fi.k_values.push_back(k);
        fi.mean_gap.push_back(fi_gap);
    }
    report.curves.push_back(std::move(fi));
    return report;
}

AblationReport epsilon_ablation(const TaskSet& prior, const TaskSpec& target,
                                const std::vector<double>& eps_values, bool plus_decaying,
                                const ComparisonConfig& cfg) {
    prior.validate();
    target.validate();
    cfg.meta.validate();
    if (eps_values.empty() && !plus_decaying)
        throw std::invalid_argument("epsilon_ablation: no epsilon settings");

    AblationReport report;
    report.target_id = target.id();
    report.eval_size = cfg.eval_size;
    report.seed = cfg.seed;
    const auto test_set = eval_dataset(target, cfg.eval_size, cfg.seed);
    OracleCache cache;
    const ParameterSet theta0 = fresh_policy(target, cfg.arch, cfg.seed);

    auto run_setting = [&](const std::string& label, double fixed_eps) {
        metatrain::MetaConfig meta_cfg = cfg.meta;
        meta_cfg.fixed_eps = fixed_eps;
        const auto meta = metatrain::meta_train_rl(prior, theta0, meta_cfg);
        const auto curve =
            fine_tune_curve("eps=" + label, meta.theta, target, {0, 50}, test_set, cfg, cache);
        report.rows.push_back({label, curve.mean_gap[0], curve.mean_gap[1]});
    };

    for (double eps : eps_values) {
        if (eps <= 0.0 || eps > 1.0)
            throw std::invalid_argument("epsilon_ablation: fixed eps must be in (0,1]");
        std::string label = std::to_string(eps);
        label.erase(label.find_last_not_of('0') + 1);
        if (!label.empty() && label.back() == '.') label.pop_back();
        run_setting(label, eps);
    }
    if (plus_decaying) run_setting("decaying", -1.0);
    return report;
}

FineTuneResult per_instance_fine_tune(const ParameterSet& theta, const Instance& inst, int k_steps,
                                      rltrain::TrainConfig cfg, std::uint64_t seed,
                                      double reference_cost) {
    if (k_steps < 0) throw std::invalid_argument("per_instance_fine_tune: k_steps must be >= 0");
    cfg.validate();
    auto pool =
        rltrain::InstancePool::from_instances({inst}, bench_seed(seed, kTagPool, 2));

    FineTuneResult result;
    ParameterSet theta_t = theta;
    ParameterSet baseline = theta;
    rltrain::AdamState adam = rltrain::AdamState::init(theta_t);
    RandomStream rng(bench_seed(seed, kTagFineTune, 1));

    result.best = policy::greedy_rollout(theta_t, inst);
    result.best_cost = result.best.cost;
    result.best_seen.push_back(result.best_cost);
    for (int k = 0; k < k_steps; ++k) {
        rltrain::rl_inner_step(theta_t, baseline, pool, cfg, adam, rng);
        const policy::Rollout greedy = policy::greedy_rollout(theta_t, inst);
        if (greedy.cost < result.best_cost) {
            result.best = greedy;
            result.best_cost = greedy.cost;
        }
        result.best_seen.push_back(result.best_cost);
        if (greedy.cost < policy::greedy_rollout(baseline, inst).cost) baseline = theta_t;
    }
    if (reference_cost > 0.0)
        result.gap = solutions::optimality_gap(result.best_cost, reference_cost);
    return result;
}

} // namespace metanco::evalbench
