#include "metanco/rltrain.hpp"

#include "helpers.hpp"
#include "metanco/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace metanco;
using rltrain::AdamState;
using rltrain::TrainConfig;

namespace {

policy::PolicyArch tiny_arch() {
    policy::PolicyArch arch;
    arch.embed_dim = 8;
    arch.layers = 1;
    return arch;
}

/// Student-t CDF by direct Simpson integration of the density; independent of
/// the incomplete-beta implementation under test.
double t_cdf_by_integration(double t, int nu) {
    const double log_norm = std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
                            0.5 * std::log(nu * M_PI);
    auto pdf = [&](double x) {
        return std::exp(log_norm - (nu + 1.0) / 2.0 * std::log1p(x * x / nu));
    };
    // Integrate over the finite interval [min(t,0), max(t,0)] and use the
    // density's symmetry; this avoids truncating the heavy tails.
    const double a = std::min(t, 0.0), b = std::max(t, 0.0);
    const int steps = 400000;
    const double h = (b - a) / steps;
    double acc = pdf(a) + pdf(b);
    for (int i = 1; i < steps; ++i) acc += (i % 2 ? 4.0 : 2.0) * pdf(a + i * h);
    const double mass = acc * h / 3.0;
    return t < 0.0 ? 0.5 - mass : 0.5 + mass;
}

} // namespace

TEST_CASE("TrainConfig validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    SUBCASE("alpha") {
        cfg.alpha = 0.0;
        CHECK_THROWS(cfg.validate());
    }
    SUBCASE("batch size") {
        cfg.batch_size = 0;
        CHECK_THROWS(cfg.validate());
    }
    SUBCASE("beta in (0,1)") {
        cfg.ttest_threshold = 1.0;
        CHECK_THROWS(cfg.validate());
    }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    ParameterSet theta = policy::init_params(tiny_arch(), 3);
    const ParameterSet before = theta;
    AdamState state = AdamState::init(theta);
    GradMap zero;
    for (const auto& [name, arr] : theta.values) zero.emplace(name, ad::Array(arr.rows, arr.cols));
    rltrain::adam_step(theta, zero, state, 1e-3, TrainConfig{});
    CHECK(state.step == 1);
    for (const auto& [name, arr] : theta.values)
        CHECK(arr.data == before.values.at(name).data);
}

TEST_CASE("adam: first step from zero moments is the bias-corrected sign step") {
    ParameterSet theta;
    ad::Array w(1, 2);
    w.data = {0.0, 10.0};
    theta.values.emplace("w", w);
    AdamState state = AdamState::init(theta);
    GradMap grad;
    ad::Array g(1, 2);
    g.data = {0.5, -2.0};
    grad.emplace("w", g);
    const TrainConfig cfg;
    rltrain::adam_step(theta, grad, state, 1e-3, cfg);
    // mhat = g, vhat = g^2 -> update = -alpha * g / (|g| + eps)
    CHECK(theta.values.at("w").data[0] ==
          doctest::Approx(0.0 - 1e-3 * 0.5 / (0.5 + cfg.adam_eps)).epsilon(1e-12));
    CHECK(theta.values.at("w").data[1] ==
          doctest::Approx(10.0 - 1e-3 * (-2.0) / (2.0 + cfg.adam_eps)).epsilon(1e-12));
}

TEST_CASE("adam: constant gradient tends to steps of magnitude alpha") {
    ParameterSet theta;
    theta.values.emplace("w", ad::Array(1, 1));
    AdamState state = AdamState::init(theta);
    GradMap grad;
    ad::Array g(1, 1);
    g.data = {0.37};
    grad.emplace("w", g);
    const TrainConfig cfg;
    double prev = 0.0;
    double last_step = 0.0;
    for (int i = 0; i < 1000; ++i) {
        prev = theta.values.at("w").data[0];
        rltrain::adam_step(theta, grad, state, 1e-3, cfg);
        last_step = prev - theta.values.at("w").data[0];
    }
    CHECK(last_step == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("adam rejects shape mismatches") {
    ParameterSet theta;
    theta.values.emplace("w", ad::Array(2, 2));
    AdamState state = AdamState::init(theta);
    GradMap grad;
    grad.emplace("w", ad::Array(3, 3));
    CHECK_THROWS(rltrain::adam_step(theta, grad, state, 1e-3, TrainConfig{}));
}

TEST_CASE("incomplete beta basics") {
    // I_x(1,1) = x
    for (double x : {0.1, 0.35, 0.8})
        CHECK(rltrain::incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
    CHECK(rltrain::incomplete_beta(2.5, 3.5, 0.0) == 0.0);
    CHECK(rltrain::incomplete_beta(2.5, 3.5, 1.0) == 1.0);
}

TEST_CASE("student t CDF special values") {
    CHECK(rltrain::student_t_cdf(0.0, 5) == doctest::Approx(0.5));
    // nu = 1 is the Cauchy distribution: F(t) = 1/2 + atan(t)/pi.
    for (double t : {-2.0, -0.3, 0.7, 3.1})
        CHECK(rltrain::student_t_cdf(t, 1) ==
              doctest::Approx(0.5 + std::atan(t) / M_PI).epsilon(1e-10));
    // nu = 2 closed form: F(t) = 1/2 + t / (2*sqrt(2 + t^2)).
    for (double t : {-1.5, 0.4, 2.2})
        CHECK(rltrain::student_t_cdf(t, 2) ==
              doctest::Approx(0.5 + t / (2.0 * std::sqrt(2.0 + t * t))).epsilon(1e-10));
}

TEST_CASE("t-test on identical lists") {
    const auto res = rltrain::one_sided_paired_ttest({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
    CHECK(res.t_statistic == 0.0);
    CHECK(res.p_value == doctest::Approx(0.5));
}

TEST_CASE("t-test degenerate zero-variance cases") {
    CHECK(rltrain::one_sided_paired_ttest({0.0, 1.0, 2.0}, {1.0, 2.0, 3.0}).p_value == 0.0);
    CHECK(rltrain::one_sided_paired_ttest({2.0, 3.0, 4.0}, {1.0, 2.0, 3.0}).p_value == 1.0);
}

TEST_CASE("t-test fixture matches independent CDF integration") {
    // differences {-1.0, -0.5, -1.5, -0.8, -1.2}
    const std::vector<double> base{10.0, 10.0, 10.0, 10.0, 10.0};
    const std::vector<double> cand{9.0, 9.5, 8.5, 9.2, 8.8};
    const auto res = rltrain::one_sided_paired_ttest(cand, base);

    const double mean = -1.0;
    double var = 0.0;
    for (double d : {-1.0, -0.5, -1.5, -0.8, -1.2}) var += (d - mean) * (d - mean);
    var /= 4.0;
    const double expect_t = mean / std::sqrt(var / 5.0);
    CHECK(res.t_statistic == doctest::Approx(expect_t).epsilon(1e-12));
    CHECK(res.sample_size == 5);
    CHECK(res.p_value == doctest::Approx(t_cdf_by_integration(expect_t, 4)).epsilon(1e-8));
}

TEST_CASE("p-value is monotone decreasing in the t statistic") {
    double prev = 1.1;
    for (double shift : {2.0, 1.0, 0.0, -1.0, -2.0}) {
        const std::vector<double> base{5.0, 6.0, 7.0, 8.0};
        std::vector<double> cand;
        for (std::size_t i = 0; i < base.size(); ++i)
            cand.push_back(base[i] + shift + 0.1 * (i % 2 ? 1 : -1));
        const double p = rltrain::one_sided_paired_ttest(cand, base).p_value;
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("t-test requires at least two pairs") {
    CHECK_THROWS(rltrain::one_sided_paired_ttest({1.0}, {2.0}));
    CHECK_THROWS(rltrain::one_sided_paired_ttest({1.0, 2.0}, {2.0}));
}

TEST_CASE("baseline update composition") {
    const ParameterSet theta = policy::init_params(tiny_arch(), 5);
    std::vector<Instance> eval_set;
    for (std::uint64_t i = 0; i < 8; ++i) eval_set.push_back(testutil::random_tsp(6, 900 + i));
    SUBCASE("identical parameters never update") {
        ParameterSet baseline = theta;
        CHECK_FALSE(rltrain::maybe_update_baseline(theta, baseline, eval_set, 0.05));
    }
    SUBCASE("decision matches the t-test") {
        const ParameterSet other = policy::init_params(tiny_arch(), 6);
        ParameterSet baseline = other;
        const auto cand = rltrain::greedy_costs(theta, eval_set);
        const auto base = rltrain::greedy_costs(baseline, eval_set);
        const bool expect = rltrain::one_sided_paired_ttest(cand, base).p_value < 0.05;
        CHECK(rltrain::maybe_update_baseline(theta, baseline, eval_set, 0.05) == expect);
    }
}

TEST_CASE("zero advantage yields a zero gradient") {
    // Two-node tours all have the same cost, so sampled == greedy baseline.
    const ParameterSet theta = policy::init_params(tiny_arch(), 7);
    std::vector<Instance> batch{testutil::random_tsp(2, 910), testutil::random_tsp(2, 911)};
    RandomStream rng(1);
    const GradMap grad = rltrain::reinforce_batch_gradient(theta, theta, batch, rng);
    for (const auto& [name, g] : grad)
        for (double v : g.data) CHECK(v == 0.0);
}

TEST_CASE("score-function identity: E[grad log pi] = 0") {
    const ParameterSet theta = policy::init_params(tiny_arch(), 9);
    const Instance inst = testutil::random_tsp(3, 920);
    RandomStream rng(2);
    const int n_samples = 4000;

    std::map<std::string, ad::Array> sum, sumsq;
    for (const auto& [name, arr] : theta.values) {
        sum.emplace(name, ad::Array(arr.rows, arr.cols));
        sumsq.emplace(name, ad::Array(arr.rows, arr.cols));
    }
    for (int s = 0; s < n_samples; ++s) {
        ParamBinding binding(theta);
        auto [rollout, log_prob] = policy::sample_rollout_graph(binding, inst, rng);
        ad::backward(log_prob);
        const GradMap g = binding.grads();
        for (auto& [name, acc] : sum)
            for (std::size_t i = 0; i < acc.size(); ++i) {
                acc.data[i] += g.at(name).data[i];
                sumsq.at(name).data[i] += g.at(name).data[i] * g.at(name).data[i];
            }
    }
    int checked = 0, violations = 0;
    for (const auto& [name, acc] : sum) {
        for (std::size_t i = 0; i < acc.size(); ++i) {
            const double mean = acc.data[i] / n_samples;
            const double var =
                std::max(0.0, sumsq.at(name).data[i] / n_samples - mean * mean);
            const double se = std::sqrt(var / n_samples);
            ++checked;
            if (std::fabs(mean) > 3.0 * se + 1e-12) ++violations;
        }
    }
    // Allow the expected false-positive rate of a 3-sigma componentwise test.
    CHECK(violations <= std::max(2, checked / 100));
}

TEST_CASE("instance pools are deterministic") {
    TaskSpec spec;
    spec.n_nodes = 5;
    spec.seed = 1;
    auto p1 = rltrain::InstancePool::from_spec(spec, 77);
    auto p2 = rltrain::InstancePool::from_spec(spec, 77);
    const auto b1 = p1.next_batch(4);
    const auto b2 = p2.next_batch(4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 5; ++j) CHECK(b1[i].coords[j].x == b2[i].coords[j].x);
}

TEST_CASE("training reduces greedy cost on T_{N=8}") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        TaskSpec spec;
        spec.n_nodes = 8;
        spec.seed = 50 + seed;
        TrainConfig cfg;
        cfg.batch_size = 16;
        const ParameterSet theta0 = policy::init_params(tiny_arch(), 60 + seed);
        ParameterSet theta = theta0;
        ParameterSet baseline = theta0;
        AdamState adam = AdamState::init(theta);
        auto pool = rltrain::InstancePool::from_spec(spec, 70 + seed);
        RandomStream rng(80 + seed);
        for (int b = 0; b < 500; ++b) {
            rltrain::rl_inner_step(theta, baseline, pool, cfg, adam, rng);
            if ((b + 1) % 50 == 0) {
                const auto eval = pool.next_batch(64);
                rltrain::maybe_update_baseline(theta, baseline, eval, cfg.ttest_threshold);
            }
        }
        std::vector<Instance> held_out;
        for (std::uint64_t i = 0; i < 64; ++i)
            held_out.push_back(taskgen::generate_instance(spec, 100000 + i));
        double before = 0.0, after = 0.0;
        for (const auto& inst : held_out) {
            before += policy::greedy_rollout(theta0, inst).cost;
            after += policy::greedy_rollout(theta, inst).cost;
        }
        CHECK(after < before);
    }
}

TEST_CASE("supervised steps descend on a fixed batch") {
    edgenet::EdgeNetArch arch;
    arch.node_dim = 6;
    arch.edge_dim = 4;
    arch.layers = 1;
    ParameterSet theta = edgenet::init_params(arch, 11);
    std::vector<rltrain::LabeledInstance> batch;
    for (std::uint64_t i = 0; i < 4; ++i) {
        const Instance inst = testutil::random_tsp(6, 930 + i);
        batch.push_back({inst, edgenet::labels_from_tour(oracles::held_karp(inst).tour, 6)});
    }
    TrainConfig cfg;
    cfg.alpha = 1e-3;
    AdamState adam = AdamState::init(theta);
    double prev = rltrain::supervised_batch_loss(theta, batch);
    int increases = 0;
    for (int step = 0; step < 50; ++step) {
        rltrain::supervised_batch_step(theta, batch, cfg, adam);
        const double loss = rltrain::supervised_batch_loss(theta, batch);
        if (loss > prev + 1e-12) ++increases;
        prev = loss;
    }
    // Adam momentum can cause isolated uphill steps; the trend must descend.
    CHECK(increases <= 5);
    CHECK(prev < rltrain::supervised_batch_loss(edgenet::init_params(arch, 11), batch));
}

TEST_CASE("supervised loss trajectory is bit-stable across runs") {
    edgenet::EdgeNetArch arch;
    arch.node_dim = 6;
    arch.edge_dim = 4;
    arch.layers = 1;
    std::vector<rltrain::LabeledInstance> batch;
    for (std::uint64_t i = 0; i < 3; ++i) {
        const Instance inst = testutil::random_tsp(5, 940 + i);
        batch.push_back({inst, edgenet::labels_from_tour(oracles::held_karp(inst).tour, 5)});
    }
    auto run = [&] {
        ParameterSet theta = edgenet::init_params(arch, 13);
        TrainConfig cfg;
        AdamState adam = AdamState::init(theta);
        std::vector<double> losses;
        for (int step = 0; step < 10; ++step)
            losses.push_back(rltrain::supervised_batch_step(theta, batch, cfg, adam));
        return losses;
    };
    CHECK(run() == run());
}
