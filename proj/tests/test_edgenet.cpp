#include "metanco/edgenet.hpp"

#include "helpers.hpp"
#include "metanco/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace metanco;
using testutil::tsp_instance;

namespace {

edgenet::EdgeNetArch small_arch() {
    edgenet::EdgeNetArch arch;
    arch.node_dim = 6;
    arch.edge_dim = 4;
    arch.layers = 2;
    return arch;
}

} // namespace

TEST_CASE("triangle labels use every edge") {
    const auto labels = edgenet::labels_from_tour(Tour{{0, 1, 2}}, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(labels.at(i, j) == (i == j ? 0.0 : 1.0));
}

TEST_CASE("unit-square optimal tour labels sides not diagonals") {
    const auto labels = edgenet::labels_from_tour(Tour{{0, 1, 2, 3}}, 4);
    CHECK(labels.at(0, 1) == 1.0);
    CHECK(labels.at(1, 2) == 1.0);
    CHECK(labels.at(2, 3) == 1.0);
    CHECK(labels.at(3, 0) == 1.0);
    CHECK(labels.at(0, 2) == 0.0);
    CHECK(labels.at(1, 3) == 0.0);
}

TEST_CASE("held_karp labels have row sums of exactly 2") {
    const Instance inst = testutil::random_tsp(8, 800);
    const auto tour = oracles::held_karp(inst).tour;
    const auto labels = edgenet::labels_from_tour(tour, 8);
    for (int i = 0; i < 8; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 8; ++j) sum += labels.at(i, j);
        CHECK(sum == doctest::Approx(2.0));
        CHECK(labels.at(i, i) == 0.0);
    }
}

TEST_CASE("labels_from_tour rejects N < 3") {
    CHECK_THROWS(edgenet::labels_from_tour(Tour{{0, 1}}, 2));
}

TEST_CASE("plan labels give the depot degree 2x routes") {
    RoutePlan plan{{{0, 1}, {2, 3}, {4, 5}}};
    const auto labels = edgenet::labels_from_plan(plan, 6);
    double depot_degree = 0.0;
    for (int j = 0; j < 7; ++j) depot_degree += labels.at(0, j);
    CHECK(depot_degree == doctest::Approx(6.0)); // 2 * 3 multi-customer routes
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) CHECK(labels.at(i, j) == labels.at(j, i));

    SUBCASE("a singleton route folds its two legs onto one labeled edge") {
        RoutePlan folded{{{0}, {1, 2}}};
        const auto l = edgenet::labels_from_plan(folded, 3);
        double degree = 0.0;
        for (int j = 0; j < 4; ++j) degree += l.at(0, j);
        CHECK(degree == doctest::Approx(3.0)); // 1 (folded) + 2
    }
}

TEST_CASE("prediction is symmetric, clamped, zero-diagonal") {
    const ParameterSet theta = edgenet::init_params(small_arch(), 3);
    const Instance inst = testutil::random_tsp(7, 810);
    const auto pred = edgenet::predict(theta, inst);
    for (int i = 0; i < 7; ++i) {
        CHECK(pred.at(i, i) == 0.0);
        for (int j = 0; j < 7; ++j) {
            CHECK(pred.at(i, j) == pred.at(j, i));
            if (i != j) {
                CHECK(pred.at(i, j) >= edgenet::kProbClampLo);
                CHECK(pred.at(i, j) <= edgenet::kProbClampHi);
            }
        }
    }
}

TEST_CASE("prediction permutes consistently with node relabeling") {
    const ParameterSet theta = edgenet::init_params(small_arch(), 5);
    const Instance inst = testutil::random_tsp(5, 820);
    Instance rotated = inst;
    std::rotate(rotated.coords.begin(), rotated.coords.begin() + 2, rotated.coords.end());
    const auto a = edgenet::predict(theta, inst);
    const auto b = edgenet::predict(theta, rotated);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(b.at(i, j) == doctest::Approx(a.at((i + 2) % 5, (j + 2) % 5)).epsilon(1e-9));
}

TEST_CASE("parameter count matches the closed form") {
    const auto arch = small_arch();
    CHECK(edgenet::init_params(arch, 7).total_count() == arch.param_count());
}

TEST_CASE("uniform half prediction on a triangle costs ln 2") {
    edgenet::EdgePrediction pred;
    pred.n = 3;
    pred.shat.assign(9, 0.5);
    const auto labels = edgenet::labels_from_tour(Tour{{0, 1, 2}}, 3);
    CHECK(edgenet::weighted_bce_loss(pred, labels, 1.0, 1.0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("perfect clamped prediction has near-zero loss") {
    const Instance inst = testutil::random_tsp(6, 830);
    const auto tour = oracles::held_karp(inst).tour;
    const auto labels = edgenet::labels_from_tour(tour, 6);
    edgenet::EdgePrediction pred;
    pred.n = 6;
    pred.shat.resize(36);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            pred.shat[i * 6 + j] = labels.at(i, j) > 0.5 ? edgenet::kProbClampHi
                                                         : edgenet::kProbClampLo;
    const double loss = edgenet::weighted_bce_loss(pred, labels, 1.0, 2.0);
    CHECK(loss <= 1e-6 * 2.0 * std::fabs(std::log(1e-7)));
}

TEST_CASE("loss is minimized at the clamped ground truth") {
    const Instance inst = testutil::random_tsp(5, 840);
    const auto labels = edgenet::labels_from_tour(oracles::held_karp(inst).tour, 5);
    edgenet::EdgePrediction best;
    best.n = 5;
    best.shat.resize(25);
    for (int i = 0; i < 25; ++i)
        best.shat[i] = labels.s[i] > 0.5 ? edgenet::kProbClampHi : edgenet::kProbClampLo;
    const double best_loss = edgenet::weighted_bce_loss(best, labels, 1.0, 1.5);
    RandomStream rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        edgenet::EdgePrediction perturbed = best;
        for (double& v : perturbed.shat)
            v = std::clamp(v + rng.uniform(-0.3, 0.3), edgenet::kProbClampLo,
                           edgenet::kProbClampHi);
        CHECK(edgenet::weighted_bce_loss(perturbed, labels, 1.0, 1.5) >= best_loss);
    }
}

TEST_CASE("non-positive class weights are rejected") {
    edgenet::EdgePrediction pred;
    pred.n = 3;
    pred.shat.assign(9, 0.5);
    const auto labels = edgenet::labels_from_tour(Tour{{0, 1, 2}}, 3);
    CHECK_THROWS(edgenet::weighted_bce_loss(pred, labels, 0.0, 1.0));
    CHECK_THROWS(edgenet::weighted_bce_loss(pred, labels, 1.0, -1.0));
}

TEST_CASE("default class weights compensate imbalance") {
    const auto labels = edgenet::labels_from_tour(Tour{{0, 1, 2, 3, 4, 5}}, 6);
    const auto [w0, w1] = edgenet::default_class_weights({labels});
    CHECK(w0 == 1.0);
    // 15 pairs, 6 positive tour edges, 9 negatives.
    CHECK(w1 == doctest::Approx(9.0 / 6.0));
}

TEST_CASE("loss gradient matches finite differences through the network") {
    const auto arch = small_arch();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ParameterSet theta = edgenet::init_params(arch, 900 + seed);
        const Instance inst = testutil::random_tsp(5, 850 + seed);
        const auto labels = edgenet::labels_from_tour(oracles::held_karp(inst).tour, 5);

        ParamBinding binding(theta);
        ad::Var pred = edgenet::predict_graph(binding, inst);
        ad::backward(edgenet::weighted_bce_loss_graph(pred, labels, 1.0, 1.5));
        const GradMap grads = binding.grads();

        auto loss_at = [&](const ParameterSet& ps) {
            ParamBinding b(ps, false);
            return edgenet::weighted_bce_loss_graph(edgenet::predict_graph(b, inst), labels, 1.0,
                                                    1.5)
                ->value.data[0];
        };
        const double h = 1e-5;
        double worst = 0.0;
        for (const auto& [name, arr] : theta.values) {
            for (std::size_t i = 0; i < arr.size(); ++i) {
                ParameterSet plus = theta, minus = theta;
                plus.values.at(name).data[i] += h;
                minus.values.at(name).data[i] -= h;
                const double numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * h);
                const double analytic = grads.at(name).data[i];
                const double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-6});
                worst = std::max(worst, std::fabs(numeric - analytic) / denom);
            }
        }
        CHECK(worst < 1e-3);
    }
}

TEST_CASE("greedy decode reconstructs a planted tour") {
    const int n = 7;
    const Tour planted{{0, 3, 5, 1, 6, 2, 4}};
    edgenet::EdgePrediction pred;
    pred.n = n;
    pred.shat.assign(n * n, 1e-6);
    const auto labels = edgenet::labels_from_tour(planted, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (labels.at(i, j) > 0.5) pred.shat[i * n + j] = 0.9;
    const Instance inst = testutil::random_tsp(n, 860);
    const Tour decoded = edgenet::greedy_decode(pred, inst);
    CHECK(solutions::tour_length(inst, decoded) ==
          doctest::Approx(solutions::tour_length(inst, planted)).epsilon(1e-12));
}

TEST_CASE("uniform prediction decodes to identity order") {
    edgenet::EdgePrediction pred;
    pred.n = 5;
    pred.shat.assign(25, 0.4);
    const Instance inst = testutil::random_tsp(5, 870);
    CHECK(edgenet::greedy_decode(pred, inst).order == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("decode validity sweep") {
    const ParameterSet theta = edgenet::init_params(small_arch(), 13);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Instance inst = testutil::random_tsp(10, 880 + seed);
        const Tour t = edgenet::greedy_decode(edgenet::predict(theta, inst), inst);
        CHECK(solutions::is_permutation(t, 10));
    }
}
