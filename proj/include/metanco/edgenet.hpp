#pragma once

#include "metanco/params.hpp"
#include "metanco/solutions.hpp"

#include <vector>

namespace metanco::edgenet {

/// Symmetric 0/1 edge-membership matrix of a reference solution.
struct EdgeLabels {
    int n = 0;
    std::vector<double> s; // n*n row-major

    double at(int i, int j) const { return s[static_cast<std::size_t>(i) * n + j]; }
    double& at(int i, int j) { return s[static_cast<std::size_t>(i) * n + j]; }
};

/// Symmetric probability matrix in (0,1) with zero diagonal.
struct EdgePrediction {
    int n = 0;
    std::vector<double> shat;

    double at(int i, int j) const { return shat[static_cast<std::size_t>(i) * n + j]; }
};

constexpr double kProbClampLo = 1e-7;
constexpr double kProbClampHi = 1.0 - 1e-7;

/// Message-passing edge classifier over the complete graph.
struct EdgeNetArch {
    int node_dim = 16;
    int edge_dim = 8;
    int layers = 2;

    std::size_t param_count() const;
};

ParameterSet init_params(const EdgeNetArch& arch, std::uint64_t seed);
EdgeNetArch arch_from(const ParameterSet& ps);

/// Edge labels of a TSP tour; requires N >= 3 (row sums are exactly 2).
EdgeLabels labels_from_tour(const Tour& t, int n);

/// CVRP variant: labels over the route-edge set on nodes {depot=0,
/// customers 1..N}. The labels are binary edge membership, so the depot
/// degree is 2 * number of routes when every route has >= 2 customers; a
/// singleton route's out and back legs fold onto one labeled edge.
EdgeLabels labels_from_plan(const RoutePlan& p, int n_customers);

EdgePrediction predict(const ParameterSet& theta, const Instance& inst);

/// Differentiable prediction: returns the flattened n*n x 1 symmetric,
/// clamped probability matrix.
ad::Var predict_graph(ParamBinding& binding, const Instance& inst);

/// Weighted binary cross-entropy over unordered pairs i < j, normalized by
/// the pair count. w1 weights positive edges, w0 negatives.
ad::Var weighted_bce_loss_graph(const ad::Var& pred_flat, const EdgeLabels& labels,
                                double w0, double w1);

double weighted_bce_loss(const EdgePrediction& pred, const EdgeLabels& labels,
                         double w0, double w1);

/// Per-batch class weights: w1 = #neg/#pos, w0 = 1.
std::pair<double, double> default_class_weights(const std::vector<EdgeLabels>& batch);

/// Greedy tour construction from node 0 following maximal predicted
/// probability; always returns a valid permutation.
Tour greedy_decode(const EdgePrediction& pred, const Instance& inst);

} // namespace metanco::edgenet
