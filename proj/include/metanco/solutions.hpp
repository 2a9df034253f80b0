#pragma once

#include "metanco/taskgen.hpp"

#include <string>
#include <vector>

namespace metanco {

/// A TSP tour: permutation of {0, ..., N-1}, interpreted as a closed cycle.
struct Tour {
    std::vector<int> order;
};

/// A CVRP solution: customer-index routes, each implicitly depot-anchored.
struct RoutePlan {
    std::vector<std::vector<int>> routes;
};

struct GapReport {
    std::vector<double> per_instance_gap; // percent
    double mean_gap = 0.0;                // percent
    std::string solver_id;
    std::string reference_id;
};

namespace solutions {

bool is_permutation(const Tour& t, int n);

/// Closed-cycle Euclidean length. Throws if t is not a permutation of inst.
double tour_length(const Instance& inst, const Tour& t);

/// Total depot-anchored route length. Throws on capacity violation or on a
/// missing/duplicated customer.
double plan_cost(const Instance& inst, const RoutePlan& p);

/// 100 * (cost - reference) / reference. Throws if reference <= 0.
double optimality_gap(double cost, double reference);

GapReport make_gap_report(const std::vector<double>& costs,
                          const std::vector<double>& references,
                          const std::string& solver_id,
                          const std::string& reference_id);

} // namespace solutions
} // namespace metanco
