#pragma once

#include "metanco/solutions.hpp"

namespace metanco::oracles {

struct TspResult {
    Tour tour;
    double cost = 0.0;
};

struct CvrpResult {
    RoutePlan plan;
    double cost = 0.0;
};

/// Exhaustive cycle enumeration; N <= 10. Ties broken by lexicographically
/// smallest permutation starting at node 0.
TspResult brute_force_tsp(const Instance& inst);

/// Held-Karp subset dynamic program; N <= 16 (2^N * N table).
TspResult held_karp(const Instance& inst);

/// Exact CVRP via capacity-feasible partition enumeration; N <= 8.
CvrpResult brute_force_cvrp(const Instance& inst);

/// Farthest-insertion construction heuristic; N >= 2. Ties to lowest index.
TspResult farthest_insertion(const Instance& inst);

/// Greedy nearest-unvisited construction from `start`; ties to lowest index.
TspResult nearest_neighbor(const Instance& inst, int start = 0);

} // namespace metanco::oracles
