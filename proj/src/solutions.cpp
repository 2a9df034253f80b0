#include "metanco/solutions.hpp"

#include <numeric>
#include <stdexcept>

namespace metanco::solutions {

bool is_permutation(const Tour& t, int n) {
    if (static_cast<int>(t.order.size()) != n) return false;
    std::vector<bool> seen(n, false);
    for (int v : t.order) {
        if (v < 0 || v >= n || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

double tour_length(const Instance& inst, const Tour& t) {
    const int n = inst.n();
    if (!is_permutation(t, n)) throw std::invalid_argument("tour_length: not a permutation");
    if (n == 1) return 0.0;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        total += dist(inst.coords[t.order[i]], inst.coords[t.order[(i + 1) % n]]);
    }
    return total;
}

double plan_cost(const Instance& inst, const RoutePlan& p) {
    const int n = inst.n();
    if (!inst.is_cvrp) throw std::invalid_argument("plan_cost: instance is not CVRP");
    std::vector<bool> seen(n, false);
    double total = 0.0;
    for (std::size_t r = 0; r < p.routes.size(); ++r) {
        const auto& route = p.routes[r];
        if (route.empty()) throw std::invalid_argument("plan_cost: empty route");
        int demand = 0;
        Point prev = inst.depot;
        for (int c : route) {
            if (c < 0 || c >= n) throw std::invalid_argument("plan_cost: customer index out of range");
            if (seen[c]) throw std::invalid_argument("plan_cost: duplicated customer " + std::to_string(c));
            seen[c] = true;
            demand += inst.demands[c];
            total += dist(prev, inst.coords[c]);
            prev = inst.coords[c];
        }
        if (demand > inst.capacity) {
            throw std::invalid_argument("plan_cost: capacity violated on route " + std::to_string(r) +
                                        " (demand " + std::to_string(demand) + " > capacity " +
                                        std::to_string(inst.capacity) + ")");
        }
        total += dist(prev, inst.depot);
    }
    for (int i = 0; i < n; ++i) {
        if (!seen[i]) throw std::invalid_argument("plan_cost: missing customer " + std::to_string(i));
    }
    return total;
}

double optimality_gap(double cost, double reference) {
    if (reference <= 0.0) throw std::invalid_argument("optimality_gap: non-positive reference");
    return 100.0 * (cost - reference) / reference;
}

GapReport make_gap_report(const std::vector<double>& costs,
                          const std::vector<double>& references,
                          const std::string& solver_id,
                          const std::string& reference_id) {
    if (costs.size() != references.size())
        throw std::invalid_argument("make_gap_report: size mismatch");
    if (costs.empty()) throw std::invalid_argument("make_gap_report: empty dataset");
    GapReport report;
    report.solver_id = solver_id;
    report.reference_id = reference_id;
    report.per_instance_gap.reserve(costs.size());
    for (std::size_t i = 0; i < costs.size(); ++i) {
        report.per_instance_gap.push_back(optimality_gap(costs[i], references[i]));
    }
    report.mean_gap = std::accumulate(report.per_instance_gap.begin(),
                                      report.per_instance_gap.end(), 0.0) /
                      static_cast<double>(report.per_instance_gap.size());
    return report;
}

} // namespace metanco::solutions
