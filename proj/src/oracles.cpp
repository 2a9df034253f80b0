#include "metanco/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace metanco::oracles {

namespace {

std::vector<double> distance_matrix(const std::vector<Point>& pts) {
    const int n = static_cast<int>(pts.size());
    std::vector<double> d(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d[static_cast<std::size_t>(i) * n + j] = dist(pts[i], pts[j]);
    return d;
}

} // namespace

TspResult brute_force_tsp(const Instance& inst) {
    const int n = inst.n();
    if (n > 10) throw std::invalid_argument("brute_force_tsp: instance too large for enumeration");
    if (n == 1) return {Tour{{0}}, 0.0};
    if (n == 2) return {Tour{{0, 1}}, 2.0 * dist(inst.coords[0], inst.coords[1])};

    const auto d = distance_matrix(inst.coords);
    std::vector<int> rest(n - 1);
    std::iota(rest.begin(), rest.end(), 1);

    double best_cost = std::numeric_limits<double>::infinity();
    std::vector<int> best = rest;
    do {
        // Each undirected cycle has two directed representatives starting at
        // 0; keep the one with rest.front() < rest.back().
        if (rest.front() > rest.back()) continue;
        double cost = d[rest.front()];
        for (int i = 0; i + 1 < n - 1; ++i)
            cost += d[static_cast<std::size_t>(rest[i]) * n + rest[i + 1]];
        cost += d[static_cast<std::size_t>(rest.back()) * n];
        if (cost < best_cost) {
            best_cost = cost;
            best = rest;
        }
    } while (std::next_permutation(rest.begin(), rest.end()));

    Tour tour;
    tour.order.push_back(0);
    tour.order.insert(tour.order.end(), best.begin(), best.end());
    return {std::move(tour), best_cost};
}

TspResult held_karp(const Instance& inst) {
    const int n = inst.n();
    if (n > 16) throw std::invalid_argument("held_karp: exceeds DP budget");
    if (n == 1) return {Tour{{0}}, 0.0};

    const auto d = distance_matrix(inst.coords);
    const std::size_t n_masks = std::size_t{1} << n;
    const double inf = std::numeric_limits<double>::infinity();
    // dp[mask][j]: cheapest path from 0 visiting exactly `mask` and ending at j.
    std::vector<double> dp(n_masks * n, inf);
    std::vector<std::int8_t> parent(n_masks * n, -1);
    dp[(std::size_t{1} << 0) * n + 0] = 0.0;

    for (std::size_t mask = 1; mask < n_masks; ++mask) {
        if (!(mask & 1)) continue; // paths always contain node 0
        for (int j = 0; j < n; ++j) {
            const double cur = dp[mask * n + j];
            if (cur == inf || !(mask & (std::size_t{1} << j))) continue;
            for (int k = 0; k < n; ++k) {
                if (mask & (std::size_t{1} << k)) continue;
                const std::size_t next = mask | (std::size_t{1} << k);
                const double cand = cur + d[static_cast<std::size_t>(j) * n + k];
                if (cand < dp[next * n + k]) {
                    dp[next * n + k] = cand;
                    parent[next * n + k] = static_cast<std::int8_t>(j);
                }
            }
        }
    }

    const std::size_t full = n_masks - 1;
    double best_cost = inf;
    int best_end = -1;
    for (int j = 1; j < n; ++j) {
        const double cand = dp[full * n + j] + d[static_cast<std::size_t>(j) * n];
        if (cand < best_cost) {
            best_cost = cand;
            best_end = j;
        }
    }

    Tour tour;
    tour.order.resize(n);
    std::size_t mask = full;
    int node = best_end;
    for (int i = n - 1; i >= 0; --i) {
        tour.order[i] = node;
        const int prev = parent[mask * n + node];
        mask &= ~(std::size_t{1} << node);
        node = prev;
    }
    return {std::move(tour), best_cost};
}

namespace {

/// Cheapest open route depot -> group -> depot, by permutation enumeration.
double best_route_order(const Instance& inst, std::vector<int> group, std::vector<int>& best_order) {
    std::sort(group.begin(), group.end());
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> perm = group;
    do {
        double cost = dist(inst.depot, inst.coords[perm.front()]);
        for (std::size_t i = 0; i + 1 < perm.size(); ++i)
            cost += dist(inst.coords[perm[i]], inst.coords[perm[i + 1]]);
        cost += dist(inst.coords[perm.back()], inst.depot);
        if (cost < best) {
            best = cost;
            best_order = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

struct PartitionSearch {
    const Instance& inst;
    std::vector<std::vector<int>> groups;
    std::vector<int> group_demand;
    double best_cost = std::numeric_limits<double>::infinity();
    RoutePlan best_plan;

    explicit PartitionSearch(const Instance& i) : inst(i) {}

    void recurse(int customer) {
        const int n = inst.n();
        if (customer == n) {
            double total = 0.0;
            RoutePlan plan;
            for (const auto& g : groups) {
                std::vector<int> order;
                total += best_route_order(inst, g, order);
                if (total >= best_cost) return;
                plan.routes.push_back(std::move(order));
            }
            if (total < best_cost) {
                best_cost = total;
                best_plan = std::move(plan);
            }
            return;
        }
        const int demand = inst.demands[customer];
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (group_demand[g] + demand > inst.capacity) continue;
            groups[g].push_back(customer);
            group_demand[g] += demand;
            recurse(customer + 1);
            groups[g].pop_back();
            group_demand[g] -= demand;
        }
        groups.push_back({customer});
        group_demand.push_back(demand);
        recurse(customer + 1);
        groups.pop_back();
        group_demand.pop_back();
    }
};

} // namespace

CvrpResult brute_force_cvrp(const Instance& inst) {
    if (!inst.is_cvrp) throw std::invalid_argument("brute_force_cvrp: instance is not CVRP");
    if (inst.n() > 8) throw std::invalid_argument("brute_force_cvrp: instance too large for enumeration");
    PartitionSearch search(inst);
    search.recurse(0);
    return {std::move(search.best_plan), search.best_cost};
}

TspResult farthest_insertion(const Instance& inst) {
    const int n = inst.n();
    if (n < 2) throw std::invalid_argument("farthest_insertion: need at least 2 nodes");
    const auto d = distance_matrix(inst.coords);
    auto dd = [&](int i, int j) { return d[static_cast<std::size_t>(i) * n + j]; };

    // Farthest pair, ties to lowest indices.
    int a = 0, b = 1;
    double best_pair = -1.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (dd(i, j) > best_pair) {
                best_pair = dd(i, j);
                a = i;
                b = j;
            }

    std::vector<int> tour = {a, b};
    std::vector<bool> in_tour(n, false);
    in_tour[a] = in_tour[b] = true;
    // min_to_tour[v]: distance from v to the closest tour node.
    std::vector<double> min_to_tour(n);
    for (int v = 0; v < n; ++v) min_to_tour[v] = std::min(dd(v, a), dd(v, b));

    while (static_cast<int>(tour.size()) < n) {
        int pick = -1;
        double far = -1.0;
        for (int v = 0; v < n; ++v) {
            if (in_tour[v]) continue;
            if (min_to_tour[v] > far) {
                far = min_to_tour[v];
                pick = v;
            }
        }
        // Cheapest insertion position, ties to earliest.
        const int m = static_cast<int>(tour.size());
        int best_pos = 0;
        double best_inc = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            const int u = tour[i];
            const int w = tour[(i + 1) % m];
            const double inc = dd(u, pick) + dd(pick, w) - dd(u, w);
            if (inc < best_inc) {
                best_inc = inc;
                best_pos = i + 1;
            }
        }
        tour.insert(tour.begin() + best_pos, pick);
        in_tour[pick] = true;
        for (int v = 0; v < n; ++v)
            if (!in_tour[v]) min_to_tour[v] = std::min(min_to_tour[v], dd(v, pick));
    }

    Tour t{std::move(tour)};
    const double cost = solutions::tour_length(inst, t);
    return {std::move(t), cost};
}

TspResult nearest_neighbor(const Instance& inst, int start) {
    const int n = inst.n();
    if (start < 0 || start >= n) throw std::invalid_argument("nearest_neighbor: start out of range");
    std::vector<bool> visited(n, false);
    Tour t;
    t.order.reserve(n);
    int cur = start;
    visited[cur] = true;
    t.order.push_back(cur);
    for (int step = 1; step < n; ++step) {
        int pick = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int v = 0; v < n; ++v) {
            if (visited[v]) continue;
            const double cand = dist(inst.coords[cur], inst.coords[v]);
            if (cand < best) {
                best = cand;
                pick = v;
            }
        }
        visited[pick] = true;
        t.order.push_back(pick);
        cur = pick;
    }
    const double cost = solutions::tour_length(inst, t);
    return {std::move(t), cost};
}

} // namespace metanco::oracles
