#pragma once

#include "metanco/taskgen.hpp"
#include "metanco/tensor.hpp"

#include <cmath>
#include <functional>
#include <vector>

namespace testutil {

using metanco::Instance;
using metanco::Point;
namespace ad = metanco::ad;

inline Instance tsp_instance(std::vector<Point> pts) {
    Instance inst;
    inst.coords = std::move(pts);
    return inst;
}

inline Instance random_tsp(int n, std::uint64_t seed, double scale = 1.0) {
    metanco::TaskSpec spec;
    spec.n_nodes = n;
    spec.scale = scale;
    spec.seed = seed;
    return metanco::taskgen::generate_instance(spec, std::uint64_t{0});
}

inline Instance random_cvrp(int n, int capacity, std::uint64_t seed) {
    metanco::TaskSpec spec;
    spec.problem = metanco::Problem::CVRP;
    spec.n_nodes = n;
    spec.capacity = capacity;
    spec.seed = seed;
    return metanco::taskgen::generate_instance(spec, std::uint64_t{0});
}

/// Central-difference gradient check. `forward` must rebuild the graph from
/// the given leaf values on every call and return a scalar loss node.
/// Returns the maximum relative error over all leaf elements.
inline double fd_check(const std::vector<ad::Array>& leaf_values,
                       const std::function<ad::Var(const std::vector<ad::Var>&)>& forward,
                       double h = 1e-6) {
    std::vector<ad::Var> leaves;
    for (const auto& v : leaf_values) leaves.push_back(ad::leaf(v));
    ad::Var loss = forward(leaves);
    ad::backward(loss);

    auto eval = [&](const std::vector<ad::Array>& values) {
        std::vector<ad::Var> ls;
        for (const auto& v : values) ls.push_back(ad::leaf(v, false));
        return forward(ls)->value.data[0];
    };

    double worst = 0.0;
    for (std::size_t li = 0; li < leaf_values.size(); ++li) {
        for (std::size_t i = 0; i < leaf_values[li].size(); ++i) {
            std::vector<ad::Array> plus = leaf_values, minus = leaf_values;
            plus[li].data[i] += h;
            minus[li].data[i] -= h;
            const double numeric = (eval(plus) - eval(minus)) / (2.0 * h);
            const double analytic =
                leaves[li]->grad.size() ? leaves[li]->grad.data[i] : 0.0;
            const double denom = std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
            worst = std::max(worst, std::fabs(numeric - analytic) / denom);
        }
    }
    return worst;
}

} // namespace testutil
