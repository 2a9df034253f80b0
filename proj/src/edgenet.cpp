#include "metanco/edgenet.hpp"

#include <cmath>
#include <stdexcept>

namespace metanco::edgenet {

using ad::Array;
using ad::Var;

std::size_t EdgeNetArch::param_count() const {
    const std::size_t d = node_dim;
    const std::size_t c = edge_dim;
    std::size_t count = 2 * d + d;   // node input projection
    count += c + c;                  // edge (distance) projection
    count += static_cast<std::size_t>(layers) *
             ((2 * d + c + 1) * c + c   // edge update
              + c * d                   // gate
              + d * d                   // message
              + d * d + d);             // node update
    count += c + 1;                  // readout
    return count;
}

ParameterSet init_params(const EdgeNetArch& arch, std::uint64_t seed) {
    if (arch.node_dim < 2 || arch.edge_dim < 1 || arch.layers < 1)
        throw std::invalid_argument("edgenet::init_params: invalid architecture");
    const int d = arch.node_dim;
    const int c = arch.edge_dim;
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    RandomStream rng(seed);

    ParameterSet ps;
    auto put = [&](const std::string& name, int r, int cc) {
        ps.values.emplace(name, uniform_array(r, cc, bound, rng));
    };
    put("node_in.W", 2, d);
    put("node_in.b", 1, d);
    put("edge_in.W", 1, c);
    put("edge_in.b", 1, c);
    for (int l = 0; l < arch.layers; ++l) {
        const std::string p = "mp" + std::to_string(l) + ".";
        put(p + "edge.W", 2 * d + c + 1, c);
        put(p + "edge.b", 1, c);
        put(p + "gate.W", c, d);
        put(p + "msg.W", d, d);
        put(p + "node.W", d, d);
        put(p + "node.b", 1, d);
    }
    put("out.W", c, 1);
    put("out.b", 1, 1);

    ps.meta["model"] = "edgenet";
    ps.meta["node_dim"] = std::to_string(d);
    ps.meta["edge_dim"] = std::to_string(c);
    ps.meta["layers"] = std::to_string(arch.layers);
    ps.meta["param_count"] = std::to_string(arch.param_count());
    return ps;
}

EdgeNetArch arch_from(const ParameterSet& ps) {
    EdgeNetArch arch;
    arch.node_dim = std::stoi(ps.meta.at("node_dim"));
    arch.edge_dim = std::stoi(ps.meta.at("edge_dim"));
    arch.layers = std::stoi(ps.meta.at("layers"));
    return arch;
}

EdgeLabels labels_from_tour(const Tour& t, int n) {
    if (n < 3) throw std::invalid_argument("labels_from_tour: need N >= 3");
    if (static_cast<int>(t.order.size()) != n)
        throw std::invalid_argument("labels_from_tour: tour size mismatch");
    EdgeLabels labels;
    labels.n = n;
    labels.s.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        const int a = t.order[i];
        const int b = t.order[(i + 1) % n];
        labels.at(a, b) = 1.0;
        labels.at(b, a) = 1.0;
    }
    return labels;
}

EdgeLabels labels_from_plan(const RoutePlan& p, int n_customers) {
    const int n = n_customers + 1; // node 0 is the depot
    EdgeLabels labels;
    labels.n = n;
    labels.s.assign(static_cast<std::size_t>(n) * n, 0.0);
    auto mark = [&](int a, int b) {
        labels.at(a, b) = 1.0;
        labels.at(b, a) = 1.0;
    };
    for (const auto& route : p.routes) {
        if (route.empty()) throw std::invalid_argument("labels_from_plan: empty route");
        mark(0, route.front() + 1);
        for (std::size_t i = 0; i + 1 < route.size(); ++i) mark(route[i] + 1, route[i + 1] + 1);
        mark(route.back() + 1, 0);
    }
    return labels;
}

namespace {

std::vector<Point> node_points(const Instance& inst) {
    std::vector<Point> pts;
    if (inst.is_cvrp) pts.push_back(inst.depot);
    pts.insert(pts.end(), inst.coords.begin(), inst.coords.end());
    return pts;
}

} // namespace

Var predict_graph(ParamBinding& binding, const Instance& inst) {
    const auto pts = node_points(inst);
    const int r = static_cast<int>(pts.size());
    if (r < 3) throw std::invalid_argument("edgenet::predict: need at least 3 nodes");
    const int e = r * r;
    const int n_layers = std::stoi(binding.set().meta.at("layers"));

    Array x(r, 2);
    for (int i = 0; i < r; ++i) {
        x.at(i, 0) = pts[i].x;
        x.at(i, 1) = pts[i].y;
    }
    Var h = ad::add(ad::matmul(ad::constant(std::move(x)), binding["node_in.W"]),
                    binding["node_in.b"]);

    Array dist_flat(e, 1);
    std::vector<int> src(e), dst(e), swapped(e);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            const int idx = i * r + j;
            dist_flat.at(idx, 0) = dist(pts[i], pts[j]);
            src[idx] = i;
            dst[idx] = j;
            swapped[idx] = j * r + i;
        }
    Var d_const = ad::constant(dist_flat);
    Var edge = ad::tanh_op(ad::add(ad::matmul(d_const, binding["edge_in.W"]),
                                   binding["edge_in.b"]));

    // Mean-pooling matrix over incoming messages, self-edges excluded.
    Array pool(r, e);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            if (i != j) pool.at(i, i * r + j) = 1.0 / (r - 1);
    Var pool_const = ad::constant(std::move(pool));

    for (int l = 0; l < n_layers; ++l) {
        const std::string p = "mp" + std::to_string(l) + ".";
        Var u = ad::gather_rows(h, src);
        Var v = ad::gather_rows(h, dst);
        Var edge_in = ad::concat_cols({u, v, edge, d_const});
        edge = ad::add(edge, ad::tanh_op(ad::add(ad::matmul(edge_in, binding[p + "edge.W"]),
                                                 binding[p + "edge.b"])));
        Var gate = ad::sigmoid(ad::matmul(edge, binding[p + "gate.W"]));
        Var msg = ad::mul(gate, ad::matmul(v, binding[p + "msg.W"]));
        Var agg = ad::matmul(pool_const, msg);
        h = ad::add(h, ad::tanh_op(ad::add(ad::matmul(agg, binding[p + "node.W"]),
                                           binding[p + "node.b"])));
    }

    Var logits = ad::add(ad::matmul(edge, binding["out.W"]), binding["out.b"]);
    Var prob = ad::sigmoid(logits);
    Var sym = ad::scale(ad::add(prob, ad::gather_rows(prob, swapped)), 0.5);
    return ad::clamp(sym, kProbClampLo, kProbClampHi);
}

EdgePrediction predict(const ParameterSet& theta, const Instance& inst) {
    ParamBinding binding(theta, /*requires_grad=*/false);
    Var flat = predict_graph(binding, inst);
    const auto pts = node_points(inst);
    const int r = static_cast<int>(pts.size());
    EdgePrediction pred;
    pred.n = r;
    pred.shat = flat->value.data;
    for (int i = 0; i < r; ++i) pred.shat[static_cast<std::size_t>(i) * r + i] = 0.0;
    return pred;
}

Var weighted_bce_loss_graph(const ad::Var& pred_flat, const EdgeLabels& labels,
                            double w0, double w1) {
    if (w0 <= 0.0 || w1 <= 0.0)
        throw std::invalid_argument("weighted_bce_loss: weights must be positive");
    const int n = labels.n;
    if (pred_flat->value.rows != n * n || pred_flat->value.cols != 1)
        throw std::invalid_argument("weighted_bce_loss: prediction/label shape mismatch");

    std::vector<int> upper;
    upper.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) upper.push_back(i * n + j);
    const int pairs = static_cast<int>(upper.size());

    Array cpos(pairs, 1), cneg(pairs, 1);
    for (int k = 0; k < pairs; ++k) {
        const double s = labels.s[upper[k]];
        cpos.at(k, 0) = w1 * s;
        cneg.at(k, 0) = w0 * (1.0 - s);
    }
    Var p = ad::gather_rows(pred_flat, upper);
    Var term_pos = ad::mul(ad::constant(std::move(cpos)), ad::log_op(p));
    Var term_neg = ad::mul(ad::constant(std::move(cneg)),
                           ad::log_op(ad::add_const(ad::scale(p, -1.0), 1.0)));
    return ad::scale(ad::sum(ad::add(term_pos, term_neg)), -1.0 / pairs);
}

double weighted_bce_loss(const EdgePrediction& pred, const EdgeLabels& labels,
                         double w0, double w1) {
    Array flat(pred.n * pred.n, 1, pred.shat);
    // Diagonal entries are excluded by the i<j sum; clamp keeps log finite.
    for (int i = 0; i < pred.n; ++i)
        flat.at(i * pred.n + i, 0) = kProbClampLo;
    Var v = ad::clamp(ad::constant(std::move(flat)), kProbClampLo, kProbClampHi);
    return weighted_bce_loss_graph(v, labels, w0, w1)->value.data[0];
}

std::pair<double, double> default_class_weights(const std::vector<EdgeLabels>& batch) {
    double pos = 0.0, neg = 0.0;
    for (const auto& labels : batch) {
        for (int i = 0; i < labels.n; ++i)
            for (int j = i + 1; j < labels.n; ++j) {
                if (labels.at(i, j) > 0.5)
                    pos += 1.0;
                else
                    neg += 1.0;
            }
    }
    const double w1 = pos > 0.0 ? neg / pos : 1.0;
    return {1.0, w1};
}

Tour greedy_decode(const EdgePrediction& pred, const Instance& inst) {
    const int n = inst.is_cvrp ? inst.n() + 1 : inst.n();
    if (pred.n != n) throw std::invalid_argument("greedy_decode: prediction size mismatch");
    if (n < 3) throw std::invalid_argument("greedy_decode: need at least 3 nodes");
    std::vector<bool> visited(n, false);
    Tour t;
    t.order.reserve(n);
    int cur = 0;
    visited[0] = true;
    t.order.push_back(0);
    for (int step = 1; step < n; ++step) {
        int pick = -1;
        double best = -1.0;
        for (int v = 0; v < n; ++v) {
            if (visited[v]) continue;
            if (pred.at(cur, v) > best) {
                best = pred.at(cur, v);
                pick = v;
            }
        }
        visited[pick] = true;
        t.order.push_back(pick);
        cur = pick;
    }
    return t;
}

} // namespace metanco::edgenet
