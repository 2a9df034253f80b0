#include "metanco/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace metanco::policy {

using ad::Array;
using ad::Var;

std::size_t PolicyArch::param_count() const {
    const std::size_t d = embed_dim;
    const std::size_t h = ff_dim();
    std::size_t count = 0;
    // Input projection(s).
    if (problem == Problem::TSP) {
        count += 2 * d + d;
    } else {
        count += 3 * d + d;      // customers (x, y, demand/C)
        count += 2 * d + d;      // depot
    }
    // Encoder layers: attention + 2 layer norms + feed-forward.
    count += static_cast<std::size_t>(layers) *
             (4 * d * d + 2 * d + (d * h + h + h * d + d) + 2 * d);
    // Decoder: context projection, glimpse, final keys, placeholders.
    count += 3 * d * d + 4 * d * d + 2 * d;
    return count;
}

ParameterSet init_params(const PolicyArch& arch, std::uint64_t seed) {
    if (arch.embed_dim < 2) throw std::invalid_argument("init_params: embed_dim must be >= 2");
    if (arch.layers < 1) throw std::invalid_argument("init_params: layers must be >= 1");
    const int d = arch.embed_dim;
    const int h = arch.ff_dim();
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    RandomStream rng(seed);

    ParameterSet ps;
    auto put = [&](const std::string& name, int r, int c) {
        ps.values.emplace(name, uniform_array(r, c, bound, rng));
    };

    if (arch.problem == Problem::TSP) {
        put("embed.W", 2, d);
        put("embed.b", 1, d);
    } else {
        put("embed.W", 3, d);
        put("embed.b", 1, d);
        put("embed_depot.W", 2, d);
        put("embed_depot.b", 1, d);
    }
    for (int l = 0; l < arch.layers; ++l) {
        const std::string p = "enc" + std::to_string(l) + ".";
        put(p + "attn.Wq", d, d);
        put(p + "attn.Wk", d, d);
        put(p + "attn.Wv", d, d);
        put(p + "attn.Wo", d, d);
        put(p + "ln1.gamma", 1, d);
        put(p + "ln1.beta", 1, d);
        put(p + "ff.W1", d, h);
        put(p + "ff.b1", 1, h);
        put(p + "ff.W2", h, d);
        put(p + "ff.b2", 1, d);
        put(p + "ln2.gamma", 1, d);
        put(p + "ln2.beta", 1, d);
    }
    put("dec.Wctx", 3 * d, d);
    put("dec.Wgk", d, d);
    put("dec.Wgv", d, d);
    put("dec.Wgo", d, d);
    put("dec.Wfk", d, d);
    put("dec.v_first", 1, d);
    put("dec.v_last", 1, d);

    ps.meta["model"] = "attention_policy";
    ps.meta["problem"] = arch.problem == Problem::TSP ? "tsp" : "cvrp";
    ps.meta["embed_dim"] = std::to_string(d);
    ps.meta["layers"] = std::to_string(arch.layers);
    ps.meta["heads"] = "1";
    ps.meta["param_count"] = std::to_string(arch.param_count());
    return ps;
}

PolicyArch arch_from(const ParameterSet& ps) {
    PolicyArch arch;
    arch.problem = ps.meta.at("problem") == "cvrp" ? Problem::CVRP : Problem::TSP;
    arch.embed_dim = std::stoi(ps.meta.at("embed_dim"));
    arch.layers = std::stoi(ps.meta.at("layers"));
    return arch;
}

namespace {

Var layer_norm(ParamBinding& b, const std::string& prefix, const Var& x) {
    Var mu = ad::row_mean(x);
    Var centered = ad::sub(x, mu);
    Var var = ad::row_mean(ad::mul(centered, centered));
    Var inv = ad::rsqrt(ad::add_const(var, 1e-8));
    Var normed = ad::mul(centered, inv);
    // gamma is stored as an offset from 1 so uniform init scales near unity.
    return ad::add(ad::mul(normed, ad::add_const(b[prefix + ".gamma"], 1.0)),
                   b[prefix + ".beta"]);
}

} // namespace

Encoding encode(ParamBinding& binding, const Instance& inst) {
    if (inst.n() < 1) throw std::invalid_argument("encode: empty instance");
    const int n = inst.n();
    const int d = binding["embed.W"]->value.cols;
    const int n_layers = std::stoi(binding.set().meta.at("layers"));

    Var h;
    if (!inst.is_cvrp) {
        Array x(n, 2);
        for (int i = 0; i < n; ++i) {
            x.at(i, 0) = inst.coords[i].x;
            x.at(i, 1) = inst.coords[i].y;
        }
        h = ad::add(ad::matmul(ad::constant(std::move(x)), binding["embed.W"]), binding["embed.b"]);
    } else {
        Array xd(1, 2);
        xd.at(0, 0) = inst.depot.x;
        xd.at(0, 1) = inst.depot.y;
        Var hd = ad::add(ad::matmul(ad::constant(std::move(xd)), binding["embed_depot.W"]),
                         binding["embed_depot.b"]);
        Array xc(n, 3);
        for (int i = 0; i < n; ++i) {
            xc.at(i, 0) = inst.coords[i].x;
            xc.at(i, 1) = inst.coords[i].y;
            xc.at(i, 2) = static_cast<double>(inst.demands[i]) / inst.capacity;
        }
        Var hc = ad::add(ad::matmul(ad::constant(std::move(xc)), binding["embed.W"]), binding["embed.b"]);
        h = ad::concat_rows({hd, hc});
    }
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    for (int l = 0; l < n_layers; ++l) {
        const std::string p = "enc" + std::to_string(l) + ".";
        Var q = ad::matmul(h, binding[p + "attn.Wq"]);
        Var k = ad::matmul(h, binding[p + "attn.Wk"]);
        Var v = ad::matmul(h, binding[p + "attn.Wv"]);
        Var scores = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt_d);
        Var att = ad::matmul(ad::matmul(ad::softmax_rows(scores), v), binding[p + "attn.Wo"]);
        h = layer_norm(binding, p + "ln1", ad::add(h, att));
        Var ff = ad::add(ad::matmul(ad::tanh_op(ad::add(ad::matmul(h, binding[p + "ff.W1"]),
                                                        binding[p + "ff.b1"])),
                                    binding[p + "ff.W2"]),
                         binding[p + "ff.b2"]);
        h = layer_norm(binding, p + "ln2", ad::add(h, ff));
    }

    const int rows = h->value.rows;
    Array pool(1, rows);
    for (int j = 0; j < rows; ++j) pool.at(0, j) = 1.0 / rows;
    Var graph = ad::matmul(ad::constant(std::move(pool)), h);
    return {h, graph};
}

namespace {

/// Autoregressive decoding state shared by sampling/greedy/teacher paths.
struct Decoder {
    ParamBinding& binding;
    const Instance& inst;
    Encoding enc;
    Var keys_glimpse;
    Var vals_glimpse;
    Var keys_final;
    int n_actions;
    double inv_sqrt_d;

    // state
    std::vector<bool> visited;
    int n_visited = 0;
    int first_action = -1;
    int last_action = -1;
    int remaining_capacity = 0;
    bool at_depot = true;

    Decoder(ParamBinding& b, const Instance& i) : binding(b), inst(i), enc(encode(b, i)) {
        keys_glimpse = ad::matmul(enc.nodes, binding["dec.Wgk"]);
        vals_glimpse = ad::matmul(enc.nodes, binding["dec.Wgv"]);
        keys_final = ad::matmul(enc.nodes, binding["dec.Wfk"]);
        n_actions = enc.nodes->value.rows;
        inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(enc.nodes->value.cols));
        visited.assign(inst.n(), false);
        remaining_capacity = inst.capacity;
    }

    bool done() const { return n_visited == inst.n(); }

    Array feasibility_mask() const {
        Array mask(1, n_actions);
        if (!inst.is_cvrp) {
            for (int i = 0; i < n_actions; ++i) mask.at(0, i) = visited[i] ? 0.0 : 1.0;
        } else {
            mask.at(0, 0) = at_depot ? 0.0 : 1.0;
            for (int c = 0; c < inst.n(); ++c) {
                const bool ok = !visited[c] && inst.demands[c] <= remaining_capacity;
                mask.at(0, c + 1) = ok ? 1.0 : 0.0;
            }
        }
        return mask;
    }

    Var step_probs(const Array& mask) {
        Var h_first = first_action < 0 ? binding["dec.v_first"]
                                       : ad::gather_rows(enc.nodes, {first_action});
        Var h_last = last_action < 0 ? binding["dec.v_last"]
                                     : ad::gather_rows(enc.nodes, {last_action});
        Var ctx = ad::concat_cols({enc.graph, h_first, h_last});
        Var q = ad::matmul(ctx, binding["dec.Wctx"]);
        Var gl_scores = ad::scale(ad::matmul(q, ad::transpose(keys_glimpse)), inv_sqrt_d);
        Var gl = ad::matmul(ad::masked_softmax_rows(gl_scores, mask), vals_glimpse);
        Var q2 = ad::add(q, ad::matmul(gl, binding["dec.Wgo"]));
        Var logits = ad::scale(
            ad::tanh_op(ad::scale(ad::matmul(q2, ad::transpose(keys_final)), inv_sqrt_d)),
            kLogitClip);
        return ad::masked_softmax_rows(logits, mask);
    }

    void apply(int action) {
        if (!inst.is_cvrp) {
            visited[action] = true;
            ++n_visited;
            if (first_action < 0) first_action = action;
            last_action = action;
        } else {
            if (action == 0) {
                remaining_capacity = inst.capacity;
                at_depot = true;
            } else {
                visited[action - 1] = true;
                ++n_visited;
                remaining_capacity -= inst.demands[action - 1];
                at_depot = false;
                if (first_action < 0) first_action = action;
            }
            last_action = action;
        }
    }
};

Rollout finish_rollout(const Instance& inst, std::vector<int> actions, double log_prob) {
    Rollout r;
    r.actions = std::move(actions);
    r.log_prob = log_prob;
    if (!inst.is_cvrp) {
        r.tour.order = r.actions;
        r.cost = solutions::tour_length(inst, r.tour);
    } else {
        std::vector<int> route;
        for (int a : r.actions) {
            if (a == 0) {
                if (!route.empty()) r.plan.routes.push_back(std::move(route));
                route.clear();
            } else {
                route.push_back(a - 1);
            }
        }
        if (!route.empty()) r.plan.routes.push_back(std::move(route));
        r.cost = solutions::plan_cost(inst, r.plan);
    }
    return r;
}

/// Runs a full decode; `choose` maps step probabilities to an action.
template <typename Chooser>
std::pair<Rollout, Var> run_rollout(ParamBinding& binding, const Instance& inst, Chooser choose) {
    Decoder dec(binding, inst);
    std::vector<int> actions;
    Var total_lp = ad::constant(Array::scalar(0.0));
    while (!dec.done()) {
        const Array mask = dec.feasibility_mask();
        Var probs = dec.step_probs(mask);
        const int action = choose(probs->value, mask);
        Array onehot(dec.n_actions, 1);
        onehot.at(action, 0) = 1.0;
        Var picked = ad::matmul(probs, ad::constant(std::move(onehot)));
        total_lp = ad::add(total_lp, ad::log_op(picked));
        dec.apply(action);
        actions.push_back(action);
    }
    return {finish_rollout(inst, std::move(actions), total_lp->value.data[0]), total_lp};
}

int sample_index(const Array& probs, RandomStream& rng) {
    const double u = rng.next_double();
    double acc = 0.0;
    int last_positive = -1;
    for (int i = 0; i < probs.cols; ++i) {
        const double p = probs.at(0, i);
        if (p > 0.0) last_positive = i;
        acc += p;
        if (u < acc) return i;
    }
    return last_positive; // guards against rounding in the cumulative sum
}

int greedy_index(const Array& probs) {
    int best = 0;
    double best_p = -1.0;
    for (int i = 0; i < probs.cols; ++i) {
        if (probs.at(0, i) > best_p) {
            best_p = probs.at(0, i);
            best = i;
        }
    }
    return best;
}

} // namespace

Rollout sample_rollout(const ParameterSet& theta, const Instance& inst, RandomStream& rng) {
    ParamBinding binding(theta, /*requires_grad=*/false);
    return run_rollout(binding, inst, [&rng](const Array& p, const Array&) {
               return sample_index(p, rng);
           }).first;
}

Rollout greedy_rollout(const ParameterSet& theta, const Instance& inst) {
    ParamBinding binding(theta, /*requires_grad=*/false);
    return run_rollout(binding, inst, [](const Array& p, const Array&) {
               return greedy_index(p);
           }).first;
}

std::pair<Rollout, Var> sample_rollout_graph(ParamBinding& binding, const Instance& inst,
                                             RandomStream& rng) {
    return run_rollout(binding, inst,
                       [&rng](const Array& p, const Array&) { return sample_index(p, rng); });
}

Var log_prob_graph(ParamBinding& binding, const Instance& inst, const std::vector<int>& actions) {
    std::size_t step = 0;
    auto [rollout, lp] = run_rollout(binding, inst, [&](const Array&, const Array& mask) {
        if (step >= actions.size()) throw std::invalid_argument("log_prob_graph: action sequence too short");
        const int a = actions[step++];
        if (a < 0 || a >= mask.cols || mask.at(0, a) == 0.0)
            throw std::invalid_argument("log_prob_graph: infeasible action in sequence");
        return a;
    });
    if (step != actions.size())
        throw std::invalid_argument("log_prob_graph: action sequence too long");
    (void)rollout;
    return lp;
}

double rollout_log_prob(const ParameterSet& theta, const Instance& inst,
                        const std::vector<int>& actions) {
    ParamBinding binding(theta, /*requires_grad=*/false);
    return log_prob_graph(binding, inst, actions)->value.data[0];
}

std::vector<double> step_distribution(const ParameterSet& theta, const Instance& inst,
                                      const std::vector<int>& prefix) {
    ParamBinding binding(theta, /*requires_grad=*/false);
    Decoder dec(binding, inst);
    for (int a : prefix) dec.apply(a);
    if (dec.done()) throw std::invalid_argument("step_distribution: no decision remains");
    Var probs = dec.step_probs(dec.feasibility_mask());
    return probs->value.data;
}

} // namespace metanco::policy
