#pragma once

#include "metanco/params.hpp"
#include "metanco/solutions.hpp"

#include <utility>
#include <vector>

namespace metanco::policy {

/// Reduced attention encoder-decoder: single head, tanh-clipped logits.
struct PolicyArch {
    Problem problem = Problem::TSP;
    int embed_dim = 16;
    int layers = 2;
    // head count fixed at 1; feed-forward hidden width is 2*embed_dim.

    int ff_dim() const { return 2 * embed_dim; }
    std::size_t param_count() const;
};

constexpr double kLogitClip = 10.0;

ParameterSet init_params(const PolicyArch& arch, std::uint64_t seed);
PolicyArch arch_from(const ParameterSet& ps);

struct Encoding {
    ad::Var nodes;  // (N or N+1) x d embeddings; CVRP row 0 is the depot
    ad::Var graph;  // 1 x d mean embedding
};

Encoding encode(ParamBinding& binding, const Instance& inst);

/// One complete constructed solution. For CVRP, `actions` is the raw token
/// sequence over {0 = depot, i = customer i-1}.
struct Rollout {
    Tour tour;        // TSP
    RoutePlan plan;   // CVRP
    std::vector<int> actions;
    double log_prob = 0.0;
    double cost = 0.0;
};

Rollout sample_rollout(const ParameterSet& theta, const Instance& inst, RandomStream& rng);
Rollout greedy_rollout(const ParameterSet& theta, const Instance& inst);

/// Teacher-forced log-likelihood of an action sequence.
double rollout_log_prob(const ParameterSet& theta, const Instance& inst,
                        const std::vector<int>& actions);

/// Differentiable teacher-forced log-likelihood.
ad::Var log_prob_graph(ParamBinding& binding, const Instance& inst,
                       const std::vector<int>& actions);

/// Sampled rollout plus its differentiable log-likelihood in one pass.
std::pair<Rollout, ad::Var> sample_rollout_graph(ParamBinding& binding, const Instance& inst,
                                                 RandomStream& rng);

/// Distribution over next actions given a prefix (diagnostic surface).
std::vector<double> step_distribution(const ParameterSet& theta, const Instance& inst,
                                      const std::vector<int>& prefix);

} // namespace metanco::policy
