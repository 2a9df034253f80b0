#pragma once

#include "metanco/rng.hpp"
#include "metanco/tensor.hpp"

#include <map>
#include <string>

namespace metanco {

using GradMap = std::map<std::string, ad::Array>;

/// Flat, named collection of model parameters. Supports the elementwise
/// affine combination used by the meta update; names are stable across
/// save/load.
struct ParameterSet {
    std::map<std::string, ad::Array> values;
    std::map<std::string, std::string> meta; // architecture descriptor

    std::size_t total_count() const;
    bool same_shapes(const ParameterSet& other) const;
    bool all_finite() const;

    /// a*x + b*y elementwise over identically-shaped sets.
    static ParameterSet affine(double a, const ParameterSet& x, double b, const ParameterSet& y);
};

/// Binds a ParameterSet into a computation graph: one shared leaf Var per
/// parameter, so gradients accumulate across repeated uses.
class ParamBinding {
public:
    explicit ParamBinding(const ParameterSet& ps, bool requires_grad = true);

    ad::Var operator[](const std::string& name);

    const ParameterSet& set() const { return *ps_; }

    /// Gradients after backward(); parameters off the loss path get zeros.
    GradMap grads() const;

private:
    const ParameterSet* ps_;
    bool requires_grad_;
    std::map<std::string, ad::Var> vars_;
};

/// Uniform(-bound, bound) initialized array.
ad::Array uniform_array(int rows, int cols, double bound, RandomStream& rng);

} // namespace metanco
