#include "metanco/params.hpp"

#include <stdexcept>

namespace metanco {

std::size_t ParameterSet::total_count() const {
    std::size_t n = 0;
    for (const auto& [name, arr] : values) n += arr.size();
    return n;
}

bool ParameterSet::same_shapes(const ParameterSet& other) const {
    if (values.size() != other.values.size()) return false;
    auto it = other.values.begin();
    for (const auto& [name, arr] : values) {
        if (it->first != name || !arr.same_shape(it->second)) return false;
        ++it;
    }
    return true;
}

bool ParameterSet::all_finite() const {
    for (const auto& [name, arr] : values)
        if (!ad::all_finite(arr)) return false;
    return true;
}

ParameterSet ParameterSet::affine(double a, const ParameterSet& x, double b, const ParameterSet& y) {
    if (!x.same_shapes(y))
        throw std::invalid_argument("ParameterSet::affine: shape mismatch between sets");
    ParameterSet out;
    out.meta = x.meta;
    for (const auto& [name, arr] : x.values) {
        const ad::Array& yarr = y.values.at(name);
        ad::Array r(arr.rows, arr.cols);
        for (std::size_t i = 0; i < arr.size(); ++i)
            r.data[i] = a * arr.data[i] + b * yarr.data[i];
        out.values.emplace(name, std::move(r));
    }
    return out;
}

ParamBinding::ParamBinding(const ParameterSet& ps, bool requires_grad)
    : ps_(&ps), requires_grad_(requires_grad) {}

ad::Var ParamBinding::operator[](const std::string& name) {
    auto it = vars_.find(name);
    if (it != vars_.end()) return it->second;
    auto pit = ps_->values.find(name);
    if (pit == ps_->values.end())
        throw std::invalid_argument("ParamBinding: unknown parameter " + name);
    ad::Var v = ad::leaf(pit->second, requires_grad_);
    vars_.emplace(name, v);
    return v;
}

GradMap ParamBinding::grads() const {
    GradMap out;
    for (const auto& [name, arr] : ps_->values) {
        auto it = vars_.find(name);
        if (it != vars_.end() && it->second->grad.size() == arr.size()) {
            out.emplace(name, it->second->grad);
        } else {
            out.emplace(name, ad::Array(arr.rows, arr.cols));
        }
    }
    return out;
}

ad::Array uniform_array(int rows, int cols, double bound, RandomStream& rng) {
    ad::Array a(rows, cols);
    for (double& v : a.data) v = rng.uniform(-bound, bound);
    return a;
}

} // namespace metanco
