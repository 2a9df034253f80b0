#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace metanco::ad {

/// Dense row-major 2-D array of doubles. Vectors are 1xN or Nx1.
struct Array {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Array() = default;
    Array(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    Array(int r, int c, std::vector<double> d);

    static Array zeros(int r, int c) { return Array(r, c); }
    static Array full(int r, int c, double v);
    static Array scalar(double v);

    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Array& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const;
};

bool all_finite(const Array& a);

struct Node;
using Var = std::shared_ptr<Node>;

/// One node of the computation graph (define-by-run).
struct Node {
    Array value;
    Array grad;               // allocated lazily in backward
    bool requires_grad = false;
    std::vector<Var> inputs;
    std::function<void(Node&)> backprop; // scatters this->grad into inputs
};

Var constant(Array value);
Var leaf(Array value, bool requires_grad = true);

// ---- forward ops ------------------------------------------------------

Var matmul(const Var& a, const Var& b);
/// Elementwise; b may also be 1xC (row broadcast), Rx1 (column broadcast)
/// or 1x1 (scalar broadcast) against an RxC a.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Elementwise; same broadcast rules as add.
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_const(const Var& a, double c);
Var tanh_op(const Var& a);
Var sigmoid(const Var& a);
Var log_op(const Var& a);
Var rsqrt(const Var& a);            // 1/sqrt(x), x > 0
Var clamp(const Var& a, double lo, double hi); // pass-through grad strictly inside
Var sum(const Var& a);              // 1x1
Var mean(const Var& a);             // 1x1
Var row_mean(const Var& a);         // Rx1
Var row_sum(const Var& a);          // Rx1
Var transpose(const Var& a);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var gather_rows(const Var& a, const std::vector<int>& indices);
/// Row-wise softmax with max subtraction.
Var softmax_rows(const Var& a);
/// Row-wise softmax over entries where mask != 0; masked entries are exactly
/// zero. Throws "empty support" if some row is fully masked.
Var masked_softmax_rows(const Var& a, const Array& mask);

// ---- backward ---------------------------------------------------------

/// Reverse-mode sweep from a scalar loss. Zeroes all reachable gradients
/// first, so calling it twice on the same graph yields identical results.
void backward(const Var& loss);

} // namespace metanco::ad
