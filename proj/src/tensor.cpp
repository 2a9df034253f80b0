#include "metanco/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace metanco::ad {

Array::Array(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != static_cast<std::size_t>(r) * c)
        throw std::invalid_argument("Array: data length does not match shape");
}

Array Array::full(int r, int c, double v) {
    Array a(r, c);
    std::fill(a.data.begin(), a.data.end(), v);
    return a;
}

Array Array::scalar(double v) { return full(1, 1, v); }

std::string Array::shape_str() const {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

bool all_finite(const Array& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

namespace {

Var make(Array value, std::vector<Var> inputs, std::function<void(Node&)> bp) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    for (const auto& in : n->inputs) n->requires_grad = n->requires_grad || in->requires_grad;
    if (n->requires_grad) n->backprop = std::move(bp);
    return n;
}

[[noreturn]] void shape_error(const char* op, const Array& a, const Array& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_str() +
                                " and " + b.shape_str());
}

enum class Bcast { Same, Row, Col, Scalar };

Bcast bcast_kind(const char* op, const Array& a, const Array& b) {
    if (a.same_shape(b)) return Bcast::Same;
    if (b.rows == 1 && b.cols == 1) return Bcast::Scalar;
    if (b.rows == 1 && b.cols == a.cols) return Bcast::Row;
    if (b.cols == 1 && b.rows == a.rows) return Bcast::Col;
    shape_error(op, a, b);
}

double bval(const Array& b, Bcast k, int i, int j) {
    switch (k) {
        case Bcast::Same: return b.at(i, j);
        case Bcast::Scalar: return b.data[0];
        case Bcast::Row: return b.at(0, j);
        case Bcast::Col: return b.at(i, 0);
    }
    return 0.0;
}

void bscatter(Array& gb, Bcast k, int i, int j, double g) {
    switch (k) {
        case Bcast::Same: gb.at(i, j) += g; break;
        case Bcast::Scalar: gb.data[0] += g; break;
        case Bcast::Row: gb.at(0, j) += g; break;
        case Bcast::Col: gb.at(i, 0) += g; break;
    }
}

Var elementwise_unary(const Var& a, std::function<double(double)> f,
                      std::function<double(double /*x*/, double /*y*/)> dydx) {
    Array out(a->value.rows, a->value.cols);
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = f(a->value.data[i]);
    return make(std::move(out), {a}, [dydx = std::move(dydx)](Node& n) {
        const Var& in = n.inputs[0];
        if (!in->requires_grad) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            in->grad.data[i] += n.grad.data[i] * dydx(in->value.data[i], n.value.data[i]);
    });
}

} // namespace

Var constant(Array value) { return leaf(std::move(value), false); }

Var leaf(Array value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

Var matmul(const Var& a, const Var& b) {
    const Array& A = a->value;
    const Array& B = b->value;
    if (A.cols != B.rows) shape_error("matmul", A, B);
    Array out(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i)
        for (int k = 0; k < A.cols; ++k) {
            const double av = A.at(i, k);
            if (av == 0.0) continue;
            for (int j = 0; j < B.cols; ++j) out.at(i, j) += av * B.at(k, j);
        }
    return make(std::move(out), {a, b}, [](Node& n) {
        const Var& a = n.inputs[0];
        const Var& b = n.inputs[1];
        const Array& A = a->value;
        const Array& B = b->value;
        if (a->requires_grad) { // gA += g * B^T
            for (int i = 0; i < A.rows; ++i)
                for (int j = 0; j < B.cols; ++j) {
                    const double g = n.grad.at(i, j);
                    if (g == 0.0) continue;
                    for (int k = 0; k < A.cols; ++k) a->grad.at(i, k) += g * B.at(k, j);
                }
        }
        if (b->requires_grad) { // gB += A^T * g
            for (int i = 0; i < A.rows; ++i)
                for (int k = 0; k < A.cols; ++k) {
                    const double av = A.at(i, k);
                    if (av == 0.0) continue;
                    for (int j = 0; j < B.cols; ++j) b->grad.at(k, j) += av * n.grad.at(i, j);
                }
        }
    });
}

Var add(const Var& a, const Var& b) {
    const Bcast k = bcast_kind("add", a->value, b->value);
    Array out(a->value.rows, a->value.cols);
    for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < out.cols; ++j) out.at(i, j) = a->value.at(i, j) + bval(b->value, k, i, j);
    return make(std::move(out), {a, b}, [k](Node& n) {
        const Var& a = n.inputs[0];
        const Var& b = n.inputs[1];
        if (a->requires_grad)
            for (std::size_t i = 0; i < n.grad.size(); ++i) a->grad.data[i] += n.grad.data[i];
        if (b->requires_grad)
            for (int i = 0; i < n.grad.rows; ++i)
                for (int j = 0; j < n.grad.cols; ++j) bscatter(b->grad, k, i, j, n.grad.at(i, j));
    });
}

Var sub(const Var& a, const Var& b) { return add(a, scale(b, -1.0)); }

Var mul(const Var& a, const Var& b) {
    const Bcast k = bcast_kind("mul", a->value, b->value);
    Array out(a->value.rows, a->value.cols);
    for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < out.cols; ++j) out.at(i, j) = a->value.at(i, j) * bval(b->value, k, i, j);
    return make(std::move(out), {a, b}, [k](Node& n) {
        const Var& a = n.inputs[0];
        const Var& b = n.inputs[1];
        for (int i = 0; i < n.grad.rows; ++i)
            for (int j = 0; j < n.grad.cols; ++j) {
                const double g = n.grad.at(i, j);
                if (a->requires_grad) a->grad.at(i, j) += g * bval(b->value, k, i, j);
                if (b->requires_grad) bscatter(b->grad, k, i, j, g * a->value.at(i, j));
            }
    });
}

Var scale(const Var& a, double c) {
    return elementwise_unary(a, [c](double x) { return c * x; },
                             [c](double, double) { return c; });
}

Var add_const(const Var& a, double c) {
    return elementwise_unary(a, [c](double x) { return x + c; },
                             [](double, double) { return 1.0; });
}

Var tanh_op(const Var& a) {
    return elementwise_unary(a, [](double x) { return std::tanh(x); },
                             [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
    return elementwise_unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                             [](double, double y) { return y * (1.0 - y); });
}

Var log_op(const Var& a) {
    return elementwise_unary(a, [](double x) { return std::log(x); },
                             [](double x, double) { return 1.0 / x; });
}

Var rsqrt(const Var& a) {
    return elementwise_unary(a, [](double x) { return 1.0 / std::sqrt(x); },
                             [](double, double y) { return -0.5 * y * y * y; });
}

Var clamp(const Var& a, double lo, double hi) {
    return elementwise_unary(a,
                             [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
                             [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var sum(const Var& a) {
    double s = 0.0;
    for (double v : a->value.data) s += v;
    return make(Array::scalar(s), {a}, [](Node& n) {
        const Var& in = n.inputs[0];
        if (!in->requires_grad) return;
        const double g = n.grad.data[0];
        for (double& v : in->grad.data) v += g;
    });
}

Var mean(const Var& a) {
    if (a->value.size() == 0) throw std::invalid_argument("mean: empty array");
    return scale(sum(a), 1.0 / static_cast<double>(a->value.size()));
}

Var row_sum(const Var& a) {
    Array out(a->value.rows, 1);
    for (int i = 0; i < a->value.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < a->value.cols; ++j) s += a->value.at(i, j);
        out.at(i, 0) = s;
    }
    return make(std::move(out), {a}, [](Node& n) {
        const Var& in = n.inputs[0];
        if (!in->requires_grad) return;
        for (int i = 0; i < in->value.rows; ++i) {
            const double g = n.grad.at(i, 0);
            for (int j = 0; j < in->value.cols; ++j) in->grad.at(i, j) += g;
        }
    });
}

Var row_mean(const Var& a) {
    if (a->value.cols == 0) throw std::invalid_argument("row_mean: empty rows");
    return scale(row_sum(a), 1.0 / static_cast<double>(a->value.cols));
}

Var transpose(const Var& a) {
    Array out(a->value.cols, a->value.rows);
    for (int i = 0; i < a->value.rows; ++i)
        for (int j = 0; j < a->value.cols; ++j) out.at(j, i) = a->value.at(i, j);
    return make(std::move(out), {a}, [](Node& n) {
        const Var& in = n.inputs[0];
        if (!in->requires_grad) return;
        for (int i = 0; i < n.grad.rows; ++i)
            for (int j = 0; j < n.grad.cols; ++j) in->grad.at(j, i) += n.grad.at(i, j);
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const int rows = parts[0]->value.rows;
    int cols = 0;
    for (const auto& p : parts) {
        if (p->value.rows != rows) shape_error("concat_cols", parts[0]->value, p->value);
        cols += p->value.cols;
    }
    Array out(rows, cols);
    int off = 0;
    for (const auto& p : parts) {
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < p->value.cols; ++j) out.at(i, off + j) = p->value.at(i, j);
        off += p->value.cols;
    }
    return make(std::move(out), parts, [](Node& n) {
        int off = 0;
        for (const auto& in : n.inputs) {
            if (in->requires_grad) {
                for (int i = 0; i < in->value.rows; ++i)
                    for (int j = 0; j < in->value.cols; ++j)
                        in->grad.at(i, j) += n.grad.at(i, off + j);
            }
            off += in->value.cols;
        }
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    const int cols = parts[0]->value.cols;
    int rows = 0;
    for (const auto& p : parts) {
        if (p->value.cols != cols) shape_error("concat_rows", parts[0]->value, p->value);
        rows += p->value.rows;
    }
    Array out(rows, cols);
    int off = 0;
    for (const auto& p : parts) {
        for (int i = 0; i < p->value.rows; ++i)
            for (int j = 0; j < cols; ++j) out.at(off + i, j) = p->value.at(i, j);
        off += p->value.rows;
    }
    return make(std::move(out), parts, [](Node& n) {
        int off = 0;
        for (const auto& in : n.inputs) {
            if (in->requires_grad) {
                for (int i = 0; i < in->value.rows; ++i)
                    for (int j = 0; j < in->value.cols; ++j)
                        in->grad.at(i, j) += n.grad.at(off + i, j);
            }
            off += in->value.rows;
        }
    });
}

Var gather_rows(const Var& a, const std::vector<int>& indices) {
    for (int idx : indices)
        if (idx < 0 || idx >= a->value.rows)
            throw std::invalid_argument("gather_rows: index out of range");
    Array out(static_cast<int>(indices.size()), a->value.cols);
    for (std::size_t i = 0; i < indices.size(); ++i)
        for (int j = 0; j < a->value.cols; ++j)
            out.at(static_cast<int>(i), j) = a->value.at(indices[i], j);
    return make(std::move(out), {a}, [indices](Node& n) {
        const Var& in = n.inputs[0];
        if (!in->requires_grad) return;
        for (std::size_t i = 0; i < indices.size(); ++i)
            for (int j = 0; j < in->value.cols; ++j)
                in->grad.at(indices[i], j) += n.grad.at(static_cast<int>(i), j);
    });
}

Var softmax_rows(const Var& a) {
    Array out(a->value.rows, a->value.cols);
    for (int i = 0; i < out.rows; ++i) {
        double mx = a->value.at(i, 0);
        for (int j = 1; j < out.cols; ++j) mx = std::max(mx, a->value.at(i, j));
        double z = 0.0;
        for (int j = 0; j < out.cols; ++j) {
            out.at(i, j) = std::exp(a->value.at(i, j) - mx);
            z += out.at(i, j);
        }
        for (int j = 0; j < out.cols; ++j) out.at(i, j) /= z;
    }
    return make(std::move(out), {a}, [](Node& n) {
        const Var& in = n.inputs[0];
        if (!in->requires_grad) return;
        for (int i = 0; i < n.value.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < n.value.cols; ++j) dot += n.grad.at(i, j) * n.value.at(i, j);
            for (int j = 0; j < n.value.cols; ++j)
                in->grad.at(i, j) += n.value.at(i, j) * (n.grad.at(i, j) - dot);
        }
    });
}

Var masked_softmax_rows(const Var& a, const Array& mask) {
    if (!a->value.same_shape(mask)) shape_error("masked_softmax_rows", a->value, mask);
    Array out(a->value.rows, a->value.cols);
    for (int i = 0; i < out.rows; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < out.cols; ++j)
            if (mask.at(i, j) != 0.0) mx = std::max(mx, a->value.at(i, j));
        if (mx == -std::numeric_limits<double>::infinity())
            throw std::invalid_argument("masked_softmax_rows: empty support in row " + std::to_string(i));
        double z = 0.0;
        for (int j = 0; j < out.cols; ++j) {
            if (mask.at(i, j) != 0.0) {
                out.at(i, j) = std::exp(a->value.at(i, j) - mx);
                z += out.at(i, j);
            } else {
                out.at(i, j) = 0.0;
            }
        }
        for (int j = 0; j < out.cols; ++j) out.at(i, j) /= z;
    }
    // Masked entries have value exactly 0, so the softmax Jacobian formula
    // leaves their inputs with zero gradient.
    return make(std::move(out), {a}, [](Node& n) {
        const Var& in = n.inputs[0];
        if (!in->requires_grad) return;
        for (int i = 0; i < n.value.rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < n.value.cols; ++j) dot += n.grad.at(i, j) * n.value.at(i, j);
            for (int j = 0; j < n.value.cols; ++j)
                in->grad.at(i, j) += n.value.at(i, j) * (n.grad.at(i, j) - dot);
        }
    });
}

void backward(const Var& loss) {
    if (loss->value.rows != 1 || loss->value.cols != 1)
        throw std::invalid_argument("backward: loss must be scalar");
    if (!loss->requires_grad) return;

    // Iterative post-order DFS over grad-requiring nodes.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        std::size_t next = 0;
    };
    std::vector<Frame> stack{{loss.get()}};
    visited.insert(loss.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.node->inputs.size()) {
            Node* child = f.node->inputs[f.next++].get();
            if (child->requires_grad && !visited.count(child)) {
                visited.insert(child);
                stack.push_back({child});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    for (Node* n : order) n->grad = Array(n->value.rows, n->value.cols);
    loss->grad.data[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop(**it);
    }
}

} // namespace metanco::ad
