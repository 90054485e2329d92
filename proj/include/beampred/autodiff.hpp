#pragma once

// Tape-based reverse-mode differentiation over BasicTensor<T>.
//
// Every op appends a node holding its forward value and a closure that pushes the
// node's output gradient into its parents. Parents always precede children on the
// tape, so a single descending sweep visits nodes in reverse topological order.
// Gradients are only materialised for nodes that depend on a leaf requiring them,
// which keeps frozen weights (and everything computed purely from them) cheap.

#include <cmath>
#include <functional>
#include <initializer_list>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "beampred/tensor.hpp"

namespace beampred {

template <typename T>
class Tape;

template <typename T>
class Var {
   public:
    Var() = default;
    Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape<T>* tape() const { return tape_; }
    std::size_t id() const { return id_; }
    const BasicTensor<T>& value() const { return tape_->value(id_); }
    const Shape& shape() const { return value().shape(); }
    std::size_t dim(std::size_t i) const { return value().dim(i); }
    bool requires_grad() const { return tape_->requires_grad(id_); }

   private:
    Tape<T>* tape_ = nullptr;
    std::size_t id_ = 0;
};

template <typename T>
class Tape {
   public:
    using TensorT = BasicTensor<T>;
    using BackwardFn = std::function<void(Tape&, const TensorT& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var<T> constant(TensorT value) { return push(std::move(value), false, nullptr, {}); }

    /// Differentiable input. `name` is reported by named_grads().
    Var<T> leaf(TensorT value, std::string name = {}) { return push(std::move(value), true, nullptr, std::move(name)); }

    Var<T> record(TensorT value, std::initializer_list<Var<T>> parents, BackwardFn fn) {
        bool needs = false;
        for (const auto& p : parents) needs = needs || requires_grad(p.id());
        return push(std::move(value), needs, needs ? std::move(fn) : nullptr, {});
    }

    Var<T> record(TensorT value, const std::vector<Var<T>>& parents, BackwardFn fn) {
        bool needs = false;
        for (const auto& p : parents) needs = needs || requires_grad(p.id());
        return push(std::move(value), needs, needs ? std::move(fn) : nullptr, {});
    }

    const TensorT& value(std::size_t id) const { return nodes_.at(id).value; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Gradient accumulator for `id`, zero-initialised on first use.
    TensorT& grad_buffer(std::size_t id) {
        Node& n = nodes_[id];
        if (n.grad.empty() && !n.value.empty()) n.grad = TensorT(n.value.shape());
        return n.grad;
    }

    /// Gradient of the last backward() root with respect to `v` (zeros if unreachable).
    TensorT grad(const Var<T>& v) const {
        const Node& n = nodes_.at(v.id());
        return n.grad.empty() ? TensorT(n.value.shape()) : n.grad;
    }

    void backward(const Var<T>& root) {
        if (root.value().size() != 1)
            throw ShapeError("backward: root must be a scalar, got shape " + shape_str(root.shape()));
        for (auto& n : nodes_) n.grad = TensorT();
        grad_buffer(root.id())[0] = T(1);
        for (std::size_t i = root.id() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.backward || n.grad.empty()) continue;
            n.backward(*this, n.grad);
        }
    }

    /// Gradients of every named leaf after backward().
    std::map<std::string, TensorT> named_grads() const {
        std::map<std::string, TensorT> out;
        for (const auto& n : nodes_)
            if (!n.name.empty()) out[n.name] = n.grad.empty() ? TensorT(n.value.shape()) : n.grad;
        return out;
    }

   private:
    struct Node {
        TensorT value;
        TensorT grad;
        bool requires_grad = false;
        BackwardFn backward;
        std::string name;
    };

    Var<T> push(TensorT value, bool requires_grad, BackwardFn fn, std::string name) {
        nodes_.push_back(Node{std::move(value), TensorT(), requires_grad, std::move(fn), std::move(name)});
        return Var<T>(this, nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
};

namespace detail {

struct AxisSplit {
    std::size_t outer, len, inner;
};

inline AxisSplit split_axis(const Shape& s, std::size_t axis, const char* op) {
    if (axis >= s.size()) throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    AxisSplit a{1, s[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) a.outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) a.inner *= s[i];
    return a;
}

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
    if (a != b) throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

template <typename T>
void require_same_tape(const Var<T>& a, const Var<T>& b, const char* op) {
    if (a.tape() != b.tape()) throw ShapeError(std::string(op) + ": operands live on different tapes");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra and shape ops

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    detail::require_same_tape(a, b, "matmul");
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
        throw ShapeError("matmul: " + shape_str(av.shape()) + " x " + shape_str(bv.shape()));
    const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    BasicTensor<T> out({m, n});
    kernels::gemm_nn(av.data().data(), bv.data().data(), out.data().data(), m, k, n, false);
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(std::move(out), {a, b}, [ia, ib, m, k, n](Tape<T>& t, const BasicTensor<T>& g) {
        if (t.requires_grad(ia)) kernels::gemm_nt(g.data().data(), t.value(ib).data().data(), t.grad_buffer(ia).data().data(), m, n, k, true);
        if (t.requires_grad(ib)) kernels::gemm_tn(t.value(ia).data().data(), g.data().data(), t.grad_buffer(ib).data().data(), m, k, n, true);
    });
}

template <typename T>
Var<T> transpose(const Var<T>& x) {
    const auto& xv = x.value();
    if (xv.rank() != 2) throw ShapeError("transpose: expected rank 2, got " + shape_str(xv.shape()));
    const std::size_t r = xv.dim(0), c = xv.dim(1);
    BasicTensor<T> out({c, r}, kernels::transposed(xv.data().data(), r, c));
    const std::size_t ix = x.id();
    return x.tape()->record(std::move(out), {x}, [ix, r, c](Tape<T>& t, const BasicTensor<T>& g) {
        auto& gx = t.grad_buffer(ix);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
    });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
    BasicTensor<T> out = x.value().reshaped(std::move(shape));
    const std::size_t ix = x.id();
    return x.tape()->record(std::move(out), {x}, [ix](Tape<T>& t, const BasicTensor<T>& g) {
        auto& gx = t.grad_buffer(ix);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
}

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const Shape& first = parts.front().shape();
    Shape out_shape = first;
    if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + shape_str(first));
    out_shape[axis] = 0;
    for (const auto& p : parts) {
        detail::require_same_tape(parts.front(), p, "concat");
        const Shape& s = p.shape();
        if (s.size() != first.size()) throw ShapeError("concat: rank mismatch " + shape_str(first) + " vs " + shape_str(s));
        for (std::size_t d = 0; d < s.size(); ++d)
            if (d != axis && s[d] != first[d]) throw ShapeError("concat: shape mismatch " + shape_str(first) + " vs " + shape_str(s));
        out_shape[axis] += s[axis];
    }
    const auto outer_split = detail::split_axis(out_shape, axis, "concat");
    BasicTensor<T> out(out_shape);
    std::vector<std::size_t> ids, lens;
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const auto& v = p.value();
        const std::size_t len = v.dim(axis);
        const std::size_t block = len * outer_split.inner;
        for (std::size_t o = 0; o < outer_split.outer; ++o)
            std::copy_n(v.data().data() + o * block, block, out.data().data() + (o * outer_split.len + offset) * outer_split.inner);
        ids.push_back(p.id());
        lens.push_back(len);
        offset += len;
    }
    const auto split = outer_split;
    return parts.front().tape()->record(std::move(out), parts, [ids, lens, split](Tape<T>& t, const BasicTensor<T>& g) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const std::size_t block = lens[k] * split.inner;
            if (t.requires_grad(ids[k])) {
                auto& gp = t.grad_buffer(ids[k]);
                for (std::size_t o = 0; o < split.outer; ++o) {
                    const T* src = g.data().data() + (o * split.len + off) * split.inner;
                    T* dst = gp.data().data() + o * block;
                    for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                }
            }
            off += lens[k];
        }
    });
}

/// Elements [begin, end) along `axis`.
template <typename T>
Var<T> slice(const Var<T>& x, std::size_t axis, std::size_t begin, std::size_t end) {
    const auto& xv = x.value();
    const auto split = detail::split_axis(xv.shape(), axis, "slice");
    if (begin >= end || end > split.len)
        throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) + ") invalid for " + shape_str(xv.shape()));
    Shape out_shape = xv.shape();
    out_shape[axis] = end - begin;
    BasicTensor<T> out(out_shape);
    const std::size_t block = (end - begin) * split.inner;
    for (std::size_t o = 0; o < split.outer; ++o)
        std::copy_n(xv.data().data() + (o * split.len + begin) * split.inner, block, out.data().data() + o * block);
    const std::size_t ix = x.id();
    return x.tape()->record(std::move(out), {x}, [ix, split, begin, block](Tape<T>& t, const BasicTensor<T>& g) {
        auto& gx = t.grad_buffer(ix);
        for (std::size_t o = 0; o < split.outer; ++o) {
            T* dst = gx.data().data() + (o * split.len + begin) * split.inner;
            const T* src = g.data().data() + o * block;
            for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
        }
    });
}

/// Rows of a rank-2 table selected by index.
template <typename T>
Var<T> gather_rows(const Var<T>& table, const std::vector<std::size_t>& rows) {
    const auto& tv = table.value();
    if (tv.rank() != 2) throw ShapeError("gather_rows: table must be rank 2, got " + shape_str(tv.shape()));
    const std::size_t width = tv.dim(1);
    BasicTensor<T> out({rows.size(), width});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= tv.dim(0)) throw IndexError("gather_rows: row " + std::to_string(rows[r]) + " out of range");
        std::copy_n(tv.data().data() + rows[r] * width, width, out.data().data() + r * width);
    }
    const std::size_t it = table.id();
    return table.tape()->record(std::move(out), {table}, [it, rows, width](Tape<T>& t, const BasicTensor<T>& g) {
        auto& gt = t.grad_buffer(it);
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t j = 0; j < width; ++j) gt[rows[r] * width + j] += g[r * width + j];
    });
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    detail::require_same_tape(a, b, "add");
    detail::require_same_shape(a.shape(), b.shape(), "add");
    BasicTensor<T> out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape<T>& t, const BasicTensor<T>& g) {
        for (std::size_t id : {ia, ib}) {
            if (!t.requires_grad(id)) continue;
            auto& gp = t.grad_buffer(id);
            for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
        }
    });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    detail::require_same_tape(a, b, "sub");
    detail::require_same_shape(a.shape(), b.shape(), "sub");
    BasicTensor<T> out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape<T>& t, const BasicTensor<T>& g) {
        if (t.requires_grad(ia)) {
            auto& ga = t.grad_buffer(ia);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.requires_grad(ib)) {
            auto& gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    detail::require_same_tape(a, b, "mul");
    detail::require_same_shape(a.shape(), b.shape(), "mul");
    BasicTensor<T> out = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape()->record(std::move(out), {a, b}, [ia, ib](Tape<T>& t, const BasicTensor<T>& g) {
        if (t.requires_grad(ia)) {
            const auto& bv = t.value(ib);
            auto& ga = t.grad_buffer(ia);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.requires_grad(ib)) {
            const auto& av = t.value(ia);
            auto& gb = t.grad_buffer(ib);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
}

template <typename T>
Var<T> scale(const Var<T>& x, T s) {
    BasicTensor<T> out = x.value();
    for (auto& v : out.data()) v *= s;
    const std::size_t ix = x.id();
    return x.tape()->record(std::move(out), {x}, [ix, s](Tape<T>& t, const BasicTensor<T>& g) {
        auto& gx = t.grad_buffer(ix);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
    });
}

template <typename T>
Var<T> add_scalar(const Var<T>& x, T s) {
    BasicTensor<T> out = x.value();
    for (auto& v : out.data()) v += s;
    const std::size_t ix = x.id();
    return x.tape()->record(std::move(out), {x}, [ix](Tape<T>& t, const BasicTensor<T>& g) {
        auto& gx = t.grad_buffer(ix);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
}

/// x[..., n] + bias[n]
template <typename T>
Var<T> add_bias(const Var<T>& x, const Var<T>& bias) {
    detail::require_same_tape(x, bias, "add_bias");
    const auto& xv = x.value();
    const auto& bv = bias.value();
    if (bv.rank() != 1 || xv.rank() == 0 || xv.shape().back() != bv.dim(0))
        throw ShapeError("add_bias: " + shape_str(xv.shape()) + " + " + shape_str(bv.shape()));
    const std::size_t n = bv.dim(0);
    BasicTensor<T> out = xv;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % n];
    const std::size_t ix = x.id(), ib = bias.id();
    return x.tape()->record(std::move(out), {x, bias}, [ix, ib, n](Tape<T>& t, const BasicTensor<T>& g) {
        if (t.requires_grad(ix)) {
            auto& gx = t.grad_buffer(ix);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        if (t.requires_grad(ib)) {
            std::vector<double> acc(n, 0.0);
            for (std::size_t i = 0; i < g.size(); ++i) acc[i % n] += g[i];
            auto& gb = t.grad_buffer(ib);
            for (std::size_t j = 0; j < n; ++j) gb[j] += static_cast<T>(acc[j]);
        }
    });
}

namespace detail {
template <typename T, typename Fwd, typename Deriv>
Var<T> unary(const Var<T>& x, Fwd fwd, Deriv deriv) {
    BasicTensor<T> out = x.value();
    for (auto& v : out.data()) v = fwd(v);
    const std::size_t ix = x.id();
    const std::size_t iy = x.tape()->size();
    return x.tape()->record(std::move(out), {x}, [ix, iy, deriv](Tape<T>& t, const BasicTensor<T>& g) {
        const auto& xv = t.value(ix);
        const auto& yv = t.value(iy);
        auto& gx = t.grad_buffer(ix);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xv[i], yv[i]);
    });
}
}  // namespace detail

/// Exact (erf-based) GELU.
template <typename T>
Var<T> gelu(const Var<T>& x) {
    return detail::unary(
        x, [](T v) { return static_cast<T>(0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2))); },
        [](T v, T) {
            const double xd = v;
            const double cdf = 0.5 * (1.0 + std::erf(xd / std::numbers::sqrt2));
            const double pdf = std::exp(-0.5 * xd * xd) / std::sqrt(2.0 * std::numbers::pi);
            return static_cast<T>(cdf + xd * pdf);
        });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
    return detail::unary(
        x,
        [](T v) {
            const double xd = v;
            return static_cast<T>(xd >= 0 ? 1.0 / (1.0 + std::exp(-xd)) : std::exp(xd) / (1.0 + std::exp(xd)));
        },
        [](T, T y) { return static_cast<T>(y * (T(1) - y)); });
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
    return detail::unary(x, [](T v) { return static_cast<T>(std::tanh(v)); }, [](T, T y) { return static_cast<T>(T(1) - y * y); });
}

// ---------------------------------------------------------------------------
// Normalisation, attention, reductions

/// Max-subtracted softmax along `axis`.
template <typename T>
Var<T> softmax(const Var<T>& x, std::size_t axis) {
    const auto& xv = x.value();
    const auto split = detail::split_axis(xv.shape(), axis, "softmax");
    BasicTensor<T> out(xv.shape());
    for (std::size_t o = 0; o < split.outer; ++o)
        for (std::size_t in = 0; in < split.inner; ++in) {
            const std::size_t base = o * split.len * split.inner + in;
            double mx = xv[base];
            for (std::size_t k = 1; k < split.len; ++k) mx = std::max<double>(mx, xv[base + k * split.inner]);
            double sum = 0.0;
            for (std::size_t k = 0; k < split.len; ++k) sum += std::exp(xv[base + k * split.inner] - mx);
            for (std::size_t k = 0; k < split.len; ++k)
                out[base + k * split.inner] = static_cast<T>(std::exp(xv[base + k * split.inner] - mx) / sum);
        }
    const std::size_t ix = x.id();
    const std::size_t iy = x.tape()->size();
    return x.tape()->record(std::move(out), {x}, [ix, iy, split](Tape<T>& t, const BasicTensor<T>& g) {
        const auto& y = t.value(iy);
        auto& gx = t.grad_buffer(ix);
        for (std::size_t o = 0; o < split.outer; ++o)
            for (std::size_t in = 0; in < split.inner; ++in) {
                const std::size_t base = o * split.len * split.inner + in;
                double dot = 0.0;
                for (std::size_t k = 0; k < split.len; ++k) dot += double(g[base + k * split.inner]) * y[base + k * split.inner];
                for (std::size_t k = 0; k < split.len; ++k) {
                    const std::size_t i = base + k * split.inner;
                    gx[i] += static_cast<T>(y[i] * (g[i] - dot));
                }
            }
    });
}

inline constexpr double kLayerNormEps = 1e-5;

/// Layer normalisation over the last axis with affine gamma/beta.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta) {
    const auto& xv = x.value();
    if (xv.rank() == 0) throw ShapeError("layer_norm: scalar input");
    const std::size_t n = xv.shape().back();
    if (gamma.shape() != Shape{n} || beta.shape() != Shape{n})
        throw ShapeError("layer_norm: gamma/beta must be (" + std::to_string(n) + ")");
    const std::size_t rows = xv.size() / n;
    BasicTensor<T> out(xv.shape());
    std::vector<double> xhat(xv.size()), inv_std(rows);
    const auto& gv = gamma.value();
    const auto& bv = beta.value();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* row = xv.data().data() + r * n;
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += row[j];
        mean /= double(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= double(n);
        inv_std[r] = 1.0 / std::sqrt(var + kLayerNormEps);
        for (std::size_t j = 0; j < n; ++j) {
            const double xh = (row[j] - mean) * inv_std[r];
            xhat[r * n + j] = xh;
            out[r * n + j] = static_cast<T>(xh * gv[j] + bv[j]);
        }
    }
    const std::size_t ix = x.id(), ig = gamma.id(), ib = beta.id();
    return x.tape()->record(std::move(out), {x, gamma, beta},
                            [ix, ig, ib, n, rows, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<T>& t, const BasicTensor<T>& g) {
                                const auto& gv = t.value(ig);
                                if (t.requires_grad(ix)) {
                                    auto& gx = t.grad_buffer(ix);
                                    std::vector<double> dxh(n);
                                    for (std::size_t r = 0; r < rows; ++r) {
                                        double mean_d = 0.0, mean_dx = 0.0;
                                        for (std::size_t j = 0; j < n; ++j) {
                                            dxh[j] = double(g[r * n + j]) * gv[j];
                                            mean_d += dxh[j];
                                            mean_dx += dxh[j] * xhat[r * n + j];
                                        }
                                        mean_d /= double(n);
                                        mean_dx /= double(n);
                                        for (std::size_t j = 0; j < n; ++j)
                                            gx[r * n + j] += static_cast<T>(inv_std[r] * (dxh[j] - mean_d - xhat[r * n + j] * mean_dx));
                                    }
                                }
                                if (t.requires_grad(ig) || t.requires_grad(ib)) {
                                    std::vector<double> dg(n, 0.0), db(n, 0.0);
                                    for (std::size_t r = 0; r < rows; ++r)
                                        for (std::size_t j = 0; j < n; ++j) {
                                            dg[j] += double(g[r * n + j]) * xhat[r * n + j];
                                            db[j] += g[r * n + j];
                                        }
                                    if (t.requires_grad(ig)) {
                                        auto& gg = t.grad_buffer(ig);
                                        for (std::size_t j = 0; j < n; ++j) gg[j] += static_cast<T>(dg[j]);
                                    }
                                    if (t.requires_grad(ib)) {
                                        auto& gb = t.grad_buffer(ib);
                                        for (std::size_t j = 0; j < n; ++j) gb[j] += static_cast<T>(db[j]);
                                    }
                                }
                            });
}

/// softmax(q k^T / sqrt(d)) v for q (Tq,d), k (Tk,d), v (Tk,dv).
template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v) {
    detail::require_same_tape(q, k, "attention");
    detail::require_same_tape(q, v, "attention");
    const auto& qv = q.value();
    const auto& kv = k.value();
    const auto& vv = v.value();
    if (qv.rank() != 2 || kv.rank() != 2 || vv.rank() != 2 || qv.dim(1) != kv.dim(1) || kv.dim(0) != vv.dim(0))
        throw ShapeError("attention: q" + shape_str(qv.shape()) + " k" + shape_str(kv.shape()) + " v" + shape_str(vv.shape()));
    const std::size_t tq = qv.dim(0), tk = kv.dim(0), d = qv.dim(1), dv = vv.dim(1);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    std::vector<T> scores(tq * tk);
    kernels::gemm_nt(qv.data().data(), kv.data().data(), scores.data(), tq, d, tk, false);
    std::vector<T> weights(tq * tk);
    for (std::size_t i = 0; i < tq; ++i) {
        double mx = -INFINITY;
        for (std::size_t j = 0; j < tk; ++j) mx = std::max(mx, scores[i * tk + j] * inv_sqrt_d);
        double sum = 0.0;
        for (std::size_t j = 0; j < tk; ++j) sum += std::exp(scores[i * tk + j] * inv_sqrt_d - mx);
        for (std::size_t j = 0; j < tk; ++j) weights[i * tk + j] = static_cast<T>(std::exp(scores[i * tk + j] * inv_sqrt_d - mx) / sum);
    }
    BasicTensor<T> out({tq, dv});
    kernels::gemm_nn(weights.data(), vv.data().data(), out.data().data(), tq, tk, dv, false);

    const std::size_t iq = q.id(), ik = k.id(), iv = v.id();
    return q.tape()->record(
        std::move(out), {q, k, v}, [iq, ik, iv, tq, tk, d, dv, inv_sqrt_d, weights = std::move(weights)](Tape<T>& t, const BasicTensor<T>& g) {
            if (t.requires_grad(iv)) kernels::gemm_tn(weights.data(), g.data().data(), t.grad_buffer(iv).data().data(), tq, tk, dv, true);
            if (!t.requires_grad(iq) && !t.requires_grad(ik)) return;
            // dW = g v^T, dS = W * (dW - rowsum(dW * W)) / sqrt(d)
            std::vector<T> dw(tq * tk);
            kernels::gemm_nt(g.data().data(), t.value(iv).data().data(), dw.data(), tq, dv, tk, false);
            std::vector<T> ds(tq * tk);
            for (std::size_t i = 0; i < tq; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < tk; ++j) dot += double(dw[i * tk + j]) * weights[i * tk + j];
                for (std::size_t j = 0; j < tk; ++j)
                    ds[i * tk + j] = static_cast<T>(weights[i * tk + j] * (dw[i * tk + j] - dot) * inv_sqrt_d);
            }
            if (t.requires_grad(iq)) kernels::gemm_nn(ds.data(), t.value(ik).data().data(), t.grad_buffer(iq).data().data(), tq, tk, d, true);
            if (t.requires_grad(ik)) kernels::gemm_tn(ds.data(), t.value(iq).data().data(), t.grad_buffer(ik).data().data(), tq, tk, d, true);
        });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
    double acc = 0.0;
    for (T v : x.value().data()) acc += v;
    const std::size_t ix = x.id();
    return x.tape()->record(BasicTensor<T>({1}, {static_cast<T>(acc)}), {x}, [ix](Tape<T>& t, const BasicTensor<T>& g) {
        auto& gx = t.grad_buffer(ix);
        for (auto& v : gx.data()) v += g[0];
    });
}

/// mean((pred - target)^2) over all elements.
template <typename T>
Var<T> mse(const Var<T>& pred, const Var<T>& target) {
    detail::require_same_tape(pred, target, "mse");
    detail::require_same_shape(pred.shape(), target.shape(), "mse");
    const auto& pv = pred.value();
    const auto& tv = target.value();
    const std::size_t n = pv.size();
    if (n == 0) throw ShapeError("mse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += (double(pv[i]) - tv[i]) * (double(pv[i]) - tv[i]);
    const std::size_t ip = pred.id(), it = target.id();
    return pred.tape()->record(BasicTensor<T>({1}, {static_cast<T>(acc / double(n))}), {pred, target}, [ip, it, n](Tape<T>& t, const BasicTensor<T>& g) {
        const auto& pv = t.value(ip);
        const auto& tv = t.value(it);
        const double s = 2.0 * double(g[0]) / double(n);
        if (t.requires_grad(ip)) {
            auto& gp = t.grad_buffer(ip);
            for (std::size_t i = 0; i < n; ++i) gp[i] += static_cast<T>(s * (double(pv[i]) - tv[i]));
        }
        if (t.requires_grad(it)) {
            auto& gt = t.grad_buffer(it);
            for (std::size_t i = 0; i < n; ++i) gt[i] -= static_cast<T>(s * (double(pv[i]) - tv[i]));
        }
    });
}

/// y = x w + b for x (n, in), w (in, out), b (out).
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
    return add_bias(matmul(x, w), b);
}

}  // namespace beampred
