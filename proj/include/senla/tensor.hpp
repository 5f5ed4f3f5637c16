#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "senla/common.hpp"

namespace senla {

namespace detail {
inline thread_local bool grad_enabled = true;
}

inline bool grad_enabled() { return detail::grad_enabled; }

// Scoped guard turning off graph recording; used for inference and for the
// finite-difference probes of the gradient checker.
struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(detail::grad_enabled) { detail::grad_enabled = false; }
    ~NoGradGuard() { detail::grad_enabled = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

// Dense row-major tensor participating in reverse-mode differentiation.
// A TensorT is a cheap handle onto a shared node; ops build the graph eagerly
// (forward values computed at construction, backward closures recorded when
// grad mode is on and some input requires grad).
template <typename T>
class TensorT {
   public:
    struct Node {
        Shape shape;
        std::vector<T> value;
        std::vector<T> grad;  // allocated on first touch
        bool requires_grad = false;
        std::vector<TensorT> parents;
        std::function<void(Node&)> backward;

        void ensure_grad() {
            if (grad.size() != value.size()) grad.assign(value.size(), T(0));
        }
    };

    TensorT() = default;

    static TensorT zeros(const Shape& shape, bool requires_grad = false) {
        return leaf(shape, std::vector<T>(shape_numel(shape), T(0)), requires_grad);
    }

    static TensorT full(const Shape& shape, T v, bool requires_grad = false) {
        return leaf(shape, std::vector<T>(shape_numel(shape), v), requires_grad);
    }

    static TensorT from_data(const Shape& shape, std::vector<T> data, bool requires_grad = false) {
        if (static_cast<int64_t>(data.size()) != shape_numel(shape))
            throw DimensionError("from_data: " + std::to_string(data.size()) +
                                 " values for shape " + shape_str(shape));
        return leaf(shape, std::move(data), requires_grad);
    }

    static TensorT scalar(T v) { return leaf({1}, std::vector<T>{v}, false); }

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(node_->shape.size()); }
    int64_t size() const { return static_cast<int64_t>(node_->value.size()); }

    const std::vector<T>& values() const { return node_->value; }
    // In-place mutation; valid only on leaves (optimizer updates, finite
    // difference probes). Graphs are rebuilt every step so this never
    // invalidates recorded state.
    std::vector<T>& mutable_values() { return node_->value; }

    T item() const {
        if (size() != 1) throw DimensionError("item: tensor has " + std::to_string(size()) + " values");
        return node_->value[0];
    }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool rg) { node_->requires_grad = rg; }

    std::vector<T>& grad() {
        node_->ensure_grad();
        return node_->grad;
    }
    const std::vector<T>* grad_if() const {
        return node_->grad.empty() ? nullptr : &node_->grad;
    }
    void zero_grad() {
        if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
    }

    TensorT detach() const { return leaf(node_->shape, node_->value, false); }

    // Reverse pass from a scalar. Visits every reachable recorded op exactly
    // once in reverse topological order.
    void backward() const {
        if (size() != 1) throw DimensionError("backward: loss must be scalar");
        std::vector<Node*> order;
        topo_sort(node_.get(), order);
        node_->ensure_grad();
        node_->grad[0] += T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node* n = *it;
            if (n->backward) n->backward(*n);
        }
    }

    Node* node() const { return node_.get(); }

    static TensorT make_op(Shape shape, std::vector<T> value, std::vector<TensorT> parents,
                           std::function<void(Node&)> backward) {
        TensorT t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = std::move(shape);
        t.node_->value = std::move(value);
        bool need = false;
        if (grad_enabled()) {
            for (const auto& p : parents)
                if (p.requires_grad()) need = true;
        }
        if (need) {
            t.node_->requires_grad = true;
            t.node_->parents = std::move(parents);
            t.node_->backward = std::move(backward);
        }
        return t;
    }

   private:
    static TensorT leaf(Shape shape, std::vector<T> data, bool requires_grad) {
        TensorT t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = std::move(shape);
        t.node_->value = std::move(data);
        t.node_->requires_grad = requires_grad && grad_enabled();
        return t;
    }

    static void topo_sort(Node* root, std::vector<Node*>& order) {
        // Iterative postorder DFS; graphs from deep encoders can exceed the
        // stack budget of a recursive walk.
        std::unordered_set<Node*> visited;
        std::vector<std::pair<Node*, size_t>> stack;
        stack.emplace_back(root, 0);
        visited.insert(root);
        while (!stack.empty()) {
            auto& [n, i] = stack.back();
            if (i < n->parents.size()) {
                Node* p = n->parents[i++].node();
                if (p->requires_grad && !visited.count(p)) {
                    visited.insert(p);
                    stack.emplace_back(p, 0);
                }
            } else {
                order.push_back(n);
                stack.pop_back();
            }
        }
    }

    std::shared_ptr<Node> node_;
};

using Tensor = TensorT<float>;

namespace detail {

// Clamped rational tanh (the classic 13/6 Pade fit): pure polynomial
// arithmetic, so the compiler vectorizes the gelu loops. Accurate to a few
// ulps over the clamp range; the double path keeps std::tanh because the
// gradient-check oracle runs there and favors exactness over speed.
inline float fast_tanh(float x) {
    const float cx = std::clamp(x, -7.99881172180175781f, 7.99881172180175781f);
    const float x2 = cx * cx;
    float p = -2.76076847742355e-16f;
    p = 2.00018790482477e-13f + x2 * p;
    p = -8.60467152213735e-11f + x2 * p;
    p = 5.12229709037114e-08f + x2 * p;
    p = 1.48572235717979e-05f + x2 * p;
    p = 6.37261928875436e-04f + x2 * p;
    p = 4.89352455891786e-03f + x2 * p;
    p = cx * p;
    float q = 1.19825839466702e-06f;
    q = 1.18534705686654e-04f + x2 * q;
    q = 2.26843463243900e-03f + x2 * q;
    q = 4.89352518554385e-03f + x2 * q;
    return p / q;
}

inline double fast_tanh(double x) { return std::tanh(x); }

template <typename T>
using EMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using EMap = Eigen::Map<EMat<T>>;
template <typename T>
using ECMap = Eigen::Map<const EMat<T>>;

// (outer, axis, inner) extents for slicing along `axis`.
inline void axis_extents(const Shape& s, int axis, int64_t& outer, int64_t& n, int64_t& inner) {
    if (axis < 0 || axis >= static_cast<int>(s.size()))
        throw DimensionError("axis " + std::to_string(axis) + " invalid for " + shape_str(s));
    outer = 1;
    inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[static_cast<size_t>(i)];
    n = s[static_cast<size_t>(axis)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < s.size(); ++i) inner *= s[i];
}

inline void check_offsets(const std::vector<int>& offsets, int rows, const char* what) {
    if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != rows)
        throw DimensionError(std::string(what) + ": bad segment offsets");
    for (size_t i = 1; i < offsets.size(); ++i)
        if (offsets[i] < offsets[i - 1]) throw DimensionError(std::string(what) + ": offsets not sorted");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and scalar ops
// ---------------------------------------------------------------------------

namespace detail {
// Accumulate into a parent's gradient, assigning on first touch so fresh
// intermediates skip the zero-fill-then-add pass.
template <typename T, typename Tensor>
void grad_accumulate(Tensor& p, const std::vector<T>& src) {
    if (!p.requires_grad()) return;
    auto& g = p.node()->grad;
    if (g.empty()) {
        g = src;
    } else {
        for (size_t i = 0; i < g.size(); ++i) g[i] += src[i];
    }
}
}  // namespace detail

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.shape() != b.shape())
        throw DimensionError("add: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<T> out(a.values());
    const auto& bv = b.values();
    for (size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return TensorT<T>::make_op(a.shape(), std::move(out), {a, b}, [](auto& n) {
        detail::grad_accumulate(n.parents[0], n.grad);
        detail::grad_accumulate(n.parents[1], n.grad);
    });
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.shape() != b.shape())
        throw DimensionError("sub: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<T> out(a.values());
    const auto& bv = b.values();
    for (size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    return TensorT<T>::make_op(a.shape(), std::move(out), {a, b}, [](auto& n) {
        auto& pa = n.parents[0];
        auto& pb = n.parents[1];
        if (pa.requires_grad()) {
            auto& g = pa.grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (pb.requires_grad()) {
            auto& g = pb.grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
        }
    });
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.shape() != b.shape())
        throw DimensionError("mul: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<T> out(a.values());
    const auto& bv = b.values();
    for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    return TensorT<T>::make_op(a.shape(), std::move(out), {a, b}, [](auto& n) {
        auto& pa = n.parents[0];
        auto& pb = n.parents[1];
        const auto& av = pa.values();
        const auto& bv2 = pb.values();
        if (pa.requires_grad()) {
            auto& g = pa.grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * bv2[i];
        }
        if (pb.requires_grad()) {
            auto& g = pb.grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * av[i];
        }
    });
}

template <typename T>
TensorT<T> scale(const TensorT<T>& a, T c) {
    std::vector<T> out(a.values());
    for (auto& v : out) v *= c;
    return TensorT<T>::make_op(a.shape(), std::move(out), {a}, [c](auto& n) {
        auto& pa = n.parents[0];
        if (!pa.requires_grad()) return;
        auto& g = pa.grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * c;
    });
}

template <typename T>
TensorT<T> gelu(const TensorT<T>& a) {
    const T s = T(0.7978845608028654);  // sqrt(2/pi)
    const T c = T(0.044715);
    std::vector<T> out(a.values());
    const int64_t total = static_cast<int64_t>(out.size());
    for (int64_t i = 0; i < total; ++i) {
        const T x = out[static_cast<size_t>(i)];
        out[static_cast<size_t>(i)] = T(0.5) * x * (T(1) + detail::fast_tanh(s * (x + c * x * x * x)));
    }
    return TensorT<T>::make_op(a.shape(), std::move(out), {a}, [s, c](auto& n) {
        auto& pa = n.parents[0];
        if (!pa.requires_grad()) return;
        const auto& xv = pa.values();
        auto& g = pa.grad();
        const int64_t count = static_cast<int64_t>(g.size());
        for (int64_t i = 0; i < count; ++i) {
            T x = xv[i];
            T u = s * (x + c * x * x * x);
            T t = detail::fast_tanh(u);
            T sech2 = T(1) - t * t;
            T local = T(0.5) * (T(1) + t) + T(0.5) * x * sech2 * s * (T(1) + T(3) * c * x * x);
            g[i] += n.grad[i] * local;
        }
    });
}

// ---------------------------------------------------------------------------
// Matrix ops
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
        throw DimensionError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<T> out(static_cast<size_t>(m) * n);
    detail::ECMap<T> A(a.values().data(), m, k), B(b.values().data(), k, n);
    detail::EMap<T>(out.data(), m, n).noalias() = A * B;
    return TensorT<T>::make_op({m, n}, std::move(out), {a, b}, [m, k, n](auto& n_) {
        auto& pa = n_.parents[0];
        auto& pb = n_.parents[1];
        detail::ECMap<T> G(n_.grad.data(), m, n);
        if (pa.requires_grad()) {
            detail::ECMap<T> B(pb.values().data(), k, n);
            detail::EMap<T>(pa.grad().data(), m, k).noalias() += G * B.transpose();
        }
        if (pb.requires_grad()) {
            detail::ECMap<T> A(pa.values().data(), m, k);
            detail::EMap<T>(pb.grad().data(), k, n).noalias() += A.transpose() * G;
        }
    });
}

// Fused x @ w + bias (bias broadcast over rows): one node instead of a
// matmul/add pair on the hot path.
template <typename T>
TensorT<T> linear(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
    if (x.ndim() != 2 || w.ndim() != 2 || x.dim(1) != w.dim(0) || b.size() != w.dim(1))
        throw DimensionError("linear: " + shape_str(x.shape()) + " x " + shape_str(w.shape()) +
                             " + " + shape_str(b.shape()));
    const int m = x.dim(0), k = x.dim(1), n = w.dim(1);
    std::vector<T> out(static_cast<size_t>(m) * n);
    {
        detail::ECMap<T> X(x.values().data(), m, k), W(w.values().data(), k, n);
        detail::EMap<T> O(out.data(), m, n);
        O.noalias() = X * W;
        O.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(b.values().data(), n);
    }
    return TensorT<T>::make_op({m, n}, std::move(out), {x, w, b}, [m, k, n](auto& nd) {
        auto& px = nd.parents[0];
        auto& pw = nd.parents[1];
        auto& pb = nd.parents[2];
        detail::ECMap<T> G(nd.grad.data(), m, n);
        if (px.requires_grad()) {
            detail::ECMap<T> W(pw.values().data(), k, n);
            auto& g = px.node()->grad;
            if (g.empty()) {
                g.resize(static_cast<size_t>(m) * k);
                detail::EMap<T>(g.data(), m, k).noalias() = G * W.transpose();
            } else {
                detail::EMap<T>(g.data(), m, k).noalias() += G * W.transpose();
            }
        }
        if (pw.requires_grad()) {
            detail::ECMap<T> X(px.values().data(), m, k);
            detail::EMap<T>(pw.grad().data(), k, n).noalias() += X.transpose() * G;
        }
        if (pb.requires_grad()) {
            Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(pb.grad().data(), n) += G.colwise().sum();
        }
    });
}

template <typename T>
TensorT<T> transpose(const TensorT<T>& a) {
    if (a.ndim() != 2) throw DimensionError("transpose: need 2-d, got " + shape_str(a.shape()));
    const int m = a.dim(0), n = a.dim(1);
    std::vector<T> out(static_cast<size_t>(m) * n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[static_cast<size_t>(j) * m + i] = a.values()[static_cast<size_t>(i) * n + j];
    return TensorT<T>::make_op({n, m}, std::move(out), {a}, [m, n](auto& nd) {
        auto& pa = nd.parents[0];
        if (!pa.requires_grad()) return;
        auto& g = pa.grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) g[static_cast<size_t>(i) * n + j] += nd.grad[static_cast<size_t>(j) * m + i];
    });
}

// Broadcast a length-n vector over the rows of an (m, n) matrix.
template <typename T>
TensorT<T> add_rowvec(const TensorT<T>& x, const TensorT<T>& v) {
    if (x.ndim() != 2 || v.ndim() != 1 || v.dim(0) != x.dim(1))
        throw DimensionError("add_rowvec: " + shape_str(x.shape()) + " + " + shape_str(v.shape()));
    const int m = x.dim(0), n = x.dim(1);
    std::vector<T> out(x.values());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * n + j] += v.values()[static_cast<size_t>(j)];
    return TensorT<T>::make_op(x.shape(), std::move(out), {x, v}, [m, n](auto& nd) {
        auto& px = nd.parents[0];
        auto& pv = nd.parents[1];
        if (px.requires_grad()) {
            auto& g = px.grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += nd.grad[i];
        }
        if (pv.requires_grad()) {
            auto& g = pv.grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) g[static_cast<size_t>(j)] += nd.grad[static_cast<size_t>(i) * n + j];
        }
    });
}

// Tile a matrix vertically `times` times.
template <typename T>
TensorT<T> repeat_rows(const TensorT<T>& x, int times) {
    if (x.ndim() != 2 || times < 1) throw DimensionError("repeat_rows: bad arguments");
    const int m = x.dim(0), n = x.dim(1);
    std::vector<T> out;
    out.reserve(static_cast<size_t>(m) * n * times);
    for (int t = 0; t < times; ++t) out.insert(out.end(), x.values().begin(), x.values().end());
    return TensorT<T>::make_op({m * times, n}, std::move(out), {x}, [m, n, times](auto& nd) {
        auto& px = nd.parents[0];
        if (!px.requires_grad()) return;
        auto& g = px.grad();
        const size_t block = static_cast<size_t>(m) * n;
        for (int t = 0; t < times; ++t)
            for (size_t i = 0; i < block; ++i) g[i] += nd.grad[static_cast<size_t>(t) * block + i];
    });
}

// Duplicate each row `times` times consecutively.
template <typename T>
TensorT<T> repeat_each_row(const TensorT<T>& x, int times) {
    if (x.ndim() != 2 || times < 1) throw DimensionError("repeat_each_row: bad arguments");
    const int m = x.dim(0), n = x.dim(1);
    std::vector<T> out(static_cast<size_t>(m) * times * n);
    for (int i = 0; i < m; ++i)
        for (int t = 0; t < times; ++t)
            std::copy_n(x.values().data() + static_cast<size_t>(i) * n, n,
                        out.data() + (static_cast<size_t>(i) * times + t) * n);
    return TensorT<T>::make_op({m * times, n}, std::move(out), {x}, [m, n, times](auto& nd) {
        auto& px = nd.parents[0];
        if (!px.requires_grad()) return;
        auto& g = px.grad();
        for (int i = 0; i < m; ++i)
            for (int t = 0; t < times; ++t)
                for (int j = 0; j < n; ++j)
                    g[static_cast<size_t>(i) * n + j] += nd.grad[(static_cast<size_t>(i) * times + t) * n + j];
    });
}

// Select rows by index; indices may repeat. Backward scatter-adds.
template <typename T>
TensorT<T> gather_rows(const TensorT<T>& x, std::vector<int> idx) {
    if (x.ndim() != 2) throw DimensionError("gather_rows: need 2-d");
    const int m = x.dim(0), n = x.dim(1);
    for (int i : idx)
        if (i < 0 || i >= m) throw IndexError("gather_rows: row " + std::to_string(i) + " out of " + std::to_string(m));
    std::vector<T> out(idx.size() * static_cast<size_t>(n));
    for (size_t r = 0; r < idx.size(); ++r)
        std::copy_n(x.values().data() + static_cast<size_t>(idx[r]) * n, n, out.data() + r * n);
    const int rows = static_cast<int>(idx.size());
    return TensorT<T>::make_op({rows, n}, std::move(out), {x}, [n, idx = std::move(idx)](auto& nd) {
        auto& px = nd.parents[0];
        if (!px.requires_grad()) return;
        auto& g = px.grad();
        using Vec = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
        using CVec = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;
        for (size_t r = 0; r < idx.size(); ++r)
            Vec(g.data() + static_cast<size_t>(idx[r]) * n, n) += CVec(nd.grad.data() + r * n, n);
    });
}

template <typename T>
TensorT<T> slice_rows(const TensorT<T>& x, int start, int len) {
    if (x.ndim() != 2 || start < 0 || len < 0 || start + len > x.dim(0))
        throw DimensionError("slice_rows: [" + std::to_string(start) + "," + std::to_string(start + len) +
                             ") of " + shape_str(x.shape()));
    const int n = x.dim(1);
    std::vector<T> out(x.values().begin() + static_cast<size_t>(start) * n,
                       x.values().begin() + static_cast<size_t>(start + len) * n);
    return TensorT<T>::make_op({len, n}, std::move(out), {x}, [start, len, n](auto& nd) {
        auto& px = nd.parents[0];
        if (!px.requires_grad()) return;
        auto& g = px.grad();
        for (size_t i = 0; i < static_cast<size_t>(len) * n; ++i)
            g[static_cast<size_t>(start) * n + i] += nd.grad[i];
    });
}

template <typename T>
TensorT<T> concat_rows(const std::vector<TensorT<T>>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no parts");
    const int n = parts[0].dim(1);
    int rows = 0;
    for (const auto& p : parts) {
        if (p.ndim() != 2 || p.dim(1) != n)
            throw DimensionError("concat_rows: width mismatch " + shape_str(p.shape()));
        rows += p.dim(0);
    }
    std::vector<T> out;
    out.reserve(static_cast<size_t>(rows) * n);
    for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
    return TensorT<T>::make_op({rows, n}, std::move(out), parts, [n](auto& nd) {
        size_t off = 0;
        for (auto& p : nd.parents) {
            const size_t len = p.values().size();
            if (p.requires_grad()) {
                auto& g = p.grad();
                for (size_t i = 0; i < len; ++i) g[i] += nd.grad[off + i];
            }
            off += len;
        }
    });
}

// ---------------------------------------------------------------------------
// Normalizations and reductions
// ---------------------------------------------------------------------------

template <typename T>
TensorT<T> softmax(const TensorT<T>& x, int axis) {
    int64_t outer, n, inner;
    detail::axis_extents(x.shape(), axis, outer, n, inner);
    std::vector<T> out(x.values().size());
    const T* xv = x.values().data();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t in = 0; in < inner; ++in) {
            const int64_t base = o * n * inner + in;
            T mx = xv[base];
            for (int64_t i = 1; i < n; ++i) mx = std::max(mx, xv[base + i * inner]);
            T sum = T(0);
            for (int64_t i = 0; i < n; ++i) {
                T e = std::exp(xv[base + i * inner] - mx);
                out[base + i * inner] = e;
                sum += e;
            }
            const T inv = T(1) / sum;
            for (int64_t i = 0; i < n; ++i) out[base + i * inner] *= inv;
        }
    return TensorT<T>::make_op(x.shape(), std::move(out), {x},
                               [outer, n, inner](auto& nd) {
        // The node value is the probability tensor itself; no saved state.
        auto& px = nd.parents[0];
        if (!px.requires_grad()) return;
        auto& g = px.grad();
        const std::vector<T>& p = nd.value;
        for (int64_t o = 0; o < outer; ++o)
            for (int64_t in = 0; in < inner; ++in) {
                const int64_t base = o * n * inner + in;
                T dot = T(0);
                for (int64_t i = 0; i < n; ++i) dot += nd.grad[base + i * inner] * p[base + i * inner];
                for (int64_t i = 0; i < n; ++i)
                    g[base + i * inner] += p[base + i * inner] * (nd.grad[base + i * inner] - dot);
            }
    });
}

// log-sum-exp along `axis`; output drops the axis. Max-subtracted.
template <typename T>
TensorT<T> logsumexp(const TensorT<T>& x, int axis) {
    int64_t outer, n, inner;
    detail::axis_extents(x.shape(), axis, outer, n, inner);
    Shape oshape;
    for (int i = 0; i < static_cast<int>(x.shape().size()); ++i)
        if (i != axis) oshape.push_back(x.shape()[static_cast<size_t>(i)]);
    if (oshape.empty()) oshape.push_back(1);
    std::vector<T> out(static_cast<size_t>(outer * inner));
    const T* xv = x.values().data();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t in = 0; in < inner; ++in) {
            const int64_t base = o * n * inner + in;
            T mx = xv[base];
            for (int64_t i = 1; i < n; ++i) mx = std::max(mx, xv[base + i * inner]);
            T sum = T(0);
            for (int64_t i = 0; i < n; ++i) sum += std::exp(xv[base + i * inner] - mx);
            out[static_cast<size_t>(o * inner + in)] = mx + std::log(sum);
        }
    return TensorT<T>::make_op(std::move(oshape), std::move(out), {x}, [outer, n, inner](auto& nd) {
        auto& px = nd.parents[0];
        if (!px.requires_grad()) return;
        auto& g = px.grad();
        const T* xv = px.values().data();
        for (int64_t o = 0; o < outer; ++o)
            for (int64_t in = 0; in < inner; ++in) {
                const int64_t base = o * n * inner + in;
                const T lse = nd.value[static_cast<size_t>(o * inner + in)];
                const T go = nd.grad[static_cast<size_t>(o * inner + in)];
                for (int64_t i = 0; i < n; ++i)
                    g[base + i * inner] += go * std::exp(xv[base + i * inner] - lse);
            }
    });
}

// Normalize the last axis to zero mean / unit variance, then apply gain and
// bias (both sized to the last extent).
template <typename T>
TensorT<T> layer_norm(const TensorT<T>& x, const TensorT<T>& gain, const TensorT<T>& bias, T eps = T(1e-5)) {
    const int n = x.shape().back();
    if (gain.size() != n || bias.size() != n)
        throw DimensionError("layer_norm: gain/bias must match last extent " + std::to_string(n));
    const int64_t rows = x.size() / n;
    std::vector<T> out(x.values().size());
    std::vector<T> rstd(static_cast<size_t>(rows));
    std::vector<T> mean(static_cast<size_t>(rows));
    const T* xv = x.values().data();
    const T* gv = gain.values().data();
    const T* bv = bias.values().data();
    using CVec = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;
    for (int64_t r = 0; r < rows; ++r) {
        const T* row = xv + r * n;
        CVec rv(row, n);
        const T m = rv.sum() / T(n);
        const T var = (rv.array() - m).square().sum() / T(n);
        const T rs = T(1) / std::sqrt(var + eps);
        mean[static_cast<size_t>(r)] = m;
        rstd[static_cast<size_t>(r)] = rs;
        T* orow = out.data() + r * n;
        for (int i = 0; i < n; ++i) orow[i] = (row[i] - m) * rs * gv[i] + bv[i];
    }
    return TensorT<T>::make_op(x.shape(), std::move(out), {x, gain, bias},
                               [n, rows, mean = std::move(mean), rstd = std::move(rstd)](auto& nd) {
        auto& px = nd.parents[0];
        auto& pg = nd.parents[1];
        auto& pb = nd.parents[2];
        const T* xv = px.values().data();
        const T* gv = pg.values().data();
        const bool gx_fresh = px.requires_grad() && px.node()->grad.empty();
        if (gx_fresh) px.node()->grad.resize(px.values().size());
        std::vector<T>* gx = px.requires_grad() ? &px.node()->grad : nullptr;
        std::vector<T>* gg = pg.requires_grad() ? &pg.grad() : nullptr;
        std::vector<T>* gb = pb.requires_grad() ? &pb.grad() : nullptr;
        if (gg || gb) {
            for (int64_t r = 0; r < rows; ++r) {
                const T* row = xv + r * n;
                const T* go = nd.grad.data() + r * n;
                const T m = mean[static_cast<size_t>(r)];
                const T rs = rstd[static_cast<size_t>(r)];
                if (gb)
                    for (int i = 0; i < n; ++i) (*gb)[static_cast<size_t>(i)] += go[i];
                if (gg)
                    for (int i = 0; i < n; ++i)
                        (*gg)[static_cast<size_t>(i)] += go[i] * (row[i] - m) * rs;
            }
        }
        if (gx) {
            using CArr = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;
            for (int64_t r = 0; r < rows; ++r) {
                const T* row = xv + r * n;
                const T* go = nd.grad.data() + r * n;
                const T m = mean[static_cast<size_t>(r)];
                const T rs = rstd[static_cast<size_t>(r)];
                CArr ra(row, n), ga(go, n), gva(gv, n);
                const T s1 = (ga * gva).sum() / T(n);
                const T s2 = ((ga * gva) * ((ra - m) * rs)).sum() / T(n);
                T* gxr = gx->data() + r * n;
                if (gx_fresh)
                    for (int i = 0; i < n; ++i) {
                        const T xhat = (row[i] - m) * rs;
                        gxr[i] = (go[i] * gv[i] - s1 - xhat * s2) * rs;
                    }
                else
                    for (int i = 0; i < n; ++i) {
                        const T xhat = (row[i] - m) * rs;
                        gxr[i] += (go[i] * gv[i] - s1 - xhat * s2) * rs;
                    }
            }
        }
    });
}

// Euclidean normalization along `axis`. Slices with squared norm below 1e-12
// are reported through `degenerate` (exact zeros come out as zeros).
template <typename T>
TensorT<T> l2_normalize(const TensorT<T>& x, int axis, bool* degenerate = nullptr) {
    int64_t outer, n, inner;
    detail::axis_extents(x.shape(), axis, outer, n, inner);
    const T eps = T(1e-12);
    std::vector<T> out(x.values().size());
    std::vector<T> rnorm(static_cast<size_t>(outer * inner));
    const T* xv = x.values().data();
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t in = 0; in < inner; ++in) {
            const int64_t base = o * n * inner + in;
            T ss = T(0);
            for (int64_t i = 0; i < n; ++i) {
                const T v = xv[base + i * inner];
                ss += v * v;
            }
            if (degenerate && ss < T(1e-12)) *degenerate = true;
            const T r = T(1) / std::sqrt(ss + eps);
            rnorm[static_cast<size_t>(o * inner + in)] = r;
            for (int64_t i = 0; i < n; ++i) out[base + i * inner] = xv[base + i * inner] * r;
        }
    return TensorT<T>::make_op(x.shape(), std::move(out), {x},
                               [outer, n, inner, rnorm = std::move(rnorm)](auto& nd) {
        auto& px = nd.parents[0];
        if (!px.requires_grad()) return;
        auto& g = px.grad();
        const T* xv = px.values().data();
        for (int64_t o = 0; o < outer; ++o)
            for (int64_t in = 0; in < inner; ++in) {
                const int64_t base = o * n * inner + in;
                const T r = rnorm[static_cast<size_t>(o * inner + in)];
                T dot = T(0);
                for (int64_t i = 0; i < n; ++i) dot += nd.grad[base + i * inner] * xv[base + i * inner];
                for (int64_t i = 0; i < n; ++i)
                    g[base + i * inner] += nd.grad[base + i * inner] * r - xv[base + i * inner] * dot * r * r * r;
            }
    });
}

template <typename T>
TensorT<T> sum_all(const TensorT<T>& x) {
    T s = T(0);
    for (T v : x.values()) s += v;
    return TensorT<T>::make_op({1}, {s}, {x}, [](auto& nd) {
        auto& px = nd.parents[0];
        if (!px.requires_grad()) return;
        auto& g = px.grad();
        for (auto& v : g) v += nd.grad[0];
    });
}

template <typename T>
TensorT<T> mean_all(const TensorT<T>& x) {
    const T inv = T(1) / T(x.size());
    T s = T(0);
    for (T v : x.values()) s += v;
    s *= inv;
    return TensorT<T>::make_op({1}, {s}, {x}, [inv](auto& nd) {
        auto& px = nd.parents[0];
        if (!px.requires_grad()) return;
        auto& g = px.grad();
        for (auto& v : g) v += nd.grad[0] * inv;
    });
}

// out[i] = x[i, cols[i]]
template <typename T>
TensorT<T> gather_cols_per_row(const TensorT<T>& x, std::vector<int> cols) {
    if (x.ndim() != 2 || static_cast<int>(cols.size()) != x.dim(0))
        throw DimensionError("gather_cols_per_row: need one column per row");
    const int m = x.dim(0), n = x.dim(1);
    for (int c : cols)
        if (c < 0 || c >= n) throw IndexError("gather_cols_per_row: column " + std::to_string(c) + " out of " + std::to_string(n));
    std::vector<T> out(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) out[static_cast<size_t>(i)] = x.values()[static_cast<size_t>(i) * n + cols[static_cast<size_t>(i)]];
    return TensorT<T>::make_op({m}, std::move(out), {x}, [m, n, cols = std::move(cols)](auto& nd) {
        auto& px = nd.parents[0];
        if (!px.requires_grad()) return;
        auto& g = px.grad();
        for (int i = 0; i < m; ++i)
            g[static_cast<size_t>(i) * n + cols[static_cast<size_t>(i)]] += nd.grad[static_cast<size_t>(i)];
    });
}

// ---------------------------------------------------------------------------
// Segment (ragged batch) ops
// ---------------------------------------------------------------------------

// Mean over each row segment; empty segments yield zero rows.
template <typename T>
TensorT<T> segment_mean_pool(const TensorT<T>& x, const std::vector<int>& offsets) {
    if (x.ndim() != 2) throw DimensionError("segment_mean_pool: need 2-d");
    detail::check_offsets(offsets, x.dim(0), "segment_mean_pool");
    const int segs = static_cast<int>(offsets.size()) - 1;
    const int n = x.dim(1);
    std::vector<T> out(static_cast<size_t>(segs) * n, T(0));
    const T* xv = x.values().data();
    for (int s = 0; s < segs; ++s) {
        const int lo = offsets[static_cast<size_t>(s)], hi = offsets[static_cast<size_t>(s) + 1];
        if (hi == lo) continue;
        T* orow = out.data() + static_cast<size_t>(s) * n;
        for (int r = lo; r < hi; ++r)
            for (int j = 0; j < n; ++j) orow[j] += xv[static_cast<size_t>(r) * n + j];
        const T inv = T(1) / T(hi - lo);
        for (int j = 0; j < n; ++j) orow[j] *= inv;
    }
    return TensorT<T>::make_op({segs, n}, std::move(out), {x}, [offsets, segs, n](auto& nd) {
        auto& px = nd.parents[0];
        if (!px.requires_grad()) return;
        auto& g = px.grad();
        for (int s = 0; s < segs; ++s) {
            const int lo = offsets[static_cast<size_t>(s)], hi = offsets[static_cast<size_t>(s) + 1];
            if (hi == lo) continue;
            const T inv = T(1) / T(hi - lo);
            const T* grow = nd.grad.data() + static_cast<size_t>(s) * n;
            for (int r = lo; r < hi; ++r)
                for (int j = 0; j < n; ++j) g[static_cast<size_t>(r) * n + j] += grow[j] * inv;
        }
    });
}

// Columnwise max over each row segment; empty segments yield zero rows.
// Gradient routes to the first maximizing row (deterministic tie rule).
template <typename T>
TensorT<T> segment_max_pool(const TensorT<T>& x, const std::vector<int>& offsets) {
    if (x.ndim() != 2) throw DimensionError("segment_max_pool: need 2-d");
    detail::check_offsets(offsets, x.dim(0), "segment_max_pool");
    const int segs = static_cast<int>(offsets.size()) - 1;
    const int n = x.dim(1);
    std::vector<T> out(static_cast<size_t>(segs) * n, T(0));
    std::vector<int> arg(static_cast<size_t>(segs) * n, -1);
    const T* xv = x.values().data();
    for (int s = 0; s < segs; ++s) {
        const int lo = offsets[static_cast<size_t>(s)], hi = offsets[static_cast<size_t>(s) + 1];
        if (hi == lo) continue;
        for (int j = 0; j < n; ++j) {
            T best = xv[static_cast<size_t>(lo) * n + j];
            int bi = lo;
            for (int r = lo + 1; r < hi; ++r) {
                const T v = xv[static_cast<size_t>(r) * n + j];
                if (v > best) {
                    best = v;
                    bi = r;
                }
            }
            out[static_cast<size_t>(s) * n + j] = best;
            arg[static_cast<size_t>(s) * n + j] = bi;
        }
    }
    return TensorT<T>::make_op({segs, n}, std::move(out), {x}, [segs, n, arg = std::move(arg)](auto& nd) {
        auto& px = nd.parents[0];
        if (!px.requires_grad()) return;
        auto& g = px.grad();
        for (int s = 0; s < segs; ++s)
            for (int j = 0; j < n; ++j) {
                const int r = arg[static_cast<size_t>(s) * n + j];
                if (r >= 0) g[static_cast<size_t>(r) * n + j] += nd.grad[static_cast<size_t>(s) * n + j];
            }
    });
}

// Multi-head self-attention within each row segment. q, k, v are (rows, d)
// with d divisible by `heads`; rows attend only to rows of their segment.
// Head stripes are addressed through strided Eigen maps so the score and
// apply products run as small GEMMs.
template <typename T>
TensorT<T> segment_attention(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v,
                             const std::vector<int>& offsets, int heads, T scale) {
    if (q.ndim() != 2 || k.shape() != q.shape() || v.shape() != q.shape())
        throw DimensionError("segment_attention: q/k/v must share shape, got " + shape_str(q.shape()) +
                             " " + shape_str(k.shape()) + " " + shape_str(v.shape()));
    const int rows = q.dim(0), d = q.dim(1);
    if (heads < 1 || d % heads != 0) throw DimensionError("segment_attention: width not divisible by heads");
    detail::check_offsets(offsets, rows, "segment_attention");
    const int dh = d / heads;
    const int segs = static_cast<int>(offsets.size()) - 1;

    using Stride = Eigen::OuterStride<>;
    using CHead = Eigen::Map<const detail::EMat<T>, 0, Stride>;
    using Head = Eigen::Map<detail::EMat<T>, 0, Stride>;

    std::vector<T> out(static_cast<size_t>(rows) * d, T(0));
    // Attention probabilities saved for backward: per segment, heads * len * len.
    std::vector<int64_t> poff(static_cast<size_t>(segs) + 1, 0);
    for (int s = 0; s < segs; ++s) {
        const int64_t len = offsets[static_cast<size_t>(s) + 1] - offsets[static_cast<size_t>(s)];
        poff[static_cast<size_t>(s) + 1] = poff[static_cast<size_t>(s)] + static_cast<int64_t>(heads) * len * len;
    }
    std::vector<T> probs(static_cast<size_t>(poff.back()), T(0));

    const T* qv = q.values().data();
    const T* kv = k.values().data();
    const T* vv = v.values().data();
    for (int s = 0; s < segs; ++s) {
        const int lo = offsets[static_cast<size_t>(s)];
        const int len = offsets[static_cast<size_t>(s) + 1] - lo;
        if (len == 0) continue;
        for (int h = 0; h < heads; ++h) {
            const size_t head_off = static_cast<size_t>(lo) * d + static_cast<size_t>(h) * dh;
            CHead Qh(qv + head_off, len, dh, Stride(d));
            CHead Kh(kv + head_off, len, dh, Stride(d));
            CHead Vh(vv + head_off, len, dh, Stride(d));
            Eigen::Map<detail::EMat<T>> P(
                probs.data() + poff[static_cast<size_t>(s)] + static_cast<int64_t>(h) * len * len, len, len);
            P.noalias() = Qh.lazyProduct(Kh.transpose());
            for (int i = 0; i < len; ++i) {
                T* prow = P.data() + static_cast<size_t>(i) * len;
                T mx = prow[0] * scale;
                for (int j = 0; j < len; ++j) {
                    prow[j] *= scale;
                    mx = std::max(mx, prow[j]);
                }
                T sum = T(0);
                for (int j = 0; j < len; ++j) {
                    prow[j] = std::exp(prow[j] - mx);
                    sum += prow[j];
                }
                const T inv = T(1) / sum;
                for (int j = 0; j < len; ++j) prow[j] *= inv;
            }
            Head Oh(out.data() + head_off, len, dh, Stride(d));
            Oh.noalias() = P.lazyProduct(Vh);
        }
    }
    return TensorT<T>::make_op(q.shape(), std::move(out), {q, k, v},
                               [offsets, heads, scale, d, dh, segs, poff = std::move(poff),
                                probs = std::move(probs)](auto& nd) {
        auto& pq = nd.parents[0];
        auto& pk = nd.parents[1];
        auto& pv = nd.parents[2];
        const T* qv = pq.values().data();
        const T* kv = pk.values().data();
        const T* vv = pv.values().data();
        std::vector<T>* gq = pq.requires_grad() ? &pq.grad() : nullptr;
        std::vector<T>* gk = pk.requires_grad() ? &pk.grad() : nullptr;
        std::vector<T>* gv = pv.requires_grad() ? &pv.grad() : nullptr;
        detail::EMat<T> dP, dS;
        for (int s = 0; s < segs; ++s) {
            const int lo = offsets[static_cast<size_t>(s)];
            const int len = offsets[static_cast<size_t>(s) + 1] - lo;
            if (len == 0) continue;
            for (int h = 0; h < heads; ++h) {
                const size_t head_off = static_cast<size_t>(lo) * d + static_cast<size_t>(h) * dh;
                CHead Qh(qv + head_off, len, dh, Stride(d));
                CHead Kh(kv + head_off, len, dh, Stride(d));
                CHead Vh(vv + head_off, len, dh, Stride(d));
                CHead G(nd.grad.data() + head_off, len, dh, Stride(d));
                Eigen::Map<const detail::EMat<T>> P(
                    probs.data() + poff[static_cast<size_t>(s)] + static_cast<int64_t>(h) * len * len, len, len);
                dP.noalias() = G.lazyProduct(Vh.transpose());
                dS = P.array() * (dP.array().colwise() -
                                  (dP.array() * P.array()).rowwise().sum());
                if (gv) Head(gv->data() + head_off, len, dh, Stride(d)).noalias() += P.transpose().lazyProduct(G);
                if (gq) Head(gq->data() + head_off, len, dh, Stride(d)).noalias() += scale * dS.lazyProduct(Kh);
                if (gk) Head(gk->data() + head_off, len, dh, Stride(d)).noalias() += scale * dS.transpose().lazyProduct(Qh);
            }
        }
    });
}

// Single-head attention where each row attends to an explicit ragged neighbor
// list (global row indices into k/v). Neighbor order is part of the contract:
// accumulation is strictly sequential in list order.
template <typename T>
TensorT<T> knn_attention(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v,
                         const std::vector<int>& nbr, const std::vector<int>& nbr_offsets, T scale) {
    if (q.ndim() != 2 || k.shape() != q.shape() || v.shape() != q.shape())
        throw DimensionError("knn_attention: q/k/v must share shape");
    const int rows = q.dim(0), d = q.dim(1);
    if (static_cast<int>(nbr_offsets.size()) != rows + 1 || nbr_offsets.front() != 0 ||
        nbr_offsets.back() != static_cast<int>(nbr.size()))
        throw DimensionError("knn_attention: bad neighbor offsets");
    using CVec = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;
    using Vec = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
    std::vector<T> out(static_cast<size_t>(rows) * d, T(0));
    std::vector<T> probs(nbr.size(), T(0));
    const T* qv = q.values().data();
    const T* kv = k.values().data();
    const T* vv = v.values().data();
    for (int i = 0; i < rows; ++i) {
        const int lo = nbr_offsets[static_cast<size_t>(i)], hi = nbr_offsets[static_cast<size_t>(i) + 1];
        if (hi == lo) continue;
        CVec qi(qv + static_cast<size_t>(i) * d, d);
        T mx = -std::numeric_limits<T>::infinity();
        for (int e = lo; e < hi; ++e) {
            const T* kj = kv + static_cast<size_t>(nbr[static_cast<size_t>(e)]) * d;
            probs[static_cast<size_t>(e)] = qi.dot(CVec(kj, d)) * scale;
            mx = std::max(mx, probs[static_cast<size_t>(e)]);
        }
        T sum = T(0);
        for (int e = lo; e < hi; ++e) {
            probs[static_cast<size_t>(e)] = std::exp(probs[static_cast<size_t>(e)] - mx);
            sum += probs[static_cast<size_t>(e)];
        }
        const T inv = T(1) / sum;
        Vec orow(out.data() + static_cast<size_t>(i) * d, d);
        for (int e = lo; e < hi; ++e) {
            probs[static_cast<size_t>(e)] *= inv;
            orow += probs[static_cast<size_t>(e)] * CVec(vv + static_cast<size_t>(nbr[static_cast<size_t>(e)]) * d, d);
        }
    }
    return TensorT<T>::make_op(q.shape(), std::move(out), {q, k, v},
                               [rows, d, scale, nbr, nbr_offsets, probs = std::move(probs)](auto& nd) {
        auto& pq = nd.parents[0];
        auto& pk = nd.parents[1];
        auto& pv = nd.parents[2];
        const T* qv = pq.values().data();
        const T* kv = pk.values().data();
        const T* vv = pv.values().data();
        std::vector<T>* gq = pq.requires_grad() ? &pq.grad() : nullptr;
        std::vector<T>* gk = pk.requires_grad() ? &pk.grad() : nullptr;
        std::vector<T>* gv = pv.requires_grad() ? &pv.grad() : nullptr;
        using CVec = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;
        using Vec = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
        std::vector<T> ds;
        for (int i = 0; i < rows; ++i) {
            const int lo = nbr_offsets[static_cast<size_t>(i)], hi = nbr_offsets[static_cast<size_t>(i) + 1];
            if (hi == lo) continue;
            CVec go(nd.grad.data() + static_cast<size_t>(i) * d, d);
            ds.resize(static_cast<size_t>(hi - lo));
            T dot = T(0);
            for (int e = lo; e < hi; ++e) {
                const T dp = go.dot(CVec(vv + static_cast<size_t>(nbr[static_cast<size_t>(e)]) * d, d));
                ds[static_cast<size_t>(e - lo)] = dp;
                dot += dp * probs[static_cast<size_t>(e)];
            }
            for (int e = lo; e < hi; ++e)
                ds[static_cast<size_t>(e - lo)] = probs[static_cast<size_t>(e)] * (ds[static_cast<size_t>(e - lo)] - dot);
            if (gv)
                for (int e = lo; e < hi; ++e)
                    Vec(gv->data() + static_cast<size_t>(nbr[static_cast<size_t>(e)]) * d, d) +=
                        probs[static_cast<size_t>(e)] * go;
            if (gq) {
                Vec gqi(gq->data() + static_cast<size_t>(i) * d, d);
                for (int e = lo; e < hi; ++e)
                    gqi += (ds[static_cast<size_t>(e - lo)] * scale) *
                           CVec(kv + static_cast<size_t>(nbr[static_cast<size_t>(e)]) * d, d);
            }
            if (gk) {
                CVec qi(qv + static_cast<size_t>(i) * d, d);
                for (int e = lo; e < hi; ++e)
                    Vec(gk->data() + static_cast<size_t>(nbr[static_cast<size_t>(e)]) * d, d) +=
                        (ds[static_cast<size_t>(e - lo)] * scale) * qi;
            }
        }
    });
}

// Generic scaled dot-product attention: q (m, dk), k (n, dk), v (n, dv).
// Composed from primitives, so the backward comes for free.
template <typename T>
TensorT<T> attention(const TensorT<T>& q, const TensorT<T>& k, const TensorT<T>& v, T sc) {
    if (q.ndim() != 2 || k.ndim() != 2 || v.ndim() != 2)
        throw DimensionError("attention: need 2-d inputs");
    if (q.dim(1) != k.dim(1))
        throw DimensionError("attention: key width mismatch " + shape_str(q.shape()) + " vs " + shape_str(k.shape()));
    if (k.dim(0) != v.dim(0))
        throw DimensionError("attention: k/v sequence mismatch " + shape_str(k.shape()) + " vs " + shape_str(v.shape()));
    auto scores = scale(matmul(q, transpose(k)), sc);
    return matmul(softmax(scores, 1), v);
}

}  // namespace senla
