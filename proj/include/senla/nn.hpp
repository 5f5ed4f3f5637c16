#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "senla/rng.hpp"
#include "senla/tensor.hpp"

namespace senla {

// Named parameter registry. Registration order is the initialization order,
// so a (seed, architecture) pair fully determines every starting weight.
template <typename T>
class ParamStoreT {
   public:
    struct Entry {
        std::string name;
        TensorT<T> tensor;
        bool trainable = true;
    };

    explicit ParamStoreT(uint64_t seed) : rng_(Rng::derive(seed, 0x706172616dull)) {}

    TensorT<T> add_normal(const std::string& name, const Shape& shape, T stddev, bool trainable) {
        std::vector<T> v(static_cast<size_t>(shape_numel(shape)));
        for (auto& x : v) x = stddev * static_cast<T>(rng_.normal());
        return add(name, shape, std::move(v), trainable);
    }

    TensorT<T> add_const(const std::string& name, const Shape& shape, T value, bool trainable) {
        return add(name, shape, std::vector<T>(static_cast<size_t>(shape_numel(shape)), value), trainable);
    }

    TensorT<T> add(const std::string& name, const Shape& shape, std::vector<T> values, bool trainable) {
        if (index_.count(name)) throw ConfigError("param store: duplicate name '" + name + "'");
        Entry e;
        e.name = name;
        e.tensor = TensorT<T>::from_data(shape, std::move(values), trainable);
        e.trainable = trainable;
        index_[name] = entries_.size();
        entries_.push_back(e);
        return e.tensor;
    }

    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }

    Entry* find(const std::string& name) {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : &entries_[it->second];
    }
    const Entry* find(const std::string& name) const {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : &entries_[it->second];
    }

    void zero_grads() {
        for (auto& e : entries_) e.tensor.zero_grad();
    }

    // Hash of the raw bytes of every tensor whose name starts with `prefix`;
    // used to prove the frozen set never moves.
    uint64_t values_hash(const std::string& prefix = "") const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& e : entries_) {
            if (e.name.rfind(prefix, 0) != 0) continue;
            h = fnv1a64(e.name.data(), e.name.size(), h);
            h = fnv1a64(e.tensor.values().data(), e.tensor.values().size() * sizeof(T), h);
        }
        return h;
    }

    uint64_t values_hash_by_trainable(bool trainable) const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& e : entries_) {
            if (e.trainable != trainable) continue;
            h = fnv1a64(e.name.data(), e.name.size(), h);
            h = fnv1a64(e.tensor.values().data(), e.tensor.values().size() * sizeof(T), h);
        }
        return h;
    }

    template <typename U>
    void copy_values_from(const ParamStoreT<U>& other) {
        for (auto& e : entries_) {
            const auto* src = other.find(e.name);
            if (!src || src->tensor.size() != e.tensor.size())
                throw CompatibilityError("param store: cannot copy values for '" + e.name + "'");
            auto& dst = e.tensor.mutable_values();
            const auto& s = src->tensor.values();
            for (size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(s[i]);
        }
    }

   private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> index_;
    Rng rng_;
};

template <typename T>
struct LinearT {
    TensorT<T> w;  // (in, out)
    TensorT<T> b;  // (out)
    TensorT<T> operator()(const TensorT<T>& x) const { return linear(x, w, b); }
};

template <typename T>
LinearT<T> make_linear(ParamStoreT<T>& store, const std::string& name, int in, int out, bool trainable) {
    LinearT<T> l;
    l.w = store.add_normal(name + ".w", {in, out}, T(1) / std::sqrt(T(in)), trainable);
    l.b = store.add_const(name + ".b", {out}, T(0), trainable);
    return l;
}

template <typename T>
struct LayerNormT {
    TensorT<T> g;
    TensorT<T> b;
    TensorT<T> operator()(const TensorT<T>& x) const { return layer_norm(x, g, b, T(1e-5)); }
};

template <typename T>
LayerNormT<T> make_layer_norm(ParamStoreT<T>& store, const std::string& name, int width, bool trainable) {
    LayerNormT<T> ln;
    ln.g = store.add_const(name + ".g", {width}, T(1), trainable);
    ln.b = store.add_const(name + ".b", {width}, T(0), trainable);
    return ln;
}

// Multi-head self-attention over row segments: projections as stacked GEMMs,
// the attention core fused per segment.
template <typename T>
struct MhaT {
    LinearT<T> q, k, v, o;
    int heads = 1;

    TensorT<T> operator()(const TensorT<T>& x, const std::vector<int>& offsets) const {
        const int dh = x.dim(1) / heads;
        const T sc = T(1) / std::sqrt(T(dh));
        return o(segment_attention(q(x), k(x), v(x), offsets, heads, sc));
    }
};

template <typename T>
MhaT<T> make_mha(ParamStoreT<T>& store, const std::string& name, int width, int heads, bool trainable) {
    MhaT<T> m;
    m.q = make_linear(store, name + ".q", width, width, trainable);
    m.k = make_linear(store, name + ".k", width, width, trainable);
    m.v = make_linear(store, name + ".v", width, width, trainable);
    m.o = make_linear(store, name + ".o", width, width, trainable);
    m.heads = heads;
    return m;
}

// Single-head attention over explicit neighbor lists (point blocks).
template <typename T>
struct KnnAttnT {
    LinearT<T> q, k, v, o;

    TensorT<T> operator()(const TensorT<T>& x, const std::vector<int>& nbr,
                          const std::vector<int>& nbr_offsets) const {
        const T sc = T(1) / std::sqrt(T(x.dim(1)));
        return o(knn_attention(q(x), k(x), v(x), nbr, nbr_offsets, sc));
    }
};

template <typename T>
KnnAttnT<T> make_knn_attn(ParamStoreT<T>& store, const std::string& name, int width, bool trainable) {
    KnnAttnT<T> m;
    m.q = make_linear(store, name + ".q", width, width, trainable);
    m.k = make_linear(store, name + ".k", width, width, trainable);
    m.v = make_linear(store, name + ".v", width, width, trainable);
    m.o = make_linear(store, name + ".o", width, width, trainable);
    return m;
}

template <typename T>
struct MlpT {
    LinearT<T> fc1, fc2;
    TensorT<T> operator()(const TensorT<T>& x) const { return fc2(gelu(fc1(x))); }
};

template <typename T>
MlpT<T> make_mlp(ParamStoreT<T>& store, const std::string& name, int width, int hidden, bool trainable) {
    MlpT<T> m;
    m.fc1 = make_linear(store, name + ".fc1", width, hidden, trainable);
    m.fc2 = make_linear(store, name + ".fc2", hidden, width, trainable);
    return m;
}

// Pre-norm transformer block with segment self-attention.
template <typename T>
struct BlockT {
    LayerNormT<T> ln1;
    MhaT<T> att;
    LayerNormT<T> ln2;
    MlpT<T> mlp;

    TensorT<T> operator()(const TensorT<T>& x, const std::vector<int>& offsets) const {
        auto h = add(x, att(ln1(x), offsets));
        return add(h, mlp(ln2(h)));
    }
};

template <typename T>
BlockT<T> make_block(ParamStoreT<T>& store, const std::string& name, int width, int heads,
                     int hidden, bool trainable) {
    BlockT<T> b;
    b.ln1 = make_layer_norm(store, name + ".ln1", width, trainable);
    b.att = make_mha(store, name + ".att", width, heads, trainable);
    b.ln2 = make_layer_norm(store, name + ".ln2", width, trainable);
    b.mlp = make_mlp(store, name + ".mlp", width, hidden, trainable);
    return b;
}

// Fixed sin/cos position table (not a parameter).
template <typename T>
TensorT<T> sinusoidal_positions(int len, int width, T scale) {
    std::vector<T> v(static_cast<size_t>(len) * width);
    for (int p = 0; p < len; ++p)
        for (int i = 0; i < width; ++i) {
            const double rate = std::pow(10000.0, -2.0 * (i / 2) / width);
            const double angle = p * rate;
            v[static_cast<size_t>(p) * width + i] =
                scale * static_cast<T>((i % 2 == 0) ? std::sin(angle) : std::cos(angle));
        }
    return TensorT<T>::from_data({len, width}, std::move(v));
}

}  // namespace senla
