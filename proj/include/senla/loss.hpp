#pragma once

#include <vector>

#include "senla/tensor.hpp"

namespace senla {

// Temperature and per-modality weights of the joint contrastive objective.
struct LossConfig {
    float tau = 0.07f;
    float alpha = 0.4f;  // video
    float beta = 1.3f;   // lidar
    float gamma = 1.3f;  // radar
    bool normalize = true;  // cosine similarity; false keeps raw dot products

    void validate() const {
        if (!(tau > 0)) throw ConfigError("loss: tau must be positive");
        if (alpha < 0 || beta < 0 || gamma < 0) throw ConfigError("loss: weights must be non-negative");
        if (alpha + beta + gamma <= 0) throw ConfigError("loss: at least one weight must be positive");
    }
};

// Pairwise scores between sensor embeddings (rows) and class text embeddings
// (columns), optionally on the unit sphere.
template <typename T>
TensorT<T> similarity(const TensorT<T>& sensor, const TensorT<T>& text, bool normalize,
                      bool* degenerate = nullptr) {
    if (sensor.ndim() != 2 || text.ndim() != 2 || sensor.dim(1) != text.dim(1))
        throw DimensionError("similarity: " + shape_str(sensor.shape()) + " vs " + shape_str(text.shape()));
    if (!normalize) return matmul(sensor, transpose(text));
    return matmul(l2_normalize(sensor, 1, degenerate), transpose(l2_normalize(text, 1, degenerate)));
}

// Mean over rows of -log( exp(s[i,y]/tau) / sum_a exp(s[i,a]/tau) ); the
// denominator spans every class column present in the matrix.
template <typename T>
TensorT<T> info_nce(const TensorT<T>& sim, const std::vector<int>& labels, T tau) {
    if (sim.ndim() != 2 || static_cast<int>(labels.size()) != sim.dim(0))
        throw DimensionError("info_nce: need one label per row of " + shape_str(sim.shape()));
    if (!(tau > 0)) throw ConfigError("info_nce: tau must be positive");
    auto scaled = scale(sim, T(1) / tau);
    auto lse = logsumexp(scaled, 1);
    auto pos = gather_cols_per_row(scaled, labels);
    return mean_all(sub(lse, pos));
}

template <typename T>
TensorT<T> joint_loss(const TensorT<T>& l_vt, const TensorT<T>& l_lt, const TensorT<T>& l_rt,
                      T alpha, T beta, T gamma) {
    return add(scale(l_vt, alpha), add(scale(l_lt, beta), scale(l_rt, gamma)));
}

// One-hot baseline objective; same softmax cross-entropy machinery with unit
// temperature over classifier logits.
template <typename T>
TensorT<T> cross_entropy(const TensorT<T>& logits, const std::vector<int>& labels) {
    return info_nce(logits, labels, T(1));
}

}  // namespace senla
