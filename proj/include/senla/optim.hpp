#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "senla/nn.hpp"

namespace senla {

// lr * decay^(number of boundaries at or before `epoch`).
inline float lr_schedule(int epoch, float base_lr, const std::vector<int>& lr_steps, float decay) {
    if (epoch < 0) throw ConfigError("lr_schedule: negative epoch");
    int crossed = 0;
    for (int s : lr_steps)
        if (s <= epoch) ++crossed;
    float lr = base_lr;
    for (int i = 0; i < crossed; ++i) lr *= decay;
    return lr;
}

// Stochastic gradient descent with momentum:
//   buffer <- momentum * buffer + (grad + weight_decay * param)
//   param  <- param - lr * buffer
// Frozen tensors are never registered. A missing gradient counts as zero, so
// weight decay and momentum still apply to every trainable tensor.
template <typename T>
class SgdmOptimizerT {
   public:
    struct Slot {
        std::string name;
        TensorT<T> param;
        std::vector<T> buffer;
    };

    explicit SgdmOptimizerT(ParamStoreT<T>& store) {
        for (auto& e : store.entries()) {
            if (!e.trainable) continue;
            Slot s;
            s.name = e.name;
            s.param = e.tensor;
            s.buffer.assign(static_cast<size_t>(e.tensor.size()), T(0));
            slots_.push_back(std::move(s));
        }
    }

    void step(T lr, T momentum, T weight_decay) {
        for (auto& s : slots_) {
            auto& p = s.param.mutable_values();
            const std::vector<T>* g = s.param.grad_if();
            for (size_t i = 0; i < p.size(); ++i) {
                const T gi = g ? (*g)[i] : T(0);
                if (!std::isfinite(gi))
                    throw NumericError("non-finite gradient in tensor '" + s.name + "'");
                s.buffer[i] = momentum * s.buffer[i] + (gi + weight_decay * p[i]);
                p[i] -= lr * s.buffer[i];
            }
        }
    }

    std::vector<Slot>& slots() { return slots_; }
    const std::vector<Slot>& slots() const { return slots_; }

   private:
    std::vector<Slot> slots_;
};

using SgdmOptimizer = SgdmOptimizerT<float>;

}  // namespace senla
