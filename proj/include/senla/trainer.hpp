#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "senla/loss.hpp"
#include "senla/model.hpp"
#include "senla/optim.hpp"
#include "senla/synthdata.hpp"

namespace senla {

struct TrainConfig {
    int batch_size = 10;
    float lr = 0.001f;
    float momentum = 0.9f;
    float weight_decay = 0.0005f;
    int epochs = 50;
    std::vector<int> lr_steps = {20, 30, 40};
    float lr_decay = 0.1f;
    uint64_t seed = 1;
    bool joint = true;          // false: single-modality runs (separate training)
    std::string split = "random";

    void validate() const {
        if (batch_size < 1 || epochs < 0) throw ConfigError("train: bad batch size or epoch count");
        if (!(lr > 0) || momentum < 0 || weight_decay < 0) throw ConfigError("train: bad optimizer constants");
        if (!(lr_decay > 0)) throw ConfigError("train: lr_decay must be positive");
    }
};

struct EpochStats {
    int epoch = 0;
    float lr = 0;
    double loss = 0;                          // weighted joint objective
    std::map<std::string, double> branches;   // per-modality mean loss
};

// Owns one model exclusively for the duration of training. Batch order is a
// seeded permutation per epoch; the short final batch is kept.
class Trainer {
   public:
    Trainer(Model& model, const Dataset& data, const std::vector<int>& train_indices,
            TrainConfig tcfg, LossConfig lcfg);

    EpochStats train_epoch(int epoch);
    std::vector<EpochStats> run(const std::function<void(const EpochStats&)>& on_epoch = nullptr);

    SgdmOptimizer& optimizer() { return opt_; }
    Rng& shuffle_rng() { return shuffle_rng_; }
    const TrainConfig& config() const { return tcfg_; }

   private:
    Model& model_;
    const Dataset& data_;
    std::vector<int> train_idx_;
    SampleCacheT<float> cache_;
    TrainConfig tcfg_;
    LossConfig lcfg_;
    SgdmOptimizer opt_;
    Rng shuffle_rng_;
};

// Fixed-column text rendering of one epoch line; both the plain and the
// machine-readable logs are built from it.
std::string format_epoch_line(const EpochStats& s, const std::vector<Modality>& mods);
std::string epoch_header(const std::vector<Modality>& mods);

}  // namespace senla
