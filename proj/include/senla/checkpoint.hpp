#pragma once

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "senla/model.hpp"
#include "senla/trainer.hpp"

namespace senla {

// Everything beyond the model needed to reproduce or resume a run.
struct CheckpointExtra {
    LossConfig loss;
    TrainConfig train;
    int epoch = 0;
    std::array<uint64_t, 4> rng_state{};
    std::vector<std::pair<std::string, std::vector<float>>> momentum;
};

// Binary container: magic, format version, config block, vocabulary and
// registry blobs, then length-prefixed little-endian float32 tensor records
// (name, dtype, shape, trainable flag, data) followed by optimizer buffers.
// The byte layout is documented in docs/formats.md.
void save_checkpoint(const Model& model, const CheckpointExtra& extra, const std::string& path);

struct LoadedCheckpoint {
    std::unique_ptr<Model> model;
    CheckpointExtra extra;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace senla
