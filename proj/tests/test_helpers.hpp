#pragma once

#include <vector>

#include "senla/model.hpp"
#include "senla/rng.hpp"

namespace senla::testing {

// Reduced architecture exercising every code path; composite gradient checks
// and structural tests run in milliseconds at these sizes.
inline ModelConfig micro_config() {
    ModelConfig cfg;
    cfg.width = 16;
    cfg.heads = 2;
    cfg.video_blocks = 1;
    cfg.point_blocks = 1;
    cfg.text_blocks = 1;
    cfg.mlp_ratio = 2;
    cfg.embed_dim = 24;
    cfg.frames = 2;
    cfg.video_hw = 8;
    cfg.patch_size = 4;
    cfg.knn_k = 3;
    cfg.prompt_count = 2;
    cfg.max_text_len = 8;
    return cfg;
}

inline Registry micro_registry() {
    return Registry({
        ClassEntry{0, "left wave", "a person waving the left hand", true},
        ClassEntry{1, "right wave", "a person waving the right hand", true},
        ClassEntry{2, "both wave", "a person waving both hands", false},
    });
}

inline VideoClip random_clip(const ModelConfig& cfg, Rng& rng) {
    VideoClip c;
    c.height = cfg.video_hw;
    c.width = cfg.video_hw;
    c.frames = cfg.frames;
    c.values.resize(static_cast<size_t>(cfg.frames) * 3 * cfg.video_hw * cfg.video_hw);
    for (auto& v : c.values) v = rng.uniformf(-1, 1);
    return c;
}

inline PointSequence random_points(const ModelConfig& cfg, Rng& rng, int feat_width,
                                   int min_pts = 2, int max_pts = 5) {
    PointSequence s;
    s.feat_width = feat_width;
    s.frames.resize(static_cast<size_t>(cfg.frames));
    for (auto& fr : s.frames) {
        const int n = min_pts + rng.uniform_int(max_pts - min_pts + 1);
        fr.resize(static_cast<size_t>(n) * feat_width);
        for (auto& v : fr) v = rng.uniformf(-1, 1);
    }
    return s;
}

inline Sample random_sample(const ModelConfig& cfg, Rng& rng, int class_id) {
    Sample s;
    s.video = random_clip(cfg, rng);
    s.lidar = random_points(cfg, rng, cfg.lidar_feats);
    s.radar = random_points(cfg, rng, cfg.radar_feats);
    s.class_id = class_id;
    return s;
}

}  // namespace senla::testing
