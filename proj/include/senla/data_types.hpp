#pragma once

#include <vector>

#include "senla/common.hpp"

namespace senla {

enum class Modality { Video, Lidar, Radar };

inline const char* modality_name(Modality m) {
    switch (m) {
        case Modality::Video: return "video";
        case Modality::Lidar: return "lidar";
        default: return "radar";
    }
}

inline Modality modality_from_name(const std::string& s) {
    if (s == "video") return Modality::Video;
    if (s == "lidar") return Modality::Lidar;
    if (s == "radar") return Modality::Radar;
    throw ConfigError("unknown modality '" + s + "'");
}

// Dense video grid, logically channels(3) x height x width x frames; stored
// frame-major ([f][c][h][w]) for cheap per-frame patching.
struct VideoClip {
    int height = 16;
    int width = 16;
    int frames = 8;
    std::vector<float> values;

    Shape logical_shape() const { return {3, height, width, frames}; }
    int64_t frame_stride() const { return 3ll * height * width; }
    float at(int f, int c, int y, int x) const {
        return values[static_cast<size_t>(f) * frame_stride() +
                      (static_cast<size_t>(c) * height + y) * width + x];
    }
    float& at(int f, int c, int y, int x) {
        return values[static_cast<size_t>(f) * frame_stride() +
                      (static_cast<size_t>(c) * height + y) * width + x];
    }
};

// Per-frame point sets; each frame is a flat (count x feat_width) buffer, and
// counts vary frame to frame.
struct PointSequence {
    int feat_width = 3;
    std::vector<std::vector<float>> frames;

    int frame_count(int f) const {
        return static_cast<int>(frames[static_cast<size_t>(f)].size()) / feat_width;
    }
    int total_points() const {
        int n = 0;
        for (size_t f = 0; f < frames.size(); ++f) n += frame_count(static_cast<int>(f));
        return n;
    }
};

// One synchronized multimodal clip.
struct Sample {
    VideoClip video;
    PointSequence lidar;
    PointSequence radar;
    int class_id = 0;
    int subject = 0;
    int environment = 0;
};

}  // namespace senla
