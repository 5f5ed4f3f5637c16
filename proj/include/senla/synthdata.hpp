#pragma once

#include <string>
#include <vector>

#include "senla/data_types.hpp"
#include "senla/rng.hpp"
#include "senla/text.hpp"

namespace senla {

// One oscillating displacement applied to a joint; the axis vector carries
// the amplitude. Mirrored activities negate the x component and swap
// left/right joints, which the renderer preserves exactly.
struct Mover {
    int joint = 0;
    float ax = 0, ay = 0, az = 0;
    float freq = 1;
    float phase = 0;
};

struct ActivitySpec {
    int class_id = 0;
    std::string name;
    std::string description;
    bool seen = true;
    std::vector<Mover> movers;
};

struct GeneratorConfig {
    uint64_t seed = 1;
    int samples_per_class = 100;
    int subjects = 8;
    int environments = 4;
    int frames = 8;
    int video_hw = 16;
    double lidar_mean_points = 64.0;
    double radar_mean_points = 24.0;
    std::vector<float> env_noise = {0.01f, 0.03f, 0.05f, 0.08f};
    std::vector<float> env_clutter = {2.0f, 4.0f, 6.0f, 8.0f};

    void validate() const;
};

// The shipped class set: 22 seen plus 5 unseen factor recombinations.
const std::vector<ActivitySpec>& default_activity_specs();
Registry registry_from_specs(const std::vector<ActivitySpec>& specs);

Sample generate_sample(const ActivitySpec& spec, int subject, int environment,
                       const GeneratorConfig& cfg, Rng& rng);

struct Dataset {
    GeneratorConfig cfg;
    Registry registry;
    std::vector<Sample> samples;
};

Dataset generate_dataset(const GeneratorConfig& cfg);

enum class SplitStrategy { Random, CrossSubject, CrossEnvironment };

SplitStrategy split_from_name(const std::string& name);
const char* split_name(SplitStrategy s);

struct Split {
    std::vector<int> train;
    std::vector<int> test;
};

// Train indices always cover seen classes only; unseen classes appear only on
// the test side.
Split build_splits(const Dataset& data, SplitStrategy strategy, uint64_t seed);

void write_dataset(const Dataset& data, const std::string& path);
Dataset read_dataset(const std::string& path);

}  // namespace senla
