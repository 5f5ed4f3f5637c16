#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "senla/synthdata.hpp"

using namespace senla;

namespace {

GeneratorConfig small_cfg(uint64_t seed = 1) {
    GeneratorConfig cfg;
    cfg.seed = seed;
    cfg.samples_per_class = 8;
    return cfg;
}

const ActivitySpec& spec_named(const std::string& name) {
    for (const auto& s : default_activity_specs())
        if (s.name == name) return s;
    throw std::runtime_error("no spec named " + name);
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("class registry matches the shipped counts") {
    auto reg = registry_from_specs(default_activity_specs());
    CHECK(reg.total() == 27);
    CHECK(reg.seen_count() == 22);
    CHECK(reg.unseen_count() == 5);
    // unseen block holds the five recombinations in order
    CHECK(reg.entry(22).name == "left twist");
    CHECK(reg.entry(23).name == "both limb extension");
    CHECK(reg.entry(24).name == "right side lunge");
    CHECK(reg.entry(25).name == "waving left hand");
    CHECK(reg.entry(26).name == "right side throwing");
}

TEST_CASE("every unseen class is bridged by seen vocabulary") {
    auto reg = registry_from_specs(default_activity_specs());
    std::set<std::string> seen_words;
    for (const auto& e : reg.entries()) {
        if (!e.seen) continue;
        for (const auto& w : split_words(e.name)) seen_words.insert(w);
        for (const auto& w : split_words(e.description)) seen_words.insert(w);
    }
    for (const auto& e : reg.entries()) {
        if (e.seen) continue;
        // every word of an unseen class has training-time coverage
        for (const auto& w : split_words(e.name)) {
            INFO("unseen name word ", w);
            CHECK(seen_words.count(w) == 1);
        }
        for (const auto& w : split_words(e.description)) {
            INFO("unseen description word ", w);
            CHECK(seen_words.count(w) == 1);
        }
        // and at least one shared motion word beyond direction markers
        bool motion_shared = false;
        for (const auto& w : split_words(e.name))
            if (w != "left" && w != "right" && w != "both" && seen_words.count(w)) motion_shared = true;
        CHECK(motion_shared);
    }
}

TEST_CASE("generation is deterministic") {
    auto cfg = small_cfg();
    const auto& spec = spec_named("right twist");
    Rng r1 = Rng::derive(7, 42), r2 = Rng::derive(7, 42);
    Sample a = generate_sample(spec, 1, 0, cfg, r1);
    Sample b = generate_sample(spec, 1, 0, cfg, r2);
    CHECK(a.video.values == b.video.values);
    CHECK(a.lidar.frames == b.lidar.frames);
    CHECK(a.radar.frames == b.radar.frames);
}

TEST_CASE("mirrored activities render mirrored video grids exactly") {
    GeneratorConfig cfg;
    cfg.subjects = 1;  // neutral subject transform
    cfg.env_noise = {0.0f};
    cfg.env_clutter = {0.0f};
    const auto& right = spec_named("right twist");
    const auto& left = spec_named("left twist");
    for (uint64_t s = 0; s < 5; ++s) {
        Rng r1 = Rng::derive(s, 9), r2 = Rng::derive(s, 9);
        Sample a = generate_sample(right, 0, 0, cfg, r1);
        Sample b = generate_sample(left, 0, 0, cfg, r2);
        for (int f = 0; f < cfg.frames; ++f)
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < cfg.video_hw; ++y)
                    for (int x = 0; x < cfg.video_hw; ++x)
                        CHECK(a.video.at(f, c, y, x) == b.video.at(f, c, y, cfg.video_hw - 1 - x));
    }
}

TEST_CASE("static activities carry zero radial velocity") {
    GeneratorConfig cfg;
    cfg.env_clutter = {3.0f};
    ActivitySpec still;
    still.class_id = 0;
    still.name = "standing still";
    still.description = "a person standing without motion";
    still.movers.clear();
    Rng rng = Rng::derive(3, 11);
    Sample s = generate_sample(still, 0, 0, cfg, rng);
    for (const auto& fr : s.radar.frames) {
        const int n = static_cast<int>(fr.size()) / 5;
        for (int i = 0; i < n; ++i) CHECK(fr[static_cast<size_t>(i) * 5 + 3] == 0.0f);
    }
}

TEST_CASE("point counts vary across frames and samples") {
    auto ds = generate_dataset(small_cfg());
    std::set<int> lidar_counts, radar_counts;
    for (const auto& s : ds.samples)
        for (size_t f = 0; f < s.lidar.frames.size(); ++f) {
            lidar_counts.insert(s.lidar.frame_count(static_cast<int>(f)));
            radar_counts.insert(s.radar.frame_count(static_cast<int>(f)));
        }
    CHECK(lidar_counts.size() > 1);
    CHECK(radar_counts.size() > 1);
}

TEST_CASE("splits") {
    auto ds = generate_dataset(small_cfg());
    const int ks = ds.registry.seen_count();

    SUBCASE("random: seen classes on both sides, unseen only in test") {
        auto split = build_splits(ds, SplitStrategy::Random, 5);
        std::set<int> train_classes, test_classes;
        for (int i : split.train) train_classes.insert(ds.samples[static_cast<size_t>(i)].class_id);
        for (int i : split.test) test_classes.insert(ds.samples[static_cast<size_t>(i)].class_id);
        for (int c = 0; c < ks; ++c) {
            CHECK(train_classes.count(c) == 1);
            CHECK(test_classes.count(c) == 1);
        }
        for (int c = ks; c < ds.registry.total(); ++c) {
            CHECK(train_classes.count(c) == 0);
            CHECK(test_classes.count(c) == 1);
        }
        // 80/20 per seen class
        CHECK(split.train.size() == static_cast<size_t>(ks) * (8 * 4 / 5));
    }

    SUBCASE("cross-subject: disjoint subject sets") {
        auto split = build_splits(ds, SplitStrategy::CrossSubject, 5);
        std::set<int> train_subj, test_subj;
        for (int i : split.train) train_subj.insert(ds.samples[static_cast<size_t>(i)].subject);
        for (int i : split.test) test_subj.insert(ds.samples[static_cast<size_t>(i)].subject);
        for (int s : train_subj) CHECK(test_subj.count(s) == 0);
        for (int i : split.train)
            CHECK(ds.registry.entry(ds.samples[static_cast<size_t>(i)].class_id).seen);
    }

    SUBCASE("cross-environment: train covers all but the held-out environment") {
        auto split = build_splits(ds, SplitStrategy::CrossEnvironment, 5);
        std::set<int> train_env, test_env;
        for (int i : split.train) train_env.insert(ds.samples[static_cast<size_t>(i)].environment);
        for (int i : split.test) test_env.insert(ds.samples[static_cast<size_t>(i)].environment);
        CHECK(train_env == std::set<int>{0, 1, 2});
        CHECK(test_env == std::set<int>{3});
    }

    SUBCASE("strategies demand enough factors") {
        auto cfg = small_cfg();
        cfg.subjects = 1;
        auto single = generate_dataset(cfg);
        CHECK_THROWS_AS(build_splits(single, SplitStrategy::CrossSubject, 1), ConfigError);
        cfg.subjects = 8;
        cfg.environments = 1;
        auto one_env = generate_dataset(cfg);
        CHECK_THROWS_AS(build_splits(one_env, SplitStrategy::CrossEnvironment, 1), ConfigError);
    }
}

TEST_CASE("dataset io round-trip") {
    auto cfg = small_cfg(3);
    cfg.samples_per_class = 2;
    auto ds = generate_dataset(cfg);
    const std::string path = temp_path("senla_test_ds.bin");
    write_dataset(ds, path);
    auto back = read_dataset(path);
    CHECK(back.samples.size() == ds.samples.size());
    CHECK(back.registry.hash() == ds.registry.hash());
    for (size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(back.samples[i].video.values == ds.samples[i].video.values);
        CHECK(back.samples[i].lidar.frames == ds.samples[i].lidar.frames);
        CHECK(back.samples[i].radar.frames == ds.samples[i].radar.frames);
        CHECK(back.samples[i].class_id == ds.samples[i].class_id);
    }

    SUBCASE("byte-identical rewrite") {
        const std::string path2 = temp_path("senla_test_ds2.bin");
        write_dataset(generate_dataset(cfg), path2);
        std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
        std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
        std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
        CHECK(b1 == b2);
    }

    SUBCASE("truncation and corruption are distinct errors") {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const std::string cut = temp_path("senla_test_cut.bin");
        std::ofstream(cut, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
        try {
            read_dataset(cut);
            FAIL("expected FileError");
        } catch (const FileError& e) {
            CHECK(std::string(e.what()).find("truncated") != std::string::npos);
        }

        const std::string bad = temp_path("senla_test_bad.bin");
        std::ofstream(bad, std::ios::binary) << "NOTADATASET" << bytes;
        try {
            read_dataset(bad);
            FAIL("expected FileError");
        } catch (const FileError& e) {
            CHECK(std::string(e.what()).find("corrupt header") != std::string::npos);
        }
    }

    SUBCASE("empty dataset round-trips") {
        Dataset empty;
        empty.cfg = cfg;
        empty.registry = ds.registry;
        const std::string p = temp_path("senla_test_empty.bin");
        write_dataset(empty, p);
        CHECK(read_dataset(p).samples.empty());
    }
}

TEST_CASE("nearest-centroid oracle separates the default classes") {
    // Learnability gate for the generator: a centroid classifier on flattened
    // video grids must reach 80% on seen classes before any model is blamed.
    GeneratorConfig cfg;
    cfg.samples_per_class = 30;
    auto ds = generate_dataset(cfg);
    auto split = build_splits(ds, SplitStrategy::Random, 1);

    const int ks = ds.registry.seen_count();
    const size_t dim = ds.samples[0].video.values.size();
    std::vector<std::vector<double>> centroid(static_cast<size_t>(ks), std::vector<double>(dim, 0.0));
    std::vector<int> counts(static_cast<size_t>(ks), 0);
    for (int i : split.train) {
        const auto& s = ds.samples[static_cast<size_t>(i)];
        for (size_t d = 0; d < dim; ++d) centroid[static_cast<size_t>(s.class_id)][d] += s.video.values[d];
        counts[static_cast<size_t>(s.class_id)]++;
    }
    for (int c = 0; c < ks; ++c)
        for (size_t d = 0; d < dim; ++d) centroid[static_cast<size_t>(c)][d] /= counts[static_cast<size_t>(c)];

    int correct = 0, total = 0;
    for (int i : split.test) {
        const auto& s = ds.samples[static_cast<size_t>(i)];
        if (s.class_id >= ks) continue;
        double best = 1e300;
        int arg = -1;
        for (int c = 0; c < ks; ++c) {
            double d2 = 0;
            for (size_t d = 0; d < dim; ++d) {
                const double diff = s.video.values[d] - centroid[static_cast<size_t>(c)][d];
                d2 += diff * diff;
            }
            if (d2 < best) {
                best = d2;
                arg = c;
            }
        }
        total++;
        if (arg == s.class_id) correct++;
    }
    const double acc = static_cast<double>(correct) / total;
    INFO("centroid accuracy ", acc);
    CHECK(acc >= 0.80);
}
