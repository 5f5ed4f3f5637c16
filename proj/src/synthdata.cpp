#include "senla/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace senla {

namespace {

constexpr int kJoints = 13;
// head, neck, pelvis, l/r shoulder, l/r elbow, l/r hand, l/r knee, l/r foot
constexpr float kBase[kJoints][3] = {
    {0.00f, 0.85f, 0.0f},  {0.00f, 0.65f, 0.0f},  {0.00f, 0.00f, 0.0f},
    {-0.25f, 0.60f, 0.0f}, {0.25f, 0.60f, 0.0f},  {-0.45f, 0.35f, 0.0f},
    {0.45f, 0.35f, 0.0f},  {-0.55f, 0.10f, 0.0f}, {0.55f, 0.10f, 0.0f},
    {-0.15f, -0.45f, 0.0f}, {0.15f, -0.45f, 0.0f}, {-0.18f, -0.90f, 0.0f},
    {0.18f, -0.90f, 0.0f}};
// Rendering sums singles first, then left/right pairs with the pair partial
// sum grouped, so mirrored activities produce bitwise-mirrored grids.
constexpr int kSingles[3] = {0, 1, 2};
constexpr int kPairs[5][2] = {{3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}};
constexpr int kBones[12][2] = {{0, 1}, {1, 2}, {1, 3}, {1, 4}, {3, 5}, {5, 7},
                               {4, 6}, {6, 8}, {2, 9}, {2, 10}, {9, 11}, {10, 12}};
constexpr float kSensorPos[3] = {0.0f, 0.3f, -3.0f};
constexpr float kSplatSigma = 0.08f;
constexpr float kTwoPi = 6.2831853071795864769f;

int mirror_joint(int j) {
    for (const auto& p : kPairs) {
        if (p[0] == j) return p[1];
        if (p[1] == j) return p[0];
    }
    return j;
}

Mover mv(int joint, float ax, float ay, float az, float freq = 1.0f, float phase = 0.0f) {
    return Mover{joint, ax, ay, az, freq, phase};
}

std::vector<Mover> mirror_x(const std::vector<Mover>& ms) {
    std::vector<Mover> out;
    out.reserve(ms.size());
    for (const auto& m : ms) out.push_back(Mover{mirror_joint(m.joint), -m.ax, m.ay, m.az, m.freq, m.phase});
    return out;
}

std::vector<Mover> merge(std::vector<Mover> a, const std::vector<Mover>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<Mover> twist(float sign) {
    return {mv(7, 0.40f * sign, 0, 0.28f), mv(8, 0.40f * sign, 0, 0.28f),
            mv(5, 0.30f * sign, 0, 0.20f), mv(6, 0.30f * sign, 0, 0.20f),
            mv(3, 0.18f * sign, 0, 0.12f), mv(4, 0.18f * sign, 0, 0.12f),
            mv(0, 0.10f * sign, 0, 0.08f)};
}

std::vector<Mover> limb_extension_left() {
    return {mv(7, -0.40f, -0.06f, 0), mv(5, -0.26f, -0.04f, 0),
            mv(11, -0.30f, 0.10f, 0), mv(9, -0.18f, 0.06f, 0)};
}

std::vector<Mover> lunge_left() {
    std::vector<Mover> ms;
    for (int j : {0, 1, 2, 3, 4, 5, 6, 7, 8}) ms.push_back(mv(j, -0.30f, -0.14f, 0));
    ms.push_back(mv(9, -0.34f, -0.10f, 0));
    ms.push_back(mv(11, -0.30f, 0, 0));
    return ms;
}

std::vector<Mover> wave_right_hand() {
    return {mv(8, 0.28f, 0.20f, 0, 2.0f), mv(6, 0.16f, 0.12f, 0, 2.0f)};
}

std::vector<Mover> throw_left() {
    return {mv(7, -0.42f, 0.18f, 0.48f), mv(5, -0.26f, 0.10f, 0.30f)};
}

const std::vector<ActivitySpec>& specs_impl() {
    static const std::vector<ActivitySpec> specs = [] {
        std::vector<ActivitySpec> v;
        auto addc = [&](const std::string& name, const std::string& desc, bool seen,
                        std::vector<Mover> movers) {
            ActivitySpec s;
            s.class_id = static_cast<int>(v.size());
            s.name = name;
            s.description = desc;
            s.seen = seen;
            s.movers = std::move(movers);
            v.push_back(std::move(s));
        };

        // seen classes (ids 0..21)
        addc("right twist", "an activity of a person twisting the torso to the right side", true,
             twist(1.0f));
        addc("left limb extension",
             "an activity of a person extending the left arm and left leg outward", true,
             limb_extension_left());
        addc("right limb extension",
             "an activity of a person extending the right arm and right leg outward", true,
             mirror_x(limb_extension_left()));
        addc("left side lunge",
             "an activity of a person lunging to the left side with the left leg bent", true,
             lunge_left());
        addc("waving right hand",
             "an activity of a person waving the right hand above the shoulder", true,
             wave_right_hand());
        addc("left side throwing",
             "an activity of a person throwing with the left hand to the left side", true,
             throw_left());
        addc("bowing", "an activity of a person bending forward at the waist", true,
             {mv(0, 0, -0.42f, 0.40f), mv(1, 0, -0.30f, 0.28f), mv(3, 0, -0.26f, 0.24f),
              mv(4, 0, -0.26f, 0.24f), mv(7, 0, -0.30f, 0.30f), mv(8, 0, -0.30f, 0.30f)});
        addc("squatting", "an activity of a person bending both knees to lower the body", true,
             {mv(0, 0, -0.34f, 0), mv(1, 0, -0.34f, 0), mv(2, 0, -0.30f, 0), mv(3, 0, -0.32f, 0),
              mv(4, 0, -0.32f, 0), mv(5, 0, -0.32f, 0), mv(6, 0, -0.32f, 0), mv(7, 0, -0.32f, 0),
              mv(8, 0, -0.32f, 0), mv(9, 0, -0.14f, 0.16f), mv(10, 0, -0.14f, 0.16f)});
        {
            std::vector<Mover> ms;
            for (int j = 0; j < kJoints; ++j) ms.push_back(mv(j, 0, 0.30f, 0, 2.0f));
            addc("jumping", "an activity of a person jumping upward with both legs", true, std::move(ms));
        }
        addc("stretching both arms",
             "an activity of a person stretching both arms outward to the sides", true,
             {mv(7, -0.30f, 0.30f, 0), mv(8, 0.30f, 0.30f, 0), mv(5, -0.18f, 0.18f, 0),
              mv(6, 0.18f, 0.18f, 0)});
        addc("raising left arm",
             "an activity of a person raising the left arm above the shoulder", true,
             {mv(7, -0.06f, 0.55f, 0, 2.0f), mv(5, -0.04f, 0.38f, 0, 2.0f)});
        addc("raising right arm",
             "an activity of a person raising the right arm above the shoulder", true,
             {mv(8, 0.06f, 0.55f, 0, 2.0f), mv(6, 0.04f, 0.38f, 0, 2.0f)});
        addc("kicking left leg", "an activity of a person kicking the left leg forward", true,
             {mv(11, -0.20f, 0.18f, 0.50f, 2.0f), mv(9, -0.12f, 0.10f, 0.30f, 2.0f)});
        addc("kicking right leg", "an activity of a person kicking the right leg forward", true,
             {mv(12, 0.20f, 0.18f, 0.50f, 2.0f), mv(10, 0.12f, 0.10f, 0.30f, 2.0f)});
        addc("bending left side",
             "an activity of a person bending the upper body to the left side", true,
             {mv(0, -0.36f, -0.12f, 0), mv(1, -0.26f, -0.08f, 0), mv(3, -0.30f, -0.10f, 0),
              mv(4, -0.30f, -0.10f, 0), mv(5, -0.30f, -0.10f, 0), mv(6, -0.30f, -0.10f, 0),
              mv(7, -0.30f, -0.10f, 0), mv(8, -0.30f, -0.10f, 0)});
        addc("bending right side",
             "an activity of a person bending the upper body to the right side", true,
             {mv(0, 0.36f, -0.12f, 0), mv(1, 0.26f, -0.08f, 0), mv(3, 0.30f, -0.10f, 0),
              mv(4, 0.30f, -0.10f, 0), mv(5, 0.30f, -0.10f, 0), mv(6, 0.30f, -0.10f, 0),
              mv(7, 0.30f, -0.10f, 0), mv(8, 0.30f, -0.10f, 0)});
        addc("marching in place",
             "an activity of a person marching in place lifting both knees", true,
             {mv(9, 0, 0.28f, 0.10f, 2.0f, 0), mv(11, 0, 0.24f, 0.08f, 2.0f, 0),
              mv(10, 0, 0.28f, 0.10f, 2.0f, 3.14159265f), mv(12, 0, 0.24f, 0.08f, 2.0f, 3.14159265f)});
        addc("clapping both hands",
             "an activity of a person clapping both hands in front of the chest", true,
             {mv(7, 0.40f, 0.08f, 0.04f, 2.0f), mv(8, -0.40f, 0.08f, 0.04f, 2.0f),
              mv(5, 0.20f, 0.05f, 0.02f, 2.0f), mv(6, -0.20f, 0.05f, 0.02f, 2.0f)});
        addc("pushing forward",
             "an activity of a person pushing both hands forward from the chest", true,
             {mv(7, 0, 0.05f, 0.50f), mv(8, 0, 0.05f, 0.50f), mv(5, 0, 0.03f, 0.32f),
              mv(6, 0, 0.03f, 0.32f)});
        addc("pulling backward",
             "an activity of a person pulling both hands backward toward the body", true,
             {mv(7, 0, 0.12f, -0.48f, 2.0f), mv(8, 0, 0.12f, -0.48f, 2.0f),
              mv(5, 0, 0.07f, -0.30f, 2.0f), mv(6, 0, 0.07f, -0.30f, 2.0f)});
        addc("turning head left", "an activity of a person turning the head to the left side", true,
             {mv(0, -0.50f, 0.05f, 0.45f)});
        addc("reaching up", "an activity of a person reaching both hands upward above the head", true,
             {mv(7, 0, 0.52f, 0), mv(8, 0, 0.52f, 0), mv(5, 0, 0.36f, 0), mv(6, 0, 0.36f, 0)});

        // unseen classes (ids 22..26): factor recombinations of the above
        addc("left twist", "an activity of a person twisting the torso to the left side", false,
             twist(-1.0f));
        addc("both limb extension",
             "an activity of a person extending both arms and both legs outward", false,
             merge(limb_extension_left(), mirror_x(limb_extension_left())));
        addc("right side lunge",
             "an activity of a person lunging to the right side with the right leg bent", false,
             mirror_x(lunge_left()));
        addc("waving left hand",
             "an activity of a person waving the left hand above the shoulder", false,
             mirror_x(wave_right_hand()));
        addc("right side throwing",
             "an activity of a person throwing with the right hand to the right side", false,
             mirror_x(throw_left()));
        return v;
    }();
    return specs;
}

struct Pose {
    float pos[kJoints][3];
    float vel[kJoints][3];
};

// Joint positions and analytic velocities at frame t (time unit = frame).
Pose pose_at(const ActivitySpec& spec, float t, int frames, float scale, float ox, float oz,
             float phase_jitter, float amp_jitter) {
    Pose p{};
    for (int j = 0; j < kJoints; ++j) {
        float d[3] = {0, 0, 0};
        float v[3] = {0, 0, 0};
        for (const auto& m : spec.movers) {
            if (m.joint != j) continue;
            const float w = kTwoPi * m.freq / static_cast<float>(frames);
            const float arg = w * t + m.phase + phase_jitter;
            const float s = amp_jitter * std::sin(arg);
            const float c = amp_jitter * w * std::cos(arg);
            d[0] += m.ax * s;
            d[1] += m.ay * s;
            d[2] += m.az * s;
            v[0] += m.ax * c;
            v[1] += m.ay * c;
            v[2] += m.az * c;
        }
        p.pos[j][0] = ox + scale * (kBase[j][0] + d[0]);
        p.pos[j][1] = scale * (kBase[j][1] + d[1]);
        p.pos[j][2] = oz + scale * (kBase[j][2] + d[2]);
        p.vel[j][0] = scale * v[0];
        p.vel[j][1] = scale * v[1];
        p.vel[j][2] = scale * v[2];
    }
    return p;
}

// Gaussian splat of one joint at a pixel center, weighted by depth.
inline float splat(const Pose& p, int j, float px, float py) {
    const float dx = px - p.pos[j][0];
    const float dy = py - p.pos[j][1];
    const float d2 = dx * dx + dy * dy;
    const float w = std::exp(-d2 / (2.0f * kSplatSigma * kSplatSigma));
    return w * (1.0f + 0.8f * p.pos[j][2]);
}

inline float speed(const Pose& p, int j) {
    return std::sqrt(p.vel[j][0] * p.vel[j][0] + p.vel[j][1] * p.vel[j][1] +
                     p.vel[j][2] * p.vel[j][2]);
}

}  // namespace

void GeneratorConfig::validate() const {
    if (samples_per_class < 1 || subjects < 1 || environments < 1)
        throw ConfigError("generator: counts must be positive");
    if (frames < 1 || video_hw < 4) throw ConfigError("generator: bad extents");
    if (lidar_mean_points <= 0 || radar_mean_points <= 0)
        throw ConfigError("generator: point rates must be positive");
    if (env_noise.empty() || env_clutter.empty())
        throw ConfigError("generator: need at least one environment noise/clutter level");
}

const std::vector<ActivitySpec>& default_activity_specs() { return specs_impl(); }

Registry registry_from_specs(const std::vector<ActivitySpec>& specs) {
    std::vector<ClassEntry> entries;
    for (const auto& s : specs)
        entries.push_back(ClassEntry{s.class_id, s.name, s.description, s.seen});
    return Registry(std::move(entries));
}

Sample generate_sample(const ActivitySpec& spec, int subject, int environment,
                       const GeneratorConfig& cfg, Rng& rng) {
    const int S = cfg.frames;
    const int W = cfg.video_hw;

    // Subject factor: a single-subject config is exactly neutral, which keeps
    // constructive symmetry tests free of subject offsets.
    const double u = cfg.subjects <= 1 ? 0.5 : static_cast<double>(subject) / (cfg.subjects - 1);
    const float scale = static_cast<float>(0.8 + 0.4 * u);
    const float ox = static_cast<float>(0.16 * (u - 0.5));
    const double vz = cfg.subjects <= 1
                          ? 0.5
                          : std::fmod(subject * 0.6180339887498949 + 0.5, 1.0);
    const float oz = static_cast<float>(0.4 * (vz - 0.5));

    const float sigma = cfg.env_noise[static_cast<size_t>(environment) % cfg.env_noise.size()];
    const float clutter = cfg.env_clutter[static_cast<size_t>(environment) % cfg.env_clutter.size()];

    const float phase_jitter = rng.uniformf(-0.3f, 0.3f);
    const float amp_jitter = rng.uniformf(0.9f, 1.1f);

    Sample out;
    out.class_id = spec.class_id;
    out.subject = subject;
    out.environment = environment;
    out.video.height = W;
    out.video.width = W;
    out.video.frames = S;
    out.video.values.assign(static_cast<size_t>(S) * 3 * W * W, 0.0f);
    out.lidar.feat_width = 3;
    out.lidar.frames.resize(static_cast<size_t>(S));
    out.radar.feat_width = 5;
    out.radar.frames.resize(static_cast<size_t>(S));

    std::vector<double> trail(static_cast<size_t>(W) * W, 0.0);
    for (int f = 0; f < S; ++f) {
        const Pose p = pose_at(spec, static_cast<float>(f), S, scale, ox, oz, phase_jitter, amp_jitter);

        // --- video channels: occupancy-now, speed-weighted, trail ---
        // Accumulation runs in double, where float products are exact: a
        // mirrored activity then sums bitwise-identical terms and the grids
        // mirror exactly, with or without compiler FMA contraction.
        for (int y = 0; y < W; ++y) {
            const float py = 1.0f - (2.0f * y + 1.0f) / static_cast<float>(W);
            for (int x = 0; x < W; ++x) {
                const float px = (2.0f * x + 1.0f) / static_cast<float>(W) - 1.0f;
                double occ = 0.0, velch = 0.0;
                for (int j : kSingles) {
                    const float w = splat(p, j, px, py);
                    occ += w;
                    velch += static_cast<double>(w) * speed(p, j) * 4.0;
                }
                for (const auto& pr : kPairs) {
                    const float wa = splat(p, pr[0], px, py);
                    const float wb = splat(p, pr[1], px, py);
                    occ += static_cast<double>(wa) + wb;
                    velch += static_cast<double>(wa) * speed(p, pr[0]) * 4.0 +
                             static_cast<double>(wb) * speed(p, pr[1]) * 4.0;
                }
                out.video.at(f, 0, y, x) = static_cast<float>(occ);
                out.video.at(f, 1, y, x) = static_cast<float>(velch);
                const size_t ti = static_cast<size_t>(y) * W + x;
                trail[ti] += occ;
                out.video.at(f, 2, y, x) = static_cast<float>(trail[ti] / (f + 1));
            }
        }
        if (sigma > 0.0f)
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < W; ++y)
                    for (int x = 0; x < W; ++x) out.video.at(f, c, y, x) += rng.normalf(0.0f, sigma);

        // --- lidar-like points: bone surface samples plus clutter ---
        auto& lf = out.lidar.frames[static_cast<size_t>(f)];
        const int nl = rng.poisson(cfg.lidar_mean_points);
        lf.reserve(static_cast<size_t>(nl) * 3);
        for (int i = 0; i < nl; ++i) {
            const int b = rng.uniform_int(12);
            const float tt = rng.uniformf(0.0f, 1.0f);
            const int ja = kBones[b][0], jb = kBones[b][1];
            for (int c = 0; c < 3; ++c) {
                float v = p.pos[ja][c] + tt * (p.pos[jb][c] - p.pos[ja][c]);
                v += rng.normalf(0.0f, 0.02f);
                if (sigma > 0.0f) v += rng.normalf(0.0f, sigma);
                lf.push_back(v);
            }
        }
        const int ncl = rng.poisson(clutter);
        for (int i = 0; i < ncl; ++i)
            for (int c = 0; c < 3; ++c) lf.push_back(rng.uniformf(-1.2f, 1.2f));

        // --- radar-like points: moving joints carry Doppler and intensity ---
        std::vector<int> moving;
        for (int j = 0; j < kJoints; ++j)
            if (speed(p, j) > 1e-5f) moving.push_back(j);
        if (moving.empty())
            for (int j = 0; j < kJoints; ++j) moving.push_back(j);
        auto& rf = out.radar.frames[static_cast<size_t>(f)];
        const int nr = rng.poisson(cfg.radar_mean_points);
        rf.reserve(static_cast<size_t>(nr) * 5);
        for (int i = 0; i < nr; ++i) {
            const int j = moving[static_cast<size_t>(rng.uniform_int(static_cast<int>(moving.size())))];
            float pt[3];
            for (int c = 0; c < 3; ++c) {
                pt[c] = p.pos[j][c] + rng.normalf(0.0f, 0.03f);
                if (sigma > 0.0f) pt[c] += rng.normalf(0.0f, sigma);
            }
            float ray[3];
            float d2 = 0.0f;
            for (int c = 0; c < 3; ++c) {
                ray[c] = pt[c] - kSensorPos[c];
                d2 += ray[c] * ray[c];
            }
            const float dist = std::sqrt(d2);
            float rv = 0.0f;
            for (int c = 0; c < 3; ++c) rv += (ray[c] / dist) * p.vel[j][c];
            const float intensity = 2.0f / (1.0f + d2);
            rf.insert(rf.end(), {pt[0], pt[1], pt[2], rv, intensity});
        }
        const int nrc = rng.poisson(clutter * 0.5);
        for (int i = 0; i < nrc; ++i) {
            const float cx = rng.uniformf(-1.2f, 1.2f);
            const float cy = rng.uniformf(-1.2f, 1.2f);
            const float cz = rng.uniformf(-1.2f, 1.2f);
            rf.insert(rf.end(), {cx, cy, cz, 0.0f, rng.uniformf(0.0f, 0.05f)});
        }
    }
    return out;
}

Dataset generate_dataset(const GeneratorConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.cfg = cfg;
    ds.registry = registry_from_specs(default_activity_specs());
    // Seeded permutation over the (subject, environment) grid so both factors
    // are covered evenly even for small per-class sample counts.
    const int combos = cfg.subjects * cfg.environments;
    std::vector<int> perm(static_cast<size_t>(combos));
    for (int i = 0; i < combos; ++i) perm[static_cast<size_t>(i)] = i;
    Rng perm_rng = Rng::derive(cfg.seed, 0x636f6d626full);
    for (size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[static_cast<size_t>(perm_rng.uniform_int(static_cast<int>(i)))]);
    for (const auto& spec : default_activity_specs()) {
        for (int j = 0; j < cfg.samples_per_class; ++j) {
            const int combo = perm[static_cast<size_t>(j % combos)];
            const int subject = combo % cfg.subjects;
            const int environment = combo / cfg.subjects;
            Rng rng = Rng::derive(cfg.seed,
                                  static_cast<uint64_t>(spec.class_id) * 1000003ull + static_cast<uint64_t>(j));
            ds.samples.push_back(generate_sample(spec, subject, environment, cfg, rng));
        }
    }
    return ds;
}

SplitStrategy split_from_name(const std::string& name) {
    if (name == "random") return SplitStrategy::Random;
    if (name == "cross_subject") return SplitStrategy::CrossSubject;
    if (name == "cross_environment") return SplitStrategy::CrossEnvironment;
    throw ConfigError("unknown split strategy '" + name + "'");
}

const char* split_name(SplitStrategy s) {
    switch (s) {
        case SplitStrategy::Random: return "random";
        case SplitStrategy::CrossSubject: return "cross_subject";
        default: return "cross_environment";
    }
}

Split build_splits(const Dataset& data, SplitStrategy strategy, uint64_t seed) {
    if (data.samples.empty()) throw ConfigError("build_splits: empty dataset");
    Split split;
    const auto& reg = data.registry;
    if (strategy == SplitStrategy::Random) {
        // Seeded 80/20 per seen class; unseen classes go to test wholesale.
        std::vector<std::vector<int>> by_class(static_cast<size_t>(reg.total()));
        for (int i = 0; i < static_cast<int>(data.samples.size()); ++i)
            by_class[static_cast<size_t>(data.samples[static_cast<size_t>(i)].class_id)].push_back(i);
        Rng rng = Rng::derive(seed, 0x73706c6974ull);
        for (int c = 0; c < reg.total(); ++c) {
            auto& idx = by_class[static_cast<size_t>(c)];
            if (!reg.entry(c).seen) {
                split.test.insert(split.test.end(), idx.begin(), idx.end());
                continue;
            }
            for (size_t i = idx.size(); i > 1; --i)
                std::swap(idx[i - 1], idx[static_cast<size_t>(rng.uniform_int(static_cast<int>(i)))]);
            const size_t ntrain = idx.size() * 4 / 5;
            for (size_t i = 0; i < idx.size(); ++i)
                (i < ntrain ? split.train : split.test).push_back(idx[i]);
        }
    } else if (strategy == SplitStrategy::CrossSubject) {
        if (data.cfg.subjects < 2)
            throw ConfigError("cross_subject split needs at least 2 subjects");
        const int held = std::max(1, data.cfg.subjects / 4);
        const int cut = data.cfg.subjects - held;
        for (int i = 0; i < static_cast<int>(data.samples.size()); ++i) {
            const auto& s = data.samples[static_cast<size_t>(i)];
            const bool seen = reg.entry(s.class_id).seen;
            if (s.subject >= cut)
                split.test.push_back(i);
            else if (seen)
                split.train.push_back(i);
        }
    } else {
        if (data.cfg.environments < 2)
            throw ConfigError("cross_environment split needs at least 2 environments");
        const int held = data.cfg.environments - 1;
        for (int i = 0; i < static_cast<int>(data.samples.size()); ++i) {
            const auto& s = data.samples[static_cast<size_t>(i)];
            const bool seen = reg.entry(s.class_id).seen;
            if (s.environment == held)
                split.test.push_back(i);
            else if (seen)
                split.train.push_back(i);
        }
    }
    std::sort(split.test.begin(), split.test.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

namespace {

constexpr char kMagic[8] = {'S', 'E', 'N', 'L', 'A', 'D', 'S', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const char* what) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FileError(std::string("truncated payload: ") + what);
    return v;
}

void put_floats(std::ostream& os, const std::vector<float>& v) {
    put<uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::vector<float> get_floats(std::istream& is, const char* what) {
    const auto n = get<uint64_t>(is, what);
    std::vector<float> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!is) throw FileError(std::string("truncated payload: ") + what);
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put<uint64_t>(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is, const char* what) {
    const auto n = get<uint64_t>(is, what);
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw FileError(std::string("truncated payload: ") + what);
    return s;
}

}  // namespace

void write_dataset(const Dataset& data, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FileError("cannot open '" + path + "' for writing");
    os.write(kMagic, sizeof(kMagic));
    put<uint32_t>(os, kVersion);
    put<uint64_t>(os, data.cfg.seed);
    put<int32_t>(os, data.cfg.samples_per_class);
    put<int32_t>(os, data.cfg.subjects);
    put<int32_t>(os, data.cfg.environments);
    put<int32_t>(os, data.cfg.frames);
    put<int32_t>(os, data.cfg.video_hw);
    put<double>(os, data.cfg.lidar_mean_points);
    put<double>(os, data.cfg.radar_mean_points);
    put_floats(os, data.cfg.env_noise);
    put_floats(os, data.cfg.env_clutter);
    put_string(os, data.registry.serialize());
    put<uint64_t>(os, data.samples.size());
    for (const auto& s : data.samples) {
        put<int32_t>(os, s.class_id);
        put<int32_t>(os, s.subject);
        put<int32_t>(os, s.environment);
        put_floats(os, s.video.values);
        for (const auto* seq : {&s.lidar, &s.radar}) {
            put<int32_t>(os, seq->feat_width);
            put<uint32_t>(os, static_cast<uint32_t>(seq->frames.size()));
            for (const auto& fr : seq->frames) put_floats(os, fr);
        }
    }
    if (!os) throw FileError("write failed for '" + path + "'");
}

Dataset read_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FileError("cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FileError("corrupt header: bad magic in '" + path + "'");
    const auto version = get<uint32_t>(is, "version");
    if (version != kVersion)
        throw FileError("version mismatch: dataset file is v" + std::to_string(version) +
                        ", expected v" + std::to_string(kVersion));
    Dataset ds;
    ds.cfg.seed = get<uint64_t>(is, "seed");
    ds.cfg.samples_per_class = get<int32_t>(is, "samples_per_class");
    ds.cfg.subjects = get<int32_t>(is, "subjects");
    ds.cfg.environments = get<int32_t>(is, "environments");
    ds.cfg.frames = get<int32_t>(is, "frames");
    ds.cfg.video_hw = get<int32_t>(is, "video_hw");
    ds.cfg.lidar_mean_points = get<double>(is, "lidar_mean_points");
    ds.cfg.radar_mean_points = get<double>(is, "radar_mean_points");
    ds.cfg.env_noise = get_floats(is, "env_noise");
    ds.cfg.env_clutter = get_floats(is, "env_clutter");
    ds.registry = Registry::parse(get_string(is, "registry"));
    const auto count = get<uint64_t>(is, "sample count");
    ds.samples.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        Sample s;
        s.class_id = get<int32_t>(is, "class id");
        s.subject = get<int32_t>(is, "subject");
        s.environment = get<int32_t>(is, "environment");
        s.video.height = ds.cfg.video_hw;
        s.video.width = ds.cfg.video_hw;
        s.video.frames = ds.cfg.frames;
        s.video.values = get_floats(is, "video");
        if (static_cast<int64_t>(s.video.values.size()) != 3ll * ds.cfg.frames * ds.cfg.video_hw * ds.cfg.video_hw)
            throw FileError("truncated payload: video record size mismatch");
        for (auto* seq : {&s.lidar, &s.radar}) {
            seq->feat_width = get<int32_t>(is, "feat width");
            const auto nf = get<uint32_t>(is, "frame count");
            seq->frames.resize(nf);
            for (auto& fr : seq->frames) fr = get_floats(is, "points");
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace senla
