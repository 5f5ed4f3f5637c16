#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace senla {

// xoshiro256** with splitmix64 seeding. std::mt19937 would do for the engine
// itself, but the standard distributions are not bit-identical across library
// implementations, and training/dataset reproducibility here is byte-exact by
// contract. State is four u64 words, trivially serializable.
class Rng {
   public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& w : s_) w = splitmix64(x);
    }

    // Independent stream derived from (seed, stream id); used to make dataset
    // generation a pure function of the config with per-sample streams.
    static Rng derive(uint64_t seed, uint64_t stream) {
        uint64_t x = seed;
        uint64_t a = splitmix64(x);
        uint64_t y = stream + 0x9e3779b97f4a7c15ull;
        uint64_t b = splitmix64(y);
        return Rng(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
    }

    uint64_t next_u64() {
        uint64_t result = rotl(s_[1] * 5, 7) * 9;
        uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    float uniformf(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

    int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

    // Box-Muller without a cached spare so the state stays four words.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    float normalf(float mean, float stddev) {
        return mean + stddev * static_cast<float>(normal());
    }

    // Knuth's method; fine for the means used here (<= a few hundred).
    int poisson(double mean) {
        double l = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > l);
        return k - 1;
    }

    std::array<uint64_t, 4> state() const { return s_; }
    void set_state(const std::array<uint64_t, 4>& s) { s_ = s; }

   private:
    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<uint64_t, 4> s_{};
};

}  // namespace senla
