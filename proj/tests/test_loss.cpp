#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "senla/gradcheck.hpp"
#include "senla/loss.hpp"
#include "senla/rng.hpp"

using namespace senla;

using DTensor = TensorT<double>;

namespace {

DTensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return DTensor::from_data(shape, std::move(v));
}

// Direct 64-bit transcription of the per-sample contrastive objective.
double info_nce_oracle(const std::vector<double>& sim, int rows, int cols,
                       const std::vector<int>& labels, double tau) {
    double total = 0;
    for (int i = 0; i < rows; ++i) {
        double denom = 0;
        for (int a = 0; a < cols; ++a) denom += std::exp(sim[static_cast<size_t>(i) * cols + a] / tau);
        const double pos = std::exp(sim[static_cast<size_t>(i) * cols + labels[static_cast<size_t>(i)]] / tau);
        total += -std::log(pos / denom);
    }
    return total / rows;
}

}  // namespace

TEST_CASE("similarity examples") {
    auto a = Tensor::from_data({1, 4}, {1, 0, 0, 0});
    auto b = Tensor::from_data({2, 4}, {1, 0, 0, 0, 0, 1, 0, 0});
    auto sim = similarity(a, b, true);
    CHECK(sim.values()[0] == doctest::Approx(1.0f).epsilon(1e-5));  // identical unit vectors
    CHECK(sim.values()[1] == doctest::Approx(0.0f));                // orthogonal

    // normalization absorbs scale
    auto a10 = scale(a, 10.0f);
    auto sim10 = similarity(a10, b, true);
    for (size_t i = 0; i < sim.values().size(); ++i)
        CHECK(std::fabs(sim10.values()[i] - sim.values()[i]) <= 1e-5f);

    // cosine scores live in [-1, 1]
    Rng rng(3);
    std::vector<float> sv(5 * 8), tv(7 * 8);
    for (auto& v : sv) v = rng.uniformf(-4, 4);
    for (auto& v : tv) v = rng.uniformf(-4, 4);
    auto s = similarity(Tensor::from_data({5, 8}, sv), Tensor::from_data({7, 8}, tv), true);
    for (float v : s.values()) {
        CHECK(v <= 1.0f + 1e-5f);
        CHECK(v >= -1.0f - 1e-5f);
    }

    CHECK_THROWS_AS(similarity(Tensor::zeros({2, 8}), Tensor::zeros({3, 9}), true), DimensionError);
}

TEST_CASE("info_nce analytic values") {
    // uniform scores over 27 classes -> ln 27
    auto sim27 = DTensor::full({4, 27}, 0.7);
    auto loss27 = info_nce(sim27, {0, 5, 11, 26}, 0.07);
    CHECK(loss27.item() == doctest::Approx(std::log(27.0)).epsilon(1e-9));
    CHECK(std::fabs(loss27.item() - 3.295837) <= 1e-6);

    // K=2, tau=1, scores (+1, -1) with the positive first
    auto sim2 = DTensor::from_data({1, 2}, {1.0, -1.0});
    auto loss2 = info_nce(sim2, {0}, 1.0);
    CHECK(std::fabs(loss2.item() - std::log(1.0 + std::exp(-2.0))) <= 1e-12);
    CHECK(std::fabs(loss2.item() - 0.126928) <= 1e-6);
}

TEST_CASE("info_nce matches the 64-bit oracle") {
    for (int seed = 0; seed < 20; ++seed) {
        Rng rng(seed + 41);
        std::vector<double> sv(20);
        for (auto& v : sv) v = rng.uniform(-1, 1);
        std::vector<int> labels{3, 0, 4, 2};
        auto t = DTensor::from_data({4, 5}, sv);
        const double expected = info_nce_oracle(sv, 4, 5, labels, 0.07);
        CHECK(std::fabs(info_nce(t, labels, 0.07).item() - expected) <= 1e-6);
    }
}

TEST_CASE("info_nce invariants") {
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        auto sim = random_tensor({6, 9}, rng);
        std::vector<int> labels;
        for (int i = 0; i < 6; ++i) labels.push_back(rng.uniform_int(9));
        const double base = info_nce(sim, labels, 0.07).item();
        CHECK(base >= 0.0);

        // row-shift invariance
        std::vector<double> shifted = sim.values();
        for (int i = 0; i < 6; ++i) {
            const double c = rng.uniform(-3, 3);
            for (int j = 0; j < 9; ++j) shifted[static_cast<size_t>(i) * 9 + j] += c;
        }
        const double after = info_nce(DTensor::from_data({6, 9}, shifted), labels, 0.07).item();
        CHECK(std::fabs(after - base) <= 1e-6);
    }

    // temperature monotonicity on constructed rows
    auto row_loss = [&](double pos, double neg, double tau) {
        auto sim = DTensor::from_data({1, 2}, {pos, neg});
        return info_nce(sim, {0}, tau).item();
    };
    // positive not the row max: lowering tau increases the loss
    CHECK(row_loss(0.2, 0.8, 0.05) > row_loss(0.2, 0.8, 0.2));
    // positive leads: lowering tau decreases the loss
    CHECK(row_loss(0.8, 0.2, 0.05) < row_loss(0.8, 0.2, 0.2));

    CHECK_THROWS_AS(info_nce(DTensor::zeros({2, 3}), {0, 5}, 0.07), IndexError);
}

TEST_CASE("info_nce gradient on a random 4-class batch") {
    // Scores drawn at cosine scale: temperature 0.07 maps wider ranges to
    // softmax tails below what central differences can resolve.
    GradCheckOptions opt;
    opt.step = 1e-4;
    for (int seed = 0; seed < 20; ++seed) {
        Rng rng(seed + 53);
        auto sim = random_tensor({4, 4}, rng, -0.3, 0.3);
        std::vector<int> labels{1, 3, 0, 2};
        double err = grad_check([&](DTensor& t) { return info_nce(t, labels, 0.07); }, sim, opt);
        CHECK(err <= 1e-4);
    }
}

TEST_CASE("joint loss weighting") {
    auto l1 = DTensor::scalar(1), l2 = DTensor::scalar(2), l3 = DTensor::scalar(3);
    CHECK(joint_loss(l1, l2, l3, 1.0, 1.0, 1.0).item() == doctest::Approx(6.0));

    const double ln27 = std::log(27.0);
    auto u = DTensor::scalar(ln27);
    const double combined = joint_loss(u, u, u, 0.4, 1.3, 1.3).item();
    CHECK(std::fabs(combined - 3.0 * ln27) <= 1e-6);
    CHECK(combined == doctest::Approx(9.8875).epsilon(1e-4));

    // gradient splits in weight ratio
    auto a = DTensor::from_data({1}, {0.3}, true);
    auto b = DTensor::from_data({1}, {-0.2}, true);
    auto c = DTensor::from_data({1}, {0.9}, true);
    auto j = joint_loss(TensorT<double>(sum_all(a)), sum_all(b), sum_all(c), 0.4, 1.3, 1.3);
    j.backward();
    CHECK(a.grad()[0] == doctest::Approx(0.4));
    CHECK(b.grad()[0] == doctest::Approx(1.3));
    CHECK(c.grad()[0] == doctest::Approx(1.3));

    // alpha=1, beta=gamma=0: only the first branch sees gradient
    auto a2 = DTensor::from_data({1}, {0.3}, true);
    auto b2 = DTensor::from_data({1}, {-0.2}, true);
    auto c2 = DTensor::from_data({1}, {0.9}, true);
    joint_loss(sum_all(a2), sum_all(b2), sum_all(c2), 1.0, 0.0, 0.0).backward();
    CHECK(a2.grad()[0] == doctest::Approx(1.0));
    CHECK(b2.grad()[0] == 0.0);
    CHECK(c2.grad()[0] == 0.0);
}

TEST_CASE("scale invariance of the normalized objective") {
    Rng rng(11);
    std::vector<float> sv(3 * 16), tv(5 * 16);
    for (auto& v : sv) v = rng.uniformf(-1, 1);
    for (auto& v : tv) v = rng.uniformf(-1, 1);
    auto text = Tensor::from_data({5, 16}, tv);
    std::vector<int> labels{0, 2, 4};

    auto base = info_nce(similarity(Tensor::from_data({3, 16}, sv), text, true), labels, 0.07f).item();
    std::vector<float> scaled = sv;
    for (auto& v : scaled) v *= 7.5f;
    auto after = info_nce(similarity(Tensor::from_data({3, 16}, scaled), text, true), labels, 0.07f).item();
    CHECK(std::fabs(after - base) <= 1e-5f);
}

TEST_CASE("loss config validation") {
    LossConfig ok;
    ok.validate();
    LossConfig bad_tau;
    bad_tau.tau = 0;
    CHECK_THROWS_AS(bad_tau.validate(), ConfigError);
    LossConfig zero_weights;
    zero_weights.alpha = zero_weights.beta = zero_weights.gamma = 0;
    CHECK_THROWS_AS(zero_weights.validate(), ConfigError);
}
