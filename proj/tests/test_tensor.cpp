#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "senla/gradcheck.hpp"
#include "senla/rng.hpp"
#include "senla/tensor.hpp"

using namespace senla;

using DTensor = TensorT<double>;

namespace {

DTensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(static_cast<size_t>(shape_numel(shape)));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return DTensor::from_data(shape, std::move(v));
}

constexpr int kSeeds = 20;

}  // namespace

TEST_CASE("matmul forward examples") {
    auto I = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    auto B = Tensor::from_data({2, 2}, {3, 4, 5, 6});
    auto C = matmul(I, B);
    CHECK(C.values() == std::vector<float>{3, 4, 5, 6});

    auto a = Tensor::from_data({1, 2}, {1, 2});
    auto b = Tensor::from_data({2, 1}, {3, 4});
    CHECK(matmul(a, b).item() == doctest::Approx(11.0));

    CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
    try {
        matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    } catch (const DimensionError& e) {
        std::string msg = e.what();
        CHECK(msg.find("2x3") != std::string::npos);  // names both shapes
    }
}

TEST_CASE("matmul gradient vs finite differences") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(seed + 1);
        auto A = random_tensor({4, 3}, rng);
        auto B = random_tensor({3, 5}, rng);
        double errA = grad_check([&](DTensor& x) { return sum_all(matmul(x, B)); }, A);
        CHECK(errA <= 1e-4);
        double errB = grad_check([&](DTensor& x) { return sum_all(matmul(A, x)); }, B);
        CHECK(errB <= 1e-4);
    }
}

TEST_CASE("softmax forward examples") {
    auto u = softmax(Tensor::from_data({3}, {0, 0, 0}), 0);
    for (float v : u.values()) CHECK(v == doctest::Approx(1.0f / 3.0f).epsilon(1e-6));

    auto s = softmax(Tensor::from_data({2}, {1000, 0}), 0);
    CHECK(std::fabs(s.values()[0] - 1.0f) <= 1e-12);
    CHECK(std::fabs(s.values()[1]) <= 1e-12);
}

TEST_CASE("softmax rows sum to one") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(seed + 100);
        auto x = random_tensor({5, 7}, rng, -30.0, 30.0);
        auto p = softmax(x, 1);
        for (int r = 0; r < 5; ++r) {
            double sum = 0;
            for (int c = 0; c < 7; ++c) sum += p.values()[static_cast<size_t>(r) * 7 + c];
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("softmax gradient") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(seed + 7);
        auto x = random_tensor({7}, rng, -2.0, 2.0);
        auto w = random_tensor({7}, rng);  // project to scalar with a fixed weighting
        double err = grad_check([&](DTensor& t) { return sum_all(mul(softmax(t, 0), w)); }, x);
        CHECK(err <= 1e-4);
    }
}

TEST_CASE("softmax over non-terminal axis") {
    Rng rng(42);
    auto x = random_tensor({3, 4}, rng);
    auto p = softmax(x, 0);
    for (int c = 0; c < 4; ++c) {
        double sum = 0;
        for (int r = 0; r < 3; ++r) sum += p.values()[static_cast<size_t>(r) * 4 + c];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("layer_norm forward examples") {
    auto gain = Tensor::from_data({4}, {1, 1, 1, 1});
    auto bias = Tensor::zeros({4});
    auto y = layer_norm(Tensor::from_data({1, 4}, {5, 5, 5, 5}), gain, bias);
    for (float v : y.values()) CHECK(v == doctest::Approx(0.0f));

    auto g2 = Tensor::from_data({2}, {1, 1});
    auto b2 = Tensor::zeros({2});
    auto y2 = layer_norm(Tensor::from_data({1, 2}, {1, -1}), g2, b2);
    CHECK(y2.values()[0] == doctest::Approx(1.0f).epsilon(1e-3));
    CHECK(y2.values()[1] == doctest::Approx(-1.0f).epsilon(1e-3));
}

TEST_CASE("layer_norm gradient") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(seed + 11);
        auto x = random_tensor({3, 8}, rng);
        auto g = random_tensor({8}, rng, 0.5, 1.5);
        auto b = random_tensor({8}, rng);
        auto w = random_tensor({3, 8}, rng);
        auto f_of = [&](DTensor& t, DTensor& gg, DTensor& bb) {
            return sum_all(mul(layer_norm(t, gg, bb), w));
        };
        double ex = grad_check([&](DTensor& t) { return f_of(t, g, b); }, x);
        double eg = grad_check([&](DTensor& t) { return f_of(x, t, b); }, g);
        double eb = grad_check([&](DTensor& t) { return f_of(x, g, t); }, b);
        CHECK(ex <= 1e-4);
        CHECK(eg <= 1e-4);
        CHECK(eb <= 1e-4);
    }
}

TEST_CASE("attention forward examples") {
    // single query equal to single key: softmax over one element is 1
    auto q = Tensor::from_data({1, 3}, {0.3f, -0.2f, 0.9f});
    auto v = Tensor::from_data({1, 2}, {5.0f, -7.0f});
    auto out = attention(q, q, v, 1.0f / std::sqrt(3.0f));
    CHECK(out.values()[0] == doctest::Approx(5.0f));
    CHECK(out.values()[1] == doctest::Approx(-7.0f));

    // two identical keys: output is the mean of the values
    auto q1 = Tensor::from_data({1, 2}, {1.0f, 0.0f});
    auto k2 = Tensor::from_data({2, 2}, {0.5f, 0.5f, 0.5f, 0.5f});
    auto v2 = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    auto out2 = attention(q1, k2, v2, 1.0f / std::sqrt(2.0f));
    CHECK(out2.values()[0] == doctest::Approx(0.5f));
    CHECK(out2.values()[1] == doctest::Approx(0.5f));

    CHECK_THROWS_AS(attention(Tensor::zeros({1, 3}), Tensor::zeros({2, 4}), Tensor::zeros({2, 2}), 1.0f),
                    DimensionError);
}

TEST_CASE("attention gradient") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(seed + 13);
        auto q = random_tensor({4, 4}, rng);
        auto k = random_tensor({4, 4}, rng);
        auto v = random_tensor({4, 4}, rng);
        auto w = random_tensor({4, 4}, rng);
        const double sc = 0.5;
        double eq = grad_check([&](DTensor& t) { return sum_all(mul(attention(t, k, v, sc), w)); }, q);
        double ek = grad_check([&](DTensor& t) { return sum_all(mul(attention(q, t, v, sc), w)); }, k);
        double ev = grad_check([&](DTensor& t) { return sum_all(mul(attention(q, k, t, sc), w)); }, v);
        CHECK(eq <= 1e-4);
        CHECK(ek <= 1e-4);
        CHECK(ev <= 1e-4);
    }
}

TEST_CASE("l2_normalize examples") {
    bool flag = false;
    auto y = l2_normalize(Tensor::from_data({2}, {3, 4}), 0, &flag);
    CHECK(y.values()[0] == doctest::Approx(0.6f).epsilon(1e-6));
    CHECK(y.values()[1] == doctest::Approx(0.8f).epsilon(1e-6));
    CHECK_FALSE(flag);

    auto z = l2_normalize(Tensor::from_data({2}, {0, 0}), 0, &flag);
    CHECK(z.values()[0] == 0.0f);
    CHECK(z.values()[1] == 0.0f);
    CHECK(flag);
}

TEST_CASE("l2_normalize unit norms and gradient") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(seed + 17);
        auto x = random_tensor({6}, rng, 0.1, 1.0);  // norm >= 0.1 guaranteed
        bool flag = false;
        auto y = l2_normalize(x, 0, &flag);
        double nn = 0;
        for (double v : y.values()) nn += v * v;
        CHECK(std::sqrt(nn) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK_FALSE(flag);

        auto w = random_tensor({6}, rng);
        double err = grad_check([&](DTensor& t) { return sum_all(mul(l2_normalize(t, 0), w)); }, x);
        CHECK(err <= 1e-4);
    }
}

TEST_CASE("logsumexp examples and high-precision oracle") {
    auto a = logsumexp(Tensor::from_data({2}, {0, 0}), 0);
    CHECK(a.item() == doctest::Approx(std::log(2.0)).epsilon(1e-6));

    auto b = logsumexp(Tensor::from_data({2}, {1000, 1000}), 0);
    CHECK(b.item() == doctest::Approx(1000.0 + std::log(2.0)));

    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(seed + 19);
        std::vector<double> xs(27);
        for (auto& v : xs) v = rng.uniform(-5.0, 5.0);
        // naive 64-bit evaluation
        double naive = 0;
        for (double v : xs) naive += std::exp(v);
        naive = std::log(naive);
        auto t = DTensor::from_data({27}, xs);
        CHECK(std::fabs(logsumexp(t, 0).item() - naive) <= 1e-6);

        // invariant: logsumexp(x) >= max(x)
        double mx = xs[0];
        for (double v : xs) mx = std::max(mx, v);
        CHECK(logsumexp(t, 0).item() >= mx);
    }
}

TEST_CASE("logsumexp gradient") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(seed + 23);
        auto x = random_tensor({9}, rng, -3.0, 3.0);
        double err = grad_check([&](DTensor& t) { return logsumexp(t, 0); }, x);
        CHECK(err <= 1e-4);
    }
}

TEST_CASE("grad_check on analytic polynomial") {
    auto x = DTensor::from_data({3}, {1, 2, 3});
    GradCheckOptions opt;
    opt.step = 1e-4;
    double err = grad_check([](DTensor& t) { return sum_all(mul(t, t)); }, x, opt);
    CHECK(err <= 1e-8);
    CHECK(x.grad()[0] == doctest::Approx(2.0));
    CHECK(x.grad()[1] == doctest::Approx(4.0));
    CHECK(x.grad()[2] == doctest::Approx(6.0));
}

TEST_CASE("elementwise and structural op gradients") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(seed + 29);
        auto a = random_tensor({3, 4}, rng);
        auto b = random_tensor({3, 4}, rng);
        auto w = random_tensor({3, 4}, rng);

        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(add(t, b), w)); }, a) <= 1e-4);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(sub(t, b), w)); }, a) <= 1e-4);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(mul(t, b), w)); }, a) <= 1e-4);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(scale(t, 2.5), w)); }, a) <= 1e-4);
        {
            // gelu' crosses zero near x = -0.75, where relative error against
            // finite differences is ill-conditioned; probe away from it.
            std::vector<double> gx(12);
            for (auto& v : gx)
                v = rng.uniform() < 0.5 ? rng.uniform(0.05, 2.0) : rng.uniform(-2.5, -1.2);
            auto gxt = DTensor::from_data({3, 4}, gx);
            CHECK(grad_check([&](DTensor& t) { return sum_all(mul(gelu(t), w)); }, gxt) <= 1e-4);
        }
        CHECK(grad_check([&](DTensor& t) { return mean_all(mul(t, w)); }, a) <= 1e-4);

        auto wt = random_tensor({4, 3}, rng);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(transpose(t), wt)); }, a) <= 1e-4);

        auto vec = random_tensor({4}, rng);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(add_rowvec(t, vec), w)); }, a) <= 1e-4);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(add_rowvec(a, t), w)); }, vec) <= 1e-4);

        auto w6 = random_tensor({6, 4}, rng);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(repeat_rows(t, 2), w6)); }, a) <= 1e-4);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(repeat_each_row(t, 2), w6)); }, a) <= 1e-4);

        std::vector<int> idx{2, 0, 0, 1};
        auto w4 = random_tensor({4, 4}, rng);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(gather_rows(t, idx), w4)); }, a) <= 1e-4);

        auto w2 = random_tensor({2, 4}, rng);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(slice_rows(t, 1, 2), w2)); }, a) <= 1e-4);

        CHECK(grad_check([&](DTensor& t) {
            return sum_all(mul(concat_rows<double>({t, b}), w6));
        }, a) <= 1e-4);

        std::vector<int> cols{3, 0, 2};
        auto w3 = random_tensor({3}, rng);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(gather_cols_per_row(t, cols), w3)); }, a) <= 1e-4);
    }
}

TEST_CASE("segment op gradients") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(seed + 31);
        auto x = random_tensor({7, 4}, rng);
        std::vector<int> off{0, 3, 3, 7};  // includes an empty segment
        auto w = random_tensor({3, 4}, rng);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(segment_mean_pool(t, off), w)); }, x) <= 1e-4);
        CHECK(grad_check([&](DTensor& t) { return sum_all(mul(segment_max_pool(t, off), w)); }, x) <= 1e-4);

        auto q = random_tensor({7, 8}, rng);
        auto k = random_tensor({7, 8}, rng);
        auto v = random_tensor({7, 8}, rng);
        auto w7 = random_tensor({7, 8}, rng);
        auto att = [&](DTensor& qq, DTensor& kk, DTensor& vv) {
            return sum_all(mul(segment_attention(qq, kk, vv, off, 2, 0.5), w7));
        };
        CHECK(grad_check([&](DTensor& t) { return att(t, k, v); }, q) <= 1e-4);
        CHECK(grad_check([&](DTensor& t) { return att(q, t, v); }, k) <= 1e-4);
        CHECK(grad_check([&](DTensor& t) { return att(q, k, t); }, v) <= 1e-4);
    }
}

TEST_CASE("knn attention gradient") {
    for (int seed = 0; seed < kSeeds; ++seed) {
        Rng rng(seed + 37);
        auto q = random_tensor({5, 6}, rng);
        auto k = random_tensor({5, 6}, rng);
        auto v = random_tensor({5, 6}, rng);
        auto w = random_tensor({5, 6}, rng);
        std::vector<int> nbr{0, 1, 2, 1, 2, 3, 2, 3, 4, 3, 4, 0, 4, 0, 1};
        std::vector<int> noff{0, 3, 6, 9, 12, 15};
        auto f = [&](DTensor& qq, DTensor& kk, DTensor& vv) {
            return sum_all(mul(knn_attention(qq, kk, vv, nbr, noff, 0.4), w));
        };
        CHECK(grad_check([&](DTensor& t) { return f(t, k, v); }, q) <= 1e-4);
        CHECK(grad_check([&](DTensor& t) { return f(q, t, v); }, k) <= 1e-4);
        CHECK(grad_check([&](DTensor& t) { return f(q, k, t); }, v) <= 1e-4);
    }
}

TEST_CASE("segment pooling honors empty segments") {
    auto x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    std::vector<int> off{0, 0, 2};
    auto mean = segment_mean_pool(x, off);
    auto mx = segment_max_pool(x, off);
    for (int j = 0; j < 3; ++j) {
        CHECK(mean.values()[static_cast<size_t>(j)] == 0.0f);
        CHECK(mx.values()[static_cast<size_t>(j)] == 0.0f);
    }
    CHECK(mean.values()[3] == doctest::Approx(2.5f));
    CHECK(mx.values()[5] == doctest::Approx(6.0f));
}

TEST_CASE("forward determinism") {
    Rng rng(5);
    auto mk = [&](uint64_t seed) {
        Rng r(seed);
        std::vector<float> v(24);
        for (auto& x : v) x = r.uniformf(-1, 1);
        auto t = Tensor::from_data({4, 6}, v);
        auto g = Tensor::full({6}, 1.0f);
        auto b = Tensor::zeros({6});
        return layer_norm(softmax(t, 1), g, b).values();
    };
    CHECK(mk(99) == mk(99));
}

TEST_CASE("no-grad mode records nothing") {
    auto a = Tensor::from_data({2, 2}, {1, 2, 3, 4}, true);
    NoGradGuard ng;
    auto b = matmul(a, a);
    CHECK_FALSE(b.requires_grad());
}
