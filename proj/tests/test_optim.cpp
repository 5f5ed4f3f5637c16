#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "senla/optim.hpp"

using namespace senla;

TEST_CASE("sgdm reduces to plain gradient descent") {
    ParamStoreT<float> store(1);
    auto p = store.add("p", {3}, {1.0f, 2.0f, 3.0f}, true);
    SgdmOptimizer opt(store);
    p.grad() = {0.5f, -0.5f, 1.0f};
    opt.step(0.1f, 0.0f, 0.0f);
    CHECK(p.values()[0] == doctest::Approx(0.95f));
    CHECK(p.values()[1] == doctest::Approx(2.05f));
    CHECK(p.values()[2] == doctest::Approx(2.9f));
}

TEST_CASE("two momentum steps with constant gradient") {
    // buffer_1 = g, buffer_2 = 0.9 g + g; total displacement 0.1 (g + 1.9 g)
    ParamStoreT<float> store(1);
    auto p = store.add("p", {1}, {0.0f}, true);
    SgdmOptimizer opt(store);
    const float g = 2.0f;
    for (int i = 0; i < 2; ++i) {
        p.zero_grad();
        p.grad() = {g};
        opt.step(0.1f, 0.9f, 0.0f);
    }
    CHECK(p.values()[0] == doctest::Approx(-0.29f * g));
}

TEST_CASE("frozen tensors are never registered or touched") {
    ParamStoreT<float> store(1);
    auto frozen = store.add("backbone.w", {2}, {1.0f, -1.0f}, false);
    auto live = store.add("head.w", {2}, {0.5f, 0.5f}, true);
    SgdmOptimizer opt(store);
    CHECK(opt.slots().size() == 1);
    frozen.grad() = {10.0f, 10.0f};  // even a stray gradient must not move it
    live.grad() = {1.0f, 1.0f};
    opt.step(0.1f, 0.9f, 0.0005f);
    CHECK(frozen.values() == std::vector<float>{1.0f, -1.0f});
    CHECK(live.values()[0] < 0.5f);
}

TEST_CASE("weight decay applies even with a zero gradient") {
    ParamStoreT<float> store(1);
    auto p = store.add("p", {1}, {1.0f}, true);
    SgdmOptimizer opt(store);
    opt.step(0.1f, 0.0f, 0.5f);
    CHECK(p.values()[0] == doctest::Approx(1.0f - 0.1f * 0.5f));
}

TEST_CASE("non-finite gradients abort with the tensor name") {
    ParamStoreT<float> store(1);
    auto p = store.add("video.block0.q.w", {1}, {0.0f}, true);
    SgdmOptimizer opt(store);
    p.grad() = {std::numeric_limits<float>::quiet_NaN()};
    try {
        opt.step(0.1f, 0.9f, 0.0f);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("video.block0.q.w") != std::string::npos);
    }
}

TEST_CASE("step-wise learning rate schedule") {
    const std::vector<int> steps{20, 30, 40};
    CHECK(lr_schedule(0, 0.001f, steps, 0.1f) == doctest::Approx(0.001f));
    CHECK(lr_schedule(19, 0.001f, steps, 0.1f) == doctest::Approx(0.001f));
    CHECK(lr_schedule(20, 0.001f, steps, 0.1f) == doctest::Approx(0.0001f));
    CHECK(lr_schedule(29, 0.001f, steps, 0.1f) == doctest::Approx(0.0001f));
    CHECK(lr_schedule(30, 0.001f, steps, 0.1f) == doctest::Approx(0.00001f));
    CHECK(lr_schedule(45, 0.001f, steps, 0.1f) == doctest::Approx(1e-6f));
    CHECK_THROWS_AS(lr_schedule(-1, 0.001f, steps, 0.1f), ConfigError);
}
