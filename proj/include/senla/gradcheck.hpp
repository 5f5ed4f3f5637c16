#pragma once

#include <cmath>
#include <functional>

#include "senla/rng.hpp"
#include "senla/tensor.hpp"

namespace senla {

// Compares the reverse-mode gradient of a scalar-valued function against
// central finite differences and returns the worst relative error, with
// denominator max(|analytic|, |numeric|, 1e-8).
//
// Checks are meant to run on the double instantiation of the ops: the float
// path shares the code by template, while 64-bit evaluation keeps the
// finite-difference comparison meaningful.
//
// `max_coords` bounds the number of probed coordinates; when positive and the
// tensor is larger, a seeded subset is probed (needed to keep composite
// encoder+loss checks inside the suite's runtime budget).
struct GradCheckOptions {
    double step = 1e-3;
    int max_coords = -1;
    uint64_t seed = 0;
};

template <typename F>
double grad_check(F&& f, TensorT<double>& x, const GradCheckOptions& opt = {}) {
    x.set_requires_grad(true);
    x.zero_grad();
    TensorT<double> loss = f(x);
    if (loss.size() != 1) throw DimensionError("grad_check: function must be scalar-valued");
    if (!std::isfinite(loss.item())) throw NumericError("grad_check: non-finite function value");
    loss.backward();
    const std::vector<double> analytic = x.grad();

    std::vector<int64_t> coords;
    const int64_t total = x.size();
    if (opt.max_coords > 0 && total > opt.max_coords) {
        Rng rng = Rng::derive(opt.seed, 0x67726164);
        for (int i = 0; i < opt.max_coords; ++i)
            coords.push_back(static_cast<int64_t>(rng.next_u64() % static_cast<uint64_t>(total)));
    } else {
        coords.resize(static_cast<size_t>(total));
        for (int64_t i = 0; i < total; ++i) coords[static_cast<size_t>(i)] = i;
    }

    double worst = 0.0;
    {
        NoGradGuard ng;
        auto& vals = x.mutable_values();
        for (int64_t c : coords) {
            const double orig = vals[static_cast<size_t>(c)];
            vals[static_cast<size_t>(c)] = orig + opt.step;
            const double fp = f(x).item();
            vals[static_cast<size_t>(c)] = orig - opt.step;
            const double fm = f(x).item();
            vals[static_cast<size_t>(c)] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NumericError("grad_check: non-finite probe value");
            const double numeric = (fp - fm) / (2.0 * opt.step);
            const double a = analytic[static_cast<size_t>(c)];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            worst = std::max(worst, std::fabs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace senla
