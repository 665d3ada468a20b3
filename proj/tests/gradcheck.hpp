#pragma once

// Central finite-difference gradient checker shared by the unit tests and the
// acceptance gate. The loss builder is re-invoked for every probe, so it must
// derive everything from the input tensors it is handed (define-by-run makes
// that the natural shape anyway). All checks run in double.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dfp/ops.hpp"
#include "dfp/rng.hpp"
#include "dfp/tensor.hpp"

namespace gradcheck {

using dfp::Rng;
using dfp::Tensor;

using LossFn = std::function<Tensor<double>(std::vector<Tensor<double>>&)>;

struct Result {
    double max_rel = 0;   // worst relative error over all probed coordinates
    int64_t checked = 0;  // coordinates probed
};

// One analytic backward pass, then central differences (step h) on
// `coords_per_input` randomly chosen coordinates of every input. Coordinates
// where analytic and numeric derivative are both below `zero_floor` count as
// agreeing; elsewhere the relative error |a-n|/max(|a|,|n|) is recorded.
inline Result check(const LossFn& fn, std::vector<Tensor<double>> inputs, Rng& rng,
                    int coords_per_input = 6, double h = 1e-5, double zero_floor = 1e-7) {
    for (auto& t : inputs) t.set_requires_grad(true);
    {
        dfp::Graph<double> g;
        Tensor<double> loss = fn(inputs);
        g.backward(loss);
    }
    Result r;
    for (auto& t : inputs) {
        const std::vector<double> analytic(t.grad().begin(), t.grad().end());
        const int64_t n = t.numel();
        for (int k = 0; k < coords_per_input; ++k) {
            const int64_t i = std::min<int64_t>(static_cast<int64_t>(rng.uniform() * n), n - 1);
            double* p = t.data();
            const double orig = p[i];
            p[i] = orig + h;
            const double lp = fn(inputs).item();
            p[i] = orig - h;
            const double lm = fn(inputs).item();
            p[i] = orig;
            const double numeric = (lp - lm) / (2.0 * h);
            const double denom = std::max(std::abs(numeric), std::abs(analytic[i]));
            ++r.checked;
            if (denom < zero_floor) continue;
            r.max_rel = std::max(r.max_rel, std::abs(numeric - analytic[i]) / denom);
        }
    }
    return r;
}

// `instances` independent random repetitions of `make`, which builds the
// (loss fn, inputs) pair for one instance from its own rng.
struct Suite {
    double max_rel = 0;
    int64_t checked = 0;
    int instances = 0;

    void add(const Result& r) {
        max_rel = std::max(max_rel, r.max_rel);
        checked += r.checked;
        ++instances;
    }
};

using MakeInstance = std::function<std::pair<LossFn, std::vector<Tensor<double>>>(Rng&)>;

inline Suite run_suite(const MakeInstance& make, uint64_t seed, int instances = 20,
                       int coords_per_input = 6) {
    Suite s;
    for (int i = 0; i < instances; ++i) {
        Rng rng(dfp::seed_mix(seed, static_cast<uint64_t>(i)));
        auto [fn, inputs] = make(rng);
        s.add(check(fn, std::move(inputs), rng, coords_per_input));
    }
    return s;
}

}  // namespace gradcheck
