#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "dfp/ops.hpp"
#include "dfp/tensor.hpp"

using namespace dfp;

TEST_CASE("tensor factories and storage semantics") {
    Tensor<float> z = Tensor<float>::zeros({2, 3});
    CHECK(z.numel() == 6);
    for (float v : z.values()) CHECK(v == 0.0f);

    Tensor<float> f = Tensor<float>::full({4}, 2.5f);
    for (float v : f.values()) CHECK(v == 2.5f);

    Tensor<float> t = Tensor<float>::from({2, 2}, {1, 2, 3, 4});
    CHECK(t.dim(0) == 2);
    CHECK(t.data()[3] == 4.0f);
    CHECK(Tensor<float>::scalar(7.0f).item() == 7.0f);

    // copies alias the same storage
    Tensor<float> alias = t;
    alias.data()[0] = 42.0f;
    CHECK(t.data()[0] == 42.0f);
    CHECK(t.id() == alias.id());

    CHECK_THROWS(Tensor<float>::from({3}, {1, 2}));    // size mismatch
    CHECK_THROWS((void)Tensor<float>::from({2}, {1, 2}).item());  // non-scalar item
}

TEST_CASE("no live graph means no recording") {
    Tensor<double> x = Tensor<double>::from({3}, {1, 2, 3});
    x.set_requires_grad(true);
    Tensor<double> y = mul(x, x);  // no Graph in scope
    CHECK_FALSE(y.requires_grad());
    CHECK_FALSE(x.has_grad());
}

TEST_CASE("backward of sum is ones") {
    Tensor<double> x = Tensor<double>::from({2, 3}, {1, -2, 3, 4, -5, 6});
    x.set_requires_grad(true);
    Graph<double> g;
    Tensor<double> s = sum(x);
    CHECK(s.item() == doctest::Approx(7.0));
    g.backward(s);
    for (double v : x.grad()) CHECK(v == 1.0);
}

TEST_CASE("backward of sum(x*x) is 2x") {
    Tensor<double> x = Tensor<double>::from({4}, {1.5, -2.0, 0.25, 3.0});
    x.set_requires_grad(true);
    Graph<double> g;
    g.backward(sum(mul(x, x)));
    for (int i = 0; i < 4; ++i)
        CHECK(x.grad()[i] == doctest::Approx(2.0 * x.data()[i]).epsilon(1e-12));
}

TEST_CASE("gradients accumulate across backward passes") {
    Tensor<double> x = Tensor<double>::from({2}, {3.0, 4.0});
    x.set_requires_grad(true);
    for (int pass = 0; pass < 2; ++pass) {
        Graph<double> g;
        g.backward(sum(mul(x, x)));
    }
    CHECK(x.grad()[0] == doctest::Approx(2 * 2.0 * 3.0));
    CHECK(x.grad()[1] == doctest::Approx(2 * 2.0 * 4.0));
    x.zero_grad();
    CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("backward runs once per graph and needs a scalar") {
    Tensor<double> x = Tensor<double>::from({2}, {1.0, 2.0});
    x.set_requires_grad(true);
    Graph<double> g;
    Tensor<double> y = mul(x, x);
    Tensor<double> s = sum(y);
    CHECK_THROWS(g.backward(y));  // non-scalar
    g.backward(s);
    CHECK_THROWS(g.backward(s));  // consumed
}

TEST_CASE("gradient linearity") {
    // grad of sum(a*f + b*g) == a*grad(sum f) + b*grad(sum g)
    Rng rng(77);
    Tensor<double> x = Tensor<double>::randn({3, 4}, rng);
    const double a = 2.25, b = -0.75;

    auto grad_of = [&](auto build) {
        Tensor<double> in = Tensor<double>::from({12}, {x.values().begin(), x.values().end()});
        in.set_requires_grad(true);
        Graph<double> g;
        g.backward(build(in));
        return std::vector<double>(in.grad().begin(), in.grad().end());
    };
    auto f = [](Tensor<double>& t) { return sum(mul(t, t)); };
    auto h = [](Tensor<double>& t) { return sum(sigmoid(t)); };

    auto gf = grad_of(f);
    auto gh = grad_of(h);
    auto gmix = grad_of([&](Tensor<double>& t) {
        return add(scale(sum(mul(t, t)), a), scale(sum(sigmoid(t)), b));
    });
    for (int i = 0; i < 12; ++i)
        CHECK(std::abs(gmix[i] - (a * gf[i] + b * gh[i])) < 1e-10);
}

TEST_CASE("forward and backward are bit-deterministic over repeats") {
    Rng rng(5);
    Tensor<double> x0 = Tensor<double>::randn({2, 3, 6, 8}, rng);
    Tensor<double> k0 = Tensor<double>::randn({4, 3, 3, 3}, rng, 0.2);

    std::vector<double> ref_out, ref_gx, ref_gk;
    for (int rep = 0; rep < 100; ++rep) {
        Tensor<double> x = Tensor<double>::from(x0.shape(), {x0.values().begin(), x0.values().end()});
        Tensor<double> k = Tensor<double>::from(k0.shape(), {k0.values().begin(), k0.values().end()});
        x.set_requires_grad(true);
        k.set_requires_grad(true);
        Tensor<double> y;
        {
            Graph<double> g;
            y = conv2d(x, k, Tensor<double>{}, 1, Pad::same);
            g.backward(mean(mul(y, y)));
        }
        std::vector<double> out(y.values().begin(), y.values().end());
        std::vector<double> gx(x.grad().begin(), x.grad().end());
        std::vector<double> gk(k.grad().begin(), k.grad().end());
        if (rep == 0) {
            ref_out = out;
            ref_gx = gx;
            ref_gk = gk;
        } else {
            // bit-for-bit, not approximately
            CHECK(std::memcmp(out.data(), ref_out.data(), out.size() * sizeof(double)) == 0);
            CHECK(std::memcmp(gx.data(), ref_gx.data(), gx.size() * sizeof(double)) == 0);
            CHECK(std::memcmp(gk.data(), ref_gk.data(), gk.size() * sizeof(double)) == 0);
        }
    }
}

TEST_CASE("adam: zero gradient leaves the parameter unchanged") {
    Tensor<float> p = Tensor<float>::from({3}, {1.0f, -2.0f, 0.5f});
    p.grad();  // allocate, stays zero
    AdamState<float> st;
    const std::vector<float> before(p.values().begin(), p.values().end());
    for (int i = 0; i < 5; ++i) adam_step(p, st, 1e-2f, 0.9f, 0.999f, 1e-8f);
    for (int i = 0; i < 3; ++i) CHECK(p.data()[i] == before[i]);
}

TEST_CASE("adam matches a hand-stepped oracle for three steps") {
    // double precision in both paths so the comparison is tight
    Tensor<double> p = Tensor<double>::from({2}, {1.0, -0.5});
    const std::vector<std::vector<double>> grads = {{0.3, -0.1}, {-0.2, 0.4}, {0.05, 0.05}};
    const double lr = 1e-2, b1 = 0.9, b2 = 0.999, eps = 1e-8;

    double m[2] = {0, 0}, v[2] = {0, 0};
    double want[2] = {1.0, -0.5};
    AdamState<double> st;
    for (int t = 1; t <= 3; ++t) {
        auto g = p.grad();
        for (int i = 0; i < 2; ++i) g[i] = grads[t - 1][i];
        adam_step(p, st, lr, b1, b2, eps);
        for (int i = 0; i < 2; ++i) {
            const double gi = grads[t - 1][i];
            m[i] = b1 * m[i] + (1 - b1) * gi;
            v[i] = b2 * v[i] + (1 - b2) * gi * gi;
            const double mhat = m[i] / (1 - std::pow(b1, t));
            const double vhat = v[i] / (1 - std::pow(b2, t));
            want[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
        p.zero_grad();
    }
    CHECK(st.step == 3);
    CHECK(std::abs(p.data()[0] - want[0]) < 1e-12);
    CHECK(std::abs(p.data()[1] - want[1]) < 1e-12);
}

TEST_CASE("adam rejects non-finite gradients") {
    Tensor<float> p = Tensor<float>::from({2}, {1.0f, 2.0f});
    p.grad()[0] = std::numeric_limits<float>::quiet_NaN();
    AdamState<float> st;
    CHECK_THROWS_AS(adam_step(p, st, 1e-3f, 0.9f, 0.999f, 1e-8f), Error);
}

TEST_CASE("rng streams are deterministic and seed-separated") {
    Rng a(123), b(123), c(124);
    for (int i = 0; i < 10; ++i) {
        const uint64_t va = a.next_u64();
        CHECK(va == b.next_u64());
        CHECK(va != c.next_u64());
    }
    CHECK(seed_mix(1, 2, 3) == seed_mix(1, 2, 3));
    CHECK(seed_mix(1, 2, 3) != seed_mix(1, 3, 2));

    Rng u(7);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        const int k = u.uniform_int(2, 5);
        CHECK(k >= 2);
        CHECK(k <= 5);
    }
}
