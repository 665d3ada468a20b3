#include <doctest.h>

#include "grad_suites.hpp"

// Central finite differences (64-bit, h = 1e-5) against the taped backward
// pass for every differentiable op and loss, 20 random instances each.

TEST_CASE("analytic gradients match central finite differences") {
    for (const auto& suite : gradsuites::all_grad_suites()) {
        CAPTURE(suite.name);
        gradcheck::Suite r = gradcheck::run_suite(suite.make, 0xFD0 + 1, 20);
        CHECK(r.instances == 20);
        CHECK(r.checked >= 20);
        CHECK_MESSAGE(r.max_rel < 1e-4, suite.name, ": worst relative error ", r.max_rel);
    }
}
