#include "helpers.hpp"
#include "mslin/cocycle.hpp"

#include <doctest.h>

using namespace mslin;
using namespace testing_support;

TEST_SUITE("cocycle_engine") {

TEST_CASE("linear transit of the discrete example") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    CHECK((linear_transit(b, 4, 4) - Matrix::Identity(5, 5)).norm() == 0.0);
    const Matrix fwd = linear_transit(b, 3, 1);
    CHECK((fwd - vec({0.25, 1, 1, 1, 4}).asDiagonal().toDenseMatrix()).norm() == 0.0);
    const Matrix back = linear_transit(b, 1, 3);
    CHECK((back - vec({4, 1, 1, 1, 0.25}).asDiagonal().toDenseMatrix()).norm() == 0.0);
}

TEST_CASE("cocycle algebra on random triples") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const auto m = rng.integer(0, 30), n = rng.integer(0, 30), p = rng.integer(0, 30);
        const double err = (linear_transit(b, m, n) * linear_transit(b, n, p) - linear_transit(b, m, p)).norm();
        CHECK(err <= 1e-10 * std::max(1.0, linear_transit(b, m, p).norm()));
        CHECK((linear_transit(b, n, m) * linear_transit(b, m, n) - Matrix::Identity(5, 5)).norm() <= 1e-10);
    }
}

TEST_CASE("nonlinear step") {
    const SystemBundle s = builtin_scenario("scalar-oracle");
    CHECK(nonlinear_step(s, 7, vec({1.0}))(0) == doctest::Approx(0.8).epsilon(1e-15));

    const SystemBundle z = builtin_scenario("identity-null");
    CHECK(nonlinear_step(z, 2, vec({3.5}))(0) == 3.5);

    const SystemBundle b = exm_discrete_with({term(2, Family::scaled_sine, 1.0, 1.0, 0)});
    const Vector y = nonlinear_step(b, 0, vec({M_PI / 2, 0, 0, 0, 0}));
    CHECK((y - vec({M_PI / 4, 0, 1, 0, 0})).norm() <= 1e-15);
}

TEST_CASE("nonlinear inverse step") {
    const SystemBundle s = builtin_scenario("scalar-oracle");
    CHECK(nonlinear_inverse_step(s, 0, vec({0.8}), 1e-13)(0) == doctest::Approx(1.0).epsilon(1e-12));

    SystemBundle z = builtin_scenario("exm-discrete");
    z.perturbation = PerturbationPart::zero(5, TimeKind::discrete);
    const Vector y = vec({1, 2, 3, 4, 5});
    const auto r = nonlinear_inverse_step_detail(z, 0, y, 1e-13);
    CHECK((r.x - vec({2, 2, 3, 4, 2.5})).norm() == 0.0);

    // f(x) ≈ x near 0 with A = 1/2: the fixed-point map is not contractive.
    const SystemBundle hard = scalar_sine(0.5, 1e3, 1.0);
    const double tol_inv = 1e-12;
    for (double target : {0.1, 1.0, -2.0}) {
        try {
            const auto d = nonlinear_inverse_step_detail(hard, 0, vec({target}), tol_inv);
            CHECK(d.residual <= tol_inv * std::max(1.0, std::abs(target)));
            CHECK(std::abs(nonlinear_step(hard, 0, d.x)(0) - target) <= tol_inv * std::max(1.0, std::abs(target)));
        } catch (const NonContractiveInverse&) {
            CHECK(true);
        }
    }
}

TEST_CASE("nonlinear transit round trips") {
    const SystemBundle s = builtin_scenario("scalar-oracle");
    CHECK(nonlinear_transit(s, 3, 3, vec({0.25}), 1e-13)(0) == 0.25);
    CHECK(nonlinear_transit(s, 2, 0, vec({1.0}), 1e-13)(0) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(nonlinear_transit(s, 0, 2, vec({0.7}), 1e-13)(0) == doctest::Approx(1.0).epsilon(1e-12));

    const SystemBundle b = builtin_scenario("exm-discrete");
    const double tol_inv = 1e-12;
    Rng rng(9);
    for (int i = 0; i < 500; ++i) {
        const auto m = rng.integer(0, 12), n = rng.integer(0, 12);
        const Vector x = rng.ball(5, 10.0);
        const Vector y = nonlinear_transit(b, m, n, x, tol_inv);
        const Vector back = nonlinear_transit(b, n, m, y, tol_inv);
        const double gap = static_cast<double>(m > n ? m - n : n - m);
        CHECK((back - x).norm() <= 10.0 * tol_inv * std::max(1.0, gap) * std::max(1.0, y.norm()));
    }
}

TEST_CASE("continuous linear transit") {
    const SystemBundle b = builtin_scenario("exm-continuous");
    const Matrix t10 = ct_linear_transit(b, 1.0, 0.0, 1e-3);
    CHECK(t10(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
    CHECK(t10(4, 4) == doctest::Approx(std::exp(1.0)).epsilon(1e-8));
    CHECK((ct_linear_transit(b, 2.5, 2.5, 1e-3) - Matrix::Identity(5, 5)).norm() == 0.0);
    const Matrix comp = ct_linear_transit(b, 2.0, 1.0, 1e-3) * ct_linear_transit(b, 1.0, 0.0, 1e-3);
    CHECK((comp - ct_linear_transit(b, 2.0, 0.0, 1e-3)).norm() <= 1e-7);
}

TEST_CASE("continuous nonlinear transit") {
    SystemBundle lin = builtin_scenario("exm-continuous");
    lin.perturbation = PerturbationPart::zero(5, TimeKind::continuous);
    const Vector x = vec({1, -1, 2, 0.5, 3});
    CHECK((ct_nonlinear_transit(lin, 3.0, 1.0, x, 1e-3) - ct_linear_transit(lin, 3.0, 1.0, 1e-3) * x).norm() <=
          1e-10);

    const SystemBundle s = ct_scalar(0.3);
    const double exact = std::exp(-1.0) + 0.3 * (1.0 - std::exp(-1.0));
    CHECK(std::abs(ct_nonlinear_transit(s, 1.0, 0.0, vec({1.0}), 1e-3)(0) - exact) <= 1e-8);

    const SystemBundle b = builtin_scenario("exm-continuous");
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
        const double t = rng.uniform(0, 5), u = rng.uniform(0, 5);
        const Vector y = rng.ball(5, 5.0);
        const Vector back = ct_nonlinear_transit(b, u, t, ct_nonlinear_transit(b, t, u, y, 1e-3), 1e-3);
        CHECK((back - y).norm() <= 1e-6);
    }
    CHECK_THROWS_AS(ct_linear_transit(b, -1.0, 0.0, 1e-3), DomainError);
}

TEST_CASE("orbit table agrees with transits") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    const Vector x = vec({1, 2, -1, 0.5, -3});
    const OrbitTable t = build_orbit_table(b, 5, x, 0, 12, true, true, 1e-13);
    for (std::size_t j = 0; j <= 12; ++j) {
        CHECK((t.o(j) - linear_transit(b, j, 5) * x).norm() <= 1e-12 * std::max(1.0, t.o(j).norm()));
        CHECK((t.z(j) - nonlinear_transit(b, j, 5, x, 1e-13)).norm() <= 1e-9);
    }
}

}
