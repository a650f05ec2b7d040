#include "helpers.hpp"
#include "mslin/certificate.hpp"
#include "mslin/cocycle.hpp"
#include "mslin/conjugacy_continuous.hpp"

#include <doctest.h>

using namespace mslin;
using namespace testing_support;

TEST_SUITE("conjugacy_continuous") {

TEST_CASE("constant forcing closed form") {
    const SystemBundle b = ct_scalar(0.3);
    const Certificate c = certify(b);
    REQUIRE(c.passed);
    const double exact = 0.3 * (1.0 - std::exp(-1.0));
    for (double x : {-2.0, 0.0, 3.0}) {
        const CtEvaluation h = eval_h_ct(b, c, 1.0, vec({x}), 1e-6);
        CHECK(std::abs(h.value(0) - exact) <= 1e-6);
        CHECK(std::abs(eval_hbar_ct(b, c, 1.0, vec({x}), 1e-6).value(0) + exact) <= 1e-6);
        const Vector back = eval_Hbar_ct(b, c, 1.0, eval_H_ct(b, c, 1.0, vec({x}), 1e-6), 1e-6);
        CHECK(std::abs(back(0) - x) <= 1e-6);
    }
}

TEST_CASE("zero perturbation") {
    SystemBundle b = builtin_scenario("exm-continuous");
    b.perturbation = PerturbationPart::zero(5, TimeKind::continuous);
    const Certificate c = certify(b);
    const Vector x = vec({1, 2, 3, 4, 5});
    CHECK(eval_h_ct(b, c, 2.0, x, 1e-4).value.norm() == 0.0);
    CHECK(eval_hbar_ct(b, c, 2.0, x, 1e-4).value.norm() == 0.0);
}

TEST_CASE("deviation") {
    SystemBundle b = builtin_scenario("exm-continuous");
    CHECK(deviation_ct(ct_scalar(0.3), 1.0, vec({2.0})).norm() == 0.0);
    b.perturbation = PerturbationPart(5, TimeKind::continuous,
                                      {term(2, Family::decayed_scaled_sine, 1.0, 1.0, 0, 1.0)});
    const Vector d = deviation_ct(b, 0.0, vec({M_PI / 2, 0, 0, 0, 0}));
    CHECK((d - vec({0, 0, 1, 0, 0})).norm() <= 1e-15);
    const Matrix pc = b.decomposition.class_projection(ScaleClass::center, 0.0);
    CHECK((pc * d - d).norm() <= 1e-15);
}

TEST_CASE("example: error budget, annihilation, boundedness") {
    const SystemBundle b = builtin_scenario("exm-continuous");
    const Certificate c = certify(b);
    REQUIRE(c.passed);
    const Matrix pc = b.decomposition.class_projection(ScaleClass::center, 0.0);
    for (double t : {0.4, 3.0, 7.2}) {
        const CtEvaluation h = eval_h_ct(b, c, t, vec({1, -2, 3, 0.5, 2}), 1e-4);
        CHECK(h.error <= 1e-4);
        CHECK(h.snap_distance <= 1e-12);
        CHECK((pc * h.value).norm() <= 1e-14);
        CHECK(h.value.norm() <= c.apriori_bound() + 1e-4);
    }
}

TEST_CASE("orbit evaluation matches pointwise evaluation") {
    const SystemBundle b = builtin_scenario("exm-continuous");
    const Certificate c = certify(b);
    const Vector x = vec({1, -2, 3, 0.5, 2});
    const CtOrbitEvaluation o = eval_h_ct_orbit(b, c, 2.0, x, 1e-6, {1.0, 2.0, 3.0});
    REQUIRE(o.values.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const CtEvaluation p = eval_h_ct(b, c, o.times[i], o.states[i], 1e-6);
        CHECK((p.value - o.values[i]).norm() <= 2e-6);
    }
}

TEST_CASE("off-grid times snap") {
    const SystemBundle b = ct_scalar(0.3);
    const Certificate c = certify(b);
    const CtEvaluation h = eval_h_ct(b, c, 1.00004, vec({0.0}), 1e-6);
    CHECK(h.snap_distance == doctest::Approx(4e-5).epsilon(1e-6));
    CHECK_THROWS_AS(eval_h_ct(b, c, -1.0, vec({0.0}), 1e-6), DomainError);
}

}
