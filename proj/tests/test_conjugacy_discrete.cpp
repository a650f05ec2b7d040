#include "helpers.hpp"
#include "mslin/certificate.hpp"
#include "mslin/cocycle.hpp"
#include "mslin/conjugacy_discrete.hpp"

#include <doctest.h>

using namespace mslin;
using namespace testing_support;

TEST_SUITE("conjugacy_discrete") {

TEST_CASE("picard iteration count") {
    CHECK(picard_iteration_count(0.8, 4.0, 1e-6) == 76);
    CHECK(picard_iteration_count(0.8, 0.0, 1e-6) == 0);
    const std::size_t m = picard_iteration_count(0.8, 4.0, 4.0);
    CHECK(m <= 8);
    auto bound = [](std::size_t k) { return std::pow(0.8, static_cast<double>(k)) * 4.0 / 0.2; };
    CHECK(bound(m) <= 4.0);
    if (m > 0) CHECK(bound(m - 1) > 4.0);
    CHECK_THROWS_AS(picard_iteration_count(1.0, 4.0, 1e-6), DomainError);
}

TEST_CASE("scalar oracle closed forms") {
    const SystemBundle b = builtin_scenario("scalar-oracle");
    const Certificate c = certify(b);
    REQUIRE(c.passed);
    for (double x : {-4.0, 0.0, 2.0}) {
        const ConjugacyEvaluation h = eval_h(b, c, 3, vec({x}), 1e-6);
        CHECK(std::abs(h.value(0) - 0.525) <= 1e-12);
        CHECK(std::abs(eval_hbar(b, c, 3, vec({x}), 1e-6).value(0) + 0.525) <= 1e-12);
    }
    CHECK(std::abs(eval_H(b, c, 3, vec({2.0}), 1e-6)(0) - 2.525) <= 1e-12);
    const Vector back = eval_Hbar(b, c, 3, eval_H(b, c, 3, vec({2.0}), 1e-6), 1e-6);
    CHECK(std::abs(back(0) - 2.0) <= 1e-12);
    for (std::size_t n = 0; n < 12; ++n) {
        const double closed = 0.6 * (1.0 - std::pow(0.5, static_cast<double>(n)));
        CHECK(std::abs(eval_h(b, c, n, vec({1.0}), 1e-6).value(0) - closed) <= 1e-12);
    }
}

TEST_CASE("zero perturbation gives the identity") {
    const SystemBundle b = builtin_scenario("identity-null");
    const Certificate c = certify(b);
    REQUIRE(c.passed);
    const ConjugacyEvaluation h = eval_h(b, c, 5, vec({1.0}), 1e-6);
    CHECK(h.value(0) == 0.0);
    CHECK(h.error == 0.0);
    CHECK(eval_H(b, c, 5, vec({1.0}), 1e-6)(0) == 1.0);
    CHECK(eval_hbar(b, c, 5, vec({1.0}), 1e-6).value(0) == 0.0);

    SystemBundle z = builtin_scenario("exm-discrete");
    z.perturbation = PerturbationPart::zero(5, TimeKind::discrete);
    const Certificate cz = certify(z);
    const Vector x = vec({1, 2, 3, 4, 5});
    CHECK(eval_h(z, cz, 4, x, 1e-6).value.norm() == 0.0);
    CHECK(eval_hbar(z, cz, 4, x, 1e-6).value.norm() == 0.0);
}

TEST_CASE("certificate must pass") {
    const SystemBundle b = load_configuration_file(source_path("configs/doubled-mu.yaml"));
    const Certificate c = certify(b);
    CHECK_THROWS_AS(eval_h(b, c, 1, Vector::Zero(5), 1e-6), CertificateNotPassed);
    CHECK_THROWS_AS(eval_hbar(b, c, 1, Vector::Zero(5), 1e-6), CertificateNotPassed);
}

TEST_CASE("deviation") {
    const SystemBundle s = builtin_scenario("scalar-oracle");
    CHECK(deviation_tau(s, 2, vec({1.0})).norm() == 0.0);
    const SystemBundle b = exm_discrete_with({term(2, Family::scaled_sine, 1.0, 1.0, 0)});
    const Vector tau = deviation_tau(b, 4, vec({M_PI / 2, 0, 0, 0, 0}));
    CHECK((tau - vec({0, 0, -1, 0, 0})).norm() <= 1e-15);
    CHECK((deviation_tau_bar(b, 4, vec({M_PI / 2, 0, 0, 0, 0})) + tau).norm() == 0.0);
    CHECK(deviation_tau(exm_discrete_nocenter(), 4, vec({1, 2, 3, 4, 5})).norm() == 0.0);
}

TEST_CASE("the evaluation is a fixed point of the conjugacy operator") {
    // Naive double sums over the orbit, using independent evaluations of h at each orbit point.
    const SystemBundle b = builtin_scenario("exm-discrete");
    const Certificate c = certify(b);
    const double tol = 1e-8;
    const std::size_t n = 4;
    const Vector x = vec({1.5, -2, 0.5, 3, -1});
    const ConjugacyEvaluation h = eval_h(b, c, n, x, tol);
    const std::size_t hi = n + h.horizon;
    const Matrix ps = b.decomposition.class_projection(ScaleClass::stable, 0);
    const Matrix pu = b.decomposition.class_projection(ScaleClass::unstable, 0);
    Vector sum = Vector::Zero(5);
    for (std::size_t l = 1; l <= hi; ++l) {
        const Vector o = linear_transit(b, l - 1, n) * x;
        const Vector f = b.perturbation(static_cast<double>(l - 1), o + eval_h(b, c, l - 1, o, tol).value);
        if (l <= n) sum += linear_transit(b, n, l) * ps * f;
        else sum -= linear_transit(b, n, l) * pu * f;
    }
    CHECK((sum - h.value).norm() <= 2 * tol);
}

TEST_CASE("center annihilation and boundedness") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    const Certificate c = certify(b);
    const Matrix pc = b.decomposition.class_projection(ScaleClass::center, 0);
    Rng rng(21);
    for (int i = 0; i < 30; ++i) {
        const auto n = rng.integer(0, 20);
        const Vector x = rng.ball(5, 10.0);
        const ConjugacyEvaluation h = eval_h(b, c, n, x, 1e-6);
        CHECK((pc * h.value).norm() <= 1e-14);
        CHECK(h.value.norm() <= c.apriori_bound() + 1e-6);
        CHECK(h.error <= 1e-6);
        for (std::size_t j = 1; j < h.sweep_deltas.size(); ++j)
            if (h.sweep_deltas[j - 1] > 1e-11) CHECK(h.sweep_deltas[j] <= (c.lambda_total + 0.02) * h.sweep_deltas[j - 1]);
    }
}

TEST_CASE("a-posteriori error shrinks with tol") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    const Certificate c = certify(b);
    const Vector x = vec({1, 2, 3, 4, 5});
    const Vector ref = eval_h(b, c, 6, x, 1e-12).value;
    for (double tol : {1e-4, 1e-6, 1e-8}) {
        const ConjugacyEvaluation h = eval_h(b, c, 6, x, tol);
        CHECK(h.error <= tol);
        CHECK((h.value - ref).norm() <= tol);
    }
}

TEST_CASE("hbar error includes the backward orbit") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    const Certificate c = certify(b);
    const ConjugacyEvaluation h = eval_hbar(b, c, 15, vec({3, -1, 2, 1, 4}), 1e-6);
    CHECK(h.error <= 1e-6);
    CHECK(h.inverse_error >= 0.0);
}

}
