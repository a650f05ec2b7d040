#include "helpers.hpp"
#include "mslin/certificate.hpp"
#include "mslin/types.hpp"
#include "mslin/verifier.hpp"

#include <doctest.h>

using namespace mslin;
using namespace testing_support;

TEST_SUITE("verifier") {

TEST_CASE("apriori bound") {
    Certificate c;
    c.lambda_total = 0.8;
    c.c_nu = 4.0;
    CHECK(apriori_bound(c) == doctest::Approx(20.0).epsilon(1e-14));
    c.c_nu = 0.0;
    CHECK(apriori_bound(c) == 0.0);
}

TEST_CASE("scalar oracle residuals vanish") {
    const SystemBundle b = builtin_scenario("scalar-oracle");
    const Certificate c = certify(b);
    for (std::size_t n : {0u, 3u, 11u}) {
        const auto [r1, r2] = residual_quasi_conjugacy(b, c, static_cast<double>(n), vec({1.7}), 1e-6);
        CHECK(r1 <= 1e-12);
        CHECK(r2 <= 1e-12);
        const auto [i1, i2] = residual_inverse_pair(b, c, static_cast<double>(n), vec({-0.4}), 1e-6);
        CHECK(i1 <= 1e-12);
        CHECK(i2 <= 1e-12);
    }
    const VerificationReport rep = verification_report(b, c, SampleSpec::defaults(b.kind), 1e-6);
    CHECK(rep.passed);
    CHECK(rep.observed_sup_h >= 0.99 * rep.bound);
}

TEST_CASE("identity-null residuals are zero") {
    const SystemBundle b = builtin_scenario("identity-null");
    const Certificate c = certify(b);
    SampleSpec spec = SampleSpec::defaults(b.kind);
    spec.count = 20;
    const VerificationReport rep = verification_report(b, c, spec, 1e-6);
    CHECK(rep.passed);
    for (const auto& r : rep.rows) CHECK(r.residual == 0.0);
}

TEST_CASE("center forcing") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    const Certificate c = certify(b);
    CHECK_FALSE(center_forcing_vanishes(b));
    CHECK_THROWS_AS(residual_inverse_pair(b, c, 2.0, vec({1, 1, 1, 1, 1}), 1e-6), CenterNotTrivial);
    const SystemBundle nc = exm_discrete_nocenter();
    CHECK(center_forcing_vanishes(nc));
    const Certificate cnc = certify(nc);
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        const auto [a, z] = residual_inverse_pair(nc, cnc, static_cast<double>(rng.integer(0, 20)), rng.ball(5, 10.0), 1e-6);
        CHECK(a <= 5e-6);
        CHECK(z <= 5e-6);
    }
    const VerificationReport rep = verification_report(b, c, SampleSpec::defaults(b.kind), 1e-6);
    REQUIRE(rep.find("inverse_hbar_h") != nullptr);
    CHECK(rep.find("inverse_hbar_h")->verdict == "skipped");
}

TEST_CASE("report is reproducible and independent of the thread count") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    const Certificate c = certify(b);
    SampleSpec spec = SampleSpec::defaults(b.kind);
    spec.count = 30;
    const std::string one = verification_csv(verification_report(b, c, spec, 1e-6));
    spec.jobs = 3;
    const std::string three = verification_csv(verification_report(b, c, spec, 1e-6));
    CHECK(one == three);
    CHECK(one == verification_csv(verification_report(b, c, spec, 1e-6)));
}

TEST_CASE("tightening tol shrinks the residuals") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    const Certificate c = certify(b);
    SampleSpec spec = SampleSpec::defaults(b.kind);
    spec.count = 20;
    const VerificationReport loose = verification_report(b, c, spec, 1e-5);
    const VerificationReport tight = verification_report(b, c, spec, 1e-7);
    CHECK(loose.passed);
    CHECK(tight.passed);
    CHECK(tight.find("lin1")->max <= loose.find("lin1")->max);
    CHECK(tight.find("lin1")->max <= 3e-7);
    CHECK(tight.find("contraction")->max <= c.lambda_total + 0.02);
}

TEST_CASE("summary format") {
    const SystemBundle b = builtin_scenario("scalar-oracle");
    const Certificate c = certify(b);
    SampleSpec spec = SampleSpec::defaults(b.kind);
    spec.count = 5;
    const VerificationReport rep = verification_report(b, c, spec, 1e-6);
    const std::string s = verification_summary(rep);
    CHECK(s.find("verdict = pass") != std::string::npos);
    CHECK(s.find("# bounds:") != std::string::npos);
    CHECK(verification_csv(rep).rfind("identity,time,sample_id,residual\n", 0) == 0);
}

}
