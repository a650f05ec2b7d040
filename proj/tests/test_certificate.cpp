#include "helpers.hpp"
#include "mslin/certificate.hpp"

#include <doctest.h>

using namespace mslin;
using namespace testing_support;

namespace {

const ScaleSums& by_label(const Certificate& c, const std::string& label) {
    for (const auto& s : c.scales)
        if (s.label == label) return s;
    throw std::runtime_error("no scale " + label);
}

}  // namespace

TEST_SUITE("certificate") {

TEST_CASE("stable sums of the discrete example") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    const ScaleSums s1 = stable_scale_sums(b, 0, 64);
    CHECK(s1.s_mu <= 0.2);
    CHECK(s1.s_mu == doctest::Approx(0.2 * (1.0 - std::pow(2.0, -64))).epsilon(1e-14));
    CHECK(s1.s_nu == doctest::Approx(2.0).epsilon(1e-14));
    const ScaleSums s2 = stable_scale_sums(b, 1, 64);
    CHECK(s2.s_nu <= 1.0);
    CHECK(s2.s_mu <= 0.2);
}

TEST_CASE("zero weights give zero sums") {
    SystemBundle b = builtin_scenario("exm-discrete");
    auto& scales = b.decomposition.mutable_scales();
    scales[0].envelope->nu = EnvelopeForm::constant(0.0);
    scales[4].envelope->nu = EnvelopeForm::constant(0.0);
    CHECK(stable_scale_sums(b, 0, 64).s_nu == 0.0);
    CHECK(unstable_scale_sums(b, 4, 64, 1e-10).s_nu == 0.0);
}

TEST_CASE("unstable sums of the discrete example") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    const ScaleSums s5 = unstable_scale_sums(b, 4, 64, 1e-10);
    CHECK(s5.s_nu == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s5.s_mu == doctest::Approx(0.1).epsilon(1e-9));
    const ScaleSums s4 = unstable_scale_sums(b, 3, 64, 1e-10);
    CHECK(s4.s_nu == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s4.s_mu == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("neutral scale declared unstable has no decay") {
    SystemBundle b = builtin_scenario("exm-discrete");
    auto& sc = b.decomposition.mutable_scales()[2];
    sc.cls = ScaleClass::unstable;
    sc.envelope = ScaleEnvelope{0.1, EnvelopeForm::constant(1.0), EnvelopeForm::constant(1.0), std::nullopt};
    CHECK_THROWS_AS(unstable_scale_sums(b, 2, 16, 1e-10), NoDecayDetected);
    CHECK_THROWS_AS(certify(b), NoDecayDetected);
}

TEST_CASE("direct rows agree with the recurrence") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    for (std::size_t k : {0u, 1u}) {
        double sup_nu = 0.0, sup_mu = 0.0;
        for (std::size_t n = 1; n <= 32; ++n) {
            sup_nu = std::max(sup_nu, stable_row_direct(b, k, n, Weight::nu));
            sup_mu = std::max(sup_mu, stable_row_direct(b, k, n, Weight::mu));
        }
        const ScaleSums s = stable_scale_sums(b, k, 32);
        CHECK(std::abs(s.s_nu - sup_nu) <= 1e-12);
        CHECK(std::abs(s.s_mu - sup_mu) <= 1e-12);
    }
}

TEST_CASE("monotone in the envelopes") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    SystemBundle bigger = b;
    for (auto& s : bigger.decomposition.mutable_scales())
        if (s.envelope) s.envelope->nu = s.envelope->nu.scaled(1.5);
    for (std::size_t k : {0u, 1u}) CHECK(stable_scale_sums(bigger, k, 64).s_nu >= stable_scale_sums(b, k, 64).s_nu);
    for (std::size_t k : {3u, 4u})
        CHECK(unstable_scale_sums(bigger, k, 64, 1e-10).s_nu >= unstable_scale_sums(b, k, 64, 1e-10).s_nu);
}

TEST_CASE("truncation is an upper bound for longer rows") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    const ScaleSums loose = unstable_scale_sums(b, 3, 32, 1e-6);
    const ScaleSums tight = unstable_scale_sums(b, 3, 32, 1e-13);
    CHECK(loose.s_nu >= tight.s_nu - 1e-13);
    CHECK(loose.s_mu >= tight.s_mu - 1e-13);
}

TEST_CASE("continuous integrals of the example") {
    const SystemBundle b = builtin_scenario("exm-continuous");
    const ScaleSums s1 = ct_scale_integrals(b, 0, 1e-3, 50.0, 1e-10);
    CHECK(std::abs(s1.s_mu - 0.2 * (1.0 - std::exp(-50.0))) <= 1e-6);
    CHECK(s1.s_mu <= 0.2 + 1e-6);
    const ScaleSums s4 = ct_scale_integrals(b, 3, 1e-3, 50.0, 1e-10);
    CHECK(std::abs(s4.s_mu - 0.2) <= 1e-6);
}

TEST_CASE("perturbation audit") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    const PerturbationAudit a = perturbation_bound_audit(b, 10000, 1);
    CHECK(a.consistent());
    for (std::size_t j = 0; j < a.labels.size(); ++j) {
        CHECK(a.max_bound_ratio[j] <= 1.0 + 1e-12);
        CHECK(a.max_lipschitz_ratio[j] <= 1.0 + 1e-12);
    }

    SystemBundle zero = b;
    zero.perturbation = PerturbationPart::zero(5, TimeKind::discrete);
    const PerturbationAudit z = perturbation_bound_audit(zero, 500, 1);
    for (double r : z.max_bound_ratio) CHECK(r == 0.0);
    for (double r : z.max_lipschitz_ratio) CHECK(r == 0.0);

    // Amplitude twice the declared ν¹ ≡ 1.
    std::vector<PerturbationTerm> terms = b.perturbation.terms();
    terms[0] = term(0, Family::scaled_sine, 2.0, 2.0, 0);
    SystemBundle bad = b;
    bad.perturbation = PerturbationPart(5, TimeKind::discrete, terms);
    const PerturbationAudit c = perturbation_bound_audit(bad, 10000, 1);
    CHECK_FALSE(c.consistent());
    CHECK(c.max_bound_ratio[0] == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("certify the worked examples") {
    const Certificate d = certify(builtin_scenario("exm-discrete"));
    CHECK(d.passed);
    CHECK(d.lambda_total == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(d.lambda_total < 1.0);
    CHECK(d.c_nu == doctest::Approx(5.0).epsilon(1e-9));

    const Certificate c = certify(builtin_scenario("exm-continuous"));
    CHECK(c.passed);
    CHECK(c.lambda_total == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("doubled mu fails on the scales whose sums cross lambda") {
    const Certificate c = certify(load_configuration_file(source_path("configs/doubled-mu.yaml")));
    CHECK_FALSE(c.passed);
    CHECK(c.lambda_total == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(c.failing_scales == std::vector<std::string>{"1", "2", "4"});
    CHECK(by_label(c, "5").s_mu == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_FALSE(c.failing_conditions.empty());
}

TEST_CASE("report lists every scale") {
    const Certificate c = certify(builtin_scenario("exm-discrete"));
    const std::string r = certificate_report(c);
    for (const char* key : {"scale.1.s_mu", "scale.5.verdict", "verdict = pass", "lambda_total"})
        CHECK(r.find(key) != std::string::npos);
    CHECK(certificate_csv(c).find("label") != std::string::npos);
}

}
