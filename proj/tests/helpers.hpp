#pragma once

#include "mslin/rng.hpp"
#include "mslin/system_model.hpp"

#include <cmath>
#include <string>

namespace testing_support {

using namespace mslin;

inline std::string source_path(const std::string& rel) { return std::string(MSLIN_SOURCE_DIR) + "/" + rel; }

inline PerturbationTerm term(std::size_t comp, Family fam, double a, double lip, std::size_t input, double rate = 0.0) {
    return PerturbationTerm{comp, fam, a, lip, rate, input};
}

/// exm-discrete with a replaced perturbation.
inline SystemBundle exm_discrete_with(std::vector<PerturbationTerm> terms) {
    SystemBundle b = builtin_scenario("exm-discrete");
    b.perturbation = PerturbationPart(5, TimeKind::discrete, std::move(terms));
    return b;
}

/// exm-discrete without the center term (f³ ≡ 0).
inline SystemBundle exm_discrete_nocenter() {
    SystemBundle b = builtin_scenario("exm-discrete");
    std::vector<PerturbationTerm> terms;
    for (const auto& t : b.perturbation.terms())
        if (t.component != 2) terms.push_back(t);
    b.perturbation = PerturbationPart(5, TimeKind::discrete, terms);
    return b;
}

/// d = 1, x' = -x + c (continuous) with one stable scale.
inline SystemBundle ct_scalar(double c) {
    SystemBundle b;
    b.kind = TimeKind::continuous;
    b.dim = 1;
    b.linear = LinearPart::constant_diagonal(Vector::Constant(1, -1.0));
    std::vector<PerturbationTerm> terms;
    if (c != 0.0) terms.push_back(term(0, Family::constant, c, 0.0, 0));
    b.perturbation = PerturbationPart(1, TimeKind::continuous, terms);
    Scale s;
    s.label = "s";
    s.cls = ScaleClass::stable;
    s.projection = Projection::coordinates({0});
    s.envelope = ScaleEnvelope{0.001, EnvelopeForm::constant(std::abs(c)), EnvelopeForm::constant(0.0), std::nullopt};
    b.decomposition = Decomposition(1, {s});
    b.validate();
    return b;
}

/// d = 1 discrete, A = a, f(x) = amp·sin((lip/amp)·x), one scale of the given class.
inline SystemBundle scalar_sine(double a, double amp, double lip, ScaleClass cls = ScaleClass::stable) {
    SystemBundle b;
    b.kind = TimeKind::discrete;
    b.dim = 1;
    b.linear = LinearPart::constant_diagonal(Vector::Constant(1, a));
    b.perturbation = PerturbationPart(1, TimeKind::discrete, {term(0, Family::scaled_sine, amp, lip, 0)});
    Scale s;
    s.label = "1";
    s.cls = cls;
    s.projection = Projection::coordinates({0});
    s.envelope = ScaleEnvelope{0.5, EnvelopeForm::constant(amp), EnvelopeForm::constant(lip), std::nullopt};
    b.decomposition = Decomposition(1, {s});
    return b;
}

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace testing_support
