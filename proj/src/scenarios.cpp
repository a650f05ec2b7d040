#include "mslin/system_model.hpp"

#include <cmath>

namespace mslin {

namespace {

Scale coordinate_scale(const std::string& label, ScaleClass cls, std::size_t coord,
                       std::optional<ScaleEnvelope> env = std::nullopt) {
    return Scale{label, cls, Projection::coordinates({coord}), std::move(env)};
}

PerturbationTerm term(std::size_t component, Family family, double a, double lip, std::size_t input,
                      double decay = 0.0) {
    return PerturbationTerm{component, family, a, lip, decay, input};
}

// Five coordinate scales: {1,2} stable, {3} center, {4,5} unstable.
std::vector<Scale> exm_scales(const ScaleEnvelope& e15, const ScaleEnvelope& e24, const ScaleEnvelope& e5) {
    return {coordinate_scale("1", ScaleClass::stable, 0, e15),
            coordinate_scale("2", ScaleClass::stable, 1, e24),
            coordinate_scale("3", ScaleClass::center, 2),
            coordinate_scale("4", ScaleClass::unstable, 3, e24),
            coordinate_scale("5", ScaleClass::unstable, 4, e5)};
}

SystemBundle exm_discrete() {
    SystemBundle b;
    b.kind = TimeKind::discrete;
    b.dim = 5;
    Vector diag(5);
    diag << 0.5, 1.0, 1.0, 1.0, 2.0;
    b.linear = LinearPart::constant_diagonal(diag);
    // Bounds at time n-1 match ν_n, μ_n: amplitude/Lipschitz 1 and 1/10 on {1,5};
    // (1/2)·(1/2)^{n-1} = 2^{-n} and (1/10)·(1/2)^{n-1} = 2^{-n}/5 on {2,4}.
    b.perturbation = PerturbationPart(
        5, TimeKind::discrete,
        {term(0, Family::scaled_tanh, 1.0, 0.1, 4),
         term(1, Family::decayed_scaled_sine, 0.5, 0.1, 3, 0.5),
         term(2, Family::scaled_sine, 1.0, 1.0, 0),
         term(3, Family::decayed_scaled_sine, 0.5, 0.1, 1, 0.5),
         term(4, Family::scaled_sine, 1.0, 0.1, 0)});
    const ScaleEnvelope e15{0.2, EnvelopeForm::constant(1.0), EnvelopeForm::constant(0.1), std::nullopt};
    const ScaleEnvelope e24{0.2, EnvelopeForm::geometric(1.0, 0.5), EnvelopeForm::geometric(0.2, 0.5), std::nullopt};
    ScaleEnvelope e5 = e15;
    e5.decay = DecayEnvelope{1.0, 0.5};
    b.decomposition = Decomposition(5, exm_scales(e15, e24, e5));
    return b;
}

SystemBundle exm_continuous() {
    SystemBundle b;
    b.kind = TimeKind::continuous;
    b.dim = 5;
    Vector diag(5);
    diag << -1.0, 0.0, 0.0, 0.0, 1.0;
    b.linear = LinearPart::constant_diagonal(diag);
    // Center forcing vanishes so the transport and inverse identities apply.
    b.perturbation = PerturbationPart(
        5, TimeKind::continuous,
        {term(0, Family::scaled_tanh, 1.0, 0.2, 4),
         term(1, Family::decayed_scaled_sine, 1.0, 0.2, 3, 1.0),
         term(3, Family::decayed_scaled_sine, 1.0, 0.2, 1, 1.0),
         term(4, Family::scaled_sine, 1.0, 0.2, 0)});
    const ScaleEnvelope e15{0.2, EnvelopeForm::constant(1.0), EnvelopeForm::constant(0.2), std::nullopt};
    const ScaleEnvelope e24{0.2, EnvelopeForm::exponential(1.0, 1.0), EnvelopeForm::exponential(0.2, 1.0),
                            std::nullopt};
    ScaleEnvelope e5 = e15;
    e5.decay = DecayEnvelope{1.0, std::exp(-1.0)};
    b.decomposition = Decomposition(5, exm_scales(e15, e24, e5));
    b.solver.tol = 1e-4;
    return b;
}

SystemBundle scalar_oracle() {
    SystemBundle b;
    b.kind = TimeKind::discrete;
    b.dim = 1;
    b.linear = LinearPart::constant_diagonal(Vector::Constant(1, 0.5));
    b.perturbation = PerturbationPart(1, TimeKind::discrete, {term(0, Family::constant, 0.3, 0.0, 0)});
    const ScaleEnvelope e{0.001, EnvelopeForm::constant(0.3), EnvelopeForm::constant(0.0), std::nullopt};
    b.decomposition = Decomposition(1, {coordinate_scale("1", ScaleClass::stable, 0, e)});
    return b;
}

SystemBundle identity_null() {
    SystemBundle b;
    b.kind = TimeKind::discrete;
    b.dim = 1;
    b.linear = LinearPart::constant_diagonal(Vector::Ones(1));
    b.perturbation = PerturbationPart::zero(1, TimeKind::discrete);
    b.decomposition = Decomposition(1, {coordinate_scale("1", ScaleClass::center, 0)});
    return b;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
    return {"exm-discrete", "exm-continuous", "scalar-oracle", "identity-null"};
}

SystemBundle builtin_scenario(const std::string& name) {
    SystemBundle b;
    if (name == "exm-discrete") b = exm_discrete();
    else if (name == "exm-continuous") b = exm_continuous();
    else if (name == "scalar-oracle") b = scalar_oracle();
    else if (name == "identity-null") b = identity_null();
    else throw ConfigError("unknown scenario '" + name + "'");
    b.validate();
    return b;
}

}  // namespace mslin
