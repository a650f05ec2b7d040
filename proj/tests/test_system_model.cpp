#include "helpers.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace mslin;
using namespace testing_support;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kOneStable = R"(
system:
  kind: discrete
  dimension: 1
  linear:
    constant-diagonal: [1/2]
decomposition:
  scales:
    - {label: "1", class: stable, projection: {coordinates: [1]}}
envelopes:
  "1": {lambda: 1/2, nu: 0, mu: 0}
)";

}  // namespace

TEST_SUITE("system_model") {

TEST_CASE("exm-discrete config equals the builtin bundle") {
    const SystemBundle loaded = load_configuration_file(source_path("configs/exm-discrete.yaml"));
    SystemBundle builtin = builtin_scenario("exm-discrete");
    builtin.solver.horizon = 256.0;
    CHECK(loaded == builtin);
}

TEST_CASE("exm-continuous config equals the builtin bundle") {
    const SystemBundle loaded = load_configuration_file(source_path("configs/exm-continuous.yaml"));
    SystemBundle builtin = builtin_scenario("exm-continuous");
    builtin.solver.horizon = 50.0;
    CHECK(loaded == builtin);
}

TEST_CASE("zero perturbation loads and evaluates to zero") {
    const SystemBundle b = load_configuration(kOneStable);
    CHECK(b.perturbation.identically_zero());
    for (double x : {-3.0, 0.0, 7.5}) CHECK(b.perturbation(4.0, vec({x}))(0) == 0.0);
}

TEST_CASE("missing class is reported by label") {
    std::string text = slurp(source_path("configs/exm-discrete.yaml"));
    const std::string from = R"({label: "3", class: center, projection)";
    text.replace(text.find(from), from.size(), R"({label: "3", projection)");
    CHECK_THROWS_WITH_AS(load_configuration(text), "scale 3 unclassified", ConfigError);
}

TEST_CASE("unknown keys are rejected by name") {
    std::string text = kOneStable;
    text += "extra: 1\n";
    try {
        load_configuration(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("extra") != std::string::npos);
    }
}

TEST_CASE("round trip through emit_configuration is bit-identical") {
    for (const auto& name : builtin_scenario_names()) {
        CAPTURE(name);
        const SystemBundle b = builtin_scenario(name);
        const std::string text = emit_configuration(b);
        const SystemBundle again = load_configuration(text);
        CHECK(again == b);
        CHECK(emit_configuration(again) == text);
        Rng rng(5);
        for (int i = 0; i < 50; ++i) {
            const double t = b.kind == TimeKind::discrete ? static_cast<double>(rng.integer(0, 40)) : rng.uniform(0, 20);
            const Vector x = rng.ball(static_cast<Eigen::Index>(b.dim), 10.0);
            const Vector fa = b.perturbation(t, x), fb = again.perturbation(t, x);
            for (Eigen::Index j = 0; j < fa.size(); ++j) CHECK(fa(j) == fb(j));
        }
    }
}

TEST_CASE("builtin scenarios") {
    const SystemBundle e = builtin_scenario("exm-discrete");
    double lam = 0.0;
    for (auto k : e.stable()) lam += e.envelope(k).lambda;
    for (auto k : e.unstable()) lam += e.envelope(k).lambda;
    CHECK(lam == doctest::Approx(0.8).epsilon(1e-15));

    const SystemBundle n = builtin_scenario("identity-null");
    CHECK(n.dim == 1);
    CHECK(n.center().size() == 1);
    CHECK(n.perturbation.identically_zero());

    const SystemBundle s = builtin_scenario("scalar-oracle");
    CHECK(s.linear.step(9)(0, 0) == 0.5);
    CHECK(s.perturbation(3.0, vec({-2.0}))(0) == 0.3);
    const auto& env = s.envelope(0);
    CHECK(env.mu(4.0) == 0.0);
    CHECK(env.nu(4.0) == 0.3);

    CHECK_THROWS_AS(builtin_scenario("nope"), ConfigError);
}

TEST_CASE("builtin scenarios are deterministic") {
    const SystemBundle a = builtin_scenario("exm-discrete"), b = builtin_scenario("exm-discrete");
    const Vector x = vec({0.3, -1.0, 2.0, 4.0, -7.0});
    for (double n : {0.0, 1.0, 17.0}) CHECK((a.perturbation(n, x) - b.perturbation(n, x)).norm() == 0.0);
}

TEST_CASE("validate_decomposition") {
    const SystemBundle e = builtin_scenario("exm-discrete");
    CHECK(validate_decomposition(e.decomposition, default_check_times(TimeKind::discrete)).empty());
    const SystemBundle c = builtin_scenario("exm-continuous");
    std::vector<double> times;
    for (int i = 0; i <= 20; ++i) times.push_back(0.5 * i);
    CHECK(validate_decomposition(c.decomposition, times).empty());

    Scale p1{"1", ScaleClass::stable, Projection::coordinates({0}), std::nullopt};
    Scale p2{"2", ScaleClass::unstable, Projection::coordinates({0}), std::nullopt};
    const auto v = validate_decomposition(Decomposition(1, {p1, p2}), {0.0});
    bool cross = false, sum = false;
    for (const auto& m : v) {
        if (m.rfind("P^1P^2 != 0", 0) == 0) cross = true;
        if (m.rfind("sum of P^k != Id", 0) == 0) sum = true;
    }
    CHECK(cross);
    CHECK(sum);
}

TEST_CASE("perturbation terms respect their envelopes") {
    const SystemBundle b = builtin_scenario("exm-discrete");
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const double n = static_cast<double>(rng.integer(0, 30));
        const Vector x = rng.ball(5, 10.0), y = rng.ball(5, 10.0);
        const Vector fx = b.perturbation(n, x), fy = b.perturbation(n, y);
        CHECK((fx - fy).norm() <= b.perturbation.lipschitz_bound(n) * (x - y).norm() * (1 + 1e-12));
    }
}

TEST_CASE("singular steps are rejected") {
    SystemBundle b = builtin_scenario("scalar-oracle");
    b.linear = LinearPart::constant_diagonal(vec({0.0}));
    CHECK_THROWS_AS(b.linear.inverse_step(0), SingularStep);
}

}
