#pragma once

#include "mslin/certificate.hpp"
#include "mslin/system_model.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mslin {

/// Sampled query set: times in [time_min, time_max] (continuous times on multiples of
/// time_grid), states uniform in the ball of the given radius.
struct SampleSpec {
    std::size_t count = 100;
    std::uint64_t seed = 20240601;
    double radius = 10.0;
    double time_min = 0.0;
    double time_max = 20.0;
    double time_grid = 0.2;
    std::size_t jobs = 1;

    /// Defaults per kind: discrete n ≤ 20, radius 10; continuous t ≤ 10 on multiples of 0.2, radius 5.
    static SampleSpec defaults(TimeKind kind);
};

struct IdentitySummary {
    std::string name;
    std::string verdict = "pass";  // pass, fail or skipped
    double max = 0.0;
    double mean = 0.0;
    double bound = 0.0;
    std::size_t count = 0;
    std::string note;
};

struct ResidualRow {
    std::string identity;
    double time = 0.0;
    std::size_t sample_id = 0;
    double residual = 0.0;
};

struct VerificationReport {
    TimeKind kind = TimeKind::discrete;
    SampleSpec spec;
    double tol = 0.0;
    double step = 0.0;
    double lambda_total = 0.0;
    double c_nu = 0.0;
    double bound = 0.0;
    double observed_sup_h = 0.0;
    std::vector<IdentitySummary> identities;
    std::vector<ResidualRow> rows;
    bool passed = true;

    const IdentitySummary* find(const std::string& name) const;
};

/// Discrete: (lin1, lin2) residuals at (n, x).  Continuous: the solution-property
/// residuals (sde1, sde2) by a five-point difference along the orbit through (t, x).
std::pair<double, double> residual_quasi_conjugacy(const SystemBundle& b, const Certificate& cert, double time,
                                                   const Vector& x, double tol);

/// (‖H̄(H(x)) − x‖, ‖H(H̄(x)) − x‖); throws CenterNotTrivial when the center forcing does not vanish.
std::pair<double, double> residual_inverse_pair(const SystemBundle& b, const Certificate& cert, double time,
                                                const Vector& x, double tol);

/// Continuous only: (‖H(t,T(t,s)x) − U(t,s)H(s,x)‖, ‖H̄(t,U(t,s)x) − T(t,s)H̄(s,x)‖).
std::pair<double, double> residual_transport(const SystemBundle& b, const Certificate& cert, double t, double s,
                                             const Vector& x, double tol);

/// True when Σ_{k∈K^c} P^k f vanishes (structurally or on a random sample).
bool center_forcing_vanishes(const SystemBundle& b, std::uint64_t seed = 7);

/// C_ν / (1 − λ_total).
double apriori_bound(const Certificate& cert);

/// Five-point difference spacing for the continuous solution-property checks (at least one grid step).
inline constexpr double kDifferenceStep = 0.01;

VerificationReport verification_report(const SystemBundle& b, const Certificate& cert, const SampleSpec& spec,
                                       double tol);

/// Rows as `identity,time,sample_id,residual`.
std::string verification_csv(const VerificationReport& r);
/// `key = value` summary with the tolerance footer.
std::string verification_summary(const VerificationReport& r);

}  // namespace mslin
