#pragma once

#include "mslin/system_model.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mslin {

/// Sums for one scale.  Stable: sup_n Σ_{l=1}^n ‖𝒜(n,l)P^k_l‖ w_l.
/// Unstable: sup_n Σ_{l>n} ‖𝒜(n,l)P^k_l‖ w_l, truncated with a tail bound.
/// Continuous bundles use the corresponding integrals.
struct ScaleSums {
    std::size_t index = 0;
    std::string label;
    ScaleClass cls = ScaleClass::stable;
    double s_nu = 0.0;
    double s_mu = 0.0;
    double tail_bound = 0.0;   // already included in s_nu and s_mu (scaled by the weight)
    double horizon = 0.0;
    double max_length = 0.0;   // longest truncation length used (steps or time units)
    bool stabilized = true;
    std::string status = "ok";  // "ok" or a warning such as "not-stabilized"
    bool c1_finite = true;      // ν-sum finite
    bool c2_mu = true;          // μ-sum ≤ λ_k
    double lambda = 0.0;
};

/// Audit of the declared perturbation envelopes by random sampling.
struct PerturbationAudit {
    std::size_t samples = 0;
    std::string status = "sampled-consistent";
    std::vector<std::string> labels;
    std::vector<double> max_bound_ratio;      // max ‖P^k f‖ / ν^k
    std::vector<double> max_lipschitz_ratio;  // max ‖P^k (f(x) - f(y))‖ / (μ^k ‖x - y‖)
    std::vector<std::string> counterexamples;
    bool consistent() const { return counterexamples.empty(); }
};

struct Certificate {
    TimeKind kind = TimeKind::discrete;
    std::vector<ScaleSums> scales;
    double lambda_total = 0.0;
    double c_nu = 0.0;
    bool contraction = true;
    PerturbationAudit audit;
    bool passed = false;
    std::vector<std::string> failing_scales;
    std::vector<std::string> failing_conditions;
    std::vector<std::string> warnings;
    double horizon = 0.0;
    double step = 0.0;  // quadrature step (continuous)

    /// C_ν / (1 - λ_total).
    double apriori_bound() const;
};

/// Weight used in a scale sum.
enum class Weight { nu, mu };

/// Stable sums by the forward recurrence Q_l ← A_n Q_l over n ≤ horizon.
ScaleSums stable_scale_sums(const SystemBundle& b, std::size_t k, std::size_t horizon);

/// Direct evaluation of Σ_{l=1}^n ‖𝒜(n,l)P^k_l‖ w_l via linear_transit (reference for tests).
double stable_row_direct(const SystemBundle& b, std::size_t k, std::size_t n, Weight w);

/// Unstable sums for n ≤ horizon with rows truncated at tail ≤ tail_eps.
ScaleSums unstable_scale_sums(const SystemBundle& b, std::size_t k, std::size_t horizon, double tail_eps);

/// One truncated unstable row at time n for an arbitrary nonincreasing weight.
struct RowSum {
    double sum = 0.0;
    double tail = 0.0;
    std::size_t length = 0;  // number of terms l = n+1 .. n+length
};
RowSum unstable_row(const SystemBundle& b, std::size_t k, std::size_t n, const EnvelopeForm& w1,
                    double c2, const EnvelopeForm& w2, double tail_target);

/// Continuous scale integrals sampled at output times in [0, horizon].
ScaleSums ct_scale_integrals(const SystemBundle& b, std::size_t k, double step, double horizon,
                             double tail_eps);

/// Continuous unstable row ∫_t^{t+L} ‖T(t,s)P^k(s)‖ (w1 + c2·w2)(s) ds with tail ≤ tail_target.
struct CtRow {
    double integral = 0.0;
    double tail = 0.0;
    double length = 0.0;
};
CtRow ct_unstable_row(const SystemBundle& b, std::size_t k, double t, const EnvelopeForm& w1, double c2,
                      const EnvelopeForm& w2, double tail_target, double step);

PerturbationAudit perturbation_bound_audit(const SystemBundle& b, std::size_t sample_count, std::uint64_t seed);

/// Runs all checks; NoDecayDetected propagates.
Certificate certify(const SystemBundle& b);

/// Flat `key = value` report and the per-scale CSV.
std::string certificate_report(const Certificate& c);
std::string certificate_csv(const Certificate& c);

}  // namespace mslin
