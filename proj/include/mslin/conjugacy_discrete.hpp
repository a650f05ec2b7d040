#pragma once

#include "mslin/certificate.hpp"
#include "mslin/system_model.hpp"

#include <cstddef>
#include <vector>

namespace mslin {

/// h_n(x) or h̄_n(x) with its a-posteriori error split by source.
struct ConjugacyEvaluation {
    Vector value;
    double error = 0.0;
    double picard_error = 0.0;
    double tail_error = 0.0;
    double inverse_error = 0.0;
    std::size_t iterations = 0;  // Picard sweeps (0 for h̄)
    std::size_t horizon = 0;     // truncation length L
    std::size_t window_lo = 0;
    std::size_t window_hi = 0;
    std::vector<double> sweep_deltas;  // max_j ‖h^{m+1}_j - h^m_j‖ per sweep
};

/// Smallest m with λ^m C / (1 - λ) ≤ tol (0 when C = 0).
std::size_t picard_iteration_count(double lambda_total, double c_nu, double tol);

/// Fixed point h of the conjugacy operator evaluated at (n, x) by Picard sweeps on
/// the linear orbit through (n, x).
ConjugacyEvaluation eval_h(const SystemBundle& b, const Certificate& cert, std::size_t n, const Vector& x, double tol);
Vector eval_H(const SystemBundle& b, const Certificate& cert, std::size_t n, const Vector& x, double tol);

/// Explicit series h̄ along the nonlinear orbit through (n, x).
ConjugacyEvaluation eval_hbar(const SystemBundle& b, const Certificate& cert, std::size_t n, const Vector& x,
                              double tol);
Vector eval_Hbar(const SystemBundle& b, const Certificate& cert, std::size_t n, const Vector& x, double tol);

/// τ_n(x) = -Σ_{k∈K^c} P^k_{n+1} f_n(x).
Vector deviation_tau(const SystemBundle& b, std::size_t n, const Vector& x);
/// τ̄_n = -τ_n.
Vector deviation_tau_bar(const SystemBundle& b, std::size_t n, const Vector& x);

/// Throws CertificateNotPassed unless the certificate passed.
void require_passed(const Certificate& cert);

}  // namespace mslin
