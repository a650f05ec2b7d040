#pragma once

#include "mslin/system_model.hpp"

#include <cstddef>
#include <vector>

namespace mslin {

/// Linear cocycle 𝒜(m,n): A_{m-1}⋯A_n (m > n), Id (m = n), A_m^{-1}⋯A_{n-1}^{-1} (m < n).
Matrix linear_transit(const SystemBundle& b, std::size_t m, std::size_t n);

/// Central-difference Jacobian of f(t, ·) at x.
Matrix perturbation_jacobian(const SystemBundle& b, double t, const Vector& x);

/// F_n(x) = A_n x + f_n(x).
Vector nonlinear_step(const SystemBundle& b, std::size_t n, const Vector& x);

struct InverseStepResult {
    Vector x;
    double residual = 0.0;     // ‖F_n(x) - y‖
    std::size_t iterations = 0;
    bool used_newton = false;
};

/// Solves F_n(x) = y to the residual target tol_inv·max(1, ‖y‖).
InverseStepResult nonlinear_inverse_step_detail(const SystemBundle& b, std::size_t n, const Vector& y,
                                                double tol_inv);
Vector nonlinear_inverse_step(const SystemBundle& b, std::size_t n, const Vector& y, double tol_inv);

/// Nonlinear cocycle ℱ(m,n)x; for m < n the exact inverse of ℱ(n,m).
Vector nonlinear_transit(const SystemBundle& b, std::size_t m, std::size_t n, const Vector& x, double tol_inv);

/// States along the orbit through (base, x) for j in [lo, hi].
struct OrbitTable {
    std::size_t base = 0;
    std::size_t lo = 0;
    std::size_t hi = 0;
    std::vector<Vector> linear;      // o_j = 𝒜(j, base) x
    std::vector<Vector> nonlinear;   // z_j = ℱ(j, base) x
    std::vector<double> inverse_residual;  // ‖F_j(z_j) - z_{j+1}‖ for lo ≤ j < base

    bool has_linear() const { return !linear.empty(); }
    bool has_nonlinear() const { return !nonlinear.empty(); }
    const Vector& o(std::size_t j) const { return linear[j - lo]; }
    const Vector& z(std::size_t j) const { return nonlinear[j - lo]; }
};

OrbitTable build_orbit_table(const SystemBundle& b, std::size_t base, const Vector& x, std::size_t lo,
                             std::size_t hi, bool want_linear, bool want_nonlinear, double tol_inv);

/// Evolution family T(t,s) of x' = A(τ)x by classical RK4 with step ≤ `step`.
Matrix ct_linear_transit(const SystemBundle& b, double t, double s, double step);

/// Nonlinear evolution U(t,s)x of x' = A(τ)x + f(τ,x) by the same method.
Vector ct_nonlinear_transit(const SystemBundle& b, double t, double s, const Vector& x, double step);

}  // namespace mslin
