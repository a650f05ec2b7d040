#pragma once

#include "mslin/system_model.hpp"

#include <cstddef>

namespace mslin {

/// Number of equal substeps of size ≤ step covering |t - s|.
std::size_t substep_count(double t, double s, double step);

/// One classical RK4 step of x' = A(τ)x + q(τ) from τ to τ + h with the forcing
/// sampled at τ, τ + h/2 and τ + h.  For time-independent A the step is a fixed
/// linear map of (x, q0, qm, q1) and is tabulated once.
class AffineRk4 {
public:
    AffineRk4(const LinearPart& a, double h);

    double h() const { return h_; }

    /// x ← x(τ + h); q0/qm/q1 may alias each other but not x.
    void step(double tau, Vector& x, const Vector& q0, const Vector& qm, const Vector& q1) const;
    /// Homogeneous step.
    void step(double tau, Vector& x) const;
    /// Matrix version for M' = A M.
    void step(double tau, Matrix& m) const;

private:
    const LinearPart* a_;
    double h_;
    bool tabulated_;
    Matrix r_, w0_, wm_, w1_;
    mutable Vector k1_, k2_, k3_, k4_, tmp_;
};

/// One RK4 step of x' = A(τ)x + f(τ, x).
class NonlinearRk4 {
public:
    NonlinearRk4(const LinearPart& a, const PerturbationPart& f);
    void step(double tau, double h, Vector& x) const;

private:
    const LinearPart* a_;
    const PerturbationPart* f_;
    bool autonomous_;
    Matrix a0_;
    mutable Vector k1_, k2_, k3_, k4_, tmp_, fx_;
    void rhs(double tau, const Vector& x, Vector& out) const;
};

/// Value at a step midpoint from four equally spaced node values
/// (cubic interpolation, error O(h⁴)).
inline void midpoint_cubic(const Vector& qm1, const Vector& q0, const Vector& q1, const Vector& q2, Vector& out) {
    out.noalias() = (9.0 / 16.0) * (q0 + q1) - (1.0 / 16.0) * (qm1 + q2);
}

/// Midpoint of the first interval from the first four node values.
inline void midpoint_cubic_left(const Vector& q0, const Vector& q1, const Vector& q2, const Vector& q3, Vector& out) {
    out.noalias() = (5.0 / 16.0) * q0 + (15.0 / 16.0) * q1 - (5.0 / 16.0) * q2 + (1.0 / 16.0) * q3;
}

}  // namespace mslin
