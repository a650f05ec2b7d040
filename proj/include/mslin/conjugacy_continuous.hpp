#pragma once

#include "mslin/certificate.hpp"
#include "mslin/system_model.hpp"

#include <cstddef>
#include <vector>

namespace mslin {

/// h(t,x) or h̄(t,x) on the grid of step Δ = solver.ode_step.
struct CtEvaluation {
    Vector value;
    double error = 0.0;
    double picard_error = 0.0;
    double tail_error = 0.0;
    double integration_error = 0.0;
    std::size_t sweeps = 0;
    double step = 0.0;
    double horizon = 0.0;        // T_hi
    double snap_distance = 0.0;  // |t - grid(t)|
    std::vector<double> sweep_deltas;
};

/// Values along the orbit through (t, x) at the requested times (snapped to the grid).
struct CtOrbitEvaluation {
    CtEvaluation at_base;
    std::vector<double> times;
    std::vector<Vector> states;  // T(τ,t)x for h, U(τ,t)x for h̄
    std::vector<Vector> values;  // h or h̄ at (τ, state)
};

CtEvaluation eval_h_ct(const SystemBundle& b, const Certificate& cert, double t, const Vector& x, double tol);
Vector eval_H_ct(const SystemBundle& b, const Certificate& cert, double t, const Vector& x, double tol);
CtEvaluation eval_hbar_ct(const SystemBundle& b, const Certificate& cert, double t, const Vector& x, double tol);
Vector eval_Hbar_ct(const SystemBundle& b, const Certificate& cert, double t, const Vector& x, double tol);

CtOrbitEvaluation eval_h_ct_orbit(const SystemBundle& b, const Certificate& cert, double t, const Vector& x,
                                  double tol, const std::vector<double>& times);
CtOrbitEvaluation eval_hbar_ct_orbit(const SystemBundle& b, const Certificate& cert, double t, const Vector& x,
                                     double tol, const std::vector<double>& times);

/// Σ_{k∈K^c} P^k(t) f(t, x).
Vector deviation_ct(const SystemBundle& b, double t, const Vector& x);

}  // namespace mslin
