#include "mslin/conjugacy_continuous.hpp"
#include "mslin/conjugacy_discrete.hpp"
#include "mslin/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace mslin {

namespace {

constexpr double kRoundoff = 1e-15;

void require_continuous(const SystemBundle& b) {
    if (b.kind != TimeKind::continuous) throw DomainError("continuous conjugacy needs a continuous-time bundle");
}

std::size_t snap(double t, double dt) {
    if (t < 0.0) throw DomainError("continuous conjugacy is defined for t >= 0");
    return static_cast<std::size_t>(std::llround(t / dt));
}

/// Class projections, cached when the splitting is time invariant.
class ClassProjector {
public:
    ClassProjector(const SystemBundle& b, ScaleClass cls)
        : b_(&b), cls_(cls), present_(!b.decomposition.indices(cls).empty()),
          fixed_(b.decomposition.time_invariant()) {
        if (present_ && fixed_) p_ = b.decomposition.class_projection(cls, 0.0);
    }
    bool present() const { return present_; }
    void apply(double tau, const Vector& g, Vector& out, double sign) const {
        if (fixed_) out.noalias() = sign * (p_ * g);
        else out.noalias() = sign * (b_->decomposition.class_projection(cls_, tau) * g);
    }

private:
    const SystemBundle* b_;
    ScaleClass cls_;
    bool present_;
    bool fixed_;
    Matrix p_;
};

/// Midpoint value of q on [i, i+1] by cubic interpolation of the node values.
void midpoint(const std::vector<Vector>& q, std::size_t i, Vector& out) {
    const std::size_t n = q.size() - 1;
    if (i == 0) midpoint_cubic_left(q[0], q[1], q[2], q[3], out);
    else if (i + 1 == n) midpoint_cubic_left(q[n], q[n - 1], q[n - 2], q[n - 3], out);
    else midpoint_cubic(q[i - 1], q[i], q[i + 1], q[i + 2], out);
}

/// Grid [0, N·Δ] and the linear or nonlinear orbit through (i_t·Δ, x).
struct CtGrid {
    double dt = 0.0;
    std::size_t n = 0;
    std::size_t base = 0;
    double tau(std::size_t i) const { return static_cast<double>(i) * dt; }
};

std::vector<Vector> linear_orbit(const SystemBundle& b, const CtGrid& g, const Vector& x) {
    std::vector<Vector> o(g.n + 1);
    o[g.base] = x;
    const AffineRk4 fw(b.linear, g.dt), bw(b.linear, -g.dt);
    for (std::size_t i = g.base; i < g.n; ++i) {
        o[i + 1] = o[i];
        fw.step(g.tau(i), o[i + 1]);
    }
    for (std::size_t i = g.base; i > 0; --i) {
        o[i - 1] = o[i];
        bw.step(g.tau(i), o[i - 1]);
    }
    return o;
}

std::vector<Vector> nonlinear_orbit(const SystemBundle& b, const CtGrid& g, const Vector& x) {
    std::vector<Vector> z(g.n + 1);
    z[g.base] = x;
    const NonlinearRk4 rk(b.linear, b.perturbation);
    for (std::size_t i = g.base; i < g.n; ++i) {
        z[i + 1] = z[i];
        rk.step(g.tau(i), g.dt, z[i + 1]);
    }
    for (std::size_t i = g.base; i > 0; --i) {
        z[i - 1] = z[i];
        rk.step(g.tau(i), -g.dt, z[i - 1]);
    }
    return z;
}

/// u' = Au + P^s g forward from u(0) = 0 and v' = Av − P^u g backward from v(T_hi) = 0.
class Accumulator {
public:
    Accumulator(const SystemBundle& b, const CtGrid& g)
        : g_(g), ps_(b, ScaleClass::stable), pu_(b, ScaleClass::unstable),
          fw_(b.linear, g.dt), bw_(b.linear, -g.dt) {
        const auto d = static_cast<Eigen::Index>(b.dim);
        qs_.assign(g.n + 1, Vector::Zero(d));
        qu_.assign(g.n + 1, Vector::Zero(d));
        u_.assign(g.n + 1, Vector::Zero(d));
        v_.assign(g.n + 1, Vector::Zero(d));
        mid_.resize(d);
    }

    /// forcing[i] = f(τ_i, ·) at the node.
    void run(const std::vector<Vector>& forcing) {
        if (ps_.present()) {
            for (std::size_t i = 0; i <= g_.n; ++i) ps_.apply(g_.tau(i), forcing[i], qs_[i], 1.0);
            u_[0].setZero();
            for (std::size_t i = 0; i < g_.n; ++i) {
                midpoint(qs_, i, mid_);
                u_[i + 1] = u_[i];
                fw_.step(g_.tau(i), u_[i + 1], qs_[i], mid_, qs_[i + 1]);
            }
        }
        if (pu_.present()) {
            for (std::size_t i = 0; i <= g_.n; ++i) pu_.apply(g_.tau(i), forcing[i], qu_[i], -1.0);
            v_[g_.n].setZero();
            for (std::size_t i = g_.n; i > 0; --i) {
                midpoint(qu_, i - 1, mid_);
                v_[i - 1] = v_[i];
                bw_.step(g_.tau(i), v_[i - 1], qu_[i], mid_, qu_[i - 1]);
            }
        }
    }

    const std::vector<Vector>& u() const { return u_; }
    const std::vector<Vector>& v() const { return v_; }

private:
    CtGrid g_;
    ClassProjector ps_, pu_;
    AffineRk4 fw_, bw_;
    std::vector<Vector> qs_, qu_, u_, v_;
    Vector mid_;
};

struct Truncation {
    double length = 0.0;
    double tails = 0.0;
};

Truncation truncation(const SystemBundle& b, double t, double c2, double target, double dt) {
    Truncation tr;
    for (auto k : b.unstable()) {
        const auto& env = b.envelope(k);
        const CtRow row = ct_unstable_row(b, k, t, env.nu, c2, env.mu, target, dt);
        tr.length = std::max(tr.length, row.length);
        tr.tails += row.tail;
    }
    return tr;
}

double coefficient_norm(const SystemBundle& b, double t_hi) {
    if (b.linear.autonomous()) return spectral_norm(b.linear.at(0.0));
    double m = 0.0;
    for (int i = 0; i <= 16; ++i) m = std::max(m, spectral_norm(b.linear.at(t_hi * i / 16.0)));
    return m;
}

/// Common driver.  `forward` selects h (linear orbit, Picard) or h̄ (nonlinear orbit, one pass).
CtOrbitEvaluation solve(const SystemBundle& b, const Certificate& cert, double t, const Vector& x, double tol,
                        const std::vector<double>& times, bool forward) {
    require_continuous(b);
    require_passed(cert);
    const double dt = b.solver.ode_step;
    if (!(dt > 0.0)) throw DomainError("ode_step must be positive");
    const auto d = static_cast<Eigen::Index>(b.dim);

    CtGrid grid;
    grid.dt = dt;
    grid.base = snap(t, dt);
    std::size_t last = grid.base;
    std::vector<std::size_t> idx;
    for (double tau : times) {
        idx.push_back(snap(tau, dt));
        last = std::max(last, idx.back());
    }

    CtOrbitEvaluation out;
    CtEvaluation& ev = out.at_base;
    ev.step = dt;
    ev.snap_distance = std::abs(t - grid.tau(grid.base));

    const double lambda = cert.lambda_total;
    const double bound = cert.apriori_bound();
    Truncation tr;
    if (!b.unstable().empty()) {
        const double share = 0.5 * tol / static_cast<double>(b.unstable().size());
        tr = forward ? truncation(b, grid.tau(last), 2.0 * bound, share * (1.0 - lambda), dt)
                     : truncation(b, grid.tau(last), 0.0, share, dt);
    }
    const double span = forward ? 2.0 * tr.length : tr.length;
    grid.n = std::max<std::size_t>(last + static_cast<std::size_t>(std::ceil(span / dt - 1e-9)), 3);
    ev.horizon = grid.tau(grid.n);
    ev.tail_error = forward ? tr.tails / (1.0 - lambda) : tr.tails;

    const std::vector<Vector> orbit = forward ? linear_orbit(b, grid, x) : nonlinear_orbit(b, grid, x);
    std::vector<Vector> h(grid.n + 1, Vector::Zero(d));

    const bool trivial = b.perturbation.identically_zero() || (b.stable().empty() && b.unstable().empty());
    if (!trivial) {
        const double a_norm = coefficient_norm(b, ev.horizon);
        ev.integration_error =
            ev.horizon * std::pow(dt, 4) * std::pow(a_norm + 1.0, 5) * (forward ? bound : cert.c_nu) / 120.0;

        Accumulator acc(b, grid);
        std::vector<Vector> forcing(grid.n + 1, Vector::Zero(d));
        Vector arg(d);
        if (forward) {
            const std::size_t cap = std::max<std::size_t>(1, picard_iteration_count(lambda, cert.c_nu, 0.5 * tol));
            double picard = cert.c_nu / (1.0 - lambda);
            for (std::size_t m = 0; m < cap; ++m) {
                for (std::size_t i = 0; i <= grid.n; ++i) {
                    arg = orbit[i] + h[i];
                    b.perturbation.evaluate_into(grid.tau(i), arg, forcing[i]);
                }
                acc.run(forcing);
                double delta = 0.0, scale = 1.0;
                for (std::size_t i = 0; i <= grid.n; ++i) {
                    arg = acc.u()[i] - acc.v()[i];
                    delta = std::max(delta, (arg - h[i]).norm());
                    scale = std::max(scale, arg.norm());
                    h[i] = arg;
                }
                ev.sweeps = m + 1;
                ev.sweep_deltas.push_back(delta);
                picard = std::min(std::pow(lambda, static_cast<double>(m + 1)) * cert.c_nu / (1.0 - lambda),
                                  lambda * delta / (1.0 - lambda));
                if (delta == 0.0 || picard <= 0.5 * tol || delta <= kRoundoff * scale) break;
            }
            ev.picard_error = picard;
        } else {
            for (std::size_t i = 0; i <= grid.n; ++i) b.perturbation.evaluate_into(grid.tau(i), orbit[i], forcing[i]);
            acc.run(forcing);
            for (std::size_t i = 0; i <= grid.n; ++i) h[i] = acc.v()[i] - acc.u()[i];
        }
    }
    ev.error = ev.picard_error + ev.tail_error + ev.integration_error;
    ev.value = h[grid.base];
    for (std::size_t i : idx) {
        out.times.push_back(grid.tau(i));
        out.states.push_back(orbit[i]);
        out.values.push_back(h[i]);
    }
    return out;
}

}  // namespace

CtEvaluation eval_h_ct(const SystemBundle& b, const Certificate& cert, double t, const Vector& x, double tol) {
    return solve(b, cert, t, x, tol, {}, true).at_base;
}

Vector eval_H_ct(const SystemBundle& b, const Certificate& cert, double t, const Vector& x, double tol) {
    return x + eval_h_ct(b, cert, t, x, tol).value;
}

CtEvaluation eval_hbar_ct(const SystemBundle& b, const Certificate& cert, double t, const Vector& x, double tol) {
    return solve(b, cert, t, x, tol, {}, false).at_base;
}

Vector eval_Hbar_ct(const SystemBundle& b, const Certificate& cert, double t, const Vector& x, double tol) {
    return x + eval_hbar_ct(b, cert, t, x, tol).value;
}

CtOrbitEvaluation eval_h_ct_orbit(const SystemBundle& b, const Certificate& cert, double t, const Vector& x,
                                  double tol, const std::vector<double>& times) {
    return solve(b, cert, t, x, tol, times, true);
}

CtOrbitEvaluation eval_hbar_ct_orbit(const SystemBundle& b, const Certificate& cert, double t, const Vector& x,
                                     double tol, const std::vector<double>& times) {
    return solve(b, cert, t, x, tol, times, false);
}

Vector deviation_ct(const SystemBundle& b, double t, const Vector& x) {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(b.dim));
    const auto center = b.center();
    if (center.empty()) return out;
    const Vector f = b.perturbation(t, x);
    Vector p;
    for (auto k : center) {
        b.decomposition.scale(k).projection.apply(t, f, p);
        out += p;
    }
    return out;
}

}  // namespace mslin
