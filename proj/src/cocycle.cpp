#include "mslin/cocycle.hpp"
#include "mslin/integrator.hpp"

#include <cmath>
#include <sstream>

namespace mslin {

namespace {

void require_discrete(const SystemBundle& b, const char* op) {
    if (b.kind != TimeKind::discrete) throw DomainError(std::string(op) + " needs a discrete-time bundle");
}

void require_continuous(const SystemBundle& b, const char* op) {
    if (b.kind != TimeKind::continuous) throw DomainError(std::string(op) + " needs a continuous-time bundle");
}

constexpr std::size_t kMaxIter = 100;

}  // namespace

Matrix linear_transit(const SystemBundle& b, std::size_t m, std::size_t n) {
    require_discrete(b, "linear_transit");
    const auto d = static_cast<Eigen::Index>(b.dim);
    Matrix out = Matrix::Identity(d, d);
    if (m > n) {
        for (std::size_t j = n; j < m; ++j) out = b.linear.step(j) * out;
    } else if (m < n) {
        // A_m^{-1} A_{m+1}^{-1} ⋯ A_{n-1}^{-1}
        for (std::size_t j = m; j < n; ++j) out = out * b.linear.inverse_step(j);
    }
    return out;
}

Matrix perturbation_jacobian(const SystemBundle& b, double t, const Vector& x) {
    const auto d = static_cast<Eigen::Index>(b.dim);
    Matrix J(d, d);
    Vector fp, fm;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
        Vector xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        b.perturbation.evaluate_into(t, xp, fp);
        b.perturbation.evaluate_into(t, xm, fm);
        J.col(i) = (fp - fm) / (2.0 * h);
    }
    return J;
}

Vector nonlinear_step(const SystemBundle& b, std::size_t n, const Vector& x) {
    require_discrete(b, "nonlinear_step");
    const double t = static_cast<double>(n);
    Vector out = b.linear.step(n) * x;
    out += b.perturbation(t, x);
    return out;
}

InverseStepResult nonlinear_inverse_step_detail(const SystemBundle& b, std::size_t n, const Vector& y,
                                                double tol_inv) {
    require_discrete(b, "nonlinear_inverse_step");
    const Matrix A = b.linear.step(n);
    const Matrix Ainv = b.linear.inverse_step(n);
    const double t = static_cast<double>(n);
    const double target = tol_inv * std::max(1.0, y.norm());

    InverseStepResult res;
    Vector fx;
    auto residual = [&](const Vector& x) {
        b.perturbation.evaluate_into(t, x, fx);
        return (A * x + fx - y).norm();
    };

    Vector x = Ainv * y;
    if (b.perturbation.identically_zero()) {
        res.x = x;
        res.residual = (A * x - y).norm();
        res.iterations = 1;
        return res;
    }

    double r = residual(x);
    double prev_step = -1.0;
    std::size_t it = 0;
    for (; it < kMaxIter && r > target; ++it) {
        b.perturbation.evaluate_into(t, x, fx);
        Vector next = Ainv * (y - fx);
        const double step = (next - x).norm();
        if (prev_step > 0.0 && step > prev_step) {
            break;
        }
        prev_step = step;
        x = std::move(next);
        r = residual(x);
    }
    if (r <= target) {
        // A few more sweeps while they still help, so the result sits near round-off.
        for (int polish = 0; polish < 4; ++polish) {
            b.perturbation.evaluate_into(t, x, fx);
            Vector next = Ainv * (y - fx);
            const double rn = residual(next);
            if (!(rn < r)) break;
            x = std::move(next);
            r = rn;
        }
        res.x = x;
        res.residual = r;
        res.iterations = it;
        return res;
    }

    // Damped Newton with a central-difference Jacobian of f.
    res.used_newton = true;
    Vector best = Ainv * y;
    double rbest = residual(best);
    if (r < rbest) {
        best = x;
        rbest = r;
    }
    x = best;
    r = rbest;
    for (std::size_t k = 0; k < kMaxIter && r > target; ++k) {
        const Matrix J = A + perturbation_jacobian(b, t, x);
        b.perturbation.evaluate_into(t, x, fx);
        const Vector g = A * x + fx - y;
        const Vector dx = J.fullPivLu().solve(g);
        double alpha = 1.0;
        Vector trial;
        double rt = r;
        while (alpha > 1e-6) {
            trial = x - alpha * dx;
            rt = residual(trial);
            if (rt < r) break;
            alpha *= 0.5;
        }
        if (!(rt < r)) break;
        x = trial;
        r = rt;
        ++it;
    }
    if (!(r <= target)) {
        std::ostringstream msg;
        msg << "F_" << n << " could not be inverted: residual " << r << " > " << target;
        throw NonContractiveInverse(msg.str());
    }
    res.x = x;
    res.residual = r;
    res.iterations = it;
    return res;
}

Vector nonlinear_inverse_step(const SystemBundle& b, std::size_t n, const Vector& y, double tol_inv) {
    return nonlinear_inverse_step_detail(b, n, y, tol_inv).x;
}

Vector nonlinear_transit(const SystemBundle& b, std::size_t m, std::size_t n, const Vector& x, double tol_inv) {
    require_discrete(b, "nonlinear_transit");
    Vector z = x;
    if (m > n) {
        for (std::size_t j = n; j < m; ++j) z = nonlinear_step(b, j, z);
    } else if (m < n) {
        for (std::size_t j = n; j-- > m;) z = nonlinear_inverse_step(b, j, z, tol_inv);
    }
    return z;
}

OrbitTable build_orbit_table(const SystemBundle& b, std::size_t base, const Vector& x, std::size_t lo,
                             std::size_t hi, bool want_linear, bool want_nonlinear, double tol_inv) {
    require_discrete(b, "build_orbit_table");
    if (lo > base || hi < base) throw DomainError("orbit window must contain the base time");
    OrbitTable tab;
    tab.base = base;
    tab.lo = lo;
    tab.hi = hi;
    const std::size_t count = hi - lo + 1;
    if (want_linear) {
        tab.linear.resize(count);
        tab.linear[base - lo] = x;
        for (std::size_t j = base; j < hi; ++j) tab.linear[j + 1 - lo].noalias() = b.linear.step(j) * tab.linear[j - lo];
        for (std::size_t j = base; j > lo; --j)
            tab.linear[j - 1 - lo].noalias() = b.linear.inverse_step(j - 1) * tab.linear[j - lo];
    }
    if (want_nonlinear) {
        tab.nonlinear.resize(count);
        tab.nonlinear[base - lo] = x;
        for (std::size_t j = base; j < hi; ++j) tab.nonlinear[j + 1 - lo] = nonlinear_step(b, j, tab.nonlinear[j - lo]);
        tab.inverse_residual.assign(base - lo, 0.0);
        for (std::size_t j = base; j > lo; --j) {
            auto r = nonlinear_inverse_step_detail(b, j - 1, tab.nonlinear[j - lo], tol_inv);
            tab.nonlinear[j - 1 - lo] = std::move(r.x);
            tab.inverse_residual[j - 1 - lo] = r.residual;
        }
    }
    return tab;
}

Matrix ct_linear_transit(const SystemBundle& b, double t, double s, double step) {
    require_continuous(b, "ct_linear_transit");
    if (t < 0.0 || s < 0.0 || !(step > 0.0)) throw DomainError("ct_linear_transit: times must be nonnegative, step positive");
    const auto d = static_cast<Eigen::Index>(b.dim);
    Matrix m = Matrix::Identity(d, d);
    const std::size_t n = substep_count(t, s, step);
    if (n == 0) return m;
    const double h = (t - s) / static_cast<double>(n);
    AffineRk4 rk(b.linear, h);
    for (std::size_t i = 0; i < n; ++i) rk.step(s + static_cast<double>(i) * h, m);
    return m;
}

Vector ct_nonlinear_transit(const SystemBundle& b, double t, double s, const Vector& x, double step) {
    require_continuous(b, "ct_nonlinear_transit");
    if (t < 0.0 || s < 0.0 || !(step > 0.0)) throw DomainError("ct_nonlinear_transit: times must be nonnegative, step positive");
    Vector z = x;
    const std::size_t n = substep_count(t, s, step);
    if (n == 0) return z;
    const double h = (t - s) / static_cast<double>(n);
    NonlinearRk4 rk(b.linear, b.perturbation);
    for (std::size_t i = 0; i < n; ++i) rk.step(s + static_cast<double>(i) * h, h, z);
    return z;
}

}  // namespace mslin
