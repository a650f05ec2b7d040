#include "mslin/conjugacy_discrete.hpp"
#include "mslin/cocycle.hpp"

#include <algorithm>
#include <cmath>

namespace mslin {

namespace {

constexpr double kRoundoff = 1e-15;

/// Per-step data on the window [0, hi].
struct Window {
    std::size_t hi = 0;
    std::vector<Matrix> a;      // A_j, j < hi
    std::vector<Matrix> ainv;   // A_j^{-1}, j < hi (only with unstable scales)
    std::vector<Matrix> ps;     // Σ_{K^s} P_j, j ≤ hi
    std::vector<Matrix> pu;     // Σ_{K^u} P_j, j ≤ hi
    bool has_stable = false;
    bool has_unstable = false;
};

Window make_window(const SystemBundle& b, std::size_t hi) {
    Window w;
    w.hi = hi;
    w.has_stable = !b.stable().empty();
    w.has_unstable = !b.unstable().empty();
    for (std::size_t j = 0; j < hi; ++j) {
        w.a.push_back(b.linear.step(j));
        if (w.has_unstable) w.ainv.push_back(b.linear.inverse_step(j));
    }
    for (std::size_t j = 0; j <= hi; ++j) {
        const double t = static_cast<double>(j);
        if (w.has_stable) w.ps.push_back(b.decomposition.class_projection(ScaleClass::stable, t));
        if (w.has_unstable) w.pu.push_back(b.decomposition.class_projection(ScaleClass::unstable, t));
    }
    return w;
}

/// u_j = Σ_{l≤j} 𝒜(j,l) P^s_l g_{l-1} and v_j = Σ_{l>j} 𝒜(j,l) P^u_l g_{l-1} for all j.
void accumulate(const Window& w, const std::vector<Vector>& g, std::vector<Vector>& u, std::vector<Vector>& v,
                Eigen::Index d) {
    const std::size_t hi = w.hi;
    u.assign(hi + 1, Vector::Zero(d));
    v.assign(hi + 1, Vector::Zero(d));
    Vector tmp(d);
    if (w.has_stable) {
        for (std::size_t j = 1; j <= hi; ++j) {
            u[j].noalias() = w.a[j - 1] * u[j - 1];
            u[j].noalias() += w.ps[j] * g[j - 1];
        }
    }
    if (w.has_unstable) {
        for (std::size_t j = hi; j-- > 0;) {
            tmp.noalias() = w.pu[j + 1] * g[j];
            tmp += v[j + 1];
            v[j].noalias() = w.ainv[j] * tmp;
        }
    }
}

/// Longest truncation over the unstable scales at n for weight ν + c2·μ, and the summed tails.
std::pair<std::size_t, double> unstable_length(const SystemBundle& b, std::size_t n, double c2, double target) {
    std::size_t len = 0;
    double tails = 0.0;
    for (auto k : b.unstable()) {
        const auto& env = b.envelope(k);
        const RowSum row = unstable_row(b, k, n, env.nu, c2, env.mu, target);
        len = std::max(len, row.length);
        tails += row.tail;
    }
    return {len, tails};
}

void require_discrete(const SystemBundle& b) {
    if (b.kind != TimeKind::discrete) throw DomainError("discrete conjugacy needs a discrete-time bundle");
}

}  // namespace

void require_passed(const Certificate& cert) {
    if (!cert.passed) throw CertificateNotPassed("the certificate did not pass; conjugacy maps are not constructed");
}

std::size_t picard_iteration_count(double lambda, double c, double tol) {
    if (!(lambda < 1.0) || lambda < 0.0) throw DomainError("picard_iteration_count needs 0 <= lambda_total < 1");
    if (!(tol > 0.0)) throw DomainError("picard_iteration_count needs tol > 0");
    if (!(c >= 0.0)) throw DomainError("picard_iteration_count needs C_nu >= 0");
    auto ok = [&](std::size_t m) { return std::pow(lambda, static_cast<double>(m)) * c / (1.0 - lambda) <= tol; };
    if (c == 0.0 || ok(0)) return 0;
    if (lambda == 0.0) return 1;
    const double est = std::log(tol * (1.0 - lambda) / c) / std::log(lambda);
    auto m = static_cast<std::size_t>(std::max(0.0, std::ceil(est)));
    while (m > 0 && ok(m - 1)) --m;
    while (!ok(m)) ++m;
    return m;
}

ConjugacyEvaluation eval_h(const SystemBundle& b, const Certificate& cert, std::size_t n, const Vector& x, double tol) {
    require_discrete(b);
    require_passed(cert);
    const auto d = static_cast<Eigen::Index>(b.dim);
    ConjugacyEvaluation ev;
    ev.value = Vector::Zero(d);
    ev.window_lo = 0;
    ev.window_hi = n;
    if (b.perturbation.identically_zero() || (b.stable().empty() && b.unstable().empty())) return ev;

    const double lambda = cert.lambda_total;
    const double bound = cert.apriori_bound();
    const double half = 0.5 * tol;

    // Truncation: rows weighted by ν + 2B·μ cover both the dropped forcing and its
    // Lipschitz effect on h; the window is twice as long so interior values stay accurate.
    std::size_t len = 0;
    double tails = 0.0;
    if (!b.unstable().empty()) {
        const double target = half * (1.0 - lambda) / static_cast<double>(b.unstable().size());
        std::tie(len, tails) = unstable_length(b, n, 2.0 * bound, target);
    }
    const std::size_t hi = n + 2 * len;
    ev.horizon = len;
    ev.window_hi = hi;
    ev.tail_error = tails / (1.0 - lambda);

    const OrbitTable orbit = build_orbit_table(b, n, x, 0, hi, true, false, b.solver.tol_inv_or_default());
    const Window w = make_window(b, hi);
    const std::size_t max_sweeps = std::max<std::size_t>(1, picard_iteration_count(lambda, cert.c_nu, half));

    std::vector<Vector> h(hi + 1, Vector::Zero(d)), g(hi + 1, Vector::Zero(d)), u, v;
    Vector arg(d);
    double delta = 0.0;
    double picard = cert.c_nu / (1.0 - lambda);
    for (std::size_t m = 0; m < max_sweeps; ++m) {
        for (std::size_t j = 0; j < hi; ++j) {
            arg = orbit.o(j) + h[j];
            b.perturbation.evaluate_into(static_cast<double>(j), arg, g[j]);
        }
        accumulate(w, g, u, v, d);
        delta = 0.0;
        double scale = 1.0;
        for (std::size_t j = 0; j <= hi; ++j) {
            Vector next = u[j] - v[j];
            delta = std::max(delta, (next - h[j]).norm());
            scale = std::max(scale, next.norm());
            h[j] = std::move(next);
        }
        ev.iterations = m + 1;
        ev.sweep_deltas.push_back(delta);
        const double apriori = std::pow(lambda, static_cast<double>(m + 1)) * cert.c_nu / (1.0 - lambda);
        const double aposteriori = lambda * delta / (1.0 - lambda);
        picard = std::min(apriori, aposteriori);
        if (delta == 0.0 || picard <= half || delta <= kRoundoff * scale) break;
    }
    ev.picard_error = picard;
    ev.value = h[n];
    ev.error = ev.picard_error + ev.tail_error;
    return ev;
}

Vector eval_H(const SystemBundle& b, const Certificate& cert, std::size_t n, const Vector& x, double tol) {
    return x + eval_h(b, cert, n, x, tol).value;
}

ConjugacyEvaluation eval_hbar(const SystemBundle& b, const Certificate& cert, std::size_t n, const Vector& x,
                              double tol) {
    require_discrete(b);
    require_passed(cert);
    const auto d = static_cast<Eigen::Index>(b.dim);
    ConjugacyEvaluation ev;
    ev.value = Vector::Zero(d);
    ev.window_hi = n;
    if (b.perturbation.identically_zero() || (b.stable().empty() && b.unstable().empty())) return ev;

    std::size_t len = 0;
    double tails = 0.0;
    if (!b.unstable().empty()) {
        const double target = 0.5 * tol / static_cast<double>(b.unstable().size());
        std::tie(len, tails) = unstable_length(b, n, 0.0, target);
    }
    const std::size_t hi = n + len;
    ev.horizon = len;
    ev.window_hi = hi;
    ev.tail_error = tails;

    const double tol_inv = b.solver.tol_inv_or_default();
    const OrbitTable orbit = build_orbit_table(b, n, x, 0, hi, false, true, tol_inv);
    const Window w = make_window(b, hi);
    std::vector<Vector> g(hi + 1, Vector::Zero(d)), u, v;
    for (std::size_t j = 0; j < hi; ++j) b.perturbation.evaluate_into(static_cast<double>(j), orbit.z(j), g[j]);
    accumulate(w, g, u, v, d);
    ev.value = v[n] - u[n];

    // Newton residuals ρ_j on the backward orbit perturb it to first order by
    // δ_j = J_j^{-1}(δ_{j+1} + ρ_j), J_j = A_j + Df_j(z_j), and reach h̄ through
    // Σ_{l≤n} 𝒜(n,l)P^s_l Df_{l-1} δ_{l-1} = Σ_j W_j ρ_j with W_j = (W_{j-1} + M_{j+1}) J_j^{-1}.
    if (n > 0 && w.has_stable) {
        std::vector<Matrix> m(n + 1);
        Matrix c = Matrix::Identity(d, d);  // 𝒜(n, l)
        for (std::size_t l = n; l >= 1; --l) {
            m[l] = c * w.ps[l] * perturbation_jacobian(b, static_cast<double>(l - 1), orbit.z(l - 1));
            c = c * w.a[l - 1];
        }
        Matrix wj = Matrix::Zero(d, d);
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const Matrix jac = b.linear.step(j) + perturbation_jacobian(b, static_cast<double>(j), orbit.z(j));
            wj = (wj + m[j + 1]) * jac.inverse();
            acc += spectral_norm(wj) * orbit.inverse_residual[j];
        }
        ev.inverse_error = acc;
    }
    ev.error = ev.tail_error + ev.inverse_error;
    return ev;
}

Vector eval_Hbar(const SystemBundle& b, const Certificate& cert, std::size_t n, const Vector& x, double tol) {
    return x + eval_hbar(b, cert, n, x, tol).value;
}

Vector deviation_tau(const SystemBundle& b, std::size_t n, const Vector& x) {
    const auto d = static_cast<Eigen::Index>(b.dim);
    Vector tau = Vector::Zero(d);
    const auto center = b.center();
    if (center.empty()) return tau;
    const Vector f = b.perturbation(static_cast<double>(n), x);
    Vector p;
    for (auto k : center) {
        b.decomposition.scale(k).projection.apply(static_cast<double>(n + 1), f, p);
        tau -= p;
    }
    return tau;
}

Vector deviation_tau_bar(const SystemBundle& b, std::size_t n, const Vector& x) {
    return -deviation_tau(b, n, x);
}

}  // namespace mslin
