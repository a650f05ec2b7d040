#include "mslin/verifier.hpp"
#include "mslin/cocycle.hpp"
#include "mslin/conjugacy_continuous.hpp"
#include "mslin/conjugacy_discrete.hpp"
#include "mslin/format.hpp"
#include "mslin/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <sstream>
#include <thread>

namespace mslin {

namespace {

std::size_t as_step(double time) {
    if (time < 0.0 || std::floor(time) != time) throw DomainError("discrete time must be a nonnegative integer");
    return static_cast<std::size_t>(time);
}

/// Largest ratio of consecutive sweep deltas, ignoring deltas at the round-off level.
double max_sweep_ratio(const std::vector<double>& deltas, double scale) {
    const double floor = 1e-11 * std::max(1.0, scale);
    double r = 0.0;
    for (std::size_t j = 1; j < deltas.size(); ++j)
        if (deltas[j - 1] > floor && deltas[j] > floor) r = std::max(r, deltas[j] / deltas[j - 1]);
    return r;
}

Vector five_point_derivative(const std::vector<Vector>& y, double delta) {
    return (y[0] - 8.0 * y[1] + 8.0 * y[3] - y[4]) / (12.0 * delta);
}

/// Difference spacing: kDifferenceStep rounded to a positive multiple of the grid step.
std::vector<double> stencil(double t, double dt) {
    const double d = dt * std::max(1.0, std::round(kDifferenceStep / dt));
    return {t - 2 * d, t - d, t, t + d, t + 2 * d};
}

struct SdeResult {
    double r1 = 0.0, r2 = 0.0;
    double h_norm = 0.0, hbar_norm = 0.0;
    std::vector<double> deltas;
};

SdeResult sde_residuals(const SystemBundle& b, const Certificate& cert, double t, const Vector& x, double tol) {
    SdeResult out;
    const auto times = stencil(t, b.solver.ode_step);
    if (times.front() < 0.0) throw DomainError("solution-property check needs t at least two difference steps");

    const CtOrbitEvaluation h = eval_h_ct_orbit(b, cert, t, x, tol, times);
    std::vector<Vector> y;
    for (std::size_t i = 0; i < 5; ++i) y.push_back(h.states[i] + h.values[i]);
    const double tc = h.times[2];
    const Vector& yc = y[2];
    const Vector rhs1 = b.linear.at(tc) * yc + b.perturbation(tc, yc) - deviation_ct(b, tc, yc);
    out.r1 = (five_point_derivative(y, h.times[3] - h.times[2]) - rhs1).norm();
    out.h_norm = h.at_base.value.norm();
    out.deltas = h.at_base.sweep_deltas;

    const CtOrbitEvaluation hb = eval_hbar_ct_orbit(b, cert, t, x, tol, times);
    std::vector<Vector> w;
    for (std::size_t i = 0; i < 5; ++i) w.push_back(hb.states[i] + hb.values[i]);
    const Vector rhs2 = b.linear.at(tc) * w[2] + deviation_ct(b, tc, hb.states[2]);
    out.r2 = (five_point_derivative(w, hb.times[3] - hb.times[2]) - rhs2).norm();
    out.hbar_norm = hb.at_base.value.norm();
    return out;
}

/// Runs fn(i) for i < count on up to `jobs` threads; the first failure by index is rethrown.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct Sample {
    double t = 0.0;
    double s = 0.0;
    Vector x;
};

std::vector<Sample> draw_samples(const SystemBundle& b, const SampleSpec& spec) {
    Rng rng(spec.seed);
    std::vector<Sample> out;
    const auto d = static_cast<Eigen::Index>(b.dim);
    for (std::size_t i = 0; i < spec.count; ++i) {
        Sample smp;
        if (b.kind == TimeKind::discrete) {
            const auto lo = static_cast<std::uint64_t>(std::max(0.0, std::ceil(spec.time_min)));
            const auto hi = static_cast<std::uint64_t>(std::floor(spec.time_max));
            smp.t = static_cast<double>(rng.integer(lo, std::max(lo, hi)));
        } else {
            const auto lo = static_cast<std::uint64_t>(std::max(1.0, std::ceil(spec.time_min / spec.time_grid)));
            const auto hi = static_cast<std::uint64_t>(std::floor(spec.time_max / spec.time_grid + 1e-9));
            smp.t = spec.time_grid * static_cast<double>(rng.integer(lo, std::max(lo, hi)));
            smp.s = spec.time_grid * static_cast<double>(rng.integer(lo, std::max(lo, hi)));
            if (smp.s > smp.t) std::swap(smp.s, smp.t);
        }
        smp.x = rng.ball(d, spec.radius);
        out.push_back(std::move(smp));
    }
    return out;
}

constexpr double kInnerTolFloor = 1e-12;

double transit_coefficient_bound(const SystemBundle& b, double t_max) {
    if (b.linear.autonomous()) return spectral_norm(b.linear.at(0.0));
    double m = 0.0;
    for (int i = 0; i <= 64; ++i) m = std::max(m, spectral_norm(b.linear.at(t_max * i / 64.0)));
    return m;
}

double max_lipschitz(const SystemBundle& b, double t_max) {
    double m = 0.0;
    for (int i = 0; i <= 64; ++i) m = std::max(m, b.perturbation.lipschitz_bound(t_max * i / 64.0));
    return m;
}

}  // namespace

SampleSpec SampleSpec::defaults(TimeKind kind) {
    SampleSpec s;
    if (kind == TimeKind::continuous) {
        s.count = 50;
        s.radius = 5.0;
        s.time_max = 10.0;
    }
    return s;
}

const IdentitySummary* VerificationReport::find(const std::string& name) const {
    for (const auto& id : identities)
        if (id.name == name) return &id;
    return nullptr;
}

double apriori_bound(const Certificate& cert) { return cert.apriori_bound(); }

bool center_forcing_vanishes(const SystemBundle& b, std::uint64_t seed) {
    const auto center = b.center();
    if (center.empty() || b.perturbation.identically_zero()) return true;
    std::vector<std::size_t> coords;
    bool all_coordinates = true;
    for (auto k : center) {
        const auto& p = b.decomposition.scale(k).projection;
        if (!p.is_coordinates()) {
            all_coordinates = false;
            break;
        }
        coords.insert(coords.end(), p.coordinate_list().begin(), p.coordinate_list().end());
    }
    if (all_coordinates) return b.perturbation.components_vanish(coords);
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(b.dim);
    Vector p;
    for (int i = 0; i < 256; ++i) {
        const double t = b.kind == TimeKind::discrete ? static_cast<double>(rng.integer(0, 64)) : rng.uniform(0.0, 20.0);
        const Vector f = b.perturbation(t, rng.ball(d, 10.0));
        Vector sum = Vector::Zero(d);
        for (auto k : center) {
            b.decomposition.scale(k).projection.apply(b.kind == TimeKind::discrete ? t + 1.0 : t, f, p);
            sum += p;
        }
        if (sum.norm() > 1e-14 * std::max(1.0, f.norm())) return false;
    }
    return true;
}

std::pair<double, double> residual_quasi_conjugacy(const SystemBundle& b, const Certificate& cert, double time,
                                                   const Vector& x, double tol) {
    if (b.kind == TimeKind::continuous) {
        const SdeResult r = sde_residuals(b, cert, time, x, tol);
        return {r.r1, r.r2};
    }
    const std::size_t n = as_step(time);
    const Matrix a = b.linear.step(n);
    const Vector hn = eval_H(b, cert, n, x, tol);
    const Vector lhs1 = eval_H(b, cert, n + 1, a * x, tol);
    const double r1 = (lhs1 - nonlinear_step(b, n, hn) - deviation_tau(b, n, hn)).norm();
    const Vector lhs2 = eval_Hbar(b, cert, n + 1, nonlinear_step(b, n, x), tol);
    const double r2 = (lhs2 - a * eval_Hbar(b, cert, n, x, tol) - deviation_tau_bar(b, n, x)).norm();
    return {r1, r2};
}

std::pair<double, double> residual_inverse_pair(const SystemBundle& b, const Certificate& cert, double time,
                                                const Vector& x, double tol) {
    if (!center_forcing_vanishes(b))
        throw CenterNotTrivial("inverse-pair identities need vanishing center forcing");
    if (b.kind == TimeKind::continuous) {
        const double ra = (eval_Hbar_ct(b, cert, time, eval_H_ct(b, cert, time, x, tol), tol) - x).norm();
        const double rb = (eval_H_ct(b, cert, time, eval_Hbar_ct(b, cert, time, x, tol), tol) - x).norm();
        return {ra, rb};
    }
    const std::size_t n = as_step(time);
    const double ra = (eval_Hbar(b, cert, n, eval_H(b, cert, n, x, tol), tol) - x).norm();
    const double rb = (eval_H(b, cert, n, eval_Hbar(b, cert, n, x, tol), tol) - x).norm();
    return {ra, rb};
}

std::pair<double, double> residual_transport(const SystemBundle& b, const Certificate& cert, double t, double s,
                                             const Vector& x, double tol) {
    if (b.kind != TimeKind::continuous) throw DomainError("transport identities are continuous-time checks");
    const double dt = b.solver.ode_step;
    const Matrix tts = ct_linear_transit(b, t, s, dt);
    // The inner evaluation is pushed through a transit; tighten it by the transit's Lipschitz bound.
    const double gap = std::abs(t - s);
    const double lip_u = std::exp((transit_coefficient_bound(b, std::max(t, s)) + max_lipschitz(b, std::max(t, s))) * gap);
    const double tol_h = std::max(tol / std::max(1.0, lip_u), kInnerTolFloor);
    const double tol_hbar = std::max(tol / std::max(1.0, spectral_norm(tts)), kInnerTolFloor);
    const Vector lhs = eval_H_ct(b, cert, t, tts * x, tol);
    const Vector rhs = ct_nonlinear_transit(b, t, s, eval_H_ct(b, cert, s, x, tol_h), dt);
    const Vector lhs_bar = eval_Hbar_ct(b, cert, t, ct_nonlinear_transit(b, t, s, x, dt), tol);
    const Vector rhs_bar = tts * eval_Hbar_ct(b, cert, s, x, tol_hbar);
    return {(lhs - rhs).norm(), (lhs_bar - rhs_bar).norm()};
}

VerificationReport verification_report(const SystemBundle& b, const Certificate& cert, const SampleSpec& spec,
                                       double tol) {
    require_passed(cert);
    VerificationReport rep;
    rep.kind = b.kind;
    rep.spec = spec;
    rep.tol = tol;
    rep.step = b.kind == TimeKind::continuous ? b.solver.ode_step : 0.0;
    rep.lambda_total = cert.lambda_total;
    rep.c_nu = cert.c_nu;
    rep.bound = cert.apriori_bound();

    const bool continuous = b.kind == TimeKind::continuous;
    const bool inverse = center_forcing_vanishes(b);
    const double dt = rep.step;

    std::vector<std::pair<std::string, double>> ids;
    if (continuous) {
        ids = {{"sde1", 5 * tol + dt * dt}, {"sde2", 5 * tol + dt * dt},
               {"transport_h", 5 * tol}, {"transport_hbar", 5 * tol}};
    } else {
        ids = {{"lin1", 3 * tol}, {"lin2", 3 * tol}};
    }
    ids.emplace_back("inverse_hbar_h", 5 * tol);
    ids.emplace_back("inverse_h_hbar", 5 * tol);
    ids.emplace_back("bound_h", rep.bound + tol);
    ids.emplace_back("bound_hbar", cert.c_nu + tol);
    ids.emplace_back("contraction", cert.lambda_total + 0.02);

    const auto samples = draw_samples(b, spec);
    const std::size_t m = ids.size();
    std::vector<std::vector<double>> table(samples.size(), std::vector<double>(m, 0.0));

    parallel_for(samples.size(), spec.jobs, [&](std::size_t i) {
        const Sample& smp = samples[i];
        auto& row = table[i];
        std::size_t c = 0;
        std::vector<double> deltas;
        double h_norm = 0.0, hbar_norm = 0.0;
        if (continuous) {
            const SdeResult r = sde_residuals(b, cert, smp.t, smp.x, tol);
            row[c++] = r.r1;
            row[c++] = r.r2;
            const auto tr = residual_transport(b, cert, smp.t, smp.s, smp.x, tol);
            row[c++] = tr.first;
            row[c++] = tr.second;
            deltas = r.deltas;
            h_norm = r.h_norm;
            hbar_norm = r.hbar_norm;
        } else {
            const auto q = residual_quasi_conjugacy(b, cert, smp.t, smp.x, tol);
            row[c++] = q.first;
            row[c++] = q.second;
            const auto n = static_cast<std::size_t>(smp.t);
            const ConjugacyEvaluation h = eval_h(b, cert, n, smp.x, tol);
            deltas = h.sweep_deltas;
            h_norm = h.value.norm();
            hbar_norm = eval_hbar(b, cert, n, smp.x, tol).value.norm();
        }
        if (inverse) {
            const auto p = residual_inverse_pair(b, cert, smp.t, smp.x, tol);
            row[c] = p.first;
            row[c + 1] = p.second;
        }
        c += 2;
        row[c++] = h_norm;
        row[c++] = hbar_norm;
        row[c++] = max_sweep_ratio(deltas, rep.bound);
    });

    for (std::size_t j = 0; j < m; ++j) {
        IdentitySummary s;
        s.name = ids[j].first;
        s.bound = ids[j].second;
        if (!inverse && s.name.rfind("inverse_", 0) == 0) {
            s.verdict = "skipped";
            s.note = "center forcing does not vanish";
            rep.identities.push_back(s);
            continue;
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double r = table[i][j];
            s.max = std::max(s.max, r);
            sum += r;
            rep.rows.push_back({s.name, samples[i].t, i, r});
        }
        s.count = samples.size();
        s.mean = samples.empty() ? 0.0 : sum / static_cast<double>(samples.size());
        s.verdict = s.max <= s.bound ? "pass" : "fail";
        if (s.verdict == "fail") rep.passed = false;
        if (s.name == "bound_h") rep.observed_sup_h = s.max;
        rep.identities.push_back(s);
    }
    return rep;
}

std::string verification_csv(const VerificationReport& r) {
    std::ostringstream os;
    os << "identity,time,sample_id,residual\n";
    for (const auto& row : r.rows)
        os << row.identity << ',' << fmt17(row.time) << ',' << row.sample_id << ',' << fmt17(row.residual) << '\n';
    return os.str();
}

std::string verification_summary(const VerificationReport& r) {
    std::ostringstream os;
    os << "kind = " << to_string(r.kind) << '\n';
    os << "samples = " << r.spec.count << '\n';
    os << "seed = " << r.spec.seed << '\n';
    os << "radius = " << fmt17(r.spec.radius) << '\n';
    os << "time_range = " << fmt17(r.spec.time_min) << ',' << fmt17(r.spec.time_max) << '\n';
    if (r.kind == TimeKind::continuous) {
        os << "time_grid = " << fmt17(r.spec.time_grid) << '\n';
        os << "step = " << fmt17(r.step) << '\n';
    }
    os << "tol = " << fmt17(r.tol) << '\n';
    os << "lambda_total = " << fmt17(r.lambda_total) << '\n';
    os << "c_nu = " << fmt17(r.c_nu) << '\n';
    os << "apriori_bound = " << fmt17(r.bound) << '\n';
    os << "observed_sup_h = " << fmt17(r.observed_sup_h) << '\n';
    for (const auto& id : r.identities) {
        const std::string k = "identity." + id.name + '.';
        os << k << "max = " << fmt17(id.max) << '\n';
        os << k << "mean = " << fmt17(id.mean) << '\n';
        os << k << "bound = " << fmt17(id.bound) << '\n';
        os << k << "count = " << id.count << '\n';
        os << k << "verdict = " << id.verdict << '\n';
        if (!id.note.empty()) os << k << "note = " << id.note << '\n';
    }
    os << "verdict = " << (r.passed ? "pass" : "fail") << '\n';
    os << "# bounds: lin1, lin2 <= 3*tol. Each side holds one evaluation of H or Hbar (error <= tol)\n"
          "#   and the other side one more, pushed through a step map whose Lipschitz excess is\n"
          "#   bounded by the declared mu data; one extra tol covers that amplification.\n"
          "# inverse_*, transport_* <= 5*tol. Two nested evaluations; the outer map amplifies the\n"
          "#   inner error by at most 1 + B-scale Lipschitz terms, budgeted as 2*tol, plus one tol\n"
          "#   for the transit integrations.\n"
          "# sde1, sde2 <= 5*tol + step^2. Five-point difference of orbit values (spacing 0.01).\n"
          "# bound_h <= C_nu/(1 - lambda_total) + tol; bound_hbar <= C_nu + tol.\n"
          "# contraction: max ratio of consecutive Picard sweep deltas <= lambda_total + 0.02.\n";
    return os.str();
}

}  // namespace mslin
