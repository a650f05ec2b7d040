#include "mslin/certificate.hpp"
#include "mslin/cocycle.hpp"
#include "mslin/format.hpp"
#include "mslin/integrator.hpp"
#include "mslin/rng.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace mslin {

namespace {

constexpr int kRatioRun = 8;          // consecutive decreasing terms before extrapolating
constexpr int kNoDecayRun = 50;       // consecutive non-decreasing terms that signal misclassification
constexpr std::size_t kMaxRowTerms = 100000;
constexpr double kCtCap = 50.0;       // time units
constexpr double kCtSample = 0.25;    // ratio-test sample spacing (time units)

/// Right factor E with ‖M P‖ = ‖M E‖: a column selector for coordinate masks, P otherwise.
Matrix norm_factor(const Projection& p, double time, std::size_t dim) {
    if (p.is_coordinates()) {
        const auto& cs = p.coordinate_list();
        Matrix e = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(cs.size()));
        for (std::size_t j = 0; j < cs.size(); ++j) e(static_cast<Eigen::Index>(cs[j]), static_cast<Eigen::Index>(j)) = 1.0;
        return e;
    }
    return p.at(time, dim);
}

double mu_slack(double tail_eps) { return tail_eps + 1e-12; }

/// Weight w(τ) = w1(τ) + c2·w2(τ).
struct CombinedWeight {
    EnvelopeForm w1;
    double c2 = 0.0;
    EnvelopeForm w2;
    double operator()(double t) const { return c2 == 0.0 ? w1(t) : w1(t) + c2 * w2(t); }
};

/// Ratio test over a stream of nonnegative terms.
class DecayTracker {
public:
    /// Returns true when the stream has decreased for kRatioRun consecutive terms.
    bool feed(double term) {
        if (have_prev_) {
            const bool decreasing = term < prev_ || (term == 0.0 && prev_ == 0.0);
            if (decreasing) {
                ++run_;
                nondecreasing_ = 0;
                ratios_[pos_++ % kRatioRun] = prev_ > 0.0 ? term / prev_ : 0.0;
            } else {
                run_ = 0;
                ++nondecreasing_;
            }
        }
        prev_ = term;
        have_prev_ = true;
        return run_ >= kRatioRun;
    }
    double ratio() const { return *std::max_element(ratios_.begin(), ratios_.end()); }
    bool stalled() const { return nondecreasing_ >= kNoDecayRun; }

private:
    double prev_ = 0.0;
    bool have_prev_ = false;
    int run_ = 0;
    int nondecreasing_ = 0;
    std::size_t pos_ = 0;
    std::array<double, kRatioRun> ratios_{};
};

[[noreturn]] void throw_no_decay(const std::string& label, const std::string& where) {
    throw NoDecayDetected("scale " + label + ": terms of the unstable series do not decay " + where +
                          "; the scale is likely misclassified as unstable");
}

/// Truncated unstable rows at time n for several weights sharing the cocycle terms.
std::vector<RowSum> unstable_rows(const SystemBundle& b, std::size_t k, std::size_t n,
                                  const std::vector<CombinedWeight>& weights, double target) {
    const auto& scale = b.decomposition.scale(k);
    const auto& env = b.envelope(k);
    const auto d = static_cast<Eigen::Index>(b.dim);
    std::vector<RowSum> rows(weights.size());
    std::vector<DecayTracker> trackers(weights.size());
    std::vector<bool> done(weights.size(), false);
    std::size_t open = weights.size();
    Matrix G = Matrix::Identity(d, d);
    for (std::size_t l = n + 1; open > 0; ++l) {
        const std::size_t len = l - n;
        if (len > kMaxRowTerms) throw_no_decay(scale.label, "within the row length cap");
        G = G * b.linear.inverse_step(l - 1);
        const double norm = spectral_norm(G * norm_factor(scale.projection, static_cast<double>(l), b.dim));
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (done[i]) continue;
            const double wl = weights[i](static_cast<double>(l));
            const double term = norm * wl;
            rows[i].sum += term;
            rows[i].length = len;
            bool finished = false;
            if (wl == 0.0) {
                rows[i].tail = 0.0;
                finished = true;
            } else if (env.decay) {
                const double c = env.decay->c, rho = env.decay->rho;
                rows[i].tail = c * std::pow(rho, static_cast<double>(len + 1)) / (1.0 - rho) *
                               weights[i](static_cast<double>(l + 1));
                finished = rows[i].tail <= target;
            } else {
                if (trackers[i].feed(term)) {
                    const double r = trackers[i].ratio();
                    if (r < 1.0) {
                        rows[i].tail = 2.0 * term * r / (1.0 - r);
                        finished = rows[i].tail <= target;
                    }
                }
                if (trackers[i].stalled()) throw_no_decay(scale.label, "over 50 consecutive steps at n = " + std::to_string(n));
            }
            if (finished) {
                done[i] = true;
                --open;
            }
        }
    }
    return rows;
}

double simpson(std::size_t j, double h, const std::function<double(std::size_t)>& f) {
    if (j == 0) return 0.0;
    if (j == 1) return 0.5 * h * (f(0) + f(1));
    auto simpson_even = [&](std::size_t a, std::size_t m) {
        double s = f(a) + f(a + m);
        for (std::size_t i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i);
        return s * h / 3.0;
    };
    if (j % 2 == 0) return simpson_even(0, j);
    // Odd count: Simpson on the first j-3 intervals, 3/8 rule on the last three.
    const double head = j > 3 ? simpson_even(0, j - 3) : 0.0;
    return head + 3.0 * h / 8.0 * (f(j - 3) + 3.0 * f(j - 2) + 3.0 * f(j - 1) + f(j));
}

/// Norms ‖T(t, t ∓ iΔ) P^k(t ∓ iΔ)‖, i = 0, 1, ..., extended on demand.
class NormSequence {
public:
    virtual ~NormSequence() = default;
    virtual double at(std::size_t i) = 0;
};

/// Autonomous A and constant P: ‖e^{±A iΔ} P‖ does not depend on t, tabulate once.
class TableSequence final : public NormSequence {
public:
    TableSequence(const SystemBundle& b, std::size_t k, double h)
        : rk_(b.linear, h), m_(norm_factor(b.decomposition.scale(k).projection, 0.0, b.dim)) {
        norms_.push_back(spectral_norm(m_));
    }
    double at(std::size_t i) override {
        while (norms_.size() <= i) {
            rk_.step(0.0, m_);
            norms_.push_back(spectral_norm(m_));
        }
        return norms_[i];
    }

private:
    AffineRk4 rk_;
    Matrix m_;
    std::vector<double> norms_;
};

/// General case: march Y(s) = T(t, s) in s by Y' = -Y A(s) from Y(t) = Id.
class MarchSequence final : public NormSequence {
public:
    MarchSequence(const SystemBundle& b, std::size_t k, double t, double h)
        : b_(b), k_(k), s_(t), h_(h), y_(Matrix::Identity(static_cast<Eigen::Index>(b.dim), static_cast<Eigen::Index>(b.dim))) {
        norms_.push_back(norm_here());
    }
    double at(std::size_t i) override {
        while (norms_.size() <= i) {
            step();
            norms_.push_back(norm_here());
        }
        return norms_[i];
    }

private:
    double norm_here() const {
        return spectral_norm(y_ * norm_factor(b_.decomposition.scale(k_).projection, s_, b_.dim));
    }
    void step() {
        const double h = h_;
        const Matrix A0 = b_.linear.at(s_), Am = b_.linear.at(s_ + 0.5 * h), A1 = b_.linear.at(s_ + h);
        const Matrix K1 = -y_ * A0;
        const Matrix K2 = -(y_ + 0.5 * h * K1) * Am;
        const Matrix K3 = -(y_ + 0.5 * h * K2) * Am;
        const Matrix K4 = -(y_ + h * K3) * A1;
        y_ += (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
        s_ += h;
        if (s_ < 0.0 && s_ > -1e-12) s_ = 0.0;
    }
    const SystemBundle& b_;
    std::size_t k_;
    double s_;
    double h_;
    Matrix y_;
    std::vector<double> norms_;
};

bool fast_path(const SystemBundle& b, std::size_t k) {
    return b.linear.autonomous() && b.decomposition.scale(k).projection.time_invariant();
}

/// ∫_t^{t+L} N(s - t) w(s) ds plus a tail bound, L chosen so the tail is ≤ target.
CtRow ct_row_from(NormSequence& seq, const SystemBundle& b, std::size_t k, double t, const CombinedWeight& w,
                  double target, double h) {
    const auto& env = b.envelope(k);
    const auto& label = b.decomposition.scale(k).label;
    const auto q = std::max<std::size_t>(2, 2 * static_cast<std::size_t>(std::llround(kCtSample / (2.0 * h))));
    const auto cap = static_cast<std::size_t>(std::ceil(kCtCap / h));
    CtRow row;
    std::size_t nodes = 0;
    if (env.decay) {
        const double c = env.decay->c, rho = env.decay->rho;
        const double lr = -std::log(rho);
        for (std::size_t m = 0;; ++m) {
            nodes = m * q;
            const double len = static_cast<double>(nodes) * h;
            row.tail = w(t + len) * c * std::pow(rho, len) / lr;
            if (row.tail <= target || nodes >= cap) break;
        }
    } else {
        DecayTracker tracker;
        bool settled = false;
        double last_ratio = 1.0;
        for (std::size_t m = 0;; ++m) {
            nodes = m * q;
            const double len = static_cast<double>(nodes) * h;
            const double wv = w(t + len);
            const double g = seq.at(nodes) * wv;
            if (wv == 0.0) {
                row.tail = 0.0;
                settled = true;
                break;
            }
            if (tracker.feed(g)) {
                last_ratio = tracker.ratio();
                if (last_ratio < 1.0) {
                    row.tail = 2.0 * static_cast<double>(q) * h * g / (1.0 - last_ratio);
                    if (row.tail <= target) {
                        settled = true;
                        break;
                    }
                }
            }
            if (tracker.stalled()) throw_no_decay(label, "over 50 consecutive samples at t = " + fmt17(t));
            if (nodes >= cap) break;
        }
        if (!settled && !(last_ratio < 1.0)) throw_no_decay(label, "within the 50 time-unit cap");
    }
    row.length = static_cast<double>(nodes) * h;
    row.integral = simpson(nodes, h, [&](std::size_t i) { return seq.at(i) * w(t + static_cast<double>(i) * h); });
    return row;
}

std::vector<std::size_t> output_nodes(std::size_t m, double h, std::size_t max_outputs) {
    auto stride = std::max<std::size_t>(2, 2 * static_cast<std::size_t>(std::llround(0.025 / h)));
    while (m / stride > max_outputs) stride *= 2;
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j <= m; j += stride) out.push_back(j);
    if (out.back() != m) out.push_back(m);
    return out;
}

void finish_stabilization(ScaleSums& s, const std::vector<double>& times, const std::vector<double>& sup_nu,
                          const std::vector<double>& sup_mu) {
    if (times.empty()) return;
    const double horizon = times.back();
    std::size_t q = 0;
    while (q < times.size() && times[q] < 0.75 * horizon) ++q;
    if (q >= times.size()) q = times.size() - 1;
    const double rise = std::max(sup_nu.back() - sup_nu[q], sup_mu.back() - sup_mu[q]);
    s.stabilized = rise < 1e-6;
    if (!s.stabilized) s.status = "not-stabilized";
}

void set_verdicts(ScaleSums& s, double tail_eps) {
    s.c1_finite = std::isfinite(s.s_nu);
    s.c2_mu = std::isfinite(s.s_mu) && s.s_mu <= s.lambda + mu_slack(tail_eps);
}

ScaleSums make_sums(const SystemBundle& b, std::size_t k, double horizon) {
    ScaleSums s;
    s.index = k;
    s.label = b.decomposition.scale(k).label;
    s.cls = b.decomposition.scale(k).cls;
    s.lambda = b.envelope(k).lambda;
    s.horizon = horizon;
    return s;
}

}  // namespace

double Certificate::apriori_bound() const {
    if (!(lambda_total < 1.0)) throw DomainError("a-priori bound needs lambda_total < 1");
    return c_nu / (1.0 - lambda_total);
}

// ---------------------------------------------------------------------------
// Discrete sums

ScaleSums stable_scale_sums(const SystemBundle& b, std::size_t k, std::size_t horizon) {
    if (b.kind != TimeKind::discrete) throw DomainError("stable_scale_sums needs a discrete bundle");
    if (b.decomposition.scale(k).cls != ScaleClass::stable) throw DomainError("scale is not stable");
    const auto& env = b.envelope(k);
    const auto& proj = b.decomposition.scale(k).projection;
    ScaleSums s = make_sums(b, k, static_cast<double>(horizon));

    std::vector<Matrix> q;  // Q_l = 𝒜(n, l) E_l
    std::vector<double> wn, wm;
    std::vector<double> times{0.0}, sup_nu{0.0}, sup_mu{0.0};
    Matrix tmp;
    for (std::size_t n = 1; n <= horizon; ++n) {
        const Matrix& A = b.linear.step(n - 1);
        for (auto& m : q) {
            tmp.noalias() = A * m;
            m.swap(tmp);
        }
        q.push_back(norm_factor(proj, static_cast<double>(n), b.dim));
        wn.push_back(env.nu(static_cast<double>(n)));
        wm.push_back(env.mu(static_cast<double>(n)));
        double row_nu = 0.0, row_mu = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (wn[i] == 0.0 && wm[i] == 0.0) continue;
            const double norm = spectral_norm(q[i]);
            row_nu += norm * wn[i];
            row_mu += norm * wm[i];
        }
        s.s_nu = std::max(s.s_nu, row_nu);
        s.s_mu = std::max(s.s_mu, row_mu);
        times.push_back(static_cast<double>(n));
        sup_nu.push_back(s.s_nu);
        sup_mu.push_back(s.s_mu);
    }
    s.max_length = static_cast<double>(horizon);
    finish_stabilization(s, times, sup_nu, sup_mu);
    set_verdicts(s, b.solver.tail_eps);
    return s;
}

double stable_row_direct(const SystemBundle& b, std::size_t k, std::size_t n, Weight w) {
    const auto& env = b.envelope(k);
    double sum = 0.0;
    for (std::size_t l = 1; l <= n; ++l) {
        const double t = static_cast<double>(l);
        const double weight = w == Weight::nu ? env.nu(t) : env.mu(t);
        sum += spectral_norm(linear_transit(b, n, l) * b.decomposition.projection(k, t)) * weight;
    }
    return sum;
}

RowSum unstable_row(const SystemBundle& b, std::size_t k, std::size_t n, const EnvelopeForm& w1, double c2,
                    const EnvelopeForm& w2, double tail_target) {
    return unstable_rows(b, k, n, {CombinedWeight{w1, c2, w2}}, tail_target).front();
}

ScaleSums unstable_scale_sums(const SystemBundle& b, std::size_t k, std::size_t horizon, double tail_eps) {
    if (b.kind != TimeKind::discrete) throw DomainError("unstable_scale_sums needs a discrete bundle");
    if (b.decomposition.scale(k).cls != ScaleClass::unstable) throw DomainError("scale is not unstable");
    const auto& env = b.envelope(k);
    ScaleSums s = make_sums(b, k, static_cast<double>(horizon));
    const std::vector<CombinedWeight> weights{{env.nu, 0.0, env.nu}, {env.mu, 0.0, env.mu}};
    std::vector<double> times, sup_nu, sup_mu;
    for (std::size_t n = 0; n <= horizon; ++n) {
        const auto rows = unstable_rows(b, k, n, weights, tail_eps);
        s.s_nu = std::max(s.s_nu, rows[0].sum + rows[0].tail);
        s.s_mu = std::max(s.s_mu, rows[1].sum + rows[1].tail);
        s.tail_bound = std::max({s.tail_bound, rows[0].tail, rows[1].tail});
        s.max_length = std::max({s.max_length, static_cast<double>(rows[0].length), static_cast<double>(rows[1].length)});
        times.push_back(static_cast<double>(n));
        sup_nu.push_back(s.s_nu);
        sup_mu.push_back(s.s_mu);
    }
    finish_stabilization(s, times, sup_nu, sup_mu);
    set_verdicts(s, tail_eps);
    return s;
}

// ---------------------------------------------------------------------------
// Continuous integrals

CtRow ct_unstable_row(const SystemBundle& b, std::size_t k, double t, const EnvelopeForm& w1, double c2,
                      const EnvelopeForm& w2, double tail_target, double step) {
    const CombinedWeight w{w1, c2, w2};
    if (fast_path(b, k)) {
        TableSequence seq(b, k, -step);
        return ct_row_from(seq, b, k, t, w, tail_target, step);
    }
    MarchSequence seq(b, k, t, step);
    return ct_row_from(seq, b, k, t, w, tail_target, step);
}

ScaleSums ct_scale_integrals(const SystemBundle& b, std::size_t k, double step, double horizon, double tail_eps) {
    if (b.kind != TimeKind::continuous) throw DomainError("ct_scale_integrals needs a continuous bundle");
    const auto& scale = b.decomposition.scale(k);
    if (scale.cls == ScaleClass::center) throw DomainError("center scales carry no integrals");
    const auto& env = b.envelope(k);
    const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(horizon / step)));
    const double h = horizon / static_cast<double>(m);
    ScaleSums s = make_sums(b, k, horizon);
    const bool fast = fast_path(b, k);
    const auto outputs = output_nodes(m, h, fast ? 4000 : 200);
    const CombinedWeight wn{env.nu, 0.0, env.nu}, wm{env.mu, 0.0, env.mu};

    std::vector<double> times, sup_nu, sup_mu;
    if (scale.cls == ScaleClass::stable) {
        std::unique_ptr<TableSequence> table;
        if (fast) table = std::make_unique<TableSequence>(b, k, h);
        for (std::size_t j : outputs) {
            const double t = static_cast<double>(j) * h;
            std::unique_ptr<NormSequence> march;
            NormSequence* seq = table.get();
            if (!fast) {
                march = std::make_unique<MarchSequence>(b, k, t, -h);
                seq = march.get();
            }
            // ∫_0^t N(t - s) w(s) ds with s = i h, N indexed by j - i.
            const double in = simpson(j, h, [&](std::size_t i) { return seq->at(j - i) * wn(static_cast<double>(i) * h); });
            const double im = simpson(j, h, [&](std::size_t i) { return seq->at(j - i) * wm(static_cast<double>(i) * h); });
            s.s_nu = std::max(s.s_nu, in);
            s.s_mu = std::max(s.s_mu, im);
            times.push_back(t);
            sup_nu.push_back(s.s_nu);
            sup_mu.push_back(s.s_mu);
        }
        s.max_length = horizon;
    } else {
        std::unique_ptr<TableSequence> table;
        if (fast) table = std::make_unique<TableSequence>(b, k, -h);
        for (std::size_t j : outputs) {
            const double t = static_cast<double>(j) * h;
            std::unique_ptr<NormSequence> march;
            NormSequence* seq = table.get();
            if (!fast) {
                march = std::make_unique<MarchSequence>(b, k, t, h);
                seq = march.get();
            }
            const CtRow rn = ct_row_from(*seq, b, k, t, wn, tail_eps, h);
            const CtRow rm = ct_row_from(*seq, b, k, t, wm, tail_eps, h);
            s.s_nu = std::max(s.s_nu, rn.integral + rn.tail);
            s.s_mu = std::max(s.s_mu, rm.integral + rm.tail);
            s.tail_bound = std::max({s.tail_bound, rn.tail, rm.tail});
            s.max_length = std::max({s.max_length, rn.length, rm.length});
            times.push_back(t);
            sup_nu.push_back(s.s_nu);
            sup_mu.push_back(s.s_mu);
        }
    }
    finish_stabilization(s, times, sup_nu, sup_mu);
    set_verdicts(s, tail_eps);
    return s;
}

// ---------------------------------------------------------------------------
// Audit

PerturbationAudit perturbation_bound_audit(const SystemBundle& b, std::size_t sample_count, std::uint64_t seed) {
    PerturbationAudit audit;
    audit.samples = sample_count;
    std::vector<std::size_t> ks;
    for (std::size_t k = 0; k < b.decomposition.size(); ++k) {
        if (b.decomposition.scale(k).cls == ScaleClass::center) continue;
        ks.push_back(k);
        audit.labels.push_back(b.decomposition.scale(k).label);
    }
    audit.max_bound_ratio.assign(ks.size(), 0.0);
    audit.max_lipschitz_ratio.assign(ks.size(), 0.0);
    if (ks.empty()) return audit;

    const bool discrete = b.kind == TimeKind::discrete;
    const double horizon = b.solver.horizon_or_default(b.kind);
    const auto d = static_cast<Eigen::Index>(b.dim);
    constexpr double kRadius = 10.0;
    constexpr double kSlack = 1e-9;
    Rng rng(seed);
    Vector fx, fy, px, pd;
    std::vector<bool> reported_bound(ks.size(), false), reported_lip(ks.size(), false);

    auto ratio = [](double num, double den) {
        if (num == 0.0) return 0.0;
        if (den == 0.0) return std::numeric_limits<double>::infinity();
        return num / den;
    };

    for (std::size_t i = 0; i < sample_count; ++i) {
        // Envelope time τ and perturbation time: discrete ν_n bounds f_{n-1}.
        double tau, ft;
        if (discrete) {
            tau = static_cast<double>(rng.integer(1, static_cast<std::uint64_t>(std::max(1.0, horizon))));
            ft = tau - 1.0;
        } else {
            tau = rng.uniform(0.0, horizon);
            ft = tau;
        }
        const Vector x = rng.ball(d, kRadius);
        const double dist = std::pow(10.0, rng.uniform(-4.0, 1.0));
        const Vector y = x + dist * rng.direction(d);
        b.perturbation.evaluate_into(ft, x, fx);
        b.perturbation.evaluate_into(ft, y, fy);
        const Vector diff = fx - fy;
        const double dxy = (x - y).norm();
        for (std::size_t j = 0; j < ks.size(); ++j) {
            const auto k = ks[j];
            const auto& env = b.envelope(k);
            const auto& proj = b.decomposition.scale(k).projection;
            proj.apply(tau, fx, px);
            proj.apply(tau, diff, pd);
            const double rb = ratio(px.norm(), env.nu(tau));
            const double rl = ratio(pd.norm(), env.mu(tau) * dxy);
            audit.max_bound_ratio[j] = std::max(audit.max_bound_ratio[j], rb);
            audit.max_lipschitz_ratio[j] = std::max(audit.max_lipschitz_ratio[j], rl);
            if (rb > 1.0 + kSlack && !reported_bound[j]) {
                reported_bound[j] = true;
                audit.counterexamples.push_back("scale " + audit.labels[j] + ": bound ratio " + fmt17(rb) +
                                                " at time " + fmt17(tau));
            }
            if (rl > 1.0 + kSlack && !reported_lip[j]) {
                reported_lip[j] = true;
                audit.counterexamples.push_back("scale " + audit.labels[j] + ": Lipschitz ratio " + fmt17(rl) +
                                                " at time " + fmt17(tau));
            }
        }
    }
    if (!audit.counterexamples.empty()) audit.status = "counterexamples";
    return audit;
}

// ---------------------------------------------------------------------------

Certificate certify(const SystemBundle& b) {
    Certificate c;
    c.kind = b.kind;
    c.horizon = b.solver.horizon_or_default(b.kind);
    c.step = b.solver.ode_step;
    for (std::size_t k = 0; k < b.decomposition.size(); ++k) {
        const auto cls = b.decomposition.scale(k).cls;
        if (cls == ScaleClass::center) continue;
        ScaleSums s;
        if (b.kind == TimeKind::discrete) {
            const auto n = static_cast<std::size_t>(std::llround(c.horizon));
            s = cls == ScaleClass::stable ? stable_scale_sums(b, k, n) : unstable_scale_sums(b, k, n, b.solver.tail_eps);
        } else {
            s = ct_scale_integrals(b, k, b.solver.ode_step, c.horizon, b.solver.tail_eps);
        }
        c.lambda_total += s.lambda;
        c.c_nu += s.s_nu;
        if (!s.stabilized) c.warnings.push_back("scale " + s.label + " sums not stabilized within the horizon");
        if (!s.c1_finite) c.failing_conditions.push_back("scale " + s.label + ": nu-sum not finite");
        if (!s.c2_mu)
            c.failing_conditions.push_back("scale " + s.label + ": mu-sum " + fmt17(s.s_mu) + " > lambda " + fmt17(s.lambda));
        if (!s.c1_finite || !s.c2_mu) c.failing_scales.push_back(s.label);
        c.scales.push_back(std::move(s));
    }
    c.contraction = c.lambda_total < 1.0;
    if (!c.contraction) c.failing_conditions.push_back("contraction: lambda_total " + fmt17(c.lambda_total) + " >= 1");
    c.audit = perturbation_bound_audit(b, b.solver.audit_samples, b.solver.seed);
    if (!c.audit.consistent()) c.failing_conditions.push_back("audit: " + c.audit.counterexamples.front());
    c.passed = c.failing_conditions.empty();
    return c;
}

std::string certificate_report(const Certificate& c) {
    std::ostringstream out;
    auto yes = [](bool v) { return v ? "pass" : "fail"; };
    out << "kind = " << to_string(c.kind) << "\n";
    out << "horizon = " << fmt17(c.horizon) << "\n";
    if (c.kind == TimeKind::continuous) out << "step = " << fmt17(c.step) << "\n";
    out << "lambda_total = " << fmt17(c.lambda_total) << "\n";
    out << "c_nu = " << fmt17(c.c_nu) << "\n";
    out << "contraction = " << yes(c.contraction) << "\n";
    for (const auto& s : c.scales) {
        const std::string p = "scale." + s.label + ".";
        out << p << "class = " << to_string(s.cls) << "\n";
        out << p << "lambda = " << fmt17(s.lambda) << "\n";
        out << p << "s_nu = " << fmt17(s.s_nu) << "\n";
        out << p << "s_mu = " << fmt17(s.s_mu) << "\n";
        out << p << "tail_bound = " << fmt17(s.tail_bound) << "\n";
        out << p << "stabilized = " << (s.stabilized ? "true" : "false") << "\n";
        out << p << "verdict = " << yes(s.c1_finite && s.c2_mu) << "\n";
    }
    out << "audit.status = " << c.audit.status << "\n";
    out << "audit.samples = " << c.audit.samples << "\n";
    for (std::size_t j = 0; j < c.audit.labels.size(); ++j) {
        out << "audit.scale." << c.audit.labels[j] << ".max_bound_ratio = " << fmt17(c.audit.max_bound_ratio[j]) << "\n";
        out << "audit.scale." << c.audit.labels[j] << ".max_lipschitz_ratio = " << fmt17(c.audit.max_lipschitz_ratio[j]) << "\n";
    }
    std::string fs;
    for (const auto& l : c.failing_scales) fs += (fs.empty() ? "" : ",") + l;
    out << "failing_scales = " << fs << "\n";
    for (std::size_t i = 0; i < c.failing_conditions.size(); ++i)
        out << "failing_condition." << i + 1 << " = " << c.failing_conditions[i] << "\n";
    for (std::size_t i = 0; i < c.warnings.size(); ++i) out << "warning." << i + 1 << " = " << c.warnings[i] << "\n";
    out << "verdict = " << yes(c.passed) << "\n";
    return out.str();
}

std::string certificate_csv(const Certificate& c) {
    std::ostringstream out;
    out << "label,class,lambda,s_nu,s_mu,tail_bound,max_length,stabilized,verdict\n";
    for (const auto& s : c.scales) {
        out << s.label << ',' << to_string(s.cls) << ',' << fmt17(s.lambda) << ',' << fmt17(s.s_nu) << ','
            << fmt17(s.s_mu) << ',' << fmt17(s.tail_bound) << ',' << fmt17(s.max_length) << ','
            << (s.stabilized ? "true" : "false") << ',' << ((s.c1_finite && s.c2_mu) ? "pass" : "fail") << "\n";
    }
    return out.str();
}

}  // namespace mslin
