#include "mslin/system_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace mslin {

// ---------------------------------------------------------------------------
// LinearPart

namespace {

void check_square(const Matrix& a, std::size_t dim, const char* what) {
    if (static_cast<std::size_t>(a.rows()) != dim || static_cast<std::size_t>(a.cols()) != dim)
        throw ConfigError(std::string(what) + ": expected a " + std::to_string(dim) + "x" +
                          std::to_string(dim) + " matrix");
}

}  // namespace

LinearPart LinearPart::constant_diagonal(Vector diagonal, double sigma_min_floor) {
    if (diagonal.size() == 0) throw ConfigError("linear: empty diagonal");
    LinearPart lp;
    lp.form_ = Form::constant_diagonal;
    lp.dim_ = static_cast<std::size_t>(diagonal.size());
    lp.floor_ = sigma_min_floor;
    lp.diagonal_ = diagonal;
    lp.table_.push_back(diagonal.asDiagonal());
    const double smin = diagonal.cwiseAbs().minCoeff();
    lp.sigma_min_.push_back(smin);
    lp.inverse_table_.push_back(smin > 0.0 ? Matrix(diagonal.cwiseInverse().asDiagonal()) : Matrix());
    return lp;
}

LinearPart LinearPart::constant_matrix(Matrix a, double sigma_min_floor) {
    if (a.rows() == 0 || a.rows() != a.cols()) throw ConfigError("linear: constant matrix must be square");
    LinearPart lp;
    lp.form_ = Form::constant_matrix;
    lp.dim_ = static_cast<std::size_t>(a.rows());
    lp.floor_ = sigma_min_floor;
    const double smin = smallest_singular_value(a);
    lp.sigma_min_.push_back(smin);
    lp.inverse_table_.push_back(smin > 0.0 ? Matrix(a.partialPivLu().inverse()) : Matrix());
    lp.table_.push_back(std::move(a));
    return lp;
}

LinearPart LinearPart::per_step(std::vector<Matrix> steps, std::string source, double sigma_min_floor) {
    if (steps.empty()) throw ConfigError("linear: per-step table is empty");
    LinearPart lp;
    lp.form_ = Form::per_step;
    lp.dim_ = static_cast<std::size_t>(steps.front().rows());
    lp.floor_ = sigma_min_floor;
    lp.source_ = std::move(source);
    for (const auto& a : steps) {
        check_square(a, lp.dim_, "linear: per-step row");
        const double smin = smallest_singular_value(a);
        lp.sigma_min_.push_back(smin);
        lp.inverse_table_.push_back(smin > 0.0 ? Matrix(a.partialPivLu().inverse()) : Matrix());
    }
    lp.table_ = std::move(steps);
    return lp;
}

LinearPart LinearPart::function(std::size_t dim, std::function<Matrix(double)> fn, bool autonomous,
                                double sigma_min_floor) {
    LinearPart lp;
    lp.form_ = Form::function;
    lp.dim_ = dim;
    lp.floor_ = sigma_min_floor;
    lp.fn_ = std::move(fn);
    lp.fn_autonomous_ = autonomous;
    return lp;
}

bool LinearPart::autonomous() const {
    switch (form_) {
        case Form::constant_diagonal:
        case Form::constant_matrix: return true;
        case Form::per_step: return table_.size() == 1;
        case Form::function: return fn_autonomous_;
    }
    return false;
}

std::size_t LinearPart::table_index(std::size_t n) const {
    return std::min(n, table_.size() - 1);
}

Matrix LinearPart::at(double time) const {
    if (form_ == Form::function) {
        Matrix a = fn_(time);
        check_square(a, dim_, "linear: provider");
        return a;
    }
    if (form_ == Form::per_step) return table_[table_index(static_cast<std::size_t>(std::max(0.0, time)))];
    return table_.front();
}

Matrix LinearPart::step(std::size_t n) const {
    if (form_ == Form::function) return at(static_cast<double>(n));
    return table_[table_index(n)];
}

void LinearPart::require_invertible(std::size_t n) const {
    double smin;
    if (form_ == Form::function) {
        smin = smallest_singular_value(fn_(static_cast<double>(n)));
    } else {
        smin = sigma_min_[table_index(n)];
    }
    if (!(smin >= floor_)) {
        std::ostringstream msg;
        msg << "step matrix A_" << n << " has smallest singular value " << smin
            << " below the floor " << floor_;
        throw SingularStep(msg.str());
    }
}

Matrix LinearPart::inverse_step(std::size_t n) const {
    require_invertible(n);
    if (form_ == Form::function) return fn_(static_cast<double>(n)).partialPivLu().inverse();
    return inverse_table_[table_index(n)];
}

bool operator==(const LinearPart& a, const LinearPart& b) {
    if (a.form_ != b.form_ || a.dim_ != b.dim_ || a.floor_ != b.floor_) return false;
    if (a.form_ == LinearPart::Form::function) return false;
    if (a.table_.size() != b.table_.size()) return false;
    for (std::size_t i = 0; i < a.table_.size(); ++i)
        if (a.table_[i] != b.table_[i]) return false;
    return true;
}

// ---------------------------------------------------------------------------
// PerturbationPart

const char* to_string(Family family) {
    switch (family) {
        case Family::zero: return "zero";
        case Family::constant: return "constant";
        case Family::scaled_sine: return "scaled_sine";
        case Family::scaled_tanh: return "scaled_tanh";
        case Family::decayed_scaled_sine: return "decayed_scaled_sine";
    }
    return "?";
}

Family parse_family(const std::string& tag) {
    for (Family f : {Family::zero, Family::constant, Family::scaled_sine, Family::scaled_tanh,
                     Family::decayed_scaled_sine})
        if (tag == to_string(f)) return f;
    throw ConfigError("unknown perturbation family '" + tag + "'");
}

PerturbationPart::PerturbationPart(std::size_t dim, TimeKind kind, std::vector<PerturbationTerm> terms)
    : dim_(dim), kind_(kind), terms_(std::move(terms)) {
    for (const auto& t : terms_) {
        if (t.component >= dim_)
            throw ConfigError("perturbation: component " + std::to_string(t.component + 1) +
                              " exceeds dimension " + std::to_string(dim_));
        if (t.input >= dim_)
            throw ConfigError("perturbation: input coordinate " + std::to_string(t.input + 1) +
                              " exceeds dimension " + std::to_string(dim_));
        if (!(t.amplitude >= 0.0) || !(t.lipschitz >= 0.0))
            throw ConfigError("perturbation: amplitude and lipschitz must be nonnegative");
        if (t.family == Family::decayed_scaled_sine) {
            if (kind_ == TimeKind::discrete && !(t.decay_rate > 0.0 && t.decay_rate <= 1.0))
                throw ConfigError("perturbation: discrete decay-rate must lie in (0, 1]");
            if (kind_ == TimeKind::continuous && !(t.decay_rate >= 0.0))
                throw ConfigError("perturbation: continuous decay-rate must be nonnegative");
        }
    }
}

double PerturbationPart::decay_factor(const PerturbationTerm& term, double time) const {
    if (term.family != Family::decayed_scaled_sine) return 1.0;
    if (kind_ == TimeKind::discrete) return std::pow(term.decay_rate, time);
    return std::exp(-term.decay_rate * time);
}

void PerturbationPart::evaluate_into(double time, const Vector& x, Vector& out) const {
    out.setZero(static_cast<Eigen::Index>(dim_));
    for (const auto& t : terms_) {
        double v = 0.0;
        const double a = t.amplitude;
        switch (t.family) {
            case Family::zero: break;
            case Family::constant: v = a; break;
            case Family::scaled_sine:
            case Family::decayed_scaled_sine:
                if (a > 0.0) v = a * std::sin((t.lipschitz / a) * x(t.input)) * decay_factor(t, time);
                break;
            case Family::scaled_tanh:
                if (a > 0.0) v = a * std::tanh((t.lipschitz / a) * x(t.input));
                break;
        }
        out(t.component) += v;
    }
}

Vector PerturbationPart::operator()(double time, const Vector& x) const {
    Vector out;
    evaluate_into(time, x, out);
    return out;
}

bool PerturbationPart::identically_zero() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const PerturbationTerm& t) {
        return t.family == Family::zero || t.amplitude == 0.0;
    });
}

double PerturbationPart::lipschitz_bound(double time) const {
    std::vector<double> per_component(dim_, 0.0);
    for (const auto& t : terms_) {
        if (t.family == Family::zero || t.family == Family::constant) continue;
        per_component[t.component] += t.lipschitz * decay_factor(t, time);
    }
    double sq = 0.0;
    for (double l : per_component) sq += l * l;
    return std::sqrt(sq);
}

bool PerturbationPart::components_vanish(const std::vector<std::size_t>& components) const {
    for (const auto& t : terms_) {
        if (t.family == Family::zero || t.amplitude == 0.0) continue;
        if (std::find(components.begin(), components.end(), t.component) != components.end()) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Envelopes

double EnvelopeForm::operator()(double time) const {
    switch (kind) {
        case Kind::constant: return c;
        case Kind::geometric: return c * std::pow(r, time);
        case Kind::exponential: return c * std::exp(-r * time);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Projections and decomposition

const char* to_string(ScaleClass cls) {
    switch (cls) {
        case ScaleClass::stable: return "stable";
        case ScaleClass::unstable: return "unstable";
        case ScaleClass::center: return "center";
    }
    return "?";
}

Projection Projection::coordinates(std::vector<std::size_t> coords) {
    Projection p;
    p.kind_ = Kind::coordinates;
    std::sort(coords.begin(), coords.end());
    coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    p.coords_ = std::move(coords);
    return p;
}

Projection Projection::matrix(Matrix m) {
    Projection p;
    p.kind_ = Kind::matrix;
    p.matrix_ = std::move(m);
    return p;
}

Projection Projection::time_varying(std::function<Matrix(double)> fn) {
    Projection p;
    p.kind_ = Kind::function;
    p.fn_ = std::move(fn);
    return p;
}

Matrix Projection::at(double time, std::size_t dim) const {
    switch (kind_) {
        case Kind::coordinates: {
            Matrix m = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
            for (auto c : coords_)
                if (c < dim) m(c, c) = 1.0;
            return m;
        }
        case Kind::matrix: return matrix_;
        case Kind::function: return fn_(time);
    }
    return {};
}

void Projection::apply(double time, const Vector& v, Vector& out) const {
    switch (kind_) {
        case Kind::coordinates:
            out.setZero(v.size());
            for (auto c : coords_) out(c) = v(c);
            return;
        case Kind::matrix: out.noalias() = matrix_ * v; return;
        case Kind::function: out.noalias() = fn_(time) * v; return;
    }
}

bool operator==(const Projection& a, const Projection& b) {
    if (a.kind_ != b.kind_) return false;
    switch (a.kind_) {
        case Projection::Kind::coordinates: return a.coords_ == b.coords_;
        case Projection::Kind::matrix: return a.matrix_ == b.matrix_;
        case Projection::Kind::function: return false;
    }
    return false;
}

Decomposition::Decomposition(std::size_t dim, std::vector<Scale> scales)
    : dim_(dim), scales_(std::move(scales)) {
    std::set<std::string> seen;
    for (const auto& s : scales_) {
        if (!seen.insert(s.label).second) throw ConfigError("decomposition: duplicate scale label '" + s.label + "'");
        if (s.projection.is_coordinates()) {
            for (auto c : s.projection.coordinate_list())
                if (c >= dim_)
                    throw ConfigError("decomposition: scale " + s.label + " projects onto coordinate " +
                                      std::to_string(c + 1) + " beyond dimension " + std::to_string(dim_));
        } else if (s.projection.is_matrix()) {
            const Matrix& m = s.projection.constant_matrix();
            if (static_cast<std::size_t>(m.rows()) != dim_ || static_cast<std::size_t>(m.cols()) != dim_)
                throw ConfigError("decomposition: scale " + s.label + " projection matrix has wrong shape");
        }
    }
}

std::vector<std::size_t> Decomposition::indices(ScaleClass cls) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < scales_.size(); ++k)
        if (scales_[k].cls == cls) out.push_back(k);
    return out;
}

std::optional<std::size_t> Decomposition::find(const std::string& label) const {
    for (std::size_t k = 0; k < scales_.size(); ++k)
        if (scales_[k].label == label) return k;
    return std::nullopt;
}

Matrix Decomposition::projection(std::size_t k, double time) const {
    return scales_.at(k).projection.at(time, dim_);
}

Matrix Decomposition::class_projection(ScaleClass cls, double time) const {
    const auto d = static_cast<Eigen::Index>(dim_);
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& s : scales_)
        if (s.cls == cls) sum += s.projection.at(time, dim_);
    return sum;
}

bool Decomposition::time_invariant() const {
    return std::all_of(scales_.begin(), scales_.end(),
                       [](const Scale& s) { return s.projection.time_invariant(); });
}

std::vector<std::string> validate_decomposition(const Decomposition& dec, const std::vector<double>& times,
                                                double eps) {
    std::vector<std::string> out;
    std::set<std::string> reported;
    auto report = [&](const std::string& key, double time, double value) {
        if (!reported.insert(key).second) return;
        std::ostringstream msg;
        msg << key << " (time " << time << ", norm " << value << ")";
        out.push_back(msg.str());
    };
    const auto d = static_cast<Eigen::Index>(dec.dim());
    const Matrix id = Matrix::Identity(d, d);
    for (double t : times) {
        std::vector<Matrix> ps;
        Matrix sum = Matrix::Zero(d, d);
        for (std::size_t k = 0; k < dec.size(); ++k) {
            ps.push_back(dec.projection(k, t));
            sum += ps.back();
        }
        for (std::size_t k = 0; k < ps.size(); ++k) {
            const double idem = spectral_norm(ps[k] * ps[k] - ps[k]);
            if (idem > eps) report("P^" + dec.scale(k).label + " not idempotent", t, idem);
            for (std::size_t l = 0; l < ps.size(); ++l) {
                if (l == k) continue;
                const double cross = spectral_norm(ps[k] * ps[l]);
                if (cross > eps) report("P^" + dec.scale(k).label + "P^" + dec.scale(l).label + " != 0", t, cross);
            }
        }
        const double resolution = spectral_norm(sum - id);
        if (resolution > eps) report("sum of P^k != Id", t, resolution);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bundle

double SolverParams::horizon_or_default(TimeKind kind) const {
    if (horizon) return *horizon;
    return kind == TimeKind::discrete ? 256.0 : 50.0;
}

double SolverParams::tol_inv_or_default() const {
    if (tol_inv) return *tol_inv;
    return std::min(1e-12, tol / 10.0);
}

std::vector<double> default_check_times(TimeKind kind) {
    std::vector<double> times;
    if (kind == TimeKind::discrete) {
        for (double n : {0.0, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 21.0, 34.0, 55.0, 89.0, 144.0, 233.0})
            times.push_back(n);
    } else {
        for (int i = 0; i <= 20; ++i) times.push_back(0.5 * i);
    }
    return times;
}

const ScaleEnvelope& SystemBundle::envelope(std::size_t k) const {
    const auto& s = decomposition.scale(k);
    if (!s.envelope) throw ConfigError("scale " + s.label + " has no envelope");
    return *s.envelope;
}

void SystemBundle::validate() const {
    if (dim == 0) throw ConfigError("system.dimension must be positive");
    if (linear.dim() != dim)
        throw ConfigError("dimension mismatch: linear part is " + std::to_string(linear.dim()) +
                          "-dimensional, system.dimension is " + std::to_string(dim));
    if (perturbation.dim() != dim)
        throw ConfigError("dimension mismatch: perturbation part is " + std::to_string(perturbation.dim()) +
                          "-dimensional, system.dimension is " + std::to_string(dim));
    if (perturbation.kind() != kind) throw ConfigError("perturbation time kind does not match system kind");
    if (decomposition.dim() != dim) throw ConfigError("dimension mismatch: decomposition");
    if (decomposition.size() == 0) throw ConfigError("decomposition.scales must be non-empty");
    if (kind == TimeKind::continuous && linear.form() == LinearPart::Form::per_step)
        throw ConfigError("per-step-file linear parts are only allowed for discrete systems");
    for (const auto& s : decomposition.scales()) {
        if (s.cls == ScaleClass::center) continue;
        if (!s.envelope) throw ConfigError("envelopes: missing entry for scale " + s.label);
        const auto& e = *s.envelope;
        if (!(e.lambda > 0.0)) throw ConfigError("envelopes." + s.label + ".lambda must be positive");
        for (const auto* f : {&e.nu, &e.mu}) {
            if (!(f->c >= 0.0)) throw ConfigError("envelopes." + s.label + ": envelope constants must be nonnegative");
            if (f->kind == EnvelopeForm::Kind::geometric && !(f->r >= 0.0 && f->r <= 1.0))
                throw ConfigError("envelopes." + s.label + ": geometric ratio must lie in [0, 1]");
            if (f->kind == EnvelopeForm::Kind::exponential && !(f->r >= 0.0))
                throw ConfigError("envelopes." + s.label + ": exponential rate must be nonnegative");
        }
        if (e.decay) {
            if (!(e.decay->rho > 0.0 && e.decay->rho < 1.0))
                throw ConfigError("envelopes." + s.label + ".decay.rho must lie in (0, 1)");
            if (!(e.decay->c > 0.0)) throw ConfigError("envelopes." + s.label + ".decay.c must be positive");
        }
    }
    if (!(solver.tol > 0.0)) throw ConfigError("solver.tol must be positive");
    if (!(solver.tail_eps > 0.0)) throw ConfigError("solver.tail_eps must be positive");
    if (!(solver.ode_step > 0.0)) throw ConfigError("solver.ode_step must be positive");
    if (solver.horizon && !(*solver.horizon > 0.0)) throw ConfigError("solver.horizon must be positive");
    const auto violations = validate_decomposition(decomposition, default_check_times(kind), solver.proj_eps);
    if (!violations.empty()) throw ConfigError("decomposition: " + violations.front());
}

}  // namespace mslin
