#pragma once

#include "mslin/types.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mslin {

// ---------------------------------------------------------------------------
// Linear part
// ---------------------------------------------------------------------------

/// Step matrices A_n (discrete) or the coefficient A(t) (continuous).
///
/// Constant and tabulated forms are checked for invertibility once, at
/// construction, and keep their inverses; the function form is checked
/// lazily at each use.  Tabulated steps beyond the end of the table repeat
/// the last row.
class LinearPart {
public:
    enum class Form { constant_diagonal, constant_matrix, per_step, function };

    static LinearPart constant_diagonal(Vector diagonal, double sigma_min_floor = 1e-12);
    static LinearPart constant_matrix(Matrix a, double sigma_min_floor = 1e-12);
    static LinearPart per_step(std::vector<Matrix> steps, std::string source = {},
                               double sigma_min_floor = 1e-12);
    static LinearPart function(std::size_t dim, std::function<Matrix(double)> fn,
                               bool autonomous = false, double sigma_min_floor = 1e-12);

    std::size_t dim() const { return dim_; }
    Form form() const { return form_; }
    bool autonomous() const;
    double sigma_min_floor() const { return floor_; }

    /// A_n for discrete bundles (time = n) or A(t).
    Matrix at(double time) const;
    /// Discrete step matrix A_n.
    Matrix step(std::size_t n) const;
    /// A_n^{-1}; throws SingularStep when σ_min(A_n) < floor.
    Matrix inverse_step(std::size_t n) const;
    /// Throws SingularStep when σ_min(A_n) < floor.
    void require_invertible(std::size_t n) const;

    const Vector& diagonal() const { return diagonal_; }
    const std::vector<Matrix>& table() const { return table_; }
    const std::string& source() const { return source_; }

    friend bool operator==(const LinearPart& a, const LinearPart& b);

private:
    LinearPart() = default;
    std::size_t table_index(std::size_t n) const;

    Form form_ = Form::constant_matrix;
    std::size_t dim_ = 0;
    double floor_ = 1e-12;
    Vector diagonal_;
    std::vector<Matrix> table_;          // one entry for constant forms
    std::vector<Matrix> inverse_table_;  // empty entry when singular
    std::vector<double> sigma_min_;
    std::string source_;
    std::function<Matrix(double)> fn_;
    bool fn_autonomous_ = false;
};

// ---------------------------------------------------------------------------
// Perturbation part
// ---------------------------------------------------------------------------

enum class Family { zero, constant, scaled_sine, scaled_tanh, decayed_scaled_sine };

const char* to_string(Family family);
Family parse_family(const std::string& tag);

/// One component term: f^c(time, x) = a · D(time) · g((L/a) · x_input).
///
/// g is sin or tanh (both 1-Lipschitz with sup 1), so the term is bounded by
/// a·D and L·D-Lipschitz.  D = 1 except for decayed_scaled_sine, where
/// D(n) = q^n with q = decay_rate ∈ (0, 1] in discrete time and
/// D(t) = exp(-decay_rate · t) in continuous time.  The constant family is
/// a · D(time) independent of x.
struct PerturbationTerm {
    std::size_t component = 0;  // 0-based
    Family family = Family::zero;
    double amplitude = 0.0;
    double lipschitz = 0.0;
    double decay_rate = 0.0;
    std::size_t input = 0;      // 0-based coordinate fed to g

    friend bool operator==(const PerturbationTerm&, const PerturbationTerm&) = default;
};

class PerturbationPart {
public:
    PerturbationPart() = default;
    PerturbationPart(std::size_t dim, TimeKind kind, std::vector<PerturbationTerm> terms);

    static PerturbationPart zero(std::size_t dim, TimeKind kind) { return {dim, kind, {}}; }

    std::size_t dim() const { return dim_; }
    TimeKind kind() const { return kind_; }
    const std::vector<PerturbationTerm>& terms() const { return terms_; }

    /// f_n(x) (time = n) or f(t, x).
    Vector operator()(double time, const Vector& x) const;
    void evaluate_into(double time, const Vector& x, Vector& out) const;

    bool identically_zero() const;
    /// Global Lipschitz constant of x ↦ f(time, x) in the Euclidean norm.
    double lipschitz_bound(double time) const;
    /// True when every term feeding the given components is zero.
    bool components_vanish(const std::vector<std::size_t>& components) const;

    friend bool operator==(const PerturbationPart&, const PerturbationPart&) = default;

private:
    double decay_factor(const PerturbationTerm& term, double time) const;

    std::size_t dim_ = 0;
    TimeKind kind_ = TimeKind::discrete;
    std::vector<PerturbationTerm> terms_;
};

// ---------------------------------------------------------------------------
// Envelopes
// ---------------------------------------------------------------------------

/// ν^k or μ^k as one of: c, c·r^time, c·e^{-a·time}.  Forms are nonincreasing.
struct EnvelopeForm {
    enum class Kind { constant, geometric, exponential };
    Kind kind = Kind::constant;
    double c = 0.0;
    double r = 0.0;

    static EnvelopeForm constant(double c) { return {Kind::constant, c, 0.0}; }
    static EnvelopeForm geometric(double c, double ratio) { return {Kind::geometric, c, ratio}; }
    static EnvelopeForm exponential(double c, double rate) { return {Kind::exponential, c, rate}; }

    double operator()(double time) const;
    EnvelopeForm scaled(double factor) const { return {kind, c * factor, r}; }

    friend bool operator==(const EnvelopeForm&, const EnvelopeForm&) = default;
};

/// Declared decay ‖𝒜(n,l)P^k_l‖ ≤ c·rho^{l-n} for l ≥ n (continuous: ‖T(t,s)P^k(s)‖ ≤ c·rho^{s-t}).
struct DecayEnvelope {
    double c = 1.0;
    double rho = 0.5;

    friend bool operator==(const DecayEnvelope&, const DecayEnvelope&) = default;
};

struct ScaleEnvelope {
    double lambda = 0.0;
    EnvelopeForm nu;
    EnvelopeForm mu;
    std::optional<DecayEnvelope> decay;

    friend bool operator==(const ScaleEnvelope&, const ScaleEnvelope&) = default;
};

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

enum class ScaleClass { stable, unstable, center };

const char* to_string(ScaleClass cls);

/// P^k as a coordinate mask, a constant matrix, or a time-dependent matrix.
class Projection {
public:
    static Projection coordinates(std::vector<std::size_t> coords);  // 0-based
    static Projection matrix(Matrix p);
    static Projection time_varying(std::function<Matrix(double)> fn);

    bool is_coordinates() const { return kind_ == Kind::coordinates; }
    bool is_matrix() const { return kind_ == Kind::matrix; }
    bool time_invariant() const { return kind_ != Kind::function; }

    const std::vector<std::size_t>& coordinate_list() const { return coords_; }
    const Matrix& constant_matrix() const { return matrix_; }

    Matrix at(double time, std::size_t dim) const;
    /// out = P(time) v
    void apply(double time, const Vector& v, Vector& out) const;

    friend bool operator==(const Projection& a, const Projection& b);

private:
    enum class Kind { coordinates, matrix, function };
    Kind kind_ = Kind::coordinates;
    std::vector<std::size_t> coords_;
    Matrix matrix_;
    std::function<Matrix(double)> fn_;
};

struct Scale {
    std::string label;
    ScaleClass cls = ScaleClass::center;
    Projection projection = Projection::coordinates({});
    std::optional<ScaleEnvelope> envelope;  // required for stable/unstable

    friend bool operator==(const Scale&, const Scale&) = default;
};

class Decomposition {
public:
    Decomposition() = default;
    Decomposition(std::size_t dim, std::vector<Scale> scales);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return scales_.size(); }
    const Scale& scale(std::size_t k) const { return scales_.at(k); }
    std::vector<Scale>& mutable_scales() { return scales_; }
    const std::vector<Scale>& scales() const { return scales_; }

    std::vector<std::size_t> indices(ScaleClass cls) const;
    std::optional<std::size_t> find(const std::string& label) const;

    Matrix projection(std::size_t k, double time) const;
    /// Σ_{k ∈ K^cls} P^k(time).
    Matrix class_projection(ScaleClass cls, double time) const;
    bool time_invariant() const;

    friend bool operator==(const Decomposition&, const Decomposition&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<Scale> scales_;
};

/// Projection invariant violations at sampled times (empty when all hold to eps).
std::vector<std::string> validate_decomposition(const Decomposition& dec,
                                                const std::vector<double>& times,
                                                double eps = 1e-10);

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

struct SolverParams {
    double tol = 1e-6;
    double tail_eps = 1e-10;
    std::optional<double> horizon;  // N_max (discrete) or T_max (continuous)
    double ode_step = 1e-3;
    double proj_eps = 1e-10;
    std::optional<double> tol_inv;
    std::size_t audit_samples = 2000;
    std::uint64_t seed = 20240601;

    double horizon_or_default(TimeKind kind) const;
    double tol_inv_or_default() const;

    friend bool operator==(const SolverParams&, const SolverParams&) = default;
};

struct SystemBundle {
    TimeKind kind = TimeKind::discrete;
    std::size_t dim = 0;
    LinearPart linear = LinearPart::constant_diagonal(Vector::Ones(1));
    PerturbationPart perturbation;
    Decomposition decomposition;
    SolverParams solver;

    /// Structural checks: dimensions agree, classes exhaust K, envelopes present,
    /// projection invariants at sample times.  Throws ConfigError.
    void validate() const;

    std::vector<std::size_t> stable() const { return decomposition.indices(ScaleClass::stable); }
    std::vector<std::size_t> unstable() const { return decomposition.indices(ScaleClass::unstable); }
    std::vector<std::size_t> center() const { return decomposition.indices(ScaleClass::center); }
    const ScaleEnvelope& envelope(std::size_t k) const;

    friend bool operator==(const SystemBundle&, const SystemBundle&) = default;
};

/// Sample times used for load-time projection checks.
std::vector<double> default_check_times(TimeKind kind);

// ---------------------------------------------------------------------------
// Configuration documents and built-in scenarios
// ---------------------------------------------------------------------------

/// Parse a YAML configuration document.  `base_dir` resolves per-step-file paths.
SystemBundle load_configuration(const std::string& text, const std::string& base_dir = ".");
SystemBundle load_configuration_file(const std::string& path);

/// Inverse of load_configuration; numbers are written with 17 significant digits.
std::string emit_configuration(const SystemBundle& bundle);

/// "exm-discrete", "exm-continuous", "scalar-oracle", "identity-null".
SystemBundle builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

}  // namespace mslin
