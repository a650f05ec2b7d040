#include "mslin/system_model.hpp"
#include "mslin/format.hpp"

#include <yaml-cpp/yaml.h>

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace mslin {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
    throw ConfigError(key + ": " + what);
}

void require_map(const YAML::Node& node, const std::string& key) {
    if (!node || !node.IsMap()) fail(key, "expected a mapping");
}

void require_keys(const YAML::Node& node, const std::string& key, const std::set<std::string>& allowed) {
    for (const auto& kv : node) {
        const auto name = kv.first.as<std::string>();
        if (!allowed.count(name)) fail(key + "." + name, "unknown key");
    }
}

/// Decimal, scientific or "p/q" rational.
double parse_number(const std::string& text, const std::string& key) {
    auto parse_plain = [&](const std::string& s) {
        const char* begin = s.c_str();
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(begin, &end);
        if (end == begin || *end != '\0' || errno == ERANGE) fail(key, "not a number: '" + text + "'");
        return v;
    };
    const auto slash = text.find('/');
    if (slash == std::string::npos) return parse_plain(text);
    const double p = parse_plain(text.substr(0, slash));
    const double q = parse_plain(text.substr(slash + 1));
    if (q == 0.0) fail(key, "zero denominator");
    return p / q;
}

double number(const YAML::Node& node, const std::string& key) {
    if (!node) fail(key, "missing");
    if (!node.IsScalar()) fail(key, "expected a number");
    return parse_number(node.Scalar(), key);
}

std::size_t count(const YAML::Node& node, const std::string& key) {
    const double v = number(node, key);
    if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::size_t>(v))) fail(key, "expected a nonnegative integer");
    return static_cast<std::size_t>(v);
}

std::string text(const YAML::Node& node, const std::string& key) {
    if (!node) fail(key, "missing");
    if (!node.IsScalar()) fail(key, "expected a scalar");
    return node.Scalar();
}

Vector number_list(const YAML::Node& node, const std::string& key) {
    if (!node || !node.IsSequence()) fail(key, "expected a list of numbers");
    Vector v(static_cast<Eigen::Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = number(node[i], key + "[" + std::to_string(i) + "]");
    return v;
}

Matrix matrix_rows(const YAML::Node& node, const std::string& key, std::size_t dim) {
    if (!node || !node.IsSequence() || node.size() != dim) fail(key, "expected " + std::to_string(dim) + " rows");
    Matrix m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        const Vector row = number_list(node[i], key + "[" + std::to_string(i) + "]");
        if (static_cast<std::size_t>(row.size()) != dim)
            fail(key + "[" + std::to_string(i) + "]", "dimension mismatch: expected " + std::to_string(dim) + " entries");
        m.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
    return m;
}

std::vector<Matrix> read_step_file(const std::string& path, std::size_t dim) {
    std::ifstream in(path);
    if (!in) throw ConfigError("system.linear.per-step-file: cannot open '" + path + "'");
    std::vector<Matrix> steps;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream row(line);
        std::vector<double> values;
        std::string tok;
        while (row >> tok) values.push_back(parse_number(tok, path + ":" + std::to_string(lineno)));
        if (values.empty()) continue;
        if (values.size() != dim * dim)
            throw ConfigError("dimension mismatch: " + path + ":" + std::to_string(lineno) + " has " +
                              std::to_string(values.size()) + " entries, expected " + std::to_string(dim * dim));
        Matrix a(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j)
                a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * dim + j];
        steps.push_back(std::move(a));
    }
    if (steps.empty()) throw ConfigError("system.linear.per-step-file: '" + path + "' has no rows");
    return steps;
}

EnvelopeForm envelope_form(const YAML::Node& node, const std::string& key) {
    if (!node) fail(key, "missing");
    if (node.IsScalar()) return EnvelopeForm::constant(number(node, key));
    require_map(node, key);
    if (node.size() != 1) fail(key, "expected exactly one of constant, geometric, exponential");
    const auto tag = node.begin()->first.as<std::string>();
    const YAML::Node value = node.begin()->second;
    if (tag == "constant") return EnvelopeForm::constant(number(value, key + ".constant"));
    if (tag == "geometric" || tag == "exponential") {
        if (!value.IsSequence() || value.size() != 2) fail(key + "." + tag, "expected [c, r]");
        const double c = number(value[0], key + "." + tag + "[0]");
        const double r = number(value[1], key + "." + tag + "[1]");
        return tag == "geometric" ? EnvelopeForm::geometric(c, r) : EnvelopeForm::exponential(c, r);
    }
    fail(key + "." + tag, "unknown envelope form");
}

ScaleClass parse_class(const std::string& tag, const std::string& key) {
    if (tag == "stable" || tag == "s") return ScaleClass::stable;
    if (tag == "unstable" || tag == "u") return ScaleClass::unstable;
    if (tag == "center" || tag == "c") return ScaleClass::center;
    fail(key, "unknown class '" + tag + "'");
}

}  // namespace

SystemBundle load_configuration(const std::string& document, const std::string& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(document);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("malformed document: ") + e.what());
    }
    require_map(root, "document");
    require_keys(root, "document", {"system", "decomposition", "envelopes", "solver"});

    SystemBundle b;

    const YAML::Node sys = root["system"];
    require_map(sys, "system");
    require_keys(sys, "system", {"kind", "dimension", "linear", "perturbation", "sigma-min-floor"});
    const auto kind_tag = text(sys["kind"], "system.kind");
    if (kind_tag == "discrete") b.kind = TimeKind::discrete;
    else if (kind_tag == "continuous") b.kind = TimeKind::continuous;
    else fail("system.kind", "expected discrete or continuous");
    b.dim = count(sys["dimension"], "system.dimension");
    if (b.dim == 0) fail("system.dimension", "must be positive");
    const double floor = sys["sigma-min-floor"] ? number(sys["sigma-min-floor"], "system.sigma-min-floor") : 1e-12;

    const YAML::Node lin = sys["linear"];
    require_map(lin, "system.linear");
    if (lin.size() != 1) fail("system.linear", "expected exactly one of constant-diagonal, constant-matrix, per-step-file");
    const auto lin_tag = lin.begin()->first.as<std::string>();
    const YAML::Node lin_value = lin.begin()->second;
    if (lin_tag == "constant-diagonal") {
        Vector diag = number_list(lin_value, "system.linear.constant-diagonal");
        if (static_cast<std::size_t>(diag.size()) != b.dim)
            fail("system.linear.constant-diagonal", "dimension mismatch: expected " + std::to_string(b.dim) + " entries");
        b.linear = LinearPart::constant_diagonal(std::move(diag), floor);
    } else if (lin_tag == "constant-matrix") {
        b.linear = LinearPart::constant_matrix(matrix_rows(lin_value, "system.linear.constant-matrix", b.dim), floor);
    } else if (lin_tag == "per-step-file") {
        fs::path p = text(lin_value, "system.linear.per-step-file");
        if (p.is_relative()) p = fs::path(base_dir) / p;
        const std::string resolved = fs::absolute(p).lexically_normal().string();
        b.linear = LinearPart::per_step(read_step_file(resolved, b.dim), resolved, floor);
    } else {
        fail("system.linear." + lin_tag, "unknown linear form");
    }

    std::vector<PerturbationTerm> terms;
    if (const YAML::Node pert = sys["perturbation"]) {
        if (!pert.IsSequence()) fail("system.perturbation", "expected a list");
        for (std::size_t i = 0; i < pert.size(); ++i) {
            const std::string key = "system.perturbation[" + std::to_string(i) + "]";
            const YAML::Node e = pert[i];
            require_map(e, key);
            require_keys(e, key, {"component", "family", "amplitude", "lipschitz", "decay-rate", "input"});
            PerturbationTerm t;
            const std::size_t comp = count(e["component"], key + ".component");
            if (comp == 0 || comp > b.dim) fail(key + ".component", "dimension mismatch: out of range 1.." + std::to_string(b.dim));
            t.component = comp - 1;
            t.family = parse_family(text(e["family"], key + ".family"));
            t.amplitude = e["amplitude"] ? number(e["amplitude"], key + ".amplitude") : 0.0;
            t.lipschitz = e["lipschitz"] ? number(e["lipschitz"], key + ".lipschitz") : 0.0;
            t.decay_rate = e["decay-rate"] ? number(e["decay-rate"], key + ".decay-rate") : 0.0;
            const std::size_t input = e["input"] ? count(e["input"], key + ".input") : comp;
            if (input == 0 || input > b.dim) fail(key + ".input", "dimension mismatch: out of range 1.." + std::to_string(b.dim));
            t.input = input - 1;
            if (t.family == Family::decayed_scaled_sine && !e["decay-rate"]) fail(key + ".decay-rate", "missing");
            terms.push_back(t);
        }
    }
    b.perturbation = PerturbationPart(b.dim, b.kind, std::move(terms));

    const YAML::Node dec = root["decomposition"];
    require_map(dec, "decomposition");
    require_keys(dec, "decomposition", {"scales"});
    const YAML::Node scales = dec["scales"];
    if (!scales || !scales.IsSequence() || scales.size() == 0) fail("decomposition.scales", "expected a non-empty list");
    std::vector<Scale> list;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        const std::string key = "decomposition.scales[" + std::to_string(i) + "]";
        const YAML::Node s = scales[i];
        require_map(s, key);
        require_keys(s, key, {"label", "class", "projection"});
        Scale scale;
        scale.label = s["label"] ? text(s["label"], key + ".label") : std::to_string(i + 1);
        if (!s["class"]) throw ConfigError("scale " + scale.label + " unclassified");
        scale.cls = parse_class(text(s["class"], key + ".class"), key + ".class");
        const YAML::Node proj = s["projection"];
        require_map(proj, key + ".projection");
        if (proj.size() != 1) fail(key + ".projection", "expected exactly one of coordinates, matrix");
        const auto ptag = proj.begin()->first.as<std::string>();
        if (ptag == "coordinates") {
            const Vector coords = number_list(proj["coordinates"], key + ".projection.coordinates");
            std::vector<std::size_t> cs;
            for (Eigen::Index j = 0; j < coords.size(); ++j) {
                const double c = coords(j);
                if (c < 1.0 || c > static_cast<double>(b.dim) || c != std::floor(c))
                    fail(key + ".projection.coordinates", "dimension mismatch: coordinate out of range 1.." + std::to_string(b.dim));
                cs.push_back(static_cast<std::size_t>(c) - 1);
            }
            scale.projection = Projection::coordinates(std::move(cs));
        } else if (ptag == "matrix") {
            scale.projection = Projection::matrix(matrix_rows(proj["matrix"], key + ".projection.matrix", b.dim));
        } else {
            fail(key + ".projection." + ptag, "unknown projection form");
        }
        list.push_back(std::move(scale));
    }

    const YAML::Node env = root["envelopes"];
    std::set<std::string> used;
    if (env) {
        require_map(env, "envelopes");
        for (auto& scale : list) {
            const YAML::Node e = env[scale.label];
            if (!e) continue;
            used.insert(scale.label);
            const std::string key = "envelopes." + scale.label;
            require_map(e, key);
            require_keys(e, key, {"lambda", "nu", "mu", "decay"});
            ScaleEnvelope se;
            se.lambda = number(e["lambda"], key + ".lambda");
            se.nu = envelope_form(e["nu"], key + ".nu");
            se.mu = envelope_form(e["mu"], key + ".mu");
            if (const YAML::Node d = e["decay"]) {
                require_map(d, key + ".decay");
                require_keys(d, key + ".decay", {"c", "rho"});
                se.decay = DecayEnvelope{number(d["c"], key + ".decay.c"), number(d["rho"], key + ".decay.rho")};
            }
            scale.envelope = se;
        }
        for (const auto& kv : env) {
            const auto label = kv.first.as<std::string>();
            if (!used.count(label)) fail("envelopes." + label, "no scale with this label");
        }
    }
    b.decomposition = Decomposition(b.dim, std::move(list));

    if (const YAML::Node sol = root["solver"]) {
        require_map(sol, "solver");
        require_keys(sol, "solver", {"tol", "tail_eps", "horizon", "ode_step", "proj_eps", "tol_inv",
                                     "audit_samples", "seed"});
        if (sol["tol"]) b.solver.tol = number(sol["tol"], "solver.tol");
        if (sol["tail_eps"]) b.solver.tail_eps = number(sol["tail_eps"], "solver.tail_eps");
        if (sol["horizon"]) b.solver.horizon = number(sol["horizon"], "solver.horizon");
        if (sol["ode_step"]) b.solver.ode_step = number(sol["ode_step"], "solver.ode_step");
        if (sol["proj_eps"]) b.solver.proj_eps = number(sol["proj_eps"], "solver.proj_eps");
        if (sol["tol_inv"]) b.solver.tol_inv = number(sol["tol_inv"], "solver.tol_inv");
        if (sol["audit_samples"]) b.solver.audit_samples = count(sol["audit_samples"], "solver.audit_samples");
        if (sol["seed"]) b.solver.seed = count(sol["seed"], "solver.seed");
    }

    b.validate();
    return b;
}

SystemBundle load_configuration_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    const auto dir = fs::path(path).parent_path();
    return load_configuration(ss.str(), dir.empty() ? "." : dir.string());
}

// ---------------------------------------------------------------------------

namespace {

void emit_envelope_form(YAML::Emitter& out, const EnvelopeForm& f) {
    out << YAML::Flow << YAML::BeginMap;
    switch (f.kind) {
        case EnvelopeForm::Kind::constant: out << YAML::Key << "constant" << YAML::Value << fmt17(f.c); break;
        case EnvelopeForm::Kind::geometric:
        case EnvelopeForm::Kind::exponential:
            out << YAML::Key << (f.kind == EnvelopeForm::Kind::geometric ? "geometric" : "exponential")
                << YAML::Value << YAML::Flow << YAML::BeginSeq << fmt17(f.c) << fmt17(f.r) << YAML::EndSeq;
            break;
    }
    out << YAML::EndMap;
}

void emit_matrix(YAML::Emitter& out, const Matrix& m) {
    out << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << YAML::Flow << YAML::BeginSeq;
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << fmt17(m(i, j));
        out << YAML::EndSeq;
    }
    out << YAML::EndSeq;
}

}  // namespace

std::string emit_configuration(const SystemBundle& b) {
    YAML::Emitter out;
    out << YAML::BeginMap;

    out << YAML::Key << "system" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << to_string(b.kind);
    out << YAML::Key << "dimension" << YAML::Value << b.dim;
    out << YAML::Key << "sigma-min-floor" << YAML::Value << fmt17(b.linear.sigma_min_floor());
    out << YAML::Key << "linear" << YAML::Value << YAML::BeginMap;
    switch (b.linear.form()) {
        case LinearPart::Form::constant_diagonal: {
            out << YAML::Key << "constant-diagonal" << YAML::Value << YAML::Flow << YAML::BeginSeq;
            for (Eigen::Index i = 0; i < b.linear.diagonal().size(); ++i) out << fmt17(b.linear.diagonal()(i));
            out << YAML::EndSeq;
            break;
        }
        case LinearPart::Form::constant_matrix:
            out << YAML::Key << "constant-matrix" << YAML::Value;
            emit_matrix(out, b.linear.table().front());
            break;
        case LinearPart::Form::per_step:
            if (b.linear.source().empty()) throw ConfigError("per-step linear part has no source file to reference");
            out << YAML::Key << "per-step-file" << YAML::Value << b.linear.source();
            break;
        case LinearPart::Form::function:
            throw ConfigError("a function-valued linear part cannot be written as a configuration");
    }
    out << YAML::EndMap;
    out << YAML::Key << "perturbation" << YAML::Value << YAML::BeginSeq;
    for (const auto& t : b.perturbation.terms()) {
        out << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "component" << YAML::Value << t.component + 1;
        out << YAML::Key << "family" << YAML::Value << to_string(t.family);
        out << YAML::Key << "amplitude" << YAML::Value << fmt17(t.amplitude);
        out << YAML::Key << "lipschitz" << YAML::Value << fmt17(t.lipschitz);
        if (t.family == Family::decayed_scaled_sine)
            out << YAML::Key << "decay-rate" << YAML::Value << fmt17(t.decay_rate);
        out << YAML::Key << "input" << YAML::Value << t.input + 1;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;

    out << YAML::Key << "decomposition" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "scales" << YAML::Value << YAML::BeginSeq;
    for (const auto& s : b.decomposition.scales()) {
        out << YAML::BeginMap;
        out << YAML::Key << "label" << YAML::Value << YAML::DoubleQuoted << s.label;
        out << YAML::Key << "class" << YAML::Value << to_string(s.cls);
        out << YAML::Key << "projection" << YAML::Value << YAML::BeginMap;
        if (s.projection.is_coordinates()) {
            out << YAML::Key << "coordinates" << YAML::Value << YAML::Flow << YAML::BeginSeq;
            for (auto c : s.projection.coordinate_list()) out << c + 1;
            out << YAML::EndSeq;
        } else if (s.projection.is_matrix()) {
            out << YAML::Key << "matrix" << YAML::Value;
            emit_matrix(out, s.projection.constant_matrix());
        } else {
            throw ConfigError("a time-varying projection cannot be written as a configuration");
        }
        out << YAML::EndMap;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;

    out << YAML::Key << "envelopes" << YAML::Value << YAML::BeginMap;
    for (const auto& s : b.decomposition.scales()) {
        if (!s.envelope) continue;
        const auto& e = *s.envelope;
        out << YAML::Key << YAML::DoubleQuoted << s.label << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "lambda" << YAML::Value << fmt17(e.lambda);
        out << YAML::Key << "nu" << YAML::Value;
        emit_envelope_form(out, e.nu);
        out << YAML::Key << "mu" << YAML::Value;
        emit_envelope_form(out, e.mu);
        if (e.decay) {
            out << YAML::Key << "decay" << YAML::Value << YAML::Flow << YAML::BeginMap;
            out << YAML::Key << "c" << YAML::Value << fmt17(e.decay->c);
            out << YAML::Key << "rho" << YAML::Value << fmt17(e.decay->rho);
            out << YAML::EndMap;
        }
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    const auto& p = b.solver;
    out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "tol" << YAML::Value << fmt17(p.tol);
    out << YAML::Key << "tail_eps" << YAML::Value << fmt17(p.tail_eps);
    if (p.horizon) out << YAML::Key << "horizon" << YAML::Value << fmt17(*p.horizon);
    out << YAML::Key << "ode_step" << YAML::Value << fmt17(p.ode_step);
    out << YAML::Key << "proj_eps" << YAML::Value << fmt17(p.proj_eps);
    if (p.tol_inv) out << YAML::Key << "tol_inv" << YAML::Value << fmt17(*p.tol_inv);
    out << YAML::Key << "audit_samples" << YAML::Value << p.audit_samples;
    out << YAML::Key << "seed" << YAML::Value << p.seed;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace mslin
