#include "mslin/cli.hpp"
#include "mslin/certificate.hpp"
#include "mslin/cocycle.hpp"
#include "mslin/conjugacy_continuous.hpp"
#include "mslin/conjugacy_discrete.hpp"
#include "mslin/format.hpp"
#include "mslin/verifier.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

namespace mslin {

namespace {

struct Options {
    std::string subcommand;
    std::string config;
    std::string demo;
    std::string out = "mslin-out";
    std::string points;
    std::optional<double> tol;
    std::optional<double> horizon;
    std::optional<double> step;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
};

struct Point {
    double time = 0.0;
    Vector x;
};

/// `builtin:NAME` selects a built-in scenario, anything else is a YAML file.
SystemBundle load_bundle(const std::string& config) {
    const std::string prefix = "builtin:";
    if (config.rfind(prefix, 0) == 0) return builtin_scenario(config.substr(prefix.size()));
    return load_configuration_file(config);
}

void apply_overrides(SystemBundle& b, const Options& o) {
    if (o.tol) b.solver.tol = *o.tol;
    if (o.horizon) b.solver.horizon = *o.horizon;
    if (o.step) b.solver.ode_step = *o.step;
    if (o.seed) b.solver.seed = *o.seed;
    if (!(b.solver.tol > 0.0)) throw ConfigError("tol must be positive");
    if (!(b.solver.ode_step > 0.0)) throw ConfigError("step must be positive");
    if (b.solver.horizon && !(*b.solver.horizon > 0.0)) throw ConfigError("horizon must be positive");
}

std::vector<Point> read_points(const std::string& path, std::size_t dim) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open points file " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("points file " + path + " is empty");
    std::string expected = "time";
    for (std::size_t i = 1; i <= dim; ++i) expected += ",x" + std::to_string(i);
    auto trim = [](std::string s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
        return s;
    };
    if (trim(line) != expected) throw ConfigError("points header must be '" + expected + "'");
    std::vector<Point> pts;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty()) continue;
        std::vector<double> vals;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(cell, &used));
                if (trim(cell.substr(used)).size() != 0) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ConfigError("points line " + std::to_string(lineno) + ": bad number '" + cell + "'");
            }
        }
        if (vals.size() != dim + 1)
            throw ConfigError("points line " + std::to_string(lineno) + ": expected " + std::to_string(dim + 1) +
                              " fields");
        Point p;
        p.time = vals[0];
        p.x = Eigen::Map<const Vector>(vals.data() + 1, static_cast<Eigen::Index>(dim));
        pts.push_back(std::move(p));
    }
    return pts;
}

void check_time(const SystemBundle& b, double t) {
    if (t < 0.0) throw ConfigError("point times must be nonnegative");
    if (b.kind == TimeKind::discrete && std::floor(t) != t) throw ConfigError("discrete point times must be integers");
}

std::string path_in(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

std::string vector_header(const std::string& prefix, std::size_t dim) {
    std::string s;
    for (std::size_t i = 1; i <= dim; ++i) s += "," + prefix + std::to_string(i);
    return s;
}

void echo_config(const SystemBundle& b, const Options& o) {
    write_atomic(path_in(o.out, "config.yaml"), emit_configuration(b));
}

/// Writes the certificate files; returns it.
Certificate run_certify(const SystemBundle& b, const Options& o, std::ostream& out) {
    const Certificate cert = certify(b);
    write_atomic(path_in(o.out, "certificate.txt"), certificate_report(cert));
    write_atomic(path_in(o.out, "certificate.csv"), certificate_csv(cert));
    out << "certificate: " << (cert.passed ? "pass" : "fail") << " lambda_total = " << fmt17(cert.lambda_total)
        << " c_nu = " << fmt17(cert.c_nu) << '\n';
    if (!cert.passed) {
        std::string list;
        for (const auto& s : cert.failing_scales) list += (list.empty() ? "" : ",") + s;
        out << "failing_scales: " << list << '\n';
    }
    return cert;
}

int run_verify(const SystemBundle& b, const Certificate& cert, const Options& o, std::ostream& out) {
    SampleSpec spec = SampleSpec::defaults(b.kind);
    spec.seed = b.solver.seed;
    spec.jobs = o.jobs;
    if (o.samples) spec.count = *o.samples;
    const VerificationReport rep = verification_report(b, cert, spec, b.solver.tol);
    write_atomic(path_in(o.out, "verification.csv"), verification_csv(rep));
    write_atomic(path_in(o.out, "verification.txt"), verification_summary(rep));
    for (const auto& id : rep.identities)
        out << "identity " << id.name << ": " << id.verdict << " max = " << fmt17(id.max) << '\n';
    out << "verification: " << (rep.passed ? "pass" : "fail") << '\n';
    return rep.passed ? exit_ok : exit_verification_failed;
}

void run_conjugate(const SystemBundle& b, const Certificate& cert, const std::vector<Point>& pts, const Options& o) {
    const double tol = b.solver.tol;
    std::ostringstream os;
    os << "point_id,time" << vector_header("x", b.dim) << vector_header("H", b.dim) << vector_header("h", b.dim)
       << vector_header("Hbar", b.dim) << vector_header("hbar", b.dim) << vector_header("tau", b.dim)
       << ",error_h,error_hbar\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& p = pts[i];
        check_time(b, p.time);
        Vector h, hb, tau;
        double eh = 0.0, ehb = 0.0;
        if (b.kind == TimeKind::discrete) {
            const auto n = static_cast<std::size_t>(p.time);
            const ConjugacyEvaluation a = eval_h(b, cert, n, p.x, tol);
            const ConjugacyEvaluation c = eval_hbar(b, cert, n, p.x, tol);
            h = a.value;
            hb = c.value;
            eh = a.error;
            ehb = c.error;
            tau = deviation_tau(b, n, p.x);
        } else {
            const CtEvaluation a = eval_h_ct(b, cert, p.time, p.x, tol);
            const CtEvaluation c = eval_hbar_ct(b, cert, p.time, p.x, tol);
            h = a.value;
            hb = c.value;
            eh = a.error;
            ehb = c.error;
            tau = deviation_ct(b, p.time, p.x);
        }
        os << i << ',' << fmt17(p.time) << ',' << join17(p.x) << ',' << join17(p.x + h) << ',' << join17(h) << ','
           << join17(p.x + hb) << ',' << join17(hb) << ',' << join17(tau) << ',' << fmt17(eh) << ',' << fmt17(ehb)
           << '\n';
    }
    write_atomic(path_in(o.out, "conjugacy.csv"), os.str());
}

void run_orbit(const SystemBundle& b, const std::vector<Point>& pts, const Options& o) {
    std::ostringstream os;
    os << "point_id,time" << vector_header("linear", b.dim) << vector_header("nonlinear", b.dim) << '\n';
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point& p = pts[i];
        check_time(b, p.time);
        if (b.kind == TimeKind::discrete) {
            const auto n = static_cast<std::size_t>(p.time);
            const auto len = static_cast<std::size_t>(o.horizon ? *o.horizon : 20.0);
            const OrbitTable t = build_orbit_table(b, n, p.x, n, n + len, true, true, b.solver.tol_inv_or_default());
            for (std::size_t j = n; j <= n + len; ++j)
                os << i << ',' << j << ',' << join17(t.o(j)) << ',' << join17(t.z(j)) << '\n';
        } else {
            const double len = o.horizon ? *o.horizon : 10.0;
            const double stride = 0.1;
            const auto count = static_cast<std::size_t>(std::llround(len / stride));
            Vector lin = p.x, non = p.x;
            double t = p.time;
            os << i << ',' << fmt17(t) << ',' << join17(lin) << ',' << join17(non) << '\n';
            for (std::size_t j = 1; j <= count; ++j) {
                const double next = p.time + static_cast<double>(j) * stride;
                lin = ct_linear_transit(b, next, t, b.solver.ode_step) * lin;
                non = ct_nonlinear_transit(b, next, t, non, b.solver.ode_step);
                t = next;
                os << i << ',' << fmt17(t) << ',' << join17(lin) << ',' << join17(non) << '\n';
            }
        }
    }
    write_atomic(path_in(o.out, "orbit.csv"), os.str());
}

int dispatch(const Options& o, std::ostream& out) {
    const bool demo = o.subcommand == "demo";
    if (!demo && o.config.empty()) throw ConfigError("--config is required");
    SystemBundle b = demo ? builtin_scenario(o.demo) : load_bundle(o.config);
    apply_overrides(b, o);
    b.validate();
    echo_config(b, o);

    if (o.subcommand == "orbit") {
        if (o.points.empty()) throw ConfigError("orbit needs --points");
        run_orbit(b, read_points(o.points, b.dim), o);
        return exit_ok;
    }
    std::vector<Point> pts;
    if (o.subcommand == "conjugate") {
        if (o.points.empty()) throw ConfigError("conjugate needs --points");
        pts = read_points(o.points, b.dim);
    }
    const Certificate cert = run_certify(b, o, out);
    if (o.subcommand == "certify") return cert.passed ? exit_ok : exit_certificate_failed;
    if (!cert.passed) return exit_certificate_failed;
    if (o.subcommand == "conjugate") {
        run_conjugate(b, cert, pts, o);
        return exit_ok;
    }
    if (demo && !o.points.empty()) run_conjugate(b, cert, read_points(o.points, b.dim), o);
    return run_verify(b, cert, o, out);
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Certified linearization of nonautonomous multiscale systems"};
    app.require_subcommand(1, 1);
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "YAML configuration or builtin:NAME");
        sub->add_option("--out", o.out, "output directory")->capture_default_str();
        sub->add_option("--tol", o.tol, "evaluation tolerance");
        sub->add_option("--horizon", o.horizon, "certificate horizon (orbit: length)");
        sub->add_option("--step", o.step, "ODE step");
        sub->add_option("--seed", o.seed, "random seed");
        sub->add_option("--samples", o.samples, "verification sample count");
        sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--points", o.points, "points CSV (time,x1,...,xd)");
    };
    for (const char* name : {"certify", "conjugate", "verify", "orbit"}) common(app.add_subcommand(name));
    CLI::App* demo = app.add_subcommand("demo", "full pipeline on a built-in scenario");
    common(demo);
    demo->add_option("name", o.demo, "scenario name")->required();

    std::vector<const char*> args;
    for (const auto& a : argv) args.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(args.size()), args.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "mslin: " << e.what() << '\n';
        return exit_usage;
    }
    for (auto* sub : app.get_subcommands()) o.subcommand = sub->get_name();

    try {
        return dispatch(o, out);
    } catch (const ConfigError& e) {
        err << "mslin: config error: " << e.what() << '\n';
        return exit_usage;
    } catch (const DomainError& e) {
        err << "mslin: usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const CertificateNotPassed& e) {
        err << "mslin: " << e.what() << '\n';
        return exit_certificate_failed;
    } catch (const NonContractiveInverse& e) {
        err << "mslin: NonContractiveInverse: " << e.what() << '\n';
        return exit_numeric;
    } catch (const NoDecayDetected& e) {
        err << "mslin: NoDecayDetected: " << e.what() << '\n';
        return exit_numeric;
    } catch (const std::exception& e) {
        err << "mslin: numeric failure: " << e.what() << '\n';
        return exit_numeric;
    }
}

int run_command(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run_command(args, std::cout, std::cerr);
}

}  // namespace mslin
