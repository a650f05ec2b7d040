#include "helpers.hpp"
#include "mslin/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mslin;
using namespace testing_support;

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::path(MSLIN_BINARY_DIR) / "cli-scratch" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
    args.insert(args.begin(), "mslin");
    std::ostringstream out, err;
    const int rc = run_command(args, out, err);
    if (out_text) *out_text = out.str() + err.str();
    return rc;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("cli_reporting") {

TEST_CASE("demo scenarios") {
    for (const char* name : {"identity-null", "scalar-oracle"}) {
        const fs::path dir = scratch(std::string("demo-") + name);
        CHECK(run({"demo", name, "--out", dir.string()}) == exit_ok);
        for (const char* f : {"config.yaml", "certificate.txt", "certificate.csv", "verification.csv", "verification.txt"})
            CHECK(fs::exists(dir / f));
    }
}

TEST_CASE("conjugate on the identity scenario") {
    const fs::path dir = scratch("conj-null");
    {
        std::ofstream p(dir / "points.csv");
        p << "time,x1\n5,1\n";
    }
    CHECK(run({"conjugate", "--config", "builtin:identity-null", "--points", (dir / "points.csv").string(), "--out",
               dir.string()}) == exit_ok);
    const std::string csv = slurp(dir / "conjugacy.csv");
    CHECK(csv.rfind("point_id,time,x1,H1,h1,Hbar1,hbar1,tau1,error_h,error_hbar\n", 0) == 0);
    std::istringstream lines(csv);
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    std::vector<double> v;
    std::stringstream cells(row);
    for (std::string c; std::getline(cells, c, ',');) v.push_back(std::stod(c));
    REQUIRE(v.size() == 10);
    CHECK(v[1] == 5.0);
    CHECK(v[3] == 1.0);
    CHECK(v[4] == 0.0);
    CHECK(v[7] == 0.0);
}

TEST_CASE("negative controls and usage errors") {
    std::string text;
    const fs::path dir = scratch("neg");
    CHECK(run({"certify", "--config", source_path("configs/doubled-mu.yaml"), "--out", dir.string()}, &text) ==
          exit_certificate_failed);
    CHECK(text.find("failing_scales: 1,2,4") != std::string::npos);
    CHECK(run({"certify", "--config", source_path("configs/misclassified-unstable.yaml"), "--out", dir.string()}) ==
          exit_numeric);
    CHECK(run({"certify", "--bogus"}) == exit_usage);
    CHECK(run({"certify", "--out", dir.string()}) == exit_usage);
    CHECK(run({"certify", "--config", (dir / "missing.yaml").string(), "--out", dir.string()}) == exit_usage);
    CHECK(run({"demo", "no-such-scenario", "--out", dir.string()}) == exit_usage);
}

TEST_CASE("outputs are byte-stable") {
    const fs::path a = scratch("stable-a"), b = scratch("stable-b");
    for (const fs::path& d : {a, b})
        REQUIRE(run({"verify", "--config", source_path("configs/exm-discrete.yaml"), "--samples", "10", "--out",
                     d.string()}) == exit_ok);
    for (const char* f : {"config.yaml", "certificate.txt", "certificate.csv", "verification.csv", "verification.txt"})
        CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("orbit output") {
    const fs::path dir = scratch("orbit");
    CHECK(run({"orbit", "--config", source_path("configs/exm-discrete.yaml"), "--points",
               source_path("configs/points-discrete.csv"), "--out", dir.string()}) == exit_ok);
    const std::string csv = slurp(dir / "orbit.csv");
    CHECK(csv.rfind("point_id,time,linear1,", 0) == 0);
}

}
