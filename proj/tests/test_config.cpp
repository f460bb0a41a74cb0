#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "crit/cli.hpp"
#include "crit/config.hpp"
#include "crit/errors.hpp"
#include "doctest.h"

using namespace crit;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("crit_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }

    std::string config(const std::string& text) const {
        const fs::path p = dir / "run.cfg";
        std::ofstream(p, std::ios::binary) << text;
        return p.string();
    }
};

std::vector<std::string> lines_of(const fs::path& p) {
    std::ifstream f(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(f, l);) out.push_back(l);
    return out;
}

const char* kGap04 = "b = 2\nseed = 1\nmeasure.kind = gap\nmeasure.x_star = 0.8\nmeasure.p = 0.4\nmeasure.low_cap = 0.05\n";

}  // namespace

TEST_CASE("minimal uniform config gets defaults") {
    const Config c = parse_config("# comment\nb = 2\nseed = 5   # trailing\nmeasure.kind = uniform\n");
    CHECK(c.b == 2);
    CHECK(c.seed == 5);
    CHECK(c.nodes == 4096);
    CHECK(c.depth_cap == 10'000);
    CHECK(c.workers == 0);
    REQUIRE(c.measure);
    CHECK(c.measure->mass(0.0, 1.0) == doctest::Approx(1.0));
    CHECK(c.resolved.at("grid.nodes") == "4096");
    CHECK(c.resolved.count("workers") == 0);
}

TEST_CASE("all errors are reported together") {
    const std::string e = error_of("b = 2\nmeasure.kind = gap\nmeasure.x_star = 0.8\nbogus = 1\nb = 3\nsamples = ten\n");
    CHECK(e.find("measure.p") != std::string::npos);
    CHECK(e.find("seed") != std::string::npos);
    CHECK(e.find("bogus") != std::string::npos);
    CHECK(e.find("duplicate key 'b'") != std::string::npos);
    CHECK(e.find("samples") != std::string::npos);
}

TEST_CASE("constraint violations") {
    CHECK(error_of("b = 2\nseed = 1\nmeasure.kind = gap\nmeasure.x_star = 0.8\nmeasure.p = 0.4\nmeasure.low_cap = 0.3\n")
              .find("gap condition") != std::string::npos);
    CHECK(error_of("b = 1\nseed = 1\n").find("b >= 2") != std::string::npos);
    CHECK(error_of("b = 2\nseed = 1\ngrid.nodes = 2\n").find("grid.nodes") != std::string::npos);
    CHECK(error_of("b = 2\nseed = 1\nmeasure.kind = blob\n").find("unknown kind") != std::string::npos);
}

TEST_CASE("piecewise, mix and family measures") {
    const Config p = parse_config("b = 2\nseed = 1\nmeasure.kind = piecewise\npiece = 0,0.5,1,1\natom = 0.9,0.5\n");
    REQUIRE(p.measure);
    CHECK(p.measure->has_atoms());
    CHECK(p.measure->mass(0.85, 1.0) == doctest::Approx(0.5));

    const Config m = parse_config(
        "b = 2\nseed = 1\nmeasure.kind = mix\nmeasure.alpha = 0.25\nmeasure.0.kind = uniform\n"
        "measure.1.kind = piecewise\nmeasure.1.piece = 0.5,1,2,2\n");
    REQUIRE(m.measure);
    CHECK(m.measure->mass(0.5, 1.0) == doctest::Approx(0.75 * 0.5 + 0.25));

    const Config f = parse_config(
        "b = 2\nseed = 1\nfamily.0.kind = gap\nfamily.0.x_star = 0.8\nfamily.0.p = 0.3\nfamily.0.low_cap = 0.05\n"
        "family.1.kind = gap\nfamily.1.x_star = 0.8\nfamily.1.p = 0.7\nfamily.1.low_cap = 0.05\n"
        "scan.alphas = 0.1, 0.2,0.3\n");
    REQUIRE(f.family);
    CHECK(f.alphas == std::vector<double>{0.1, 0.2, 0.3});
    CHECK_THROWS_AS((void)f.require_measure(), ValidationError);
}

TEST_CASE("format_number round-trips") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 12345.678}) CHECK(std::stod(format_number(x)) == x);
    CHECK(format_number(0.5) == "0.5");
}

TEST_CASE("cli: zeta on gap p = 0.4") {
    Scratch s("zeta");
    std::ostringstream out;
    std::ostringstream err;
    const std::string cfg = s.config(std::string(kGap04) + "grid.nodes = 512\n");
    REQUIRE(run_cli({"zeta", "--config", cfg, "--out", s.dir.string()}, out, err) == kExitOk);
    const auto lines = lines_of(s.dir / "zeta.csv");
    REQUIRE(lines.size() > 3);
    CHECK(lines[0] == "# crit-avalanche zeta");
    CHECK(std::find(lines.begin(), lines.end(), "# seed = 1") != lines.end());
    CHECK(std::find(lines.begin(), lines.end(), "n,Z_theta1,Z_thetab,ratio1,ratio2") != lines.end());
    const std::string last = lines.back();
    const double ratio2 = std::stod(last.substr(last.rfind(',') + 1));
    CHECK(std::abs(ratio2 - 0.4) < 1e-6);
}

TEST_CASE("cli: verdict and exit statuses") {
    Scratch s("verdict");
    std::ostringstream out;
    std::ostringstream err;
    const std::string u04 = s.config("b = 2\nseed = 1\nmeasure.kind = uniform\nmeasure.hi = 0.4\n");
    CHECK(run_cli({"verdict", "--config", u04, "--out", s.dir.string()}, out, err) == kExitOk);
    CHECK(out.str() == "finite_always\n");

    const std::string gap = s.config(std::string(kGap04) + "grid.nodes = 256\n");
    CHECK(run_cli({"exponents", "--scan", "delta", "--config", gap, "--out", s.dir.string()}, out, err) == kExitInvalid);
    CHECK(run_cli({"zeta", "--config", (s.dir / "missing.cfg").string()}, out, err) == kExitInvalid);
    CHECK(run_cli({"nonsense"}, out, err) == kExitInvalid);
    CHECK(run_cli({"--help"}, out, err) == kExitOk);

    const std::string slow = s.config("b = 2\nseed = 1\nmeasure.kind = uniform\ngrid.nodes = 256\nzeta.iter_cap = 3\n");
    CHECK(run_cli({"zeta", "--config", slow, "--out", s.dir.string()}, out, err) == kExitNoConvergence);
    CHECK(fs::exists(s.dir / "diagnostics.txt"));
}

TEST_CASE("cli: rerun gives identical bytes") {
    Scratch s("rerun");
    std::ostringstream out;
    std::ostringstream err;
    const std::string cfg = s.config(std::string(kGap04) + "samples = 2000\ntail.n_max = 50\ndepth_cap = 100\n");
    REQUIRE(run_cli({"simulate", "--config", cfg, "--out", (s.dir / "a").string()}, out, err) == kExitOk);
    REQUIRE(run_cli({"simulate", "--config", cfg, "--out", (s.dir / "b").string()}, out, err) == kExitOk);
    for (const char* f : {"tail.csv", "summary.csv"}) CHECK(lines_of(s.dir / "a" / f) == lines_of(s.dir / "b" / f));
    CHECK(lines_of(s.dir / "a" / "tail.csv").size() > 50);
}
