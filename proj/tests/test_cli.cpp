#include <doctest.h>

#include "oracles.hpp"
#include "qsio/cli.hpp"
#include "qsio/output.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace qsio;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = QSIO_TEST_TMP;

struct Result {
    int code;
    std::string out, err;
};

Result cli(std::vector<std::string> args, const fs::path& dir) {
    args.insert(args.begin(), {"--output-dir", dir.string(), "--set", "cache_dir=" + (kRoot / "cache").string()});
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh(const std::string& name) {
    const auto d = kRoot / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in{p};
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::vector<std::string> kShort = {"--set", "n_transient=2", "--set", "n_record=20"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("noise-fit writes the table, script and cache") {
    const auto dir = fresh("fit");
    const auto r = cli({"noise-fit"}, dir);
    CHECK(r.code == 0);
    const auto t = read_csv_file(dir / "noise_fit.csv");
    CHECK(t.column("D").size() == 3);
    CHECK(std::stod(t.meta("relative_residual")) < 0.02);
    CHECK(t.meta("config.Gamma") == "1.0");
    CHECK(fs::exists(dir / "noise_fit.gp"));
    CHECK(fs::exists(kRoot / "cache"));
}

TEST_CASE("noise-fit single component on the classical target") {
    const auto dir = fresh("fit1");
    const auto r = cli({"--set", "noise_components=1", "--set", "noise_target=classical", "noise-fit"}, dir);
    CHECK(r.code == 0);
    const auto t = read_csv_file(dir / "noise_fit.csv");
    CHECK(t.column("tau")[0] == doctest::Approx(3.0).epsilon(1e-4));
    CHECK(t.column("variance")[0] == doctest::Approx(0.01 / 3.0).epsilon(1e-4));
}

TEST_CASE("configuration errors exit with 2 and name the key") {
    const auto dir = fresh("bad");
    auto r = cli({"--set", "x_wal=0.4", "simulate"}, dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("x_wal") != std::string::npos);
    r = cli({"--set", "Gamma=-1", "simulate"}, dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("Gamma") != std::string::npos);
    r = cli({"--set", "tau_c=abc", "simulate"}, dir);
    CHECK(r.code == 2);
    CHECK(cli({"frobnicate"}, dir).code == 2);
    CHECK(cli({"--desk-scale", "--full-scale", "simulate"}, dir).code == 2);
    CHECK(cli({"bifurcation", "--grid", "2.0:0.2:0.01"}, dir).code == 2);

    const auto cfg = dir / "bad.cfg";
    std::ofstream(cfg) << "# comment\nx_wall = 0.4\nnot_a_key = 1\n";
    r = cli({"--config", cfg.string(), "simulate"}, dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("not_a_key") != std::string::npos);
}

TEST_CASE("simulate: zero cycles, determinism, replay") {
    const auto dir = fresh("sim");
    auto r = cli({"--set", "n_transient=0", "--set", "n_record=0", "simulate", "--out", "empty.csv"}, dir);
    CHECK(r.code == 0);
    const auto empty = read_csv_file(dir / "empty.csv");
    CHECK(empty.column("X").empty());
    CHECK(empty.meta("config.n_record") == "0");

    CHECK(cli(with(kShort, {"--seed", "5", "simulate", "--extras", "--out", "a.csv"}), dir).code == 0);
    CHECK(cli(with(kShort, {"--seed", "5", "simulate", "--extras", "--out", "b.csv"}), dir).code == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    const auto t = read_csv_file(dir / "a.csv");
    for (const char* c : {"t", "X", "P", "z", "f", "q2", "q3", "q4"}) CHECK(t.has_column(c));
    CHECK(t.meta("seed") == "5");
    CHECK(fs::exists(dir / "a.gp"));

    CHECK(cli({"simulate", "--replay", (dir / "a.csv").string(), "--out", "replay.csv"}, dir).code == 0);
    CHECK(slurp(dir / "replay.csv") == slurp(dir / "a.csv"));
}

TEST_CASE("simulate: blow-up writes a partial file and exits 1") {
    const auto dir = fresh("blow");
    const auto r = cli(with(kShort, {"--set", "F=1e9", "simulate"}), dir);
    CHECK(r.code == 1);
    const auto t = read_csv_file(dir / "trajectory.csv");
    CHECK(t.meta("status") == "blow-up");
}

TEST_CASE("bifurcation: single point") {
    const auto dir = fresh("bif");
    const auto r = cli(with(kShort, {"--set", "lyap_renorm_steps=1257", "bifurcation", "--grid", "0.5:0.5:0.01"}), dir);
    CHECK(r.code == 0);
    const auto t = read_csv_file(dir / "bifurcation.csv");
    CHECK(t.columns == std::vector<std::string>{"x_wall", "X_poincare", "lambda"});
    for (double x : t.column("x_wall")) CHECK(x == 0.5);
    CHECK(fs::exists(dir / "bifurcation.gp"));
}

TEST_CASE("lyapunov: single realization is flagged degenerate") {
    const auto dir = fresh("lyap");
    const auto r = cli(with(kShort, {"--set", "realizations=1", "lyapunov", "--points", "0.5,1.9"}), dir);
    CHECK(r.code == 0);
    const auto s = read_csv_file(dir / "lyapunov_summary.csv");
    CHECK(s.column("degenerate") == std::vector<double>{1.0, 1.0});
    CHECK(s.column("std") == std::vector<double>{0.0, 0.0});
    const auto per = read_csv_file(dir / "lyapunov.csv");
    CHECK(per.column("lambda").size() == 2);
    CHECK(per.meta("twin_noise") == "shared");
}

TEST_CASE("test01 on a plain series and fft on a trajectory") {
    const auto dir = fresh("t01");
    {
        std::ofstream os(dir / "logistic.csv");
        os << "value\n";
        for (double v : oracle::logistic_series(3000)) os << v << '\n';
    }
    auto r = cli({"test01", "--input", (dir / "logistic.csv").string()}, dir);
    CHECK(r.code == 0);
    const auto k = read_csv_file(dir / "test01.csv");
    CHECK(k.column("K")[0] > 0.9);
    CHECK(read_csv_file(dir / "test01_c.csv").column("c").size() == 100);

    CHECK(cli(with(kShort, {"simulate"}), dir).code == 0);
    r = cli({"fft", "--input", (dir / "trajectory.csv").string()}, dir);
    CHECK(r.code == 0);
    const auto s = read_csv_file(dir / "spectrum.csv");
    CHECK(s.columns == std::vector<std::string>{"frequency", "power"});
    CHECK(s.meta("window") == "hann");
    CHECK(fs::exists(dir / "spectrum.gp"));

    // too short for the 0-1 test: input error
    CHECK(cli({"test01", "--input", (dir / "trajectory.csv").string()}, dir).code == 2);
}

TEST_CASE("output directory from the environment") {
    const auto dir = fresh("env");
    ::setenv("QSIO_OUTPUT_DIR", dir.string().c_str(), 1);
    std::ostringstream out, err;
    const int code = run_cli({"--set", "cache_dir=" + (kRoot / "cache").string(), "noise-fit"}, out, err);
    CHECK(code == 0);
    CHECK(fs::exists(dir / "noise_fit.csv"));
}
