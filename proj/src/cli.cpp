#include "qsio/cli.hpp"

#include "qsio/config.hpp"
#include "qsio/diagnostics.hpp"
#include "qsio/ensemble.hpp"
#include "qsio/output.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <optional>
#include <ostream>

namespace qsio {
namespace {

struct Options {
    std::string config_file;
    std::vector<std::string> sets;
    std::optional<long> seed;
    std::optional<long> threads;
    std::string output_dir;
    bool desk = false;
    bool full = false;
    // subcommand-specific
    std::string replay;
    std::string out_name;
    bool extras = false;
    std::string grid;
    std::string points;
    std::string input;
};

class Progress {
public:
    Progress(std::ostream& err, std::string label) : err_(err), label_(std::move(label)) {}
    void operator()(int done, int total) {
        std::lock_guard lock(mutex_);
        err_ << '\r' << label_ << ' ' << done << '/' << total << (done == total ? "\n" : "") << std::flush;
    }

private:
    std::ostream& err_;
    std::string label_;
    std::mutex mutex_;
};

std::ofstream open_output(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream os{path};
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

RunConfig build_config(const Options& o) {
    RunConfig cfg;
    if (!o.config_file.empty()) cfg.load_file(o.config_file);
    if (!o.replay.empty()) {
        std::ifstream in{o.replay};
        if (!in) throw ConfigError("cannot open " + o.replay, "");
        cfg.load_embedded(in);
    }
    if (o.desk && o.full) throw ConfigError("--desk-scale and --full-scale are exclusive", "");
    if (o.desk) {
        cfg.set("n_transient", "200");
        cfg.set("n_record", "500");
        cfg.set("realizations", "50");
    }
    if (o.full) {
        cfg.set("n_transient", "1000");
        cfg.set("n_record", "3000");
        cfg.set("realizations", "1000");
    }
    for (const auto& s : o.sets) cfg.assign(s);
    if (o.seed) cfg.set("seed", std::to_string(*o.seed));
    if (o.threads) cfg.set("threads", std::to_string(*o.threads));
    if (!o.output_dir.empty()) cfg.set("output_dir", o.output_dir);
    cfg.validate();
    return cfg;
}

NoiseModel classical_fit(const RunConfig& cfg, int n) {
    const auto b = cfg.bath();
    const double spacing = b.tau_c / 50.0;
    std::vector<double> tau, value;
    for (int j = 0; j <= 500; ++j) {
        tau.push_back(j * spacing);
        value.push_back(b.Gamma * b.kT / b.tau_c * std::exp(-tau.back() / b.tau_c));
    }
    return fit_exponentials(tau, value, n, cfg.real("fit_tolerance"));
}

NoiseModel noise_for_run(const RunConfig& cfg) {
    if (!cfg.boolean("use_noise")) return {};
    const int n = static_cast<int>(cfg.integer("noise_components"));
    if (cfg.text("noise_target") == "classical") return classical_fit(cfg, n);
    return load_or_fit_noise_model(cfg.bath(), n, cfg.cache_dir(), cfg.fit_options());
}

std::vector<double> points_or_default(const Options& o, const RunConfig& cfg) {
    if (o.points.empty()) return {cfg.real("x_wall")};
    auto pts = parse_list(o.points);
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (!(pts[i] > pts[i - 1])) throw ConfigError("--points must be strictly increasing", "points");
    return pts;
}

Metadata tool_metadata(const std::string& command) {
    return {{"command", command}, {"build", build_id()}};
}

// ---------------------------------------------------------------------------

int cmd_noise_fit(const Options& o, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = build_config(o);
    const auto b = cfg.bath();
    const int n = static_cast<int>(cfg.integer("noise_components"));
    const auto dir = cfg.output_dir();
    NoiseModel model;
    int code = kExitOk;
    try {
        model = cfg.text("noise_target") == "classical" ? classical_fit(cfg, n) : fit_noise_model(b, n, cfg.fit_options());
    } catch (const FitError& e) {
        err << "error: " << e.what() << '\n';
        model = e.model;
        code = kExitRuntime;
    }
    auto meta = tool_metadata("noise-fit");
    meta.emplace_back("fit_status", code == kExitOk ? "ok" : "residual-above-tolerance");
    {
        auto os = open_output(dir / "noise_fit.csv");
        write_header(os, cfg, meta);
        write_noise_model_csv(os, model, b);
    }
    if (code == kExitOk && cfg.text("noise_target") == "quadrature") {
        std::filesystem::create_directories(cfg.cache_dir());
        std::ofstream cache{cfg.cache_dir() / noise_cache_key(b, n)};
        write_noise_model_csv(cache, model, b);
    }
    write_plot_script(dir / "noise_fit.gp",
                      "# components: D_i / tau_i is each exponential's amplitude\n"
                      "set logscale x\nset xlabel 'tau_i'\nset ylabel 'D_i / tau_i'\n"
                      "plot 'noise_fit.csv' using 3:($2/$3) with impulses lw 3 title 'fitted components'\n");
    out << "i,D,tau,variance\n";
    for (std::size_t i = 0; i < model.components.size(); ++i) {
        const auto& c = model.components[i];
        out << i + 1 << ',' << format_double(c.D) << ',' << format_double(c.tau) << ','
            << format_double(c.variance()) << '\n';
    }
    out << "relative_residual=" << format_double(model.relative_residual()) << '\n';
    return code;
}

int cmd_simulate(Options o, std::ostream& out, std::ostream& err) {
    if (o.extras) o.sets.insert(o.sets.begin(), "record_extras=true");
    const RunConfig cfg = build_config(o);
    const auto rs = cfg.run_settings(noise_for_run(cfg));
    const auto path = cfg.output_dir() / (o.out_name.empty() ? "trajectory.csv" : o.out_name);
    int code = kExitOk;
    Trajectory traj;
    try {
        traj = run(rs);
    } catch (const RunAborted& e) {
        err << "error: " << e.what() << '\n';
        traj = e.partial;
        code = kExitRuntime;
    }
    {
        auto os = open_output(path);
        write_trajectory_csv(os, traj, cfg);
    }
    auto gp = path;
    gp.replace_extension(".gp");
    const auto name = path.filename().string();
    std::string body = "set multiplot layout 1,2\nset xlabel 't'\nset ylabel 'X'\nplot '" + name +
                       "' using 1:2 with lines title 'X(t)'\nset xlabel 'X'\nset ylabel 'P'\nplot '" + name +
                       "' using 2:3 with lines title 'phase'\nunset multiplot\n";
    if (traj.extras)
        body += "pause -1\nset multiplot layout 3,1\nplot '" + name + "' using 1:6 with lines title 'q2'\nplot '" +
                name + "' using 1:7 with lines title 'q3'\nplot '" + name +
                "' using 1:8 with lines title 'q4'\nunset multiplot\n";
    write_plot_script(gp, body);
    const auto sec = poincare(traj, parse_direction(cfg.text("poincare_direction")));
    out << "samples=" << traj.size() << " poincare_points=" << sec.X.size()
        << " clusters=" << count_clusters(sec.X, cfg.real("cluster_tol")) << " file=" << path.string() << '\n';
    return code;
}

int cmd_bifurcation(const Options& o, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = build_config(o);
    std::vector<double> grid;
    if (!o.points.empty()) grid = points_or_default(o, cfg);
    else if (!o.grid.empty()) grid = parse_grid(o.grid);
    else grid = cfg.grid();
    const auto rs = cfg.run_settings(noise_for_run(cfg));
    Progress progress(err, "bifurcation");
    const auto scan = bifurcation_scan(rs, grid, cfg.scan(), std::ref(progress));

    const auto dir = cfg.output_dir();
    auto meta = tool_metadata("bifurcation");
    for (const auto& pt : scan.points)
        if (pt.failed) meta.emplace_back("failed_" + format_double(pt.x_wall), pt.error);
    {
        auto os = open_output(dir / "bifurcation.csv");
        write_header(os, cfg, meta);
        os << "x_wall,X_poincare,lambda\n";
        for (const auto& pt : scan.points) {
            if (pt.poincare_X.empty())
                os << format_double(pt.x_wall) << ",nan," << format_double(pt.lambda) << '\n';
            for (double x : pt.poincare_X)
                os << format_double(pt.x_wall) << ',' << format_double(x) << ',' << format_double(pt.lambda) << '\n';
        }
    }
    write_plot_script(dir / "bifurcation.gp",
                      "set xlabel 'x_wall'\nset ylabel 'X (P = 0)'\nset cblabel 'lambda'\n"
                      "set palette defined (-1 'dark-green', 0 'light-green', 0.001 'orange', 1 'dark-orange')\n"
                      "plot 'bifurcation.csv' using 1:2:3 with dots palette notitle\n");
    const double tol = cfg.real("cluster_tol");
    out << "x_wall,points,clusters,lambda\n";
    for (const auto& pt : scan.points)
        out << format_double(pt.x_wall) << ',' << pt.poincare_X.size() << ',' << count_clusters(pt.poincare_X, tol)
            << ',' << format_double(pt.lambda) << '\n';
    const bool any_failed = std::any_of(scan.points.begin(), scan.points.end(), [](auto& p) { return p.failed; });
    return any_failed ? kExitRuntime : kExitOk;
}

int cmd_lyapunov(const Options& o, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = build_config(o);
    const auto pts = points_or_default(o, cfg);
    const auto base = cfg.run_settings(noise_for_run(cfg));
    const auto dir = cfg.output_dir();
    auto per = open_output(dir / "lyapunov.csv");
    auto sum = open_output(dir / "lyapunov_summary.csv");
    auto meta = tool_metadata("lyapunov");
    meta.emplace_back("separation_metric", "X,P,z,moments (noise channels excluded)");
    meta.emplace_back("twin_noise", "shared");
    write_header(per, cfg, meta);
    write_header(sum, cfg, meta);
    per << "x_wall,realization,seed,lambda,failed\n";
    sum << "x_wall,count,used,failed,mean,std,degenerate\n";
    out << "x_wall,mean,std,used,failed\n";
    int code = kExitOk;
    for (double xw : pts) {
        RunSettings rs = base;
        rs.dyn.sys.x_wall = xw;
        Progress progress(err, "lyapunov x_wall=" + format_double(xw));
        const auto r = lyapunov_ensemble(rs, cfg.lyapunov(), cfg.ensemble(), std::ref(progress));
        for (std::size_t i = 0; i < r.realizations.size(); ++i) {
            const auto& rr = r.realizations[i];
            per << format_double(xw) << ',' << i << ',' << rr.seed << ','
                << (rr.failed ? "nan" : format_double(rr.value)) << ',' << (rr.failed ? 1 : 0) << '\n';
        }
        sum << format_double(xw) << ',' << r.realizations.size() << ',' << r.used << ',' << r.failed << ','
            << format_double(r.mean) << ',' << format_double(r.stddev) << ',' << (r.degenerate ? 1 : 0) << '\n';
        out << format_double(xw) << ',' << format_double(r.mean) << ',' << format_double(r.stddev) << ','
            << r.used << ',' << r.failed << (r.degenerate ? " (degenerate count)" : "") << '\n';
        if (r.used == 0) code = kExitRuntime;
    }
    write_plot_script(dir / "lyapunov.gp",
                      "set xlabel 'x_wall'\nset ylabel 'lambda'\n"
                      "plot 'lyapunov_summary.csv' using 1:5:6 with yerrorbars title 'mean +- std', 0 notitle\n");
    return code;
}

struct Series {
    double x_wall;
    std::vector<double> values;
};

// X sampled once per forcing period from a trajectory file, or the single
// `value` column of a plain series file.
Series strobe_from_file(const std::string& path) {
    const auto table = read_csv_file(path);
    Series s{std::nan(""), {}};
    if (table.has_column("value") && !table.has_column("X")) {
        s.values = table.column("value");
        return s;
    }
    const long spc = std::stol(table.meta("config.steps_per_cycle", "1257"));
    const long stride = std::stol(table.meta("config.sample_stride", "1"));
    if (spc % stride != 0)
        throw std::invalid_argument("sample_stride does not divide steps_per_cycle; cannot strobe");
    s.x_wall = std::stod(table.meta("config.x_wall", "nan"));
    s.values = strobe(table.column("X"), static_cast<std::size_t>(spc / stride));
    return s;
}

int cmd_test01(const Options& o, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = build_config(o);
    std::vector<Series> series;
    if (!o.input.empty()) {
        series.push_back(strobe_from_file(o.input));
    } else {
        auto rs = cfg.run_settings(noise_for_run(cfg));
        rs.sample_stride = rs.steps_per_cycle;
        rs.record_extras = false;
        for (double xw : points_or_default(o, cfg)) {
            rs.dyn.sys.x_wall = xw;
            err << "test01: simulating x_wall=" << format_double(xw) << '\n';
            series.push_back({xw, run(rs).X});
        }
    }
    const auto dir = cfg.output_dir();
    auto os = open_output(dir / "test01.csv");
    auto detail = open_output(dir / "test01_c.csv");
    auto meta = tool_metadata("test01");
    if (!o.input.empty()) meta.emplace_back("input", o.input);
    write_header(os, cfg, meta);
    write_header(detail, cfg, meta);
    os << "x_wall,K,samples,n_c\n";
    detail << "x_wall,c,K_c\n";
    out << "x_wall,K\n";
    for (const auto& s : series) {
        const auto r = test_01(s.values, cfg.test01());
        os << format_double(s.x_wall) << ',' << format_double(r.K) << ',' << s.values.size() << ','
           << r.c.size() << '\n';
        for (std::size_t i = 0; i < r.c.size(); ++i)
            detail << format_double(s.x_wall) << ',' << format_double(r.c[i]) << ',' << format_double(r.K_c[i]) << '\n';
        out << format_double(s.x_wall) << ',' << format_double(r.K) << '\n';
    }
    write_plot_script(dir / "test01.gp",
                      "set xlabel 'x_wall'\nset ylabel 'K'\nset yrange [-0.05:1.05]\n"
                      "plot 'test01.csv' using 1:2 with linespoints title '0-1 test K'\n");
    return kExitOk;
}

int cmd_fft(const Options& o, std::ostream& out, std::ostream& /*err*/) {
    const RunConfig cfg = build_config(o);
    std::vector<double> x;
    double sample_dt = 0.0, Omega = cfg.real("Omega");
    if (!o.input.empty()) {
        const auto table = read_csv_file(o.input);
        const auto& t = table.column("t");
        if (t.size() < 2) throw std::invalid_argument("trajectory too short for a spectrum");
        x = table.column("X");
        sample_dt = t[1] - t[0];
        Omega = std::stod(table.meta("config.Omega", format_double(Omega)));
    } else {
        auto rs = cfg.run_settings(noise_for_run(cfg));
        rs.record_extras = false;
        const auto traj = run(rs);
        x = traj.X;
        sample_dt = rs.dt() * static_cast<double>(rs.sample_stride);
    }
    const auto spec = power_spectrum(x, sample_dt, Omega, parse_window(cfg.text("window")));
    const auto dir = cfg.output_dir();
    auto meta = tool_metadata("fft");
    if (!o.input.empty()) meta.emplace_back("input", o.input);
    meta.emplace_back("window", to_string(spec.window));
    meta.emplace_back("segments", std::to_string(spec.segments));
    meta.emplace_back("windowed_power", format_double(spec.windowed_power));
    {
        auto os = open_output(dir / "spectrum.csv");
        write_header(os, cfg, meta);
        os << "frequency,power\n";
        for (std::size_t k = 0; k < spec.power.size(); ++k)
            os << format_double(spec.frequency[k]) << ',' << format_double(spec.power[k]) << '\n';
    }
    write_plot_script(dir / "spectrum.gp",
                      "set logscale y\nset xlabel 'frequency / Omega'\nset ylabel 'power'\nset xrange [0:10]\n"
                      "plot 'spectrum.csv' using 1:2 with lines title 'Welch PSD of X'\n");
    const double floor = spectrum_floor(spec, 10.0);
    const auto peaks = spectrum_peaks(spec, 10.0 * floor, 10.0);
    out << "bins=" << spec.power.size() << " floor=" << format_double(floor) << " peaks_above_10x_floor="
        << peaks.size() << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantum soft-impact oscillator simulator and chaos diagnostics", "qsio"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config_file, "key=value configuration file");
    app.add_option("--set", o.sets, "override one key, e.g. --set x_wall=0.4");
    app.add_option("--seed", o.seed, "noise seed (master seed for ensembles)");
    app.add_option("--threads", o.threads, "worker threads, 0 = all cores");
    app.add_option("-o,--output-dir", o.output_dir, "output directory");
    app.add_flag("--desk-scale", o.desk, "200 + 500 cycles, 50 realizations");
    app.add_flag("--full-scale", o.full, "1000 + 3000 cycles, 1000 realizations");

    auto* fit = app.add_subcommand("noise-fit", "fit the exponential noise decomposition");
    auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
    sim->add_option("--replay", o.replay, "rerun the configuration embedded in an output file");
    sim->add_option("--out", o.out_name, "output file name inside the output directory");
    sim->add_flag("--extras", o.extras, "also record z, f, q2, q3, q4");
    auto* bif = app.add_subcommand("bifurcation", "Poincare/Lyapunov scan over x_wall");
    bif->add_option("--grid", o.grid, "start:stop:step");
    bif->add_option("--points", o.points, "comma-separated x_wall values");
    auto* lyap = app.add_subcommand("lyapunov", "largest Lyapunov exponent over noise realizations");
    lyap->add_option("--points", o.points, "comma-separated x_wall values");
    auto* t01 = app.add_subcommand("test01", "0-1 test for chaos");
    t01->add_option("--input", o.input, "trajectory CSV or single-column 'value' series");
    t01->add_option("--points", o.points, "comma-separated x_wall values to simulate");
    auto* fft = app.add_subcommand("fft", "power spectrum of X");
    fft->add_option("--input", o.input, "trajectory CSV");
    for (auto* sub : {fit, sim, bif, lyap, t01, fft}) sub->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (*fit) return cmd_noise_fit(o, out, err);
        if (*sim) return cmd_simulate(o, out, err);
        if (*bif) return cmd_bifurcation(o, out, err);
        if (*lyap) return cmd_lyapunov(o, out, err);
        if (*t01) return cmd_test01(o, out, err);
        if (*fft) return cmd_fft(o, out, err);
    } catch (const ConfigError& e) {
        err << "configuration error";
        if (!e.key.empty()) err << " [" << e.key << "]";
        err << ": " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}

}  // namespace qsio
