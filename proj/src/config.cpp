#include "qsio/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace qsio {

const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema{
        {"k", "1.0", ValueKind::real, "spring constant"},
        {"A", "10.0", ValueKind::real, "wall stiffness multiplier"},
        {"m", "1.0", ValueKind::real, "mass"},
        {"x_wall", "0.5", ValueKind::real, "wall position"},
        {"F", "10.0", ValueKind::real, "forcing amplitude"},
        {"Omega", "0.5", ValueKind::real, "forcing angular frequency"},
        {"hbar", "0.01", ValueKind::real, "reduced Planck constant"},
        {"c", "10.0", ValueKind::real, "sigmoid slope"},
        {"Gamma", "1.0", ValueKind::real, "dissipation strength"},
        {"tau_c", "3.0", ValueKind::real, "bath correlation time"},
        {"kT", "0.01", ValueKind::real, "thermal energy"},
        {"noise_components", "3", ValueKind::integer, "exponential noise channels"},
        {"fit_tolerance", "0.02", ValueKind::real, "allowed RMS fit residual / c(0)"},
        {"noise_target", "quadrature", ValueKind::text, "fit target: quadrature or classical"},
        {"use_noise", "true", ValueKind::boolean, "drive with colored noise"},
        {"quantum_correction", "true", ValueKind::boolean, "include Q(t)"},
        {"nonlinear_feed", "false", ValueKind::boolean, "V''' feed in the moment hierarchy"},
        {"moment_damping", "true", ValueKind::boolean, "Markovian damping of momentum moments"},
        {"moment_damping_rate", "auto", ValueKind::text, "damping rate, auto = Gamma/tau_c"},
        {"steps_per_cycle", "1257", ValueKind::integer, "integration steps per forcing period"},
        {"n_transient", "1000", ValueKind::integer, "discarded forcing cycles"},
        {"n_record", "3000", ValueKind::integer, "recorded forcing cycles"},
        {"sample_stride", "1", ValueKind::integer, "steps between recorded samples"},
        {"record_extras", "false", ValueKind::boolean, "record z, f, q2, q3, q4"},
        {"seed", "1", ValueKind::integer, "noise seed (master seed for ensembles)"},
        {"threads", "0", ValueKind::integer, "worker threads, 0 = all cores"},
        {"poincare_direction", "down", ValueKind::text, "P = 0 crossing direction: down, up, both"},
        {"cluster_tol", "0.02", ValueKind::real, "Poincare cluster separation in X"},
        {"lyap_d0", "1e-8", ValueKind::real, "twin separation"},
        {"lyap_renorm_steps", "1257", ValueKind::integer, "steps between renormalizations"},
        {"realizations", "50", ValueKind::integer, "noise realizations per ensemble"},
        {"seed_policy", "fixed", ValueKind::text, "bifurcation seeds: fixed or fresh"},
        {"grid_start", "0.2", ValueKind::real, "first x_wall of the scan"},
        {"grid_stop", "2.0", ValueKind::real, "last x_wall of the scan"},
        {"grid_step", "0.01", ValueKind::real, "x_wall increment"},
        {"window", "hann", ValueKind::text, "spectrum window: hann or none"},
        {"test01_nc", "100", ValueKind::integer, "random c values in the 0-1 test"},
        {"test01_seed", "1", ValueKind::integer, "seed for the c draws"},
        {"output_dir", "", ValueKind::text, "output directory, empty = $QSIO_OUTPUT_DIR or ."},
        {"cache_dir", "", ValueKind::text, "noise fit cache, empty = <output_dir>/noise_cache"},
    };
    return schema;
}

namespace {

const ConfigKey* find_key(const std::string& key) {
    const auto& schema = config_schema();
    auto it = std::find_if(schema.begin(), schema.end(), [&](const auto& k) { return key == k.name; });
    return it == schema.end() ? nullptr : &*it;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_real(const std::string& s, double& out) {
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && p == end;
}

bool parse_integer(const std::string& s, long& out) {
    const auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && p == end;
}

bool parse_boolean(const std::string& s, bool& out) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return out = true, true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return out = false, true;
    return false;
}

}  // namespace

std::string default_output_dir() {
    if (const char* env = std::getenv("QSIO_OUTPUT_DIR"); env && *env) return env;
    return ".";
}

RunConfig::RunConfig() {
    for (const auto& k : config_schema()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
    const ConfigKey* spec = find_key(key);
    if (!spec) throw ConfigError("unknown configuration key '" + key + "'", key);
    const std::string value = trim(raw);
    bool ok = true;
    switch (spec->kind) {
        case ValueKind::real: {
            double d;
            ok = parse_real(value, d);
            break;
        }
        case ValueKind::integer: {
            long l;
            ok = parse_integer(value, l);
            break;
        }
        case ValueKind::boolean: {
            bool b;
            ok = parse_boolean(value, b);
            break;
        }
        case ValueKind::text: break;
    }
    if (!ok) throw ConfigError("invalid value '" + value + "' for key '" + key + "'", key);
    values_[key] = value;
}

void RunConfig::assign(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("expected key=value, got '" + assignment + "'", trim(assignment));
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void RunConfig::load(std::istream& in, const std::string& source) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            assign(line);
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what(), e.key);
        }
    }
}

void RunConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in{path};
    if (!in) throw ConfigError("cannot open config file " + path.string(), "");
    load(in, path.string());
}

void RunConfig::load_embedded(std::istream& in) {
    const std::string prefix = "# config.";
    std::string line;
    bool any = false;
    while (std::getline(in, line)) {
        if (line.rfind("#", 0) != 0) break;
        if (line.rfind(prefix, 0) != 0) continue;
        assign(line.substr(prefix.size()));
        any = true;
    }
    if (!any) throw ConfigError("no embedded configuration found", "");
}

const std::string& RunConfig::text(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown configuration key '" + key + "'", key);
    return it->second;
}

double RunConfig::real(const std::string& key) const {
    double d = 0.0;
    if (!parse_real(text(key), d)) throw ConfigError("key '" + key + "' is not a number", key);
    return d;
}

long RunConfig::integer(const std::string& key) const {
    long l = 0;
    if (!parse_integer(text(key), l)) throw ConfigError("key '" + key + "' is not an integer", key);
    return l;
}

bool RunConfig::boolean(const std::string& key) const {
    bool b = false;
    if (!parse_boolean(text(key), b)) throw ConfigError("key '" + key + "' is not a boolean", key);
    return b;
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : config_schema()) out.emplace_back(k.name, values_.at(k.name));
    return out;
}

void RunConfig::validate() const {
    auto fail = [](const std::string& key, const std::string& why) {
        throw ConfigError("invalid value for '" + key + "': " + why, key);
    };
    auto positive = [&](const char* key) {
        const double v = real(key);
        if (!std::isfinite(v) || !(v > 0.0)) fail(key, "must be > 0");
    };
    for (const char* key : {"k", "m", "c", "Omega", "Gamma", "tau_c", "kT", "lyap_d0", "grid_step", "cluster_tol"})
        positive(key);
    if (!(real("A") >= 0.0)) fail("A", "must be >= 0");
    if (!(real("hbar") >= 0.0)) fail("hbar", "must be >= 0");
    if (!std::isfinite(real("x_wall"))) fail("x_wall", "must be finite");
    if (!std::isfinite(real("F"))) fail("F", "must be finite");
    if (!(real("fit_tolerance") > 0.0)) fail("fit_tolerance", "must be > 0");
    if (integer("noise_components") < 1 || integer("noise_components") > 8)
        fail("noise_components", "must be in [1, 8]");
    if (integer("steps_per_cycle") < 1) fail("steps_per_cycle", "must be >= 1");
    if (integer("n_transient") < 0) fail("n_transient", "must be >= 0");
    if (integer("n_record") < 0) fail("n_record", "must be >= 0");
    if (integer("sample_stride") < 1) fail("sample_stride", "must be >= 1");
    if (integer("seed") < 0) fail("seed", "must be >= 0");
    if (integer("threads") < 0) fail("threads", "must be >= 0");
    if (integer("lyap_renorm_steps") < 1) fail("lyap_renorm_steps", "must be >= 1");
    if (integer("realizations") < 1) fail("realizations", "must be >= 1");
    if (integer("test01_nc") < 50) fail("test01_nc", "must be >= 50");
    if (integer("test01_seed") < 0) fail("test01_seed", "must be >= 0");
    if (text("noise_target") != "quadrature" && text("noise_target") != "classical")
        fail("noise_target", "must be quadrature or classical");
    if (text("moment_damping_rate") != "auto") {
        double d;
        if (!parse_real(text("moment_damping_rate"), d) || !(d >= 0.0))
            fail("moment_damping_rate", "must be auto or a number >= 0");
    }
    if (!(real("grid_stop") >= real("grid_start"))) fail("grid_stop", "must be >= grid_start");
    try {
        parse_direction(text("poincare_direction"));
    } catch (const std::invalid_argument& e) {
        fail("poincare_direction", e.what());
    }
    try {
        parse_window(text("window"));
    } catch (const std::invalid_argument& e) {
        fail("window", e.what());
    }
    try {
        parse_seed_policy(text("seed_policy"));
    } catch (const std::invalid_argument& e) {
        fail("seed_policy", e.what());
    }
}

SystemParams RunConfig::system() const {
    SystemParams p;
    p.k = real("k");
    p.A = real("A");
    p.m = real("m");
    p.x_wall = real("x_wall");
    p.F = real("F");
    p.Omega = real("Omega");
    p.hbar = real("hbar");
    p.c_slope = real("c");
    return p;
}

BathParams RunConfig::bath() const {
    BathParams b;
    b.Gamma = real("Gamma");
    b.tau_c = real("tau_c");
    b.kT = real("kT");
    b.hbar = real("hbar");
    return b;
}

FitOptions RunConfig::fit_options() const {
    FitOptions o;
    o.tolerance = real("fit_tolerance");
    return o;
}

RunSettings RunConfig::run_settings(const NoiseModel& noise) const {
    RunSettings rs;
    rs.dyn.sys = system();
    rs.dyn.bath = bath();
    rs.dyn.quantum_correction = boolean("quantum_correction");
    rs.dyn.closure.nonlinear_feed = boolean("nonlinear_feed");
    rs.dyn.closure.damping = boolean("moment_damping");
    if (text("moment_damping_rate") != "auto") rs.dyn.closure.damping_rate = real("moment_damping_rate");
    rs.noise = noise;
    rs.seed = static_cast<std::uint64_t>(integer("seed"));
    rs.steps_per_cycle = static_cast<int>(integer("steps_per_cycle"));
    rs.n_transient_cycles = integer("n_transient");
    rs.n_record_cycles = integer("n_record");
    rs.sample_stride = integer("sample_stride");
    rs.record_extras = boolean("record_extras");
    rs.use_noise = boolean("use_noise");
    return rs;
}

LyapunovSettings RunConfig::lyapunov() const {
    LyapunovSettings l;
    l.d0 = real("lyap_d0");
    l.renorm_steps = integer("lyap_renorm_steps");
    return l;
}

EnsembleSpec RunConfig::ensemble() const {
    EnsembleSpec e;
    e.count = static_cast<int>(integer("realizations"));
    e.master_seed = static_cast<std::uint64_t>(integer("seed"));
    e.threads = static_cast<int>(integer("threads"));
    return e;
}

ScanSettings RunConfig::scan() const {
    ScanSettings s;
    s.direction = parse_direction(text("poincare_direction"));
    s.seed_policy = parse_seed_policy(text("seed_policy"));
    s.lyapunov = lyapunov();
    s.threads = static_cast<int>(integer("threads"));
    return s;
}

Test01Settings RunConfig::test01() const {
    Test01Settings t;
    t.n_c = static_cast<int>(integer("test01_nc"));
    t.seed = static_cast<std::uint64_t>(integer("test01_seed"));
    return t;
}

std::vector<double> RunConfig::grid() const {
    std::ostringstream os;
    os << text("grid_start") << ':' << text("grid_stop") << ':' << text("grid_step");
    return parse_grid(os.str());
}

std::filesystem::path RunConfig::output_dir() const {
    const auto& d = text("output_dir");
    return d.empty() ? std::filesystem::path(default_output_dir()) : std::filesystem::path(d);
}

std::filesystem::path RunConfig::cache_dir() const {
    const auto& d = text("cache_dir");
    return d.empty() ? output_dir() / "noise_cache" : std::filesystem::path(d);
}

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(trim(part));
    double start = 0, stop = 0, step = 0;
    if (parts.size() != 3 || !parse_real(parts[0], start) || !parse_real(parts[1], stop) ||
        !parse_real(parts[2], step))
        throw ConfigError("grid must be start:stop:step, got '" + spec + "'", "grid");
    if (!(step > 0.0)) throw ConfigError("grid step must be > 0", "grid");
    if (stop < start) throw ConfigError("grid must be increasing (start <= stop)", "grid");
    std::vector<double> grid;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) grid.push_back(start + static_cast<double>(i) * step);
    return grid;
}

std::vector<double> parse_list(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ',');) {
        double v;
        part = trim(part);
        if (!parse_real(part, v)) throw ConfigError("not a number in list: '" + part + "'", "points");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("empty list", "points");
    return out;
}

}  // namespace qsio
