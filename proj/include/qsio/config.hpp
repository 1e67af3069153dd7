#pragma once

#include "qsio/bath.hpp"
#include "qsio/diagnostics.hpp"
#include "qsio/ensemble.hpp"
#include "qsio/integrator.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsio {

/// Invalid configuration; `key` names the offending entry when there is one.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::string k) : std::runtime_error(what), key(std::move(k)) {}
    std::string key;
};

enum class ValueKind { real, integer, boolean, text };

struct ConfigKey {
    const char* name;
    const char* default_value;
    ValueKind kind;
    const char* help;
};

/// The fixed key schema, in output order.
const std::vector<ConfigKey>& config_schema();

/// Flat key=value run configuration. Values are kept as the text they were
/// given in, so an echoed configuration re-parses to identical numbers.
class RunConfig {
public:
    RunConfig();

    /// Sets one key, checking that it exists and that the value parses.
    void set(const std::string& key, const std::string& value);
    /// Parses a "key=value" assignment.
    void assign(const std::string& assignment);
    /// Reads key=value lines; '#' starts a comment, blank lines are ignored.
    void load(std::istream& in, const std::string& source = "config");
    void load_file(const std::filesystem::path& path);
    /// Reads the "# config.key=value" header lines embedded in an output file.
    void load_embedded(std::istream& in);

    const std::string& text(const std::string& key) const;
    double real(const std::string& key) const;
    long integer(const std::string& key) const;
    bool boolean(const std::string& key) const;

    /// Throws ConfigError when a physical or numerical constraint fails.
    void validate() const;

    const std::map<std::string, std::string>& values() const { return values_; }
    /// Entries in schema order.
    std::vector<std::pair<std::string, std::string>> entries() const;

    SystemParams system() const;
    BathParams bath() const;
    FitOptions fit_options() const;
    /// Everything but the noise model, which the caller fits or loads.
    RunSettings run_settings(const NoiseModel& noise) const;
    LyapunovSettings lyapunov() const;
    EnsembleSpec ensemble() const;
    ScanSettings scan() const;
    Test01Settings test01() const;
    std::vector<double> grid() const;
    std::filesystem::path output_dir() const;
    std::filesystem::path cache_dir() const;

private:
    std::map<std::string, std::string> values_;
};

/// Output directory default: $QSIO_OUTPUT_DIR, else the working directory.
std::string default_output_dir();

/// Parses "start:stop:step" into an inclusive increasing grid.
std::vector<double> parse_grid(const std::string& spec);
/// Parses a comma-separated list of numbers.
std::vector<double> parse_list(const std::string& spec);

}  // namespace qsio
