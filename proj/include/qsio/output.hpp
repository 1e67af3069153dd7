#pragma once

#include "qsio/config.hpp"
#include "qsio/integrator.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace qsio {

using Metadata = std::vector<std::pair<std::string, std::string>>;

/// "# config.key=value" for the effective configuration, then "# key=value"
/// for run metadata.
void write_header(std::ostream& os, const RunConfig& cfg, const Metadata& meta);

/// Trajectory CSV: header, then t,X,P[,z,f,q2,q3,q4] rows in round-trip decimal.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const RunConfig& cfg);

/// Reads a CSV written by this tool: comment header, one column-name row,
/// numeric rows. Metadata keeps every "# key=value" line, config included.
struct CsvTable {
    Metadata metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  ///< column-major

    const std::vector<double>& column(const std::string& name) const;
    bool has_column(const std::string& name) const;
    std::string meta(const std::string& key, const std::string& fallback = "") const;
};
CsvTable read_csv(std::istream& is);
CsvTable read_csv_file(const std::filesystem::path& path);

/// Writes a gnuplot script next to a data file.
void write_plot_script(const std::filesystem::path& path, const std::string& body);

}  // namespace qsio
