#include "qsio/output.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qsio {

void write_header(std::ostream& os, const RunConfig& cfg, const Metadata& meta) {
    for (const auto& [k, v] : cfg.entries()) os << "# config." << k << '=' << v << '\n';
    for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const RunConfig& cfg) {
    write_header(os, cfg, traj.metadata);
    os << "t,X,P";
    if (traj.extras) os << ",z,f,q2,q3,q4";
    os << '\n';
    std::string row;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        row = format_double(traj.t[i]);
        row += ',';
        row += format_double(traj.X[i]);
        row += ',';
        row += format_double(traj.P[i]);
        if (traj.extras) {
            for (const auto* col : {&traj.z, &traj.f, &traj.q2, &traj.q3, &traj.q4}) {
                row += ',';
                row += format_double((*col)[i]);
            }
        }
        os << row << '\n';
    }
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return data[i];
    throw std::runtime_error("CSV has no column '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const {
    for (const auto& c : columns)
        if (c == name) return true;
    return false;
}

std::string CsvTable::meta(const std::string& key, const std::string& fallback) const {
    for (const auto& [k, v] : metadata)
        if (k == key) return v;
    return fallback;
}

CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    bool have_columns = false;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos && line.size() > 2)
                t.metadata.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        if (!have_columns) {
            while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
            t.data.resize(t.columns.size());
            have_columns = true;
            continue;
        }
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            double v = 0.0;
            const auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || p != cell.data() + cell.size() || c >= t.columns.size())
                throw std::runtime_error("malformed CSV row at line " + std::to_string(lineno));
            t.data[c++].push_back(v);
        }
        if (c != t.columns.size()) throw std::runtime_error("short CSV row at line " + std::to_string(lineno));
    }
    if (!have_columns) throw std::runtime_error("CSV has no column header");
    return t;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
    std::ifstream in{path};
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_csv(in);
}

void write_plot_script(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out{path};
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# gnuplot script; run: gnuplot " << path.filename().string() << '\n'
        << "set datafile separator ','\nset datafile commentschars '#'\n"
        << body;
}

}  // namespace qsio
