#include "qsio/bath.hpp"

#include <Eigen/Dense>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

namespace qsio {

void BathParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("invalid bath parameter: ") + what);
    };
    require(std::isfinite(Gamma) && Gamma > 0.0, "Gamma must be > 0");
    require(std::isfinite(tau_c) && tau_c > 0.0, "tau_c must be > 0");
    require(std::isfinite(kT) && kT > 0.0, "kT must be > 0");
    require(std::isfinite(hbar) && hbar >= 0.0, "hbar must be >= 0");
}

double memory_kernel(double t, const BathParams& b) {
    if (t < 0.0) throw std::invalid_argument("memory_kernel: t must be >= 0");
    return b.Gamma / b.tau_c * std::exp(-t / b.tau_c);
}

double quantum_thermal_factor(double omega, const BathParams& b) {
    const double x = b.hbar * omega / (2.0 * b.kT);
    if (x < 1e-4) return 2.0 * b.kT * (1.0 + x * x / 3.0);
    return 2.0 * b.kT * x / std::tanh(x);
}

double spectral_cutoff(const BathParams& b) { return std::sqrt(1e12 - 1.0) / b.tau_c; }

namespace {

struct WorkspaceDeleter {
    void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};
struct QawoTableDeleter {
    void operator()(gsl_integration_qawo_table* t) const { gsl_integration_qawo_table_free(t); }
};

constexpr std::size_t kLimit = 4000;
constexpr double kEpsAbs = 1e-15;
constexpr double kEpsRel = 1e-10;

// (1/2)(2/pi) Gamma/(1+w^2 tau_c^2) * hbar w coth(hbar w / 2kT)
double spectral_integrand(double omega, void* params) {
    const auto& b = *static_cast<const BathParams*>(params);
    const double wt = omega * b.tau_c;
    return b.Gamma / M_PI / (1.0 + wt * wt) * quantum_thermal_factor(omega, b);
}

void check(int status, double abserr, const char* where) {
    if (status != GSL_SUCCESS) {
        std::ostringstream os;
        os << "correlation_function: quadrature did not converge in " << where << " ("
           << gsl_strerror(status) << "), achieved error " << abserr;
        throw QuadratureError(os.str(), abserr);
    }
}

// Panel edges: [0, 1/tau_c] then decades up to the envelope cutoff.
std::vector<double> panel_edges(const BathParams& b) {
    const double cutoff = spectral_cutoff(b);
    std::vector<double> edges{0.0};
    for (double w = 1.0 / b.tau_c; w < cutoff; w *= 10.0) edges.push_back(w);
    edges.push_back(cutoff);
    return edges;
}

}  // namespace

double correlation_function(double tau, const BathParams& b) {
    tau = std::abs(tau);
    gsl_set_error_handler_off();
    std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(
        gsl_integration_workspace_alloc(kLimit));
    BathParams copy = b;
    gsl_function f{&spectral_integrand, &copy};
    const auto edges = panel_edges(b);

    double total = 0.0;
    if (tau == 0.0) {
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
            double r = 0.0, err = 0.0;
            check(gsl_integration_qag(&f, edges[i], edges[i + 1], kEpsAbs, kEpsRel, kLimit,
                                      GSL_INTEG_GAUSS31, ws.get(), &r, &err),
                  err, "zero-lag panel");
            total += r;
        }
        return total;
    }

    std::unique_ptr<gsl_integration_qawo_table, QawoTableDeleter> table(
        gsl_integration_qawo_table_alloc(tau, 1.0, GSL_INTEG_COSINE, 60));
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const double a = edges[i];
        const double len = edges[i + 1] - a;
        gsl_integration_qawo_table_set_length(table.get(), len);
        double r = 0.0, err = 0.0;
        check(gsl_integration_qawo(&f, a, kEpsAbs, kEpsRel, kLimit, ws.get(), table.get(), &r, &err),
              err, "oscillatory panel");
        total += r;
    }
    return total;
}

CorrelationSamples sample_correlation(const BathParams& b, double tau_max, double spacing) {
    if (!(spacing > 0.0) || !(tau_max >= 0.0))
        throw std::invalid_argument("sample_correlation: need spacing > 0 and tau_max >= 0");
    CorrelationSamples s;
    const auto count = static_cast<std::size_t>(std::llround(tau_max / spacing)) + 1;
    s.tau.reserve(count);
    s.value.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        const double t = static_cast<double>(j) * spacing;
        s.tau.push_back(t);
        s.value.push_back(correlation_function(t, b));
    }
    return s;
}

double NoiseModel::correlation(double tau) const {
    double c = 0.0;
    for (const auto& comp : components) c += comp.variance() * std::exp(-std::abs(tau) / comp.tau);
    return c;
}

std::vector<double> nnls(std::span<const double> basis, std::size_t rows, std::size_t cols,
                         std::span<const double> y) {
    if (cols == 0 || cols > 16 || basis.size() != rows * cols || y.size() != rows)
        throw std::invalid_argument("nnls: inconsistent dimensions");
    Eigen::Map<const Eigen::MatrixXd> B(basis.data(), static_cast<Eigen::Index>(rows),
                                        static_cast<Eigen::Index>(cols));
    Eigen::Map<const Eigen::VectorXd> Y(y.data(), static_cast<Eigen::Index>(rows));

    std::vector<double> best(cols, 0.0);
    {
        // An unconstrained minimizer that is already feasible is the answer.
        const Eigen::VectorXd w = B.colPivHouseholderQr().solve(Y);
        if (w.allFinite() && (w.array() >= 0.0).all()) {
            for (std::size_t c = 0; c < cols; ++c) best[c] = w(static_cast<Eigen::Index>(c));
            return best;
        }
    }
    double best_cost = Y.squaredNorm();
    // Every non-negative LS solution is the unconstrained LS solution on its
    // support, so the feasible subset with the smallest cost is optimal.
    for (std::uint32_t mask = 1; mask < (1u << cols); ++mask) {
        std::vector<Eigen::Index> idx;
        for (std::size_t c = 0; c < cols; ++c)
            if (mask & (1u << c)) idx.push_back(static_cast<Eigen::Index>(c));
        Eigen::MatrixXd sub(B.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) sub.col(static_cast<Eigen::Index>(j)) = B.col(idx[j]);
        const Eigen::VectorXd w = sub.colPivHouseholderQr().solve(Y);
        if ((w.array() < 0.0).any() || !w.allFinite()) continue;
        const double cost = (sub * w - Y).squaredNorm();
        if (cost < best_cost) {
            best_cost = cost;
            std::fill(best.begin(), best.end(), 0.0);
            for (std::size_t j = 0; j < idx.size(); ++j) best[static_cast<std::size_t>(idx[j])] = w(static_cast<Eigen::Index>(j));
        }
    }
    return best;
}

namespace {

struct SeparableFit {
    std::span<const double> tau;
    std::span<const double> value;
    double log_lo, log_hi;

    // Weights and squared-residual cost for the given log correlation times.
    std::pair<std::vector<double>, double> solve(const std::vector<double>& log_tau) const {
        const std::size_t rows = tau.size(), cols = log_tau.size();
        std::vector<double> basis(rows * cols);
        for (std::size_t c = 0; c < cols; ++c) {
            const double tc = std::exp(std::clamp(log_tau[c], log_lo, log_hi));
            for (std::size_t r = 0; r < rows; ++r) basis[c * rows + r] = std::exp(-tau[r] / tc);
        }
        auto w = nnls(basis, rows, cols, value);
        double cost = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            double fit = 0.0;
            for (std::size_t c = 0; c < cols; ++c) fit += basis[c * rows + r] * w[c];
            cost += (fit - value[r]) * (fit - value[r]);
        }
        // Penalize leaving the box so the simplex is pushed back inside.
        double excess = 0.0;
        for (double u : log_tau) excess += std::max(0.0, u - log_hi) + std::max(0.0, log_lo - u);
        return {std::move(w), cost * (1.0 + excess)};
    }
};

// Nelder-Mead on an unconstrained objective; returns the best vertex.
template <class Objective>
std::vector<double> nelder_mead(Objective&& fn, std::vector<double> start, double step,
                                int max_iter, double xtol) {
    const std::size_t n = start.size();
    std::vector<std::vector<double>> simplex(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step;
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = fn(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    for (int iter = 0; iter < max_iter; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
        const auto best = order.front(), worst = order.back(), second = order[n - 1];

        double size = 0.0;
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t d = 0; d < n; ++d)
                size = std::max(size, std::abs(simplex[i][d] - simplex[best][d]));
        if (size < xtol) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst)
                for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[i][d] / static_cast<double>(n);
        auto along = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t d = 0; d < n; ++d) p[d] = centroid[d] + coef * (simplex[worst][d] - centroid[d]);
            return p;
        };

        auto reflected = along(-1.0);
        const double fr = fn(reflected);
        if (fr < fv[best]) {
            auto expanded = along(-2.0);
            const double fe = fn(expanded);
            if (fe < fr) {
                simplex[worst] = std::move(expanded);
                fv[worst] = fe;
            } else {
                simplex[worst] = std::move(reflected);
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            simplex[worst] = std::move(reflected);
            fv[worst] = fr;
        } else {
            auto contracted = fr < fv[worst] ? along(-0.5) : along(0.5);
            const double fc = fn(contracted);
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = std::move(contracted);
                fv[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < n; ++d)
                        simplex[i][d] = simplex[best][d] + 0.5 * (simplex[i][d] - simplex[best][d]);
                    fv[i] = fn(simplex[i]);
                }
            }
        }
    }
    const auto it = std::min_element(fv.begin(), fv.end());
    return simplex[static_cast<std::size_t>(it - fv.begin())];
}

}  // namespace

NoiseModel fit_exponentials(std::span<const double> tau, std::span<const double> value, int n,
                            double tolerance) {
    if (n < 1) throw std::invalid_argument("fit_exponentials: n must be >= 1");
    if (tau.size() != value.size() || tau.size() < 2)
        throw std::invalid_argument("fit_exponentials: need matching samples, at least 2");
    const double span = tau.back() - tau.front();
    const double spacing = span / static_cast<double>(tau.size() - 1);
    if (!(spacing > 0.0)) throw std::invalid_argument("fit_exponentials: tau grid must increase");

    SeparableFit problem{tau, value, std::log(spacing * 1e-3), std::log(span * 10.0)};
    auto cost = [&](const std::vector<double>& u) { return problem.solve(u).second; };

    // Deterministic multistart: every n-subset of a log-spaced ladder.
    constexpr int kLadder = 9;
    std::vector<double> ladder(kLadder);
    for (int i = 0; i < kLadder; ++i)
        ladder[i] = problem.log_lo + (problem.log_hi - problem.log_lo) * (i + 0.5) / kLadder;

    std::vector<double> best_u;
    double best_cost = std::numeric_limits<double>::infinity();
    auto try_start = [&](std::vector<double> start) {
        auto u = nelder_mead(cost, std::move(start), 0.5, 4000, 1e-10);
        u = nelder_mead(cost, std::move(u), 0.05, 4000, 1e-12);  // restart to escape a collapsed simplex
        const double c = cost(u);
        if (c < best_cost) {
            best_cost = c;
            best_u = std::move(u);
        }
    };
    const int picks = std::min(n, kLadder);
    std::vector<bool> select(kLadder, false);
    std::fill(select.begin(), select.begin() + picks, true);
    do {
        std::vector<double> start;
        for (int i = 0; i < kLadder; ++i)
            if (select[i]) start.push_back(ladder[i]);
        for (int extra = picks; extra < n; ++extra) start.push_back(ladder[extra % kLadder] + 0.1 * extra);
        try_start(std::move(start));
    } while (std::prev_permutation(select.begin(), select.end()));

    auto [weights, sq] = problem.solve(best_u);
    NoiseModel model;
    model.target_c0 = value.front();
    model.fit_residual = std::sqrt(sq / static_cast<double>(tau.size()));
    for (int i = 0; i < n; ++i) {
        const double tc = std::exp(std::clamp(best_u[i], problem.log_lo, problem.log_hi));
        model.components.push_back({weights[i] * tc, tc});
    }
    std::sort(model.components.begin(), model.components.end(),
              [](const auto& a, const auto& b) { return a.tau < b.tau; });

    if (model.fit_residual > tolerance * std::abs(model.target_c0)) {
        std::ostringstream os;
        os << "noise fit residual " << model.fit_residual << " exceeds " << tolerance
           << " of c(0) = " << model.target_c0;
        throw FitError(os.str(), std::move(model));
    }
    return model;
}

NoiseModel fit_noise_model(const BathParams& b, int n, const FitOptions& opts) {
    b.validate();
    const auto samples =
        sample_correlation(b, opts.tau_max_factor * b.tau_c, opts.spacing_fraction * b.tau_c);
    return fit_exponentials(samples.tau, samples.value, n, opts.tolerance);
}

std::string noise_cache_key(const BathParams& b, int n) {
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (double v : {b.Gamma, b.tau_c, b.kT, b.hbar}) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
    h = splitmix64(h ^ static_cast<std::uint64_t>(n));
    std::ostringstream os;
    os << "noise_fit_n" << n << '_' << std::hex << std::setw(16) << std::setfill('0') << h << ".csv";
    return os.str();
}

void write_noise_model_csv(std::ostream& os, const NoiseModel& m, const BathParams& b) {
    os << std::setprecision(17);
    os << "# Gamma=" << b.Gamma << "\n# tau_c=" << b.tau_c << "\n# kT=" << b.kT << "\n# hbar=" << b.hbar
       << "\n# n=" << m.components.size() << "\n# c0=" << m.target_c0
       << "\n# fit_residual=" << m.fit_residual << "\n# relative_residual=" << m.relative_residual()
       << "\ni,D,tau,variance\n";
    for (std::size_t i = 0; i < m.components.size(); ++i) {
        const auto& c = m.components[i];
        os << i + 1 << ',' << c.D << ',' << c.tau << ',' << c.variance() << '\n';
    }
}

NoiseModel read_noise_model_csv(std::istream& is) {
    NoiseModel m;
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = line.substr(2, eq - 2);
            const double v = std::stod(line.substr(eq + 1));
            if (key == "c0") m.target_c0 = v;
            if (key == "fit_residual") m.fit_residual = v;
            continue;
        }
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream row(line);
        std::string idx, d, t;
        std::getline(row, idx, ',');
        std::getline(row, d, ',');
        std::getline(row, t, ',');
        m.components.push_back({std::stod(d), std::stod(t)});
    }
    if (m.components.empty()) throw std::runtime_error("noise model CSV has no components");
    return m;
}

NoiseModel load_or_fit_noise_model(const BathParams& b, int n, const std::filesystem::path& dir,
                                   const FitOptions& opts) {
    const auto path = dir / noise_cache_key(b, n);
    if (std::ifstream in{path}; in) {
        auto m = read_noise_model_csv(in);
        if (static_cast<int>(m.components.size()) == n) return m;
    }
    auto m = fit_noise_model(b, n, opts);
    std::filesystem::create_directories(dir);
    std::ofstream out{path};
    write_noise_model_csv(out, m, b);
    return m;
}

NoiseGenerator::NoiseGenerator(NoiseModel model, double dt, std::uint64_t seed)
    : model_(std::move(model)), dt_(dt), normal_(seed) {
    if (!(dt > 0.0)) throw std::invalid_argument("NoiseGenerator: dt must be > 0");
    for (const auto& c : model_.components) {
        if (!(c.D >= 0.0) || !(c.tau > 0.0))
            throw std::invalid_argument("NoiseGenerator: need D >= 0 and tau > 0");
        const double a = std::exp(-dt / c.tau);
        decay_.push_back(a);
        kick_sd_.push_back(std::sqrt(c.variance() * (1.0 - a * a)));
        eta_.push_back(std::sqrt(c.variance()) * normal_());
    }
}

double NoiseGenerator::step() {
    for (std::size_t i = 0; i < eta_.size(); ++i) eta_[i] = eta_[i] * decay_[i] + kick_sd_[i] * normal_();
    return value();
}

double NoiseGenerator::value() const { return std::accumulate(eta_.begin(), eta_.end(), 0.0); }

}  // namespace qsio
