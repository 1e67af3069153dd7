#pragma once

#include "qsio/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qsio {

/// Lorentzian bath constants.
struct BathParams {
    double Gamma = 1.0;  ///< dissipation strength
    double tau_c = 3.0;  ///< bath correlation time
    double kT = 0.01;    ///< thermal energy
    double hbar = 0.01;  ///< shared with SystemParams

    void validate() const;
};

/// gamma(t) = (Gamma/tau_c) exp(-t/tau_c). Throws for t < 0.
double memory_kernel(double t, const BathParams& b);

/// hbar*w*coth(hbar*w/2kT), with its finite limits at w -> 0 and hbar -> 0.
double quantum_thermal_factor(double omega, const BathParams& b);

/// Frequency above which the Lorentzian envelope is below 1e-12 of its peak.
double spectral_cutoff(const BathParams& b);

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_error(achieved) {}
    double achieved_error;
};

/// Noise correlation c(tau) for the Lorentzian spectral density, by
/// adaptive quadrature truncated at spectral_cutoff(). Even in tau.
double correlation_function(double tau, const BathParams& b);

/// c(tau) on a uniform grid [0, tau_max] with the given spacing.
struct CorrelationSamples {
    std::vector<double> tau;
    std::vector<double> value;
};
CorrelationSamples sample_correlation(const BathParams& b, double tau_max, double spacing);

struct NoiseComponent {
    double D = 0.0;    ///< noise strength
    double tau = 1.0;  ///< correlation time
    double variance() const { return D / tau; }
};

/// n-exponential approximation c(tau) ~ sum_i (D_i/tau_i) exp(-|tau|/tau_i).
struct NoiseModel {
    std::vector<NoiseComponent> components;
    double fit_residual = 0.0;  ///< RMS misfit on the fit grid
    double target_c0 = 0.0;     ///< c(0) of the fitted target

    double correlation(double tau) const;
    double relative_residual() const { return target_c0 > 0.0 ? fit_residual / target_c0 : 0.0; }
};

struct FitOptions {
    double tolerance = 0.02;  ///< allowed RMS residual as a fraction of c(0)
    double tau_max_factor = 10.0;   ///< tau grid extends to this multiple of tau_c
    double spacing_fraction = 0.02; ///< grid spacing as a fraction of tau_c
};

class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, NoiseModel m) : std::runtime_error(what), model(std::move(m)) {}
    NoiseModel model;
};

/// Fits n non-negative exponentials to samples (tau_j, c_j). Separable: the
/// weights D_i/tau_i come from non-negative least squares for fixed tau_i,
/// and the tau_i from multistart simplex descent in log space. Throws
/// FitError when the RMS residual exceeds tolerance * c_0.
NoiseModel fit_exponentials(std::span<const double> tau, std::span<const double> value, int n,
                            double tolerance = 0.02);

/// Samples correlation_function on [0, 10 tau_c] at spacing tau_c/50 and fits it.
NoiseModel fit_noise_model(const BathParams& b, int n, const FitOptions& opts = {});

/// Non-negative least squares min |Bw - y|, w >= 0, for a column-major
/// basis with few columns (exact active-set enumeration).
std::vector<double> nnls(std::span<const double> basis, std::size_t rows, std::size_t cols,
                         std::span<const double> y);

// Cache and CSV interchange.
std::string noise_cache_key(const BathParams& b, int n);
void write_noise_model_csv(std::ostream& os, const NoiseModel& m, const BathParams& b);
NoiseModel read_noise_model_csv(std::istream& is);
/// Loads the cached fit for (b, n) from dir, or fits and stores it.
NoiseModel load_or_fit_noise_model(const BathParams& b, int n, const std::filesystem::path& dir,
                                   const FitOptions& opts = {});

/// Sum of independent Ornstein-Uhlenbeck channels advanced by exact updates.
class NoiseGenerator {
public:
    NoiseGenerator(NoiseModel model, double dt, std::uint64_t seed);

    /// Advances every channel by dt and returns the new total force.
    double step();
    double value() const;
    std::span<const double> eta() const { return eta_; }
    const NoiseModel& model() const { return model_; }
    double dt() const { return dt_; }

private:
    NoiseModel model_;
    double dt_;
    NormalSource normal_;
    std::vector<double> eta_;
    std::vector<double> decay_;
    std::vector<double> kick_sd_;
};

}  // namespace qsio
