#pragma once

#include "qsio/integrator.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qsio {

// ---------------------------------------------------------------------------
// Poincare sections on the plane P = 0
// ---------------------------------------------------------------------------

enum class CrossingDirection { down, up, both };

CrossingDirection parse_direction(const std::string& s);
std::string to_string(CrossingDirection d);

struct PoincareSection {
    std::vector<double> t;
    std::vector<double> X;
    CrossingDirection direction = CrossingDirection::down;
};

/// Sign changes of P located by linear interpolation between the bracketing
/// samples. `down` means P going from positive to non-positive.
PoincareSection poincare(std::span<const double> t, std::span<const double> X,
                         std::span<const double> P, CrossingDirection dir = CrossingDirection::down);
PoincareSection poincare(const Trajectory& traj, CrossingDirection dir = CrossingDirection::down);

/// Number of groups left after splitting the sorted values at gaps > tol.
int count_clusters(std::vector<double> values, double tol);

// ---------------------------------------------------------------------------
// Largest Lyapunov exponent (two-trajectory Benettin method)
// ---------------------------------------------------------------------------

/// A flow sampled at a fixed step that can advance a fiducial and a perturbed
/// copy with the same realization of any randomness.
class TwinFlow {
public:
    virtual ~TwinFlow() = default;
    virtual std::size_t dimension() const = 0;
    virtual double dt() const = 0;
    virtual void step(std::span<double> fiducial, std::span<double> perturbed) = 0;
};

struct BenettinSettings {
    double d0 = 1e-8;
    long renorm_steps = 100;
    long align_intervals = 10;  ///< renormalizations discarded before accumulation
    long accumulate_steps = 100000;
};

struct BenettinResult {
    double exponent = 0.0;
    double accumulated_time = 0.0;
    long renormalizations = 0;
    long interval_shrinks = 0;
};

class LyapunovError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Runs the Benettin procedure from `initial` with the perturbation along
/// `direction` (normalized internally).
BenettinResult benettin(TwinFlow& flow, std::span<const double> initial,
                        std::span<const double> direction, const BenettinSettings& s);

struct LyapunovSettings {
    double d0 = 1e-8;
    long renorm_steps = 1257;  ///< one forcing cycle at the default resolution
};

struct LyapunovResult {
    std::vector<double> estimates;
    double mean = 0.0;
    double stddev = 0.0;
    long renorm_steps = 0;
    double d0 = 0.0;
};

/// Exponent of the full simulator for one noise realization. Both twins see
/// the same noise; transients (rs.n_transient_cycles) are integrated on the
/// fiducial alone and the exponent accumulates over rs.n_record_cycles.
/// Separation is measured over (X, P, z, moments).
BenettinResult lyapunov_largest(const RunSettings& rs, const LyapunovSettings& ls);

// ---------------------------------------------------------------------------
// Power spectrum
// ---------------------------------------------------------------------------

enum class Window { hann, none };
Window parse_window(const std::string& s);
std::string to_string(Window w);

struct SpectrumResult {
    std::vector<double> frequency;  ///< angular frequency in units of Omega
    std::vector<double> power;      ///< one-sided density, sum(power)*d(freq) = power of windowed segments
    Window window = Window::hann;
    double bin_width = 0.0;         ///< in units of Omega
    double windowed_power = 0.0;    ///< mean over segments of sum (w x)^2 / sum w^2
    int segments = 0;
    double total_power() const;
};

constexpr std::size_t kMinSpectrumSamples = std::size_t{1} << 14;

/// Welch estimate with 8 half-overlapping segments; each segment's mean is
/// removed before windowing. `sample_dt` is the time between samples.
SpectrumResult power_spectrum(std::span<const double> x, double sample_dt, double Omega,
                              Window window = Window::hann);

/// Median power over bins with 0 < frequency <= max_freq.
double spectrum_floor(const SpectrumResult& s, double max_freq);

/// Local maxima (over +-2 bins) with 0 < frequency <= max_freq whose power
/// exceeds `threshold`. Returns their frequencies.
std::vector<double> spectrum_peaks(const SpectrumResult& s, double threshold, double max_freq);

// ---------------------------------------------------------------------------
// 0-1 test for chaos
// ---------------------------------------------------------------------------

struct K01Result {
    double K = 0.0;
    std::vector<double> c;
    std::vector<double> K_c;
};

struct Test01Settings {
    int n_c = 100;
    std::uint64_t seed = 1;
    std::size_t min_length = 2000;
};

/// Correlation form of the 0-1 test on a series normalized to zero mean and
/// unit variance. K is the median of the clamped per-c correlations for c
/// drawn uniformly from (pi/5, 4pi/5). A constant series gives K = 0.
K01Result test_01(std::span<const double> phi, const Test01Settings& s = {});

/// Every `stride`-th element starting at `offset`.
std::vector<double> strobe(std::span<const double> x, std::size_t stride, std::size_t offset = 0);

}  // namespace qsio
