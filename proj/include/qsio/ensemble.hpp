#pragma once

#include "qsio/diagnostics.hpp"
#include "qsio/integrator.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qsio {

struct EnsembleSpec {
    int count = 50;
    std::uint64_t master_seed = 1;
    int threads = 0;  ///< 0 = hardware concurrency

    /// Seeds of every realization, derived from the master seed.
    std::vector<std::uint64_t> seeds() const;
};

struct RealizationOutcome {
    std::uint64_t seed = 0;
    double value = 0.0;
    bool failed = false;
    std::string error;
};

struct EnsembleResult {
    std::vector<RealizationOutcome> realizations;  ///< sorted by seed
    int failed = 0;
    int used = 0;
    double mean = 0.0;
    double stddev = 0.0;     ///< (n-1)-normalized; 0 when fewer than 2 values
    bool degenerate = false; ///< fewer than 2 successful realizations
};

/// Per-realization task: value computed from a derived seed. Throwing
/// marks the realization failed; it is excluded from the aggregates.
using RealizationTask = std::function<double(std::uint64_t seed)>;

/// Progress callback, called from worker threads with (done, total).
using ProgressFn = std::function<void(int, int)>;

EnsembleResult run_ensemble(const EnsembleSpec& spec, const RealizationTask& task,
                            const ProgressFn& progress = {});

/// Largest Lyapunov exponent per realization; rs.seed is replaced by each derived seed.
EnsembleResult lyapunov_ensemble(const RunSettings& rs, const LyapunovSettings& ls,
                                 const EnsembleSpec& spec, const ProgressFn& progress = {});

/// Mean of X over the recording window per realization.
EnsembleResult mean_position_ensemble(const RunSettings& rs, const EnsembleSpec& spec,
                                      const ProgressFn& progress = {});

// ---------------------------------------------------------------------------

enum class SeedPolicy { fixed, fresh };
SeedPolicy parse_seed_policy(const std::string& s);
std::string to_string(SeedPolicy p);

struct BifurcationPoint {
    double x_wall = 0.0;
    std::vector<double> poincare_X;
    double lambda = 0.0;
    bool failed = false;
    std::string error;
};

struct BifurcationScan {
    std::vector<BifurcationPoint> points;
};

struct ScanSettings {
    CrossingDirection direction = CrossingDirection::down;
    SeedPolicy seed_policy = SeedPolicy::fixed;
    bool with_lyapunov = true;
    LyapunovSettings lyapunov;
    int threads = 0;
};

/// Runs `base` at every x_wall of the strictly increasing grid. A blow-up at
/// one point is recorded on that point and the scan continues. With the
/// fresh policy, point i uses derive_seed(base.seed, i).
BifurcationScan bifurcation_scan(const RunSettings& base, const std::vector<double>& grid,
                                 const ScanSettings& settings, const ProgressFn& progress = {});

}  // namespace qsio
