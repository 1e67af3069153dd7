#include "qsio/ensemble.hpp"

#include "qsio/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qsio {

std::vector<std::uint64_t> EnsembleSpec::seeds() const {
    std::vector<std::uint64_t> out(static_cast<std::size_t>(std::max(count, 0)));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = derive_seed(master_seed, i);
    return out;
}

EnsembleResult run_ensemble(const EnsembleSpec& spec, const RealizationTask& task,
                            const ProgressFn& progress) {
    if (spec.count < 1) throw std::invalid_argument("run_ensemble: count must be >= 1");
    EnsembleResult r;
    const auto seeds = spec.seeds();
    r.realizations.resize(seeds.size());
    std::atomic<int> done{0};
    parallel_for(seeds.size(), spec.threads, [&](std::size_t i) {
        auto& out = r.realizations[i];
        out.seed = seeds[i];
        try {
            out.value = task(seeds[i]);
            if (!std::isfinite(out.value)) throw std::runtime_error("non-finite result");
        } catch (const std::exception& e) {
            out.failed = true;
            out.error = e.what();
        }
        const int d = ++done;
        if (progress) progress(d, spec.count);
    });

    // Reduce in seed order so the aggregate does not depend on scheduling.
    std::sort(r.realizations.begin(), r.realizations.end(),
              [](const auto& a, const auto& b) { return a.seed < b.seed; });
    double sum = 0.0;
    for (const auto& o : r.realizations) {
        if (o.failed) {
            ++r.failed;
            continue;
        }
        ++r.used;
        sum += o.value;
    }
    r.degenerate = r.used < 2;
    if (r.used > 0) r.mean = sum / r.used;
    if (r.used > 1) {
        double ss = 0.0;
        for (const auto& o : r.realizations)
            if (!o.failed) ss += (o.value - r.mean) * (o.value - r.mean);
        r.stddev = std::sqrt(ss / (r.used - 1));
    }
    return r;
}

EnsembleResult lyapunov_ensemble(const RunSettings& rs, const LyapunovSettings& ls,
                                 const EnsembleSpec& spec, const ProgressFn& progress) {
    return run_ensemble(
        spec,
        [&](std::uint64_t seed) {
            RunSettings local = rs;
            local.seed = seed;
            return lyapunov_largest(local, ls).exponent;
        },
        progress);
}

EnsembleResult mean_position_ensemble(const RunSettings& rs, const EnsembleSpec& spec,
                                      const ProgressFn& progress) {
    return run_ensemble(
        spec,
        [&](std::uint64_t seed) {
            RunSettings local = rs;
            local.seed = seed;
            local.record_extras = false;
            const auto traj = run(local);
            if (traj.X.empty()) throw std::runtime_error("empty recording window");
            return std::accumulate(traj.X.begin(), traj.X.end(), 0.0) / static_cast<double>(traj.X.size());
        },
        progress);
}

SeedPolicy parse_seed_policy(const std::string& s) {
    if (s == "fixed") return SeedPolicy::fixed;
    if (s == "fresh") return SeedPolicy::fresh;
    throw std::invalid_argument("unknown seed policy '" + s + "' (fixed, fresh)");
}

std::string to_string(SeedPolicy p) { return p == SeedPolicy::fixed ? "fixed" : "fresh"; }

BifurcationScan bifurcation_scan(const RunSettings& base, const std::vector<double>& grid,
                                 const ScanSettings& settings, const ProgressFn& progress) {
    if (grid.empty()) throw std::invalid_argument("bifurcation_scan: grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("bifurcation_scan: grid must be strictly increasing");

    BifurcationScan scan;
    scan.points.resize(grid.size());
    std::atomic<int> done{0};
    parallel_for(grid.size(), settings.threads, [&](std::size_t i) {
        auto& pt = scan.points[i];
        pt.x_wall = grid[i];
        RunSettings rs = base;
        rs.dyn.sys.x_wall = grid[i];
        rs.record_extras = false;
        if (settings.seed_policy == SeedPolicy::fresh) rs.seed = derive_seed(base.seed, i);
        try {
            const auto traj = run(rs);
            pt.poincare_X = poincare(traj, settings.direction).X;
            if (settings.with_lyapunov) pt.lambda = lyapunov_largest(rs, settings.lyapunov).exponent;
        } catch (const std::exception& e) {
            pt.failed = true;
            pt.error = e.what();
            pt.lambda = std::nan("");
        }
        const int d = ++done;
        if (progress) progress(d, static_cast<int>(grid.size()));
    });
    return scan;
}

}  // namespace qsio
