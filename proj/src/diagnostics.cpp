#include "qsio/diagnostics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace qsio {

CrossingDirection parse_direction(const std::string& s) {
    if (s == "down") return CrossingDirection::down;
    if (s == "up") return CrossingDirection::up;
    if (s == "both") return CrossingDirection::both;
    throw std::invalid_argument("unknown crossing direction '" + s + "' (down, up, both)");
}

std::string to_string(CrossingDirection d) {
    switch (d) {
        case CrossingDirection::down: return "down";
        case CrossingDirection::up: return "up";
        case CrossingDirection::both: return "both";
    }
    return "down";
}

PoincareSection poincare(std::span<const double> t, std::span<const double> X,
                         std::span<const double> P, CrossingDirection dir) {
    if (t.size() != X.size() || t.size() != P.size())
        throw std::invalid_argument("poincare: series lengths differ");
    PoincareSection sec;
    sec.direction = dir;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double p0 = P[i - 1], p1 = P[i];
        const bool down = p0 > 0.0 && p1 <= 0.0;
        const bool up = p0 < 0.0 && p1 >= 0.0;
        const bool hit = (dir == CrossingDirection::down && down) ||
                         (dir == CrossingDirection::up && up) ||
                         (dir == CrossingDirection::both && (down || up));
        if (!hit) continue;
        const double a = p0 / (p0 - p1);
        sec.t.push_back(t[i - 1] + a * (t[i] - t[i - 1]));
        sec.X.push_back(X[i - 1] + a * (X[i] - X[i - 1]));
    }
    return sec;
}

PoincareSection poincare(const Trajectory& traj, CrossingDirection dir) {
    return poincare(traj.t, traj.X, traj.P, dir);
}

int count_clusters(std::vector<double> values, double tol) {
    if (values.empty()) return 0;
    std::sort(values.begin(), values.end());
    int clusters = 1;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] - values[i - 1] > tol) ++clusters;
    return clusters;
}

// ---------------------------------------------------------------------------

BenettinResult benettin(TwinFlow& flow, std::span<const double> initial,
                        std::span<const double> direction, const BenettinSettings& s) {
    const std::size_t n = flow.dimension();
    if (!(s.d0 > 0.0)) throw std::invalid_argument("benettin: d0 must be > 0");
    if (s.renorm_steps < 1) throw std::invalid_argument("benettin: renorm_steps must be >= 1");
    if (s.accumulate_steps < s.renorm_steps)
        throw std::invalid_argument("benettin: accumulation span shorter than one renormalization interval");
    if (initial.size() != n || direction.size() != n)
        throw std::invalid_argument("benettin: state dimension mismatch");
    const double dnorm = std::sqrt(std::inner_product(direction.begin(), direction.end(), direction.begin(), 0.0));
    if (!(dnorm > 0.0)) throw std::invalid_argument("benettin: zero perturbation direction");

    std::vector<double> fid(initial.begin(), initial.end()), pert(n);
    for (std::size_t i = 0; i < n; ++i) pert[i] = fid[i] + s.d0 * direction[i] / dnorm;

    BenettinResult r;
    long interval = s.renorm_steps;
    long aligned = 0;
    long accumulated = 0;
    double log_sum = 0.0;
    while (accumulated < s.accumulate_steps) {
        const long steps = aligned < s.align_intervals ? interval : std::min(interval, s.accumulate_steps - accumulated);
        for (long k = 0; k < steps; ++k) flow.step(fid, pert);
        double d2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) d2 += (pert[i] - fid[i]) * (pert[i] - fid[i]);
        const double d = std::sqrt(d2);
        if (!(d > 0.0) || !std::isfinite(d))
            throw LyapunovError("benettin: separation " + std::to_string(d) + " left the representable range");
        const double ratio = d / s.d0;
        if ((ratio > 1e10 || ratio < 1e-10) && interval > 1) {
            interval = std::max(1L, interval / 2);
            ++r.interval_shrinks;
        }
        if (aligned < s.align_intervals) {
            ++aligned;
        } else {
            log_sum += std::log(ratio);
            accumulated += steps;
            ++r.renormalizations;
        }
        for (std::size_t i = 0; i < n; ++i) pert[i] = fid[i] + (pert[i] - fid[i]) * (s.d0 / d);
    }
    r.accumulated_time = static_cast<double>(accumulated) * flow.dt();
    r.exponent = log_sum / r.accumulated_time;
    return r;
}

namespace {

constexpr std::size_t kPacked = 3 + MomentState::kCount;

void pack(const SimState& s, std::span<double> out) {
    out[0] = s.X;
    out[1] = s.P;
    out[2] = s.z;
    std::copy(s.moments.a.begin(), s.moments.a.end(), out.begin() + 3);
}

SimState unpack(std::span<const double> in, double t) {
    SimState s;
    s.X = in[0];
    s.P = in[1];
    s.z = in[2];
    std::copy(in.begin() + 3, in.begin() + 3 + MomentState::kCount, s.moments.a.begin());
    s.t = t;
    return s;
}

class SimulatorTwins final : public TwinFlow {
public:
    SimulatorTwins(const Dynamics& dyn, NoiseGenerator gen, double dt, std::uint64_t step_index)
        : dyn_(dyn), gen_(std::move(gen)), dt_(dt), index_(step_index) {}

    std::size_t dimension() const override { return kPacked; }
    double dt() const override { return dt_; }
    void step(std::span<double> fiducial, std::span<double> perturbed) override {
        const double t = static_cast<double>(index_) * dt_;
        const double f = gen_.step();
        pack(step_with_force(unpack(fiducial, t), f, dt_, dyn_, index_), fiducial);
        pack(step_with_force(unpack(perturbed, t), f, dt_, dyn_, index_), perturbed);
        ++index_;
    }

private:
    const Dynamics& dyn_;
    NoiseGenerator gen_;
    double dt_;
    std::uint64_t index_;
};

}  // namespace

BenettinResult lyapunov_largest(const RunSettings& rs, const LyapunovSettings& ls) {
    rs.validate();
    if (!(ls.d0 > 0.0)) throw std::invalid_argument("lyapunov_largest: d0 must be > 0");
    if (ls.renorm_steps < 1) throw std::invalid_argument("lyapunov_largest: renorm_steps must be >= 1");
    const double dt = rs.dt();
    NoiseGenerator gen(rs.use_noise ? rs.noise : NoiseModel{}, dt, rs.seed);
    SimState s = initial_state(rs.dyn);
    const auto transient = static_cast<std::uint64_t>(rs.n_transient_cycles) *
                           static_cast<std::uint64_t>(rs.steps_per_cycle);
    for (std::uint64_t n = 0; n < transient; ++n) s = step(s, gen, dt, rs.dyn, n);

    SimulatorTwins flow(rs.dyn, std::move(gen), dt, transient);
    std::vector<double> init(kPacked), dir(kPacked, 0.0);
    pack(s, init);
    dir[0] = 1.0;
    BenettinSettings bs;
    bs.d0 = ls.d0;
    bs.renorm_steps = ls.renorm_steps;
    bs.align_intervals = 5;
    bs.accumulate_steps = rs.n_record_cycles * rs.steps_per_cycle;
    return benettin(flow, init, dir, bs);
}

// ---------------------------------------------------------------------------

Window parse_window(const std::string& s) {
    if (s == "hann") return Window::hann;
    if (s == "none") return Window::none;
    throw std::invalid_argument("unknown window '" + s + "' (hann, none)");
}

std::string to_string(Window w) { return w == Window::hann ? "hann" : "none"; }

double SpectrumResult::total_power() const {
    return std::accumulate(power.begin(), power.end(), 0.0) * bin_width;
}

namespace {
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

SpectrumResult power_spectrum(std::span<const double> x, double sample_dt, double Omega, Window window) {
    if (x.size() < kMinSpectrumSamples)
        throw std::invalid_argument("power_spectrum: need at least " + std::to_string(kMinSpectrumSamples) +
                                    " samples, got " + std::to_string(x.size()));
    if (!(sample_dt > 0.0) || !(Omega > 0.0))
        throw std::invalid_argument("power_spectrum: sample_dt and Omega must be > 0");

    constexpr int kSegments = 8;
    // 8 segments overlapping by half span 4.5 segment lengths.
    std::size_t len = (2 * x.size()) / 9;
    len -= len % 2;
    const std::size_t hop = len / 2;
    const std::size_t bins = len / 2 + 1;

    std::vector<double> w(len, 1.0);
    if (window == Window::hann)
        for (std::size_t i = 0; i < len; ++i)
            w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(len - 1)));
    const double wsum2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

    SpectrumResult out;
    out.window = window;
    out.segments = kSegments;
    out.bin_width = 2.0 * M_PI / (static_cast<double>(len) * sample_dt) / Omega;
    out.frequency.resize(bins);
    out.power.assign(bins, 0.0);
    for (std::size_t k = 0; k < bins; ++k) out.frequency[k] = static_cast<double>(k) * out.bin_width;

    double* in = fftw_alloc_real(len);
    fftw_complex* spec = fftw_alloc_complex(bins);
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in, spec, FFTW_ESTIMATE);
    }
    for (int seg = 0; seg < kSegments; ++seg) {
        const auto* start = x.data() + static_cast<std::size_t>(seg) * hop;
        const double mean = std::accumulate(start, start + len, 0.0) / static_cast<double>(len);
        double energy = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            in[i] = (start[i] - mean) * w[i];
            energy += in[i] * in[i];
        }
        out.windowed_power += energy / wsum2 / kSegments;
        fftw_execute(plan);
        for (std::size_t k = 0; k < bins; ++k) {
            const double mag2 = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
            const double one_sided = (k == 0 || k == len / 2) ? 1.0 : 2.0;
            out.power[k] += one_sided * mag2 / (static_cast<double>(len) * wsum2) / out.bin_width / kSegments;
        }
    }
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(spec);
    return out;
}

double spectrum_floor(const SpectrumResult& s, double max_freq) {
    std::vector<double> band;
    for (std::size_t k = 0; k < s.power.size(); ++k)
        if (s.frequency[k] > 0.0 && s.frequency[k] <= max_freq) band.push_back(s.power[k]);
    if (band.empty()) return 0.0;
    auto mid = band.begin() + static_cast<std::ptrdiff_t>(band.size() / 2);
    std::nth_element(band.begin(), mid, band.end());
    return *mid;
}

std::vector<double> spectrum_peaks(const SpectrumResult& s, double threshold, double max_freq) {
    std::vector<double> peaks;
    const std::size_t n = s.power.size();
    for (std::size_t k = 1; k + 2 < n; ++k) {
        if (s.frequency[k] > max_freq) break;
        const double p = s.power[k];
        if (p <= threshold) continue;
        bool is_max = true;
        for (std::size_t j = (k >= 2 ? k - 2 : 0); j <= k + 2; ++j)
            if (j != k && s.power[j] >= p) is_max = false;
        if (is_max) peaks.push_back(s.frequency[k]);
    }
    return peaks;
}

// ---------------------------------------------------------------------------

K01Result test_01(std::span<const double> phi, const Test01Settings& s) {
    if (phi.size() < s.min_length)
        throw std::invalid_argument("test_01: need at least " + std::to_string(s.min_length) +
                                    " samples, got " + std::to_string(phi.size()));
    if (s.n_c < 50) throw std::invalid_argument("test_01: n_c must be >= 50");

    const std::size_t N = phi.size();
    const double mean = std::accumulate(phi.begin(), phi.end(), 0.0) / static_cast<double>(N);
    double var = 0.0;
    for (double v : phi) var += (v - mean) * (v - mean);
    var /= static_cast<double>(N);
    const auto [lo, hi] = std::minmax_element(phi.begin(), phi.end());
    K01Result r;
    if (*hi == *lo || !(var > 0.0)) return r;

    std::vector<double> y(N);
    const double sd = std::sqrt(var);
    for (std::size_t j = 0; j < N; ++j) y[j] = (phi[j] - mean) / sd;
    const double ymean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(N);

    const std::size_t ncut = N / 10;
    std::vector<double> p(N + 1), q(N + 1), D(ncut);
    NormalSource rng(s.seed);
    for (int ic = 0; ic < s.n_c; ++ic) {
        const double c = M_PI / 5.0 + rng.uniform() * 3.0 * M_PI / 5.0;
        p[0] = q[0] = 0.0;
        for (std::size_t j = 1; j <= N; ++j) {
            p[j] = p[j - 1] + y[j - 1] * std::cos(static_cast<double>(j) * c);
            q[j] = q[j - 1] + y[j - 1] * std::sin(static_cast<double>(j) * c);
        }
        for (std::size_t n = 1; n <= ncut; ++n) {
            double m = 0.0;
            const std::size_t terms = N - n;
            for (std::size_t j = 1; j <= terms; ++j) {
                const double dp = p[j + n] - p[j], dq = q[j + n] - q[j];
                m += dp * dp + dq * dq;
            }
            m /= static_cast<double>(terms);
            const double osc = ymean * ymean * (1.0 - std::cos(static_cast<double>(n) * c)) / (1.0 - std::cos(c));
            D[n - 1] = m - osc;
        }
        // Pearson correlation of (n, D(n)).
        const double nn = static_cast<double>(ncut);
        const double xbar = (nn + 1.0) / 2.0;
        const double dbar = std::accumulate(D.begin(), D.end(), 0.0) / nn;
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < ncut; ++i) {
            const double dx = static_cast<double>(i + 1) - xbar, dy = D[i] - dbar;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
        const double kc = syy > 0.0 ? std::clamp(sxy / std::sqrt(sxx * syy), 0.0, 1.0) : 0.0;
        r.c.push_back(c);
        r.K_c.push_back(kc);
    }
    std::vector<double> sorted = r.K_c;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    r.K = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    return r;
}

std::vector<double> strobe(std::span<const double> x, std::size_t stride, std::size_t offset) {
    if (stride == 0) throw std::invalid_argument("strobe: stride must be >= 1");
    std::vector<double> out;
    for (std::size_t i = offset; i < x.size(); i += stride) out.push_back(x[i]);
    return out;
}

}  // namespace qsio
