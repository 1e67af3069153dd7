#include "qsio/integrator.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#ifndef QSIO_BUILD_ID
#define QSIO_BUILD_ID "unknown"
#endif

namespace qsio {

const char* build_id() { return QSIO_BUILD_ID; }

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

void check_state(const SimState& s) {
    bool finite = std::isfinite(s.X) && std::isfinite(s.P) && std::isfinite(s.z);
    for (double v : s.moments.a) finite = finite && std::isfinite(v);
    if (!finite || std::abs(s.X) > kBlowUpBound || std::abs(s.P) > kBlowUpBound) {
        std::ostringstream os;
        os << "integration blew up at t=" << s.t << " (X=" << s.X << ", P=" << s.P << ", z=" << s.z
           << ")";
        throw BlowUpError(os.str(), s);
    }
}

SimDerivative rhs(const SimState& s, double f, const Dynamics& dyn) {
    const auto vd = v_derivs4(s.X, dyn.sys);
    SimDerivative d;
    d.X = s.P;
    const double q = dyn.quantum_correction ? q_terms(s.moments, vd).total() : 0.0;
    d.P = -v1(s.X, s.t, dyn.sys) + q + f + s.z;
    d.z = -dyn.bath.Gamma * s.P / dyn.bath.tau_c - s.z / dyn.bath.tau_c;
    ClosureOptions closure = dyn.closure;
    if (std::isnan(closure.damping_rate)) closure.damping_rate = dyn.bath.Gamma / dyn.bath.tau_c;
    d.moments = moment_rhs(s.moments, vd, closure);
    return d;
}

SimState add_scaled(const SimState& b, const SimDerivative& d, double h) {
    SimState r = b;
    r.X += h * d.X;
    r.P += h * d.P;
    r.z += h * d.z;
    for (std::size_t i = 0; i < MomentState::kCount; ++i) r.moments.a[i] += h * d.moments.a[i];
    return r;
}

SimState step_with_force(const SimState& s, double f, double dt, const Dynamics& dyn,
                         std::uint64_t step_index) {
    // Heun for (X, P, z). The moments take an implicit-midpoint step for their
    // linear part, which conserves the covariance determinant exactly, with
    // the nonlinear feed averaged over the Heun stages.
    const double t_next = static_cast<double>(step_index + 1) * dt;
    const SimDerivative k1 = rhs(s, f, dyn);
    SimState pred = add_scaled(s, k1, dt);
    pred.t = t_next;

    ClosureOptions closure = dyn.closure;
    if (std::isnan(closure.damping_rate)) closure.damping_rate = dyn.bath.Gamma / dyn.bath.tau_c;
    const double rate = closure.damping ? closure.damping_rate : 0.0;
    MomentState source;
    if (closure.nonlinear_feed) {
        const auto f0 = moment_feed(s.moments, v_derivs4(s.X, dyn.sys), closure);
        const auto f1 = moment_feed(pred.moments, v_derivs4(pred.X, dyn.sys), closure);
        for (std::size_t i = 0; i < MomentState::kCount; ++i) source.a[i] = 0.5 * (f0.a[i] + f1.a[i]);
    }
    const double V2_mid = 0.5 * (v2(s.X, dyn.sys) + v2(pred.X, dyn.sys));
    MomentState moments = midpoint_step(s.moments, source, V2_mid, rate, dt);
    for (double& a : moments.a) {
        // Damped moments decay geometrically; keep them out of the subnormal range.
        if (std::abs(a) < kMomentFlush) a = 0.0;
    }
    pred.moments = moments;

    const SimDerivative k2 = rhs(pred, f, dyn);
    SimState out = s;
    out.X += 0.5 * dt * (k1.X + k2.X);
    out.P += 0.5 * dt * (k1.P + k2.P);
    out.z += 0.5 * dt * (k1.z + k2.z);
    out.moments = moments;
    out.t = t_next;
    check_state(out);
    return out;
}

SimState step(const SimState& s, NoiseGenerator& gen, double dt, const Dynamics& dyn,
              std::uint64_t step_index) {
    const double f = gen.step();
    return step_with_force(s, f, dt, dyn, step_index);
}

double state_distance(const SimState& a, const SimState& b) {
    double sum = (a.X - b.X) * (a.X - b.X) + (a.P - b.P) * (a.P - b.P) + (a.z - b.z) * (a.z - b.z);
    for (std::size_t i = 0; i < MomentState::kCount; ++i) {
        const double d = a.moments.a[i] - b.moments.a[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

void RunSettings::validate() const {
    dyn.sys.validate();
    dyn.bath.validate();
    if (steps_per_cycle < 1) throw std::invalid_argument("steps_per_cycle must be >= 1");
    if (n_transient_cycles < 0 || n_record_cycles < 0)
        throw std::invalid_argument("cycle counts must be >= 0");
    if (sample_stride < 1) throw std::invalid_argument("sample_stride must be >= 1");
}

std::optional<std::string> Trajectory::meta(const std::string& key) const {
    for (const auto& [k, v] : metadata)
        if (k == key) return v;
    return std::nullopt;
}

std::vector<std::pair<std::string, std::string>> run_metadata(const RunSettings& rs) {
    const auto& s = rs.dyn.sys;
    const auto& b = rs.dyn.bath;
    std::vector<std::pair<std::string, std::string>> m{
        {"k", format_double(s.k)},
        {"A", format_double(s.A)},
        {"m", format_double(s.m)},
        {"x_wall", format_double(s.x_wall)},
        {"F", format_double(s.F)},
        {"Omega", format_double(s.Omega)},
        {"hbar", format_double(s.hbar)},
        {"c", format_double(s.c_slope)},
        {"Gamma", format_double(b.Gamma)},
        {"tau_c", format_double(b.tau_c)},
        {"kT", format_double(b.kT)},
        {"seed", std::to_string(rs.seed)},
        {"steps_per_cycle", std::to_string(rs.steps_per_cycle)},
        {"dt", format_double(rs.dt())},
        {"n_transient", std::to_string(rs.n_transient_cycles)},
        {"n_record", std::to_string(rs.n_record_cycles)},
        {"sample_stride", std::to_string(rs.sample_stride)},
        {"use_noise", rs.use_noise ? "1" : "0"},
        {"quantum_correction", rs.dyn.quantum_correction ? "1" : "0"},
        {"closure", "linearized"},
        {"nonlinear_feed", rs.dyn.closure.nonlinear_feed ? "1" : "0"},
        {"moment_damping", rs.dyn.closure.damping ? "1" : "0"},
        {"moment_damping_rate",
         format_double(std::isnan(rs.dyn.closure.damping_rate) ? b.Gamma / b.tau_c
                                                               : rs.dyn.closure.damping_rate)},
        {"initial_state", "X=0,P=0,z=0,eta=stationary,moments=min-uncertainty-gaussian"},
        {"integrator", "heun(X,P,z)+implicit-midpoint(moments),noise=exact-ou-held-per-step"},
        {"noise_components", std::to_string(rs.noise.components.size())},
    };
    for (std::size_t i = 0; i < rs.noise.components.size(); ++i) {
        m.emplace_back("noise_D" + std::to_string(i + 1), format_double(rs.noise.components[i].D));
        m.emplace_back("noise_tau" + std::to_string(i + 1), format_double(rs.noise.components[i].tau));
    }
    m.emplace_back("noise_fit_residual", format_double(rs.noise.fit_residual));
    m.emplace_back("noise_c0", format_double(rs.noise.target_c0));
    m.emplace_back("build", build_id());
    return m;
}

SimState initial_state(const Dynamics& dyn) {
    SimState s;
    if (dyn.quantum_correction) s.moments = init_moments(dyn.sys);
    return s;
}

Trajectory run(const RunSettings& rs) {
    rs.validate();
    Trajectory traj;
    traj.metadata = run_metadata(rs);
    traj.extras = rs.record_extras;

    const double dt = rs.dt();
    NoiseModel noise = rs.use_noise ? rs.noise : NoiseModel{};
    NoiseGenerator gen(noise, dt, rs.seed);
    SimState s = initial_state(rs.dyn);

    const auto first_recorded = static_cast<std::uint64_t>(rs.n_transient_cycles) *
                                static_cast<std::uint64_t>(rs.steps_per_cycle);
    const auto total = first_recorded + static_cast<std::uint64_t>(rs.n_record_cycles) *
                                            static_cast<std::uint64_t>(rs.steps_per_cycle);
    const auto stride = static_cast<std::uint64_t>(rs.sample_stride);

    auto record = [&](double f) {
        traj.t.push_back(s.t);
        traj.X.push_back(s.X);
        traj.P.push_back(s.P);
        if (rs.record_extras) {
            const auto q = q_terms(s.moments, s.X, rs.dyn.sys);
            traj.z.push_back(s.z);
            traj.f.push_back(f);
            traj.q2.push_back(q.q2);
            traj.q3.push_back(q.q3);
            traj.q4.push_back(q.q4);
        }
    };

    try {
        for (std::uint64_t n = 0; n < total; ++n) {
            if (n >= first_recorded && (n - first_recorded) % stride == 0) record(gen.value());
            s = step(s, gen, dt, rs.dyn, n);
        }
    } catch (const BlowUpError& e) {
        traj.complete = false;
        traj.metadata.emplace_back("status", "blow-up");
        throw RunAborted(e, std::move(traj));
    }
    traj.metadata.emplace_back("status", "complete");
    return traj;
}

}  // namespace qsio
