#pragma once

#include "qsio/model.hpp"

#include <array>
#include <cstddef>
#include <limits>

namespace qsio {

/// Fully symmetrized central moments a_jk = <dx^j dp^k> for 2 <= j+k <= 4.
struct MomentState {
    static constexpr std::size_t kCount = 12;
    std::array<double, kCount> a{};

    static constexpr std::size_t index(int j, int k) {
        constexpr std::size_t offset[] = {0, 0, 0, 3, 7};
        return offset[j + k] + static_cast<std::size_t>(k);
    }
    double& operator()(int j, int k) { return a[index(j, k)]; }
    double operator()(int j, int k) const { return a[index(j, k)]; }

    /// a20*a02 - a11^2; conserved by the linearized flow.
    double covariance_determinant() const {
        const auto& m = *this;
        return m(2, 0) * m(0, 2) - m(1, 1) * m(1, 1);
    }
};

/// Extensions of the linearized fluctuation flow. Damping is on by default:
/// the undamped flow is parametrically pumped at every wall passage and grows
/// without bound over long runs.
struct ClosureOptions {
    /// Adds the -V'''/2 (dx^2 - <dx^2>) fluctuation force, closing the
    /// order-5 moments it generates by pairing with order-3 moments.
    bool nonlinear_feed = false;
    /// Markovian damping of momentum fluctuations: a_jk' -= k * rate * a_jk.
    /// NaN rate means Gamma/tau_c of the bath driving the mean dynamics.
    bool damping = true;
    double damping_rate = std::numeric_limits<double>::quiet_NaN();
};

/// Minimum-uncertainty Gaussian with Wick-factorized fourth moments.
MomentState init_moments(const SystemParams& p);

/// Linearized flow dx' = dp, dp' = -V2 dx applied to every stored moment.
MomentState moment_rhs(const MomentState& ms, double V2);

/// Same with closure terms. `vd` holds V''..V^(5) at the mean; opts.damping_rate
/// must be resolved (not NaN) when damping is on.
MomentState moment_rhs(const MomentState& ms, const std::array<double, 4>& vd,
                       const ClosureOptions& opts);

/// The nonlinear-feed part of moment_rhs alone (zero when the option is off).
MomentState moment_feed(const MomentState& ms, const std::array<double, 4>& vd, const ClosureOptions& opts);

/// One implicit-midpoint step of the linear part (stiffness V2, damping rate)
/// plus an explicit source: solves (1 - h/2 L) m' = (1 + h/2 L) m + h source.
/// The covariance determinant is conserved exactly when rate = 0 and source = 0.
MomentState midpoint_step(const MomentState& ms, const MomentState& source, double V2, double rate, double h);

/// Per-order contributions to Q(t) = -sum_n V^(n+1) <dx^n> / n!.
struct QTerms {
    double q2 = 0.0, q3 = 0.0, q4 = 0.0;
    double total() const { return q2 + q3 + q4; }
};

QTerms q_terms(const MomentState& ms, const std::array<double, 4>& vd);
QTerms q_terms(const MomentState& ms, double x, const SystemParams& p);

/// Q(t) through fourth order. The wall is static, so Q does not depend on t.
double q_correction(const MomentState& ms, double x, double t, const SystemParams& p);

}  // namespace qsio
