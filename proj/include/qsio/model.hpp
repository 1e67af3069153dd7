#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace qsio {

/// Oscillator, wall, forcing and smoothing constants of the soft-impact system.
struct SystemParams {
    double k = 1.0;        ///< spring constant
    double A = 10.0;       ///< stiffness multiplier of the wall spring
    double m = 1.0;        ///< mass (the dynamics assume m = 1)
    double x_wall = 0.5;   ///< wall position
    double F = 10.0;       ///< forcing amplitude
    double Omega = 0.5;    ///< forcing angular frequency
    double hbar = 0.01;    ///< reduced Planck constant
    double c_slope = 10.0; ///< sigmoid slope of the smoothed wall

    double omega0() const { return std::sqrt(k / m); }
    double period() const { return 2.0 * M_PI / Omega; }

    /// Throws std::invalid_argument when a physical constraint is violated.
    void validate() const;
};

/// Logistic sigmoid 1/(1+e^-u), evaluated branch-wise to avoid overflow.
double sigmoid(double u);

/// ln(1+e^u), evaluated branch-wise to avoid overflow.
double softplus(double u);

/// Smoothed stiffness V''(x).
double v2(double x, const SystemParams& p);

/// Force V'(x,t) including the periodic drive; tends to kx as x -> -inf.
double v1(double x, double t, const SystemParams& p);

/// V''..V^(max_order+1) at x. max_order must be 2, 3 or 4; the returned
/// vector has max_order entries, starting at V''.
std::vector<double> v_derivs(double x, const SystemParams& p, int max_order);

/// V'' through V^(5) without allocation. Index 0 holds V''.
std::array<double, 4> v_derivs4(double x, const SystemParams& p);

/// Static potential V(x), by adaptive quadrature of the static force from
/// an anchor at x_wall - 10 where V is taken as harmonic. Energy
/// diagnostics only; the dynamics never need it.
double potential(double x, const SystemParams& p);

}  // namespace qsio
