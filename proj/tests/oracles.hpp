#pragma once
// Reference computations that do not share code with the library.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// Lorentzian-bath noise correlation from the Matsubara expansion of
// coth, summed until the terms drop below 1e-16 of the leading one.
inline double matsubara_correlation(double tau, double Gamma, double tau_c, double kT, double hbar) {
    const double a = 1.0 / tau_c;
    double c = Gamma * kT / tau_c * std::exp(-a * tau);
    const double pref = 2.0 * Gamma * kT / (tau_c * tau_c);
    for (long n = 1; n < 100000000; ++n) {
        const double nu = 2.0 * M_PI * n * kT / hbar;
        const double term = pref / (nu * nu - a * a) * (nu * std::exp(-nu * tau) - a * std::exp(-a * tau));
        c += term;
        if (std::abs(term) < 1e-16 * std::abs(c) && n > 10) break;
    }
    return c;
}

// Harmonic oscillator covariance at frequency w after time t, from the
// propagator M = [[cos, sin/w], [-w sin, cos]]: S(t) = M S(0) M^T.
struct Cov {
    double xx, xp, pp;
};
inline Cov harmonic_covariance(Cov s, double w, double t) {
    const double c = std::cos(w * t), sn = std::sin(w * t);
    const double m00 = c, m01 = sn / w, m10 = -w * sn, m11 = c;
    return {m00 * m00 * s.xx + 2 * m00 * m01 * s.xp + m01 * m01 * s.pp,
            m00 * m10 * s.xx + (m00 * m11 + m01 * m10) * s.xp + m01 * m11 * s.pp,
            m10 * m10 * s.xx + 2 * m10 * m11 * s.xp + m11 * m11 * s.pp};
}

// -int_0^t (Gamma/tau_c) e^{-(t-s)/tau_c} P(s) ds on uniformly sampled P,
// composite Simpson (trapezoid on a trailing odd panel).
inline double memory_convolution(const std::vector<double>& P, double h, std::size_t upto, double Gamma,
                                 double tau_c) {
    const double t = upto * h;
    auto g = [&](std::size_t j) { return Gamma / tau_c * std::exp(-(t - j * h) / tau_c) * P[j]; };
    if (upto == 0) return 0.0;
    double sum = 0.0;
    std::size_t n = upto;
    if (n % 2 == 1) {
        sum += 0.5 * h * (g(n - 1) + g(n));
        --n;
    }
    if (n > 0) {
        double s = g(0) + g(n);
        for (std::size_t j = 1; j < n; ++j) s += (j % 2 ? 4.0 : 2.0) * g(j);
        sum += s * h / 3.0;
    }
    return -sum;
}

inline std::vector<double> logistic_series(std::size_t n, double x0 = 0.3, double r = 4.0) {
    std::vector<double> out(n);
    double x = x0;
    for (std::size_t i = 0; i < 1000; ++i) x = r * x * (1 - x);
    for (auto& v : out) {
        x = r * x * (1 - x);
        v = x;
    }
    return out;
}

}  // namespace oracle
