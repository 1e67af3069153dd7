#include "qsio/fluctuations.hpp"

namespace qsio {

MomentState init_moments(const SystemParams& p) {
    const double w0 = p.omega0();
    MomentState ms;
    const double xx = p.hbar / (2.0 * w0);
    const double pp = p.hbar * w0 / 2.0;
    const double xp = 0.0;
    ms(2, 0) = xx;
    ms(1, 1) = xp;
    ms(0, 2) = pp;
    ms(4, 0) = 3.0 * xx * xx;
    ms(3, 1) = 3.0 * xx * xp;
    ms(2, 2) = xx * pp + 2.0 * xp * xp;
    ms(1, 3) = 3.0 * pp * xp;
    ms(0, 4) = 3.0 * pp * pp;
    return ms;
}

namespace {

constexpr int kOrders[][2] = {{2, 0}, {1, 1}, {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3},
                              {4, 0}, {3, 1}, {2, 2}, {1, 3}, {0, 4}};

double get(const MomentState& ms, int j, int k) {
    if (j < 0 || k < 0 || j + k < 2) return 0.0;
    return ms(j, k);
}

// Order-5 moment closed as the sum over pair x triple factorizations.
double order5(const MomentState& ms, int j, int k) {
    return 0.5 * j * (j - 1) * ms(2, 0) * get(ms, j - 2, k) + j * k * ms(1, 1) * get(ms, j - 1, k - 1) +
           0.5 * k * (k - 1) * ms(0, 2) * get(ms, j, k - 2);
}

}  // namespace

MomentState moment_rhs(const MomentState& ms, double V2) {
    MomentState d;
    for (const auto& [j, k] : kOrders)
        d(j, k) = j * get(ms, j - 1, k + 1) - k * V2 * get(ms, j + 1, k - 1);
    return d;
}

MomentState moment_feed(const MomentState& ms, const std::array<double, 4>& vd, const ClosureOptions& opts) {
    MomentState d;
    if (!opts.nonlinear_feed) return d;
    const double half_v3 = 0.5 * vd[1];
    for (const auto& [j, k] : kOrders) {
        if (k == 0) continue;
        const int n = j + k;
        const double higher = n == 4 ? order5(ms, j + 2, k - 1) : get(ms, j + 2, k - 1);
        d(j, k) = -k * half_v3 * (higher - ms(2, 0) * get(ms, j, k - 1));
    }
    return d;
}

MomentState moment_rhs(const MomentState& ms, const std::array<double, 4>& vd,
                       const ClosureOptions& opts) {
    MomentState d = moment_rhs(ms, vd[0]);
    if (opts.nonlinear_feed) {
        const auto feed = moment_feed(ms, vd, opts);
        for (std::size_t i = 0; i < MomentState::kCount; ++i) d.a[i] += feed.a[i];
    }
    if (opts.damping) {
        for (const auto& [j, k] : kOrders) d(j, k) -= k * opts.damping_rate * ms(j, k);
    }
    return d;
}

MomentState midpoint_step(const MomentState& ms, const MomentState& source, double V2, double rate, double h) {
    // Each order n is a tridiagonal block in k: (L a)_k = (n-k) a_{k+1} - k V2 a_{k-1} - k rate a_k.
    MomentState out;
    const double hh = 0.5 * h;
    for (int n = 2; n <= 4; ++n) {
        double sub[5], diag[5], sup[5], rhs[5];
        for (int k = 0; k <= n; ++k) {
            const double lo = k > 0 ? -k * V2 : 0.0;
            const double hi = k < n ? double(n - k) : 0.0;
            const double di = -k * rate;
            double la = di * ms(n - k, k);
            if (k > 0) la += lo * ms(n - k + 1, k - 1);
            if (k < n) la += hi * ms(n - k - 1, k + 1);
            rhs[k] = ms(n - k, k) + hh * la + h * source(n - k, k);
            sub[k] = -hh * lo;
            diag[k] = 1.0 - hh * di;
            sup[k] = -hh * hi;
        }
        // Thomas algorithm
        for (int k = 1; k <= n; ++k) {
            const double w = sub[k] / diag[k - 1];
            diag[k] -= w * sup[k - 1];
            rhs[k] -= w * rhs[k - 1];
        }
        double next = rhs[n] / diag[n];
        out(0, n) = next;
        for (int k = n - 1; k >= 0; --k) {
            next = (rhs[k] - sup[k] * next) / diag[k];
            out(n - k, k) = next;
        }
    }
    return out;
}

QTerms q_terms(const MomentState& ms, const std::array<double, 4>& vd) {
    return {-vd[1] * ms(2, 0) / 2.0, -vd[2] * ms(3, 0) / 6.0, -vd[3] * ms(4, 0) / 24.0};
}

QTerms q_terms(const MomentState& ms, double x, const SystemParams& p) {
    return q_terms(ms, v_derivs4(x, p));
}

double q_correction(const MomentState& ms, double x, double /*t*/, const SystemParams& p) {
    return q_terms(ms, x, p).total();
}

}  // namespace qsio
