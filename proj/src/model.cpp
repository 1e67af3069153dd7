#include "qsio/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <stdexcept>
#include <string>

namespace qsio {

void SystemParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("invalid system parameter: ") + what);
    };
    require(std::isfinite(k) && k > 0.0, "k must be > 0");
    require(std::isfinite(A) && A >= 0.0, "A must be >= 0");
    require(std::isfinite(m) && m > 0.0, "m must be > 0");
    require(std::isfinite(c_slope) && c_slope > 0.0, "c must be > 0");
    require(std::isfinite(Omega) && Omega > 0.0, "Omega must be > 0");
    require(std::isfinite(hbar) && hbar >= 0.0, "hbar must be >= 0");
    require(std::isfinite(x_wall), "x_wall must be finite");
    require(std::isfinite(F), "F must be finite");
}

double sigmoid(double u) {
    if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

double softplus(double u) {
    if (u > 0.0) return u + std::log1p(std::exp(-u));
    return std::log1p(std::exp(u));
}

double v2(double x, const SystemParams& p) {
    return p.k * p.A * sigmoid(p.c_slope * (x - p.x_wall)) + p.k;
}

double v1(double x, double t, const SystemParams& p) {
    const double wall = p.k * p.A / p.c_slope * softplus(p.c_slope * (x - p.x_wall));
    return p.k * x + wall + p.F * std::cos(p.Omega * t);
}

std::array<double, 4> v_derivs4(double x, const SystemParams& p) {
    const double s = sigmoid(p.c_slope * (x - p.x_wall));
    const double ka = p.k * p.A;
    const double c = p.c_slope;
    const double g = s * (1.0 - s);
    return {ka * s + p.k,
            ka * c * g,
            ka * c * c * g * (1.0 - 2.0 * s),
            ka * c * c * c * g * (1.0 - 6.0 * s + 6.0 * s * s)};
}

std::vector<double> v_derivs(double x, const SystemParams& p, int max_order) {
    if (max_order < 2 || max_order > 4)
        throw std::invalid_argument("v_derivs: max_order must be 2, 3 or 4, got " +
                                    std::to_string(max_order));
    const auto all = v_derivs4(x, p);
    return {all.begin(), all.begin() + max_order};
}

double potential(double x, const SystemParams& p) {
    using boost::math::quadrature::gauss_kronrod;
    const double anchor = p.x_wall - 10.0;
    const double wall_at_anchor = p.k * p.A / p.c_slope * softplus(p.c_slope * (anchor - p.x_wall));
    // V(anchor): harmonic part plus the (negligible) integrated wall tail.
    const double v_anchor = 0.5 * p.k * anchor * anchor + wall_at_anchor / p.c_slope;
    auto force = [&](double y) {
        return p.k * y + p.k * p.A / p.c_slope * softplus(p.c_slope * (y - p.x_wall));
    };
    return v_anchor + gauss_kronrod<double, 31>::integrate(force, anchor, x, 15, 1e-12);
}

}  // namespace qsio
