#include <doctest.h>

#include "oracles.hpp"
#include "qsio/diagnostics.hpp"

#include <Eigen/Eigenvalues>

#include <random>

using namespace qsio;

TEST_CASE("poincare: analytic crossings") {
    std::vector<double> t, X, P;
    const double h = 1e-3;
    for (int i = 0; i <= 20000; ++i) {
        t.push_back(i * h);
        X.push_back(std::sin(i * h));
        P.push_back(std::cos(i * h));
    }
    const auto down = poincare(t, X, P, CrossingDirection::down);
    REQUIRE(down.X.size() == 3);
    for (std::size_t k = 0; k < down.X.size(); ++k) {
        CHECK(down.t[k] == doctest::Approx(M_PI / 2 + 2 * M_PI * k).epsilon(1e-7));
        CHECK(down.X[k] == doctest::Approx(1.0).epsilon(1e-6));
    }
    const auto up = poincare(t, X, P, CrossingDirection::up);
    REQUIRE(up.X.size() == 3);
    CHECK(up.X[0] == doctest::Approx(-1.0).epsilon(1e-6));
    const auto both = poincare(t, X, P, CrossingDirection::both);
    CHECK(both.X.size() == 6);
    for (std::size_t k = 1; k < both.t.size(); ++k) CHECK(both.t[k] > both.t[k - 1]);
}

TEST_CASE("poincare: linear interpolation and degenerate input") {
    const std::vector<double> t = {0.0, 1.0}, X = {0.0, 1.0}, P = {1.0, -1.0};
    const auto s = poincare(t, X, P);
    REQUIRE(s.X.size() == 1);
    CHECK(s.X[0] == doctest::Approx(0.5));
    CHECK(s.t[0] == doctest::Approx(0.5));
    CHECK(poincare(std::vector<double>{0.0}, std::vector<double>{0.0}, std::vector<double>{1.0}).X.empty());
    CHECK_THROWS_AS(poincare(t, X, std::vector<double>{1.0}), std::invalid_argument);
    CHECK(parse_direction("up") == CrossingDirection::up);
    CHECK(to_string(CrossingDirection::both) == "both");
    CHECK_THROWS_AS(parse_direction("sideways"), std::invalid_argument);
}

TEST_CASE("poincare interpolation error is second order in the sample step") {
    // X = sin(t) + 0.3 sin(2t) sampled coarsely versus a refined oracle
    auto error = [](double h) {
        std::vector<double> t, X, P;
        for (int i = 0; i * h <= 30.0; ++i) {
            const double s = i * h;
            t.push_back(s);
            X.push_back(std::sin(s) + 0.3 * std::sin(2 * s));
            P.push_back(std::cos(s) + 0.6 * std::cos(2 * s));
        }
        const auto sec = poincare(t, X, P);
        double worst = 0.0;
        for (double tc : sec.t) {
            // Newton refinement of the exact crossing from the interpolated one
            double r = tc;
            for (int k = 0; k < 30; ++k) r -= (std::cos(r) + 0.6 * std::cos(2 * r)) / (-std::sin(r) - 1.2 * std::sin(2 * r));
            worst = std::max(worst, std::abs(tc - r));
        }
        return worst;
    };
    const double e1 = error(0.02), e2 = error(0.01);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("cluster counting") {
    CHECK(count_clusters({}, 0.02) == 0);
    CHECK(count_clusters({1.0, 1.001, 0.999}, 0.02) == 1);
    CHECK(count_clusters({1.0, 2.0, 1.01, 2.005, 3.0}, 0.02) == 3);
}

namespace {

// Damped oscillator x'' + 2 zeta x' + x = 0 advanced by its exact propagator.
class DampedLinear final : public TwinFlow {
public:
    explicit DampedLinear(double zeta, double h) : h_(h) {
        Eigen::Matrix2d A;
        A << 0, 1, -1, -2 * zeta;
        Eigen::EigenSolver<Eigen::Matrix2d> es(A);
        const Eigen::Matrix2cd V = es.eigenvectors();
        const Eigen::Vector2cd ev = es.eigenvalues();
        M_ = (V * (ev * h).array().exp().matrix().asDiagonal() * V.inverse()).real();
    }
    std::size_t dimension() const override { return 2; }
    double dt() const override { return h_; }
    void step(std::span<double> a, std::span<double> b) override {
        for (auto s : {a, b}) {
            const Eigen::Vector2d v = M_ * Eigen::Vector2d(s[0], s[1]);
            s[0] = v[0];
            s[1] = v[1];
        }
    }

private:
    double h_;
    Eigen::Matrix2d M_;
};

// Henon map (a = 1.4, b = 0.3), one iteration per step.
class Henon final : public TwinFlow {
public:
    std::size_t dimension() const override { return 2; }
    double dt() const override { return 1.0; }
    void step(std::span<double> a, std::span<double> b) override {
        for (auto s : {a, b}) {
            const double x = 1 - 1.4 * s[0] * s[0] + s[1];
            s[1] = 0.3 * s[0];
            s[0] = x;
        }
    }
};

}  // namespace

TEST_CASE("benettin: damped linear contraction rate") {
    const double zeta = 0.1;
    DampedLinear flow(zeta, 0.01);
    BenettinSettings s;
    s.renorm_steps = 100;
    s.accumulate_steps = 200000;
    const auto r = benettin(flow, std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 0.0}, s);
    CHECK(r.exponent == doctest::Approx(-zeta).epsilon(0.05));
    CHECK(r.exponent < 0.0);
}

TEST_CASE("benettin: independent of d0 on the Henon map") {
    Henon flow;
    for (double d0 : {1e-6, 1e-8, 1e-10}) {
        BenettinSettings s;
        s.d0 = d0;
        s.renorm_steps = 1;
        s.accumulate_steps = 200000;
        const auto r = benettin(flow, std::vector<double>{0.1, 0.1}, std::vector<double>{1.0, 0.0}, s);
        INFO("d0 = " << d0);
        CHECK(r.exponent == doctest::Approx(0.41922).epsilon(0.10));
    }
}

TEST_CASE("benettin: preconditions") {
    Henon flow;
    BenettinSettings s;
    s.d0 = 0.0;
    CHECK_THROWS_AS(benettin(flow, std::vector<double>{0.1, 0.1}, std::vector<double>{1.0, 0.0}, s),
                    std::invalid_argument);
    s.d0 = 1e-8;
    CHECK_THROWS_AS(benettin(flow, std::vector<double>{0.1, 0.1}, std::vector<double>{0.0, 0.0}, s),
                    std::invalid_argument);
}

TEST_CASE("simulator exponent of the damped linear system") {
    RunSettings rs;
    rs.dyn.sys.A = 0.0;
    rs.dyn.sys.F = 0.0;
    rs.dyn.sys.hbar = 0.0;
    rs.use_noise = false;
    rs.n_transient_cycles = 1;
    rs.n_record_cycles = 60;
    // largest real part of the (X, P, z) system matrix
    Eigen::Matrix3d M;
    const auto& b = rs.dyn.bath;
    M << 0, 1, 0, -rs.dyn.sys.k, 0, 1, 0, -b.Gamma / b.tau_c, -1 / b.tau_c;
    const auto ev = Eigen::EigenSolver<Eigen::Matrix3d>(M).eigenvalues();
    double expected = -1e300;
    for (int i = 0; i < 3; ++i) expected = std::max(expected, ev[i].real());
    const auto r = lyapunov_largest(rs, LyapunovSettings{});
    CHECK(r.exponent == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("spectrum: sinusoid peak and Parseval") {
    const double Omega = 0.5, dt = 0.05;
    std::vector<double> x(1 << 16);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 0.1);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 2.0 * std::sin(Omega * i * dt) + n(rng);
    for (Window w : {Window::hann, Window::none}) {
        const auto s = power_spectrum(x, dt, Omega, w);
        CHECK(s.segments == 8);
        const auto top = std::max_element(s.power.begin(), s.power.end()) - s.power.begin();
        CHECK(std::abs(s.frequency[top] - 1.0) <= s.bin_width);
        CHECK(s.total_power() == doctest::Approx(s.windowed_power).epsilon(0.01));
        for (double p : s.power) CHECK(p >= 0.0);
    }
    // unwindowed Parseval against the series variance
    const auto s = power_spectrum(x, dt, Omega, Window::none);
    double mean = 0.0, var = 0.0;
    for (double v : x) mean += v;
    mean /= x.size();
    for (double v : x) var += (v - mean) * (v - mean);
    var /= x.size();
    CHECK(s.total_power() == doctest::Approx(var).epsilon(0.01));
    CHECK(spectrum_floor(s, 10.0) < 1e-2 * s.power[std::max_element(s.power.begin(), s.power.end()) - s.power.begin()]);
}

TEST_CASE("spectrum: comb of harmonics and short input") {
    const double Omega = 0.5, dt = 0.05;
    std::vector<double> x(1 << 16);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = i * dt;
        for (int h = 1; h <= 6; ++h) x[i] += std::cos(h * Omega * t / 3.0) / h;
    }
    const auto s = power_spectrum(x, dt, Omega);
    const auto peaks = spectrum_peaks(s, 10.0 * spectrum_floor(s, 10.0), 10.0);
    CHECK(peaks.size() >= 6);
    CHECK_THROWS_AS(power_spectrum(std::vector<double>(1000, 1.0), dt, Omega), std::invalid_argument);
    CHECK(parse_window("none") == Window::none);
    CHECK_THROWS_AS(parse_window("kaiser"), std::invalid_argument);
}

TEST_CASE("0-1 test on oracle series") {
    const auto chaotic = test_01(oracle::logistic_series(2000));
    CHECK(chaotic.K > 0.9);
    CHECK(chaotic.c.size() == 100);
    for (double c : chaotic.c) CHECK((c > M_PI / 5 && c < 4 * M_PI / 5));

    const double rho = (std::sqrt(5.0) - 1.0) / 2.0;
    std::vector<double> q(2000);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] = std::sin(2 * M_PI * rho * j);
    CHECK(test_01(q).K < 0.1);

    std::vector<double> periodic(2000);
    for (std::size_t j = 0; j < periodic.size(); ++j) periodic[j] = (j % 3 == 0) ? 1.0 : -0.5;
    CHECK(test_01(periodic).K < 0.1);

    CHECK(test_01(std::vector<double>(2000, 3.0)).K == 0.0);
}

TEST_CASE("0-1 test is invariant under affine rescaling") {
    auto x = oracle::logistic_series(3000, 0.123);
    const double K = test_01(x).K;
    for (auto& v : x) v = 250.0 * v - 17.0;
    CHECK(std::abs(test_01(x).K - K) < 0.05);

    const double rho = std::sqrt(2.0) - 1.0;
    std::vector<double> q(3000);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] = std::sin(2 * M_PI * rho * j);
    const double Kq = test_01(q).K;
    for (auto& v : q) v = 1e-4 * v + 2.0;
    CHECK(std::abs(test_01(q).K - Kq) < 0.05);
}

TEST_CASE("0-1 test preconditions and strobing") {
    CHECK_THROWS_AS(test_01(std::vector<double>(1999, 0.5)), std::invalid_argument);
    Test01Settings s;
    s.n_c = 49;
    CHECK_THROWS_AS(test_01(oracle::logistic_series(2000), s), std::invalid_argument);
    const std::vector<double> x = {0, 1, 2, 3, 4, 5, 6, 7};
    CHECK(strobe(x, 3) == std::vector<double>{0, 3, 6});
    CHECK(strobe(x, 3, 2) == std::vector<double>{2, 5});
    CHECK_THROWS_AS(strobe(x, 0), std::invalid_argument);
}
