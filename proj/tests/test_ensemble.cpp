#include <doctest.h>

#include "qsio/ensemble.hpp"
#include "qsio/parallel.hpp"

#include <unordered_set>

using namespace qsio;

TEST_CASE("derived seeds do not collide") {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(2000000);
    for (std::uint64_t i = 0; i < 1000000; ++i) seen.insert(derive_seed(7, i));
    CHECK(seen.size() == 1000000);
    EnsembleSpec a, b;
    b.master_seed = 2;
    CHECK(a.seeds() != b.seeds());
    CHECK(a.seeds().size() == 50);
}

TEST_CASE("aggregation: mean, sample deviation, failures") {
    EnsembleSpec spec;
    spec.count = 40;
    spec.threads = 4;
    std::vector<double> values;
    const auto r = run_ensemble(spec, [](std::uint64_t seed) {
        if (seed % 5 == 0) throw std::runtime_error("blow-up");
        return static_cast<double>(seed % 1000) / 100.0;
    });
    REQUIRE(r.realizations.size() == 40);
    for (std::size_t i = 1; i < r.realizations.size(); ++i)
        CHECK(r.realizations[i - 1].seed < r.realizations[i].seed);
    double sum = 0.0;
    int used = 0;
    for (const auto& o : r.realizations) {
        if (o.seed % 5 == 0) {
            CHECK(o.failed);
            CHECK(o.error == "blow-up");
            continue;
        }
        values.push_back(o.value);
        sum += o.value;
        ++used;
    }
    CHECK(r.used == used);
    CHECK(r.failed == 40 - used);
    const double mean = sum / used;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    CHECK(r.mean == doctest::Approx(mean).epsilon(1e-14));
    CHECK(r.stddev == doctest::Approx(std::sqrt(ss / (used - 1))).epsilon(1e-12));
    CHECK_FALSE(r.degenerate);
}

TEST_CASE("single realization is degenerate") {
    EnsembleSpec spec;
    spec.count = 1;
    const auto r = run_ensemble(spec, [](std::uint64_t) { return 0.25; });
    CHECK(r.mean == 0.25);
    CHECK(r.stddev == 0.0);
    CHECK(r.degenerate);
    spec.count = 0;
    CHECK_THROWS_AS(run_ensemble(spec, [](std::uint64_t) { return 0.0; }), std::invalid_argument);
}

TEST_CASE("non-finite values count as failures") {
    EnsembleSpec spec;
    spec.count = 3;
    const auto r = run_ensemble(spec, [](std::uint64_t) { return std::nan(""); });
    CHECK(r.failed == 3);
    CHECK(r.used == 0);
    CHECK(r.degenerate);
}

namespace {

RunSettings short_run() {
    RunSettings rs;
    rs.noise = fit_noise_model(BathParams{}, 3);
    rs.n_transient_cycles = 2;
    rs.n_record_cycles = 4;
    rs.steps_per_cycle = 400;
    return rs;
}

}  // namespace

TEST_CASE("Lyapunov ensemble is identical across thread counts and repeats") {
    const auto rs = short_run();
    EnsembleSpec spec;
    spec.count = 6;
    LyapunovSettings ls;
    ls.renorm_steps = 400;
    spec.threads = 1;
    const auto a = lyapunov_ensemble(rs, ls, spec);
    spec.threads = 5;
    const auto b = lyapunov_ensemble(rs, ls, spec);
    const auto c = lyapunov_ensemble(rs, ls, spec);
    CHECK(a.mean == b.mean);
    CHECK(a.stddev == b.stddev);
    CHECK(b.mean == c.mean);
    for (std::size_t i = 0; i < a.realizations.size(); ++i) CHECK(a.realizations[i].value == b.realizations[i].value);
    CHECK(a.used == 6);

    int calls = 0;
    std::mutex m;
    mean_position_ensemble(rs, spec, [&](int done, int total) {
        std::lock_guard lock(m);
        ++calls;
        CHECK(done <= total);
    });
    CHECK(calls == 6);
}

TEST_CASE("bifurcation scan") {
    auto rs = short_run();
    ScanSettings st;
    st.lyapunov.renorm_steps = 400;
    st.threads = 3;
    CHECK_THROWS_AS(bifurcation_scan(rs, {0.5, 0.4}, st), std::invalid_argument);
    CHECK_THROWS_AS(bifurcation_scan(rs, {}, st), std::invalid_argument);

    const auto one = bifurcation_scan(rs, {0.5}, st);
    REQUIRE(one.points.size() == 1);
    CHECK(one.points[0].x_wall == 0.5);
    CHECK_FALSE(one.points[0].poincare_X.empty());
    CHECK(std::isfinite(one.points[0].lambda));

    // fixed policy: the point's result does not depend on its grid position
    const auto many = bifurcation_scan(rs, {0.3, 0.5, 0.7}, st);
    CHECK(many.points[1].poincare_X == one.points[0].poincare_X);
    st.seed_policy = SeedPolicy::fresh;
    const auto fresh = bifurcation_scan(rs, {0.3, 0.5, 0.7}, st);
    CHECK(fresh.points[1].poincare_X != one.points[0].poincare_X);

    // a blow-up is recorded on the point and the scan continues
    rs.dyn.sys.F = 1e9;
    st.with_lyapunov = false;
    const auto bad = bifurcation_scan(rs, {0.3, 0.5}, st);
    CHECK(bad.points[0].failed);
    CHECK(bad.points[1].failed);
    CHECK(std::isnan(bad.points[0].lambda));
    CHECK(parse_seed_policy("fresh") == SeedPolicy::fresh);
    CHECK(to_string(SeedPolicy::fixed) == "fixed");
}

TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 8, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(100, 4,
                                 [](std::size_t i) {
                                     if (i == 37) throw std::logic_error("x");
                                 }),
                    std::logic_error);
}
