#include <doctest.h>

#include <random>

#include "langchange/abm_demo.hpp"
#include "langchange/errors.hpp"
#include "langchange/rng.hpp"
#include "support.hpp"

using namespace langchange;
using test_support::rel_err;

// ============================================================================
// Simulation
// ============================================================================

TEST_CASE("all-zero and all-one populations are absorbing") {
    DemoParams p;
    p.k_capacity = 150;
    p.mu_chi = 0.02;
    p.sigma_chi = 0.01;
    DemoRunOptions o;
    o.duration = 400;
    o.burn_in = 300;
    for (double x : {0.0, 1.0}) {
        o.initial_x = x;
        const auto t = run_demo(p, o);
        REQUIRE(t.mean_x.size() == 41);
        for (double m : t.mean_x) CHECK(m == x);
    }
}

TEST_CASE("population fluctuates around the carrying capacity") {
    DemoParams p;
    p.k_capacity = 400;
    DemoRunOptions o;
    o.duration = 2000;
    o.burn_in = 600;
    const auto t = run_demo(p, o);
    CHECK(rel_err(t.mean_population(), 400.0) < 0.15);
    CHECK(t.restarts == 0);
    CHECK(t.births > 0);
}

TEST_CASE("trajectory sampling grid") {
    DemoParams p;
    p.k_capacity = 100;
    DemoRunOptions o;
    o.duration = 200;
    o.sample_dt = 5;
    const auto t = run_demo(p, o);
    REQUIRE(t.times.size() == 41);
    CHECK(t.times.front() == 0.0);
    CHECK(t.times.back() == doctest::Approx(200.0));
    CHECK(t.mean_x.front() == doctest::Approx(o.initial_x));
}

TEST_CASE("replicates are deterministic and independent of the thread count") {
    DemoParams p;
    p.k_capacity = 120;
    DemoRunOptions o;
    o.duration = 300;
    const auto a = run_demo_replicates(p, o, 3);
    const auto b = run_demo_replicates_serial(p, o, 3);
    REQUIRE(a.size() == 3);
    for (int j = 0; j < 3; ++j) {
        CHECK(a[j].mean_x == b[j].mean_x);
        CHECK(a[j].population == b[j].population);
        CHECK(a[j].mean_x.front() == doctest::Approx((j + 0.5) / 3.0));
    }
}

TEST_CASE("invalid parameters are domain errors") {
    DemoParams p;
    p.q = 0.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = DemoParams{};
    p.sigma_eps = 0.5;  // variance exceeds mu(1-mu)
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = DemoParams{};
    p.k_capacity = 0.0;
    CHECK_THROWS_AS(run_demo(p, {}), DomainError);
}

// ============================================================================
// Jump moments
// ============================================================================

TEST_CASE("jump moments recover a synthetic Wright-Fisher diffusion") {
    // dx = (dt s/T_M) x(1-x) + sqrt(dt x(1-x)/(T_M Ne)) xi per unit step,
    // integrated with fine substeps.
    const double tm = 2.0, ne = 800.0, s = 0.004;
    const double a1 = s / tm, a2 = 1.0 / (tm * ne);
    std::vector<std::vector<double>> series;
    Engine eng(42);
    std::normal_distribution<double> z;
    for (int k = 0; k < 300; ++k) {
        std::vector<double> x{(k + 0.5) / 300.0};
        for (int i = 0; i < 1500; ++i) {
            double v = x.back();
            for (int sub = 0; sub < 10; ++sub) {
                const double g = v * (1.0 - v);
                v += 0.1 * a1 * g + std::sqrt(0.1 * a2 * g) * z(eng);
                v = std::clamp(v, 0.0, 1.0);
            }
            x.push_back(v);
        }
        series.push_back(std::move(x));
    }
    const auto jm = estimate_jump_moments(series, 1.0, 1.0, 20, 20);
    CHECK(rel_err(jm.a2, a2) < 0.1);
    CHECK(std::abs(jm.a1 - a1) < 3.0 * jm.a1_stderr);
    CHECK(jm.r2_second > 0.9);
    CHECK(jm.increments == 300 * 1500);
}

TEST_CASE("constant trajectories have zero jump moments") {
    const std::vector<std::vector<double>> series{std::vector<double>(100, 0.3), std::vector<double>(100, 0.7)};
    const auto jm = estimate_jump_moments(series, 10.0, 10.0, 10, 1);
    CHECK(jm.a1 == 0.0);
    CHECK(jm.a2 == 0.0);
    for (const auto& b : jm.bins) {
        CHECK(b.m1 == 0.0);
        CHECK(b.m2 == 0.0);
    }
}

TEST_CASE("sparse bins are dropped and dt must be a multiple of the sampling step") {
    const std::vector<std::vector<double>> series{{0.5, 0.51, 0.49, 0.5, 0.52}};
    const auto jm = estimate_jump_moments(series, 10.0, 10.0, 10, 20);
    CHECK(jm.dropped_bins > 0);
    CHECK_THROWS_AS(estimate_jump_moments(series, 10.0, 15.0, 10, 1), DomainError);
}

// ============================================================================
// Naive estimates
// ============================================================================

TEST_CASE("naive estimate arithmetic") {
    DemoParams p;
    const auto n = naive_estimates(p, 1000.0, 10.0, 100'000, 3);
    CHECK(n.eps_mean == doctest::Approx(0.15));
    CHECK(n.eps_sq_mean == doctest::Approx(0.045));
    CHECK(n.ne == doctest::Approx(1000.0 * 10.0 / 3.0));
    CHECK(n.s == 0.005);
    CHECK(n.memory_time == doctest::Approx(1.0 / (n.r_bar * 0.15)));
    CHECK(n.a1 == doctest::Approx(10.0 * n.s / n.memory_time));
    CHECK(n.a2 == doctest::Approx(10.0 / (n.memory_time * n.ne)));
}

TEST_CASE("constant interaction rate gives R_bar = mu_R") {
    DemoParams p;
    p.sigma_r0 = 0.0;
    p.mu_r = 0.0;
    p.sigma_r = 0.0;
    p.sigma_theta = 0.0;
    const auto n = naive_estimates(p, 0.0, 10.0, 20'000, 5);
    CHECK(n.r_bar == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(n.n_bar == 1000.0);
}
