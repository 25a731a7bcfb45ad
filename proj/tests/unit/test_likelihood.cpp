#include <doctest.h>

#include "langchange/errors.hpp"
#include "langchange/likelihood.hpp"
#include "support.hpp"

using namespace langchange;
using test_support::dataset;
using test_support::language;
using test_support::rel_err;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    return out;
}

LanguageHistory single_window(const std::string& name, double t, std::vector<int> stages) {
    LanguageHistory h;
    h.name = name;
    h.windows = {{0.0, t}};
    for (int s : stages) h.definite.stages.emplace_back(s);
    h.indefinite.stages = {CycleStage(0)};
    h.indefinite.article = Article::indefinite;
    h.weight = 1.0;
    return h;
}

}  // namespace

// ============================================================================
// Transform
// ============================================================================

TEST_CASE("m = 0 transform reduces to the empty-product form") {
    const double w = 2e-3;
    const FixationShape shape{1.7, 0.05};
    const std::array<double, 1> rates{w};
    for (cdouble s : {cdouble(1e-3, 0.0), cdouble(0.02, 0.3), cdouble(-1e-4, 5e-3)}) {
        const cdouble expected = (1.0 / s) * (1.0 - (w / (w + s)) * std::pow(shape.beta / (shape.beta + s), shape.alpha));
        CHECK(std::abs(likelihood_transform(s, 0, rates, shape) - expected) < 1e-12 * std::abs(expected));
    }
}

TEST_CASE("beta -> inf transform is the Poisson path transform") {
    const std::array<double, 3> rates{1e-3, 2e-3, 5e-4};
    const cdouble s(3e-3, 1e-3);
    const cdouble expected = (1.0 / s) * (rates[0] / (rates[0] + s)) * (rates[1] / (rates[1] + s)) *
                             (1.0 - rates[2] / (rates[2] + s));
    const auto got = likelihood_transform(s, 2, rates, FixationShape::instantaneous());
    CHECK(std::abs(got - expected) < 1e-12 * std::abs(expected));
    CHECK(std::abs(likelihood_transform(s, 2, rates, {2.0, 1e12}) - expected) < 1e-6 * std::abs(expected));
}

TEST_CASE("transform poles are domain errors") {
    const std::array<double, 1> rates{1e-3};
    CHECK_THROWS_AS(likelihood_transform(cdouble(0.0, 0.0), 0, rates, {}), DomainError);
    CHECK_THROWS_AS(likelihood_transform(cdouble(-1e-3, 0.0), 0, rates, {}), DomainError);
}

// ============================================================================
// Inversion oracles
// ============================================================================

TEST_CASE("Poisson m = 0 oracle") {
    const std::array<double, 1> rates{6.05e-4};
    CHECK(invert_likelihood(0, 1000.0, rates, {}) == doctest::Approx(-0.605).epsilon(1e-6));
    CHECK(std::exp(invert_likelihood(0, 1000.0, rates, {})) == doctest::Approx(0.5461).epsilon(1e-4));
    const double w = 1e-3;
    for (double wt : log_grid(1e-3, 1e2, 26)) {
        const std::array<double, 1> r{w};
        CAPTURE(wt);
        CHECK(rel_err(std::exp(invert_likelihood(0, wt / w, r, {})), std::exp(-wt)) < 1e-5);
    }
}

TEST_CASE("Poisson m = 1 oracle") {
    const double w = 1e-3;
    const std::array<double, 2> equal{w, w};
    CHECK(std::exp(invert_likelihood(1, 1000.0, equal, {})) == doctest::Approx(std::exp(-1.0)).epsilon(1e-5));
    CHECK(std::exp(invert_likelihood(1, 1000.0, equal, {})) == doctest::Approx(0.3679).epsilon(1e-4));
    for (double wt : log_grid(1e-3, 1e2, 26)) {
        const double t = wt / w;
        CAPTURE(wt);
        CHECK(rel_err(std::exp(invert_likelihood(1, t, equal, {})), wt * std::exp(-wt)) < 1e-5);
        const std::array<double, 2> unequal{w, 3.0 * w};
        const double exact = w / (2.0 * w) * (std::exp(-w * t) - std::exp(-3.0 * w * t));
        CHECK(rel_err(std::exp(invert_likelihood(1, t, unequal, {})), exact) < 1e-5);
    }
}

TEST_CASE("alpha = 1 convolution oracle") {
    const double w = 1e-3, b = 1e-2;
    const std::array<double, 1> rates{w};
    const FixationShape shape{1.0, b};
    auto exact = [&](double t) { return (b * std::exp(-w * t) - w * std::exp(-b * t)) / (b - w); };
    CHECK(std::exp(invert_likelihood(0, 1000.0, rates, shape)) == doctest::Approx(0.40875).epsilon(1e-5));
    for (double wt : log_grid(1e-3, 1e2, 26)) {
        CAPTURE(wt);
        CHECK(rel_err(std::exp(invert_likelihood(0, wt / w, rates, shape)), exact(wt / w)) < 1e-5);
    }
}

TEST_CASE("inversion configuration") {
    const auto cfg = InversionConfig::for_digits(5);
    CHECK(cfg.euler_m == 9);
    CHECK(cfg.node_count() == 18);
    CHECK(cfg.nodes.size() == 19);
    CHECK_THROWS_AS(InversionConfig::with_nodes(4, 5), NumericalError);
    CHECK_NOTHROW(InversionConfig::with_nodes(18, 5));
}

TEST_CASE("interference factor") {
    CHECK(interference_factor(0.0, 100.0) == 1.0);
    CHECK(interference_factor(1e-3, 0.0) == 1.0);
    CHECK(interference_factor(1e-3, 100.0) == doctest::Approx(std::exp(-0.1)));
    CHECK(interference_factor(1e-3, 100.0) == doctest::Approx(0.9048).epsilon(1e-4));
}

// ============================================================================
// Per-language likelihood
// ============================================================================

TEST_CASE("baseline stage rates") {
    const auto& dist = dataset().wals.at(Article::definite);
    const auto p = OriginFixationParams::baseline(6e-4, dist);
    for (int i = 0; i < 4; ++i) CHECK(p.stage_rates[i] == doctest::Approx(6e-4 / (4.0 * dist.fractions[i])));
    CHECK(p.poisson_limit);
    CHECK(p.shape().poisson());
}

TEST_CASE("path rates follow the record from its first stage") {
    const auto p = OriginFixationParams::baseline(6e-4, dataset().wals.at(Article::definite));
    const auto bg = path_rates(language("Bulgarian").definite, p);
    REQUIRE(bg.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(bg[i] == p.stage_rates[i]);
    const auto ge = path_rates(language("Georgian").definite, p);
    REQUIRE(ge.size() == 4);
    CHECK(ge[0] == p.stage_rates[1]);
    CHECK(ge[3] == p.stage_rates[0]);
}

TEST_CASE("Russian definite is the Poisson survival at omega_0") {
    const auto p = OriginFixationParams::baseline(6e-4, dataset().wals.at(Article::definite));
    const auto& ru = language("Russian");
    CHECK(ru.observation_time() == 1200.0);
    CHECK(language_log_likelihood(ru, Article::definite, p) ==
          doctest::Approx(-p.stage_rates[0] * 1200.0).epsilon(1e-6));
}

TEST_CASE("Bulgarian definite uses the hypoexponential path probability") {
    const auto p = OriginFixationParams::baseline(6e-4, dataset().wals.at(Article::definite));
    const auto w = path_rates(language("Bulgarian").definite, p);
    // P(exactly 3 changes) for distinct rates: sum_k prod_{j<3} w_j * e^{-w_k t} / prod_{j != k}(w_j - w_k)
    const double t = 1200.0;
    double prob = 0.0;
    for (int k = 0; k < 4; ++k) {
        double term = std::exp(-w[k] * t);
        for (int j = 0; j < 4; ++j)
            if (j != k) term /= (w[j] - w[k]);
        prob += term;
    }
    prob *= w[0] * w[1] * w[2];
    CHECK(rel_err(std::exp(language_log_likelihood(language("Bulgarian"), Article::definite, p)), prob) < 5e-5);
}

TEST_CASE("nothing happens in vanishing time") {
    const auto p = OriginFixationParams::baseline(6e-4, dataset().wals.at(Article::definite));
    const auto h = single_window("Instant", 1e-6, {2});
    CHECK(std::abs(language_log_likelihood(h, Article::definite, p)) < 1e-8);
}

TEST_CASE("log likelihood is additive over languages") {
    const auto p = OriginFixationParams::baseline(6e-4, dataset().wals.at(Article::definite));
    const std::vector<LanguageHistory> two{language("Bulgarian"), language("Bulgarian")};
    const double one = language_log_likelihood(language("Bulgarian"), Article::definite, p);
    CHECK(dataset_log_likelihood(two, Article::definite, p) == 2.0 * one);
}

TEST_CASE("dataset likelihood at the published baseline rates") {
    const auto& d = dataset();
    // AICc = 2 - 2 lnL + 4/50 for k = 1, n = 52.
    const auto pd = OriginFixationParams::baseline(6.05e-4, d.wals.at(Article::definite));
    CHECK((2.0 - 2.0 * dataset_log_likelihood(d.histories, Article::definite, pd) + 0.08) ==
          doctest::Approx(128.0).epsilon(0.005));
    const auto pi = OriginFixationParams::baseline(5.67e-4, d.wals.at(Article::indefinite));
    CHECK((2.0 - 2.0 * dataset_log_likelihood(d.histories, Article::indefinite, pi) + 0.08) ==
          doctest::Approx(93.6).epsilon(0.005));
}

TEST_CASE("parallel and serial dataset likelihoods agree exactly") {
    const auto& d = dataset();
    std::vector<OriginFixationParams> params;
    for (std::size_t i = 0; i < d.histories.size(); ++i) {
        auto p = OriginFixationParams::baseline(5e-4 + 1e-6 * static_cast<double>(i), d.wals.at(Article::definite));
        p.poisson_limit = false;
        p.mean_fixation = 100.0 + static_cast<double>(i);
        p.var_fixation = 4000.0;
        params.push_back(p);
    }
    CHECK(dataset_log_likelihood(d.histories, Article::definite, params) ==
          dataset_log_likelihood_serial(d.histories, Article::definite, params));
}
