#include <doctest.h>

#include <sstream>

#include "langchange/data_model.hpp"
#include "langchange/dataset.hpp"
#include "langchange/demography.hpp"
#include "langchange/errors.hpp"
#include "support.hpp"

using namespace langchange;
using test_support::dataset;
using test_support::language;

// ============================================================================
// Records and loaders
// ============================================================================

TEST_CASE("shipped histories load with the expected records") {
    const auto& d = dataset();
    CHECK(d.histories.size() == 52);

    const auto& ic = language("Icelandic");
    REQUIRE(ic.windows.size() == 1);
    CHECK(ic.windows[0].start == 1300.0);
    CHECK(ic.windows[0].end == 2000.0);
    REQUIRE(ic.definite.stages.size() == 1);
    CHECK(ic.definite.stages[0].index() == 3);
    CHECK(ic.weight == doctest::Approx(1.00));

    const auto& he = language("Hebrew");
    REQUIRE(he.windows.size() == 2);
    CHECK(he.windows[0].start == -1200.0);
    CHECK(he.windows[0].end == 200.0);
    CHECK(he.windows[1].start == 1900.0);
    CHECK(he.windows[1].end == 2000.0);
    CHECK(he.observation_time() == doctest::Approx(1500.0));
}

TEST_CASE("empty history input gives an empty sequence") {
    std::istringstream in("");
    CHECK(parse_histories(in, "empty").empty());
    std::istringstream comments("# only a comment\n\n");
    CHECK(parse_histories(comments, "comments").empty());
}

TEST_CASE("malformed history rows name the line") {
    std::istringstream in("# header\nEnglish\t700..2000\t1,2\n");
    try {
        parse_histories(in, "bad.tsv");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("bad.tsv:2") != std::string::npos);
    }
}

TEST_CASE("unknown stage symbols are validation errors") {
    std::istringstream in("X\t700..2000\t1,7\t0\t1.0\n");
    CHECK_THROWS_AS(parse_histories(in, "bad.tsv"), InputError);
    CHECK_THROWS_AS(CycleStage(4), ValidationError);
    CHECK_THROWS_AS(CycleStage(-1), ValidationError);
    CHECK_THROWS_AS(parse_article("partitive"), ValidationError);
}

TEST_CASE("histories round-trip through the writer") {
    const auto& d = dataset();
    std::ostringstream out;
    write_histories(out, d.histories);
    std::istringstream in(out.str());
    const auto back = parse_histories(in, "roundtrip");
    REQUIRE(back.size() == d.histories.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        const auto& a = d.histories[i];
        const auto& b = back[i];
        CHECK(a.name == b.name);
        REQUIRE(a.windows.size() == b.windows.size());
        for (std::size_t w = 0; w < a.windows.size(); ++w) {
            CHECK(a.windows[w].start == b.windows[w].start);
            CHECK(a.windows[w].end == b.windows[w].end);
        }
        CHECK(a.definite.stages == b.definite.stages);
        CHECK(a.indefinite.stages == b.indefinite.stages);
        CHECK(a.weight == b.weight);
    }
}

TEST_CASE("missing input files are configuration errors naming the path") {
    try {
        load_histories("/nonexistent/histories.tsv");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/histories.tsv") != std::string::npos);
    }
}

// ============================================================================
// Changes and rates
// ============================================================================

TEST_CASE("changes are counted as cyclic stage advances") {
    CHECK(changes_count(language("Bulgarian").definite) == 3);
    CHECK(changes_count(language("Russian").definite) == 0);
    CHECK(changes_count(language("Georgian").definite) == 3);

    ArticleRecord skip{Article::definite, {CycleStage(0), CycleStage(2)}};
    CHECK(changes_count(skip) == 2);
    CHECK(has_skipped_stage(skip));
    CHECK_FALSE(has_skipped_stage(language("Georgian").definite));
}

TEST_CASE("no shipped record skips a stage") {
    for (const auto& h : dataset().histories) {
        CHECK_FALSE(has_skipped_stage(h.definite));
        CHECK_FALSE(has_skipped_stage(h.indefinite));
    }
}

TEST_CASE("rate estimate (m+1)/t") {
    CHECK(rate_estimate(0, 1000.0) == doctest::Approx(0.001));
    CHECK(rate_estimate(3, 1200.0) == doctest::Approx(0.0033333333));
    CHECK_THROWS_AS(rate_estimate(0, 0.0), DomainError);
    CHECK_THROWS_AS(rate_estimate(-1, 10.0), DomainError);
}

TEST_CASE("median rate over the dataset is about one change per millennium") {
    for (Article a : {Article::definite, Article::indefinite}) {
        std::vector<double> rates;
        for (const auto& h : dataset().histories) rates.push_back(rate_estimate(changes_count(h.record(a)), h.observation_time()));
        const double med = quantile(rates, 0.5);
        CHECK(med > 5e-4);
        CHECK(med < 2e-3);
    }
}

// ============================================================================
// Stationary fractions
// ============================================================================

TEST_CASE("stationary fractions from typological counts") {
    const auto def = stationary_fractions({243, 69, 216, 92});
    CHECK(def.fractions[0] == doctest::Approx(243.0 / 620).epsilon(1e-12));
    CHECK(def.fractions[0] == doctest::Approx(0.3919).epsilon(1e-3));
    CHECK(def.fractions[1] == doctest::Approx(0.1113).epsilon(1e-3));
    CHECK(def.fractions[2] == doctest::Approx(0.3484).epsilon(1e-3));
    CHECK(def.fractions[3] == doctest::Approx(0.1484).epsilon(1e-3));

    const auto ind = stationary_fractions({296, 112, 102, 24});
    CHECK(ind.fractions[0] == doctest::Approx(296.0 / 534));
    CHECK(ind.fractions[3] == doctest::Approx(24.0 / 534));
    double sum = 0.0;
    for (double f : ind.fractions) sum += f;
    CHECK(sum == 1.0);

    const auto flat = stationary_fractions({1, 1, 1, 1});
    for (double f : flat.fractions) CHECK(f == 0.25);

    CHECK_THROWS_AS(stationary_fractions({0, 0, 0, 0}), DomainError);
}

TEST_CASE("shipped typological table matches the published counts") {
    const auto& w = dataset().wals;
    CHECK(w.at(Article::definite).counts == std::array<std::int64_t, 4>{243, 69, 216, 92});
    CHECK(w.at(Article::indefinite).counts == std::array<std::int64_t, 4>{296, 112, 102, 24});
}
