#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace langchange {

// ============================================================================
// Domain records for article grammaticalisation histories.
// ============================================================================

constexpr int kCycleLength = 4;

enum class Article { definite, indefinite };

std::string_view article_name(Article a);
Article parse_article(std::string_view name);  // throws ValidationError

// Stage of the article cycle: 0 no article, 1 same as source word,
// 2 distinct word, 3 affix.
class CycleStage {
public:
    explicit CycleStage(int index);  // throws ValidationError outside 0..3
    int index() const { return index_; }
    CycleStage successor() const { return CycleStage((index_ + 1) % kCycleLength); }
    bool operator==(const CycleStage&) const = default;

private:
    int index_;
};

struct ObservationWindow {
    double start = 0.0;  // calendar year, negative = BCE
    double end = 0.0;
    double duration() const { return end - start; }
};

struct ArticleRecord {
    Article article = Article::definite;
    std::vector<CycleStage> stages;
};

// Number of stage changes along the record: the summed cyclic advances
// (next - prev) mod 4. Equals len-1 when every step is a single advance.
int changes_count(const ArticleRecord& record);

// True when some step advances by more than one stage.
bool has_skipped_stage(const ArticleRecord& record);

struct LanguageHistory {
    std::string name;
    std::vector<ObservationWindow> windows;
    ArticleRecord definite;
    ArticleRecord indefinite;
    double weight = 0.0;
    std::map<std::string, double> composition;  // region -> fraction

    const ArticleRecord& record(Article a) const {
        return a == Article::definite ? definite : indefinite;
    }
    // Languages are frozen between windows: effective time is the sum.
    double observation_time() const;
};

struct CycleDistribution {
    std::array<std::int64_t, kCycleLength> counts{};
    std::array<double, kCycleLength> fractions{};
};

struct RegionPopulationRecord {
    std::string region;
    double year = 0.0;  // calendar year
    double size = 0.0;  // persons
};

// (m+1)/t, the per-language rate-of-change estimate. Throws DomainError if
// t <= 0 or m < 0.
double rate_estimate(int m, double t);

// f_i = counts_i / sum, with the last fraction set so that the sum is 1.
CycleDistribution stationary_fractions(const std::array<std::int64_t, kCycleLength>& counts);

}  // namespace langchange
