#include "langchange/data_model.hpp"

#include <numeric>

#include "langchange/errors.hpp"

namespace langchange {

std::string_view article_name(Article a) {
    return a == Article::definite ? "definite" : "indefinite";
}

Article parse_article(std::string_view name) {
    if (name == "definite") return Article::definite;
    if (name == "indefinite") return Article::indefinite;
    throw ValidationError("unknown article '" + std::string(name) + "'");
}

CycleStage::CycleStage(int index) : index_(index) {
    if (index < 0 || index >= kCycleLength)
        throw ValidationError("cycle stage out of range: " + std::to_string(index));
}

int changes_count(const ArticleRecord& record) {
    int m = 0;
    for (std::size_t i = 1; i < record.stages.size(); ++i) {
        int step = (record.stages[i].index() - record.stages[i - 1].index() + kCycleLength) % kCycleLength;
        m += step;
    }
    return m;
}

bool has_skipped_stage(const ArticleRecord& record) {
    for (std::size_t i = 1; i < record.stages.size(); ++i) {
        int step = (record.stages[i].index() - record.stages[i - 1].index() + kCycleLength) % kCycleLength;
        if (step != 1) return true;
    }
    return false;
}

double LanguageHistory::observation_time() const {
    double t = 0.0;
    for (const auto& w : windows) t += w.duration();
    return t;
}

double rate_estimate(int m, double t) {
    if (!(t > 0.0)) throw DomainError("rate_estimate: observation time must be positive");
    if (m < 0) throw DomainError("rate_estimate: negative change count");
    return (m + 1) / t;
}

CycleDistribution stationary_fractions(const std::array<std::int64_t, kCycleLength>& counts) {
    std::int64_t total = 0;
    for (auto c : counts) {
        if (c < 0) throw DomainError("stationary_fractions: negative count");
        total += c;
    }
    if (total == 0) throw DomainError("stationary_fractions: all counts are zero");
    CycleDistribution d;
    d.counts = counts;
    double acc = 0.0;
    for (int i = 0; i + 1 < kCycleLength; ++i) {
        d.fractions[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
        acc += d.fractions[i];
    }
    d.fractions[kCycleLength - 1] = 1.0 - acc;
    return d;
}

}  // namespace langchange
