#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "langchange/errors.hpp"
#include "langchange/inference.hpp"
#include "langchange/rng.hpp"

namespace langchange {

namespace {

// ============================================================================
// Per-language model: cycled rates, delay law, table of ln L_m(t)
// ============================================================================

constexpr std::int64_t kBlock = 1000;        // replicates per RNG substream
constexpr double kTableDepth = 40.0;         // stop once ln L_m < peak - depth
constexpr int kTableCap = 100000;

struct LanguageModel {
    std::array<double, kCycleLength> rates{};  // rates[k] = rate after k changes (mod 4)
    FixationShape shape;
    double t = 0.0;
    int observed = 0;
    std::vector<double> log_table;  // ln L_m, m = 0..size-1
};

LanguageModel build_model(const LanguageHistory& h, Article article, const OriginFixationParams& p,
                          const InversionConfig& cfg) {
    LanguageModel lm;
    const auto& rec = h.record(article);
    const int start = rec.stages.front().index();
    for (int k = 0; k < kCycleLength; ++k) lm.rates[k] = p.stage_rates[(start + k) % kCycleLength];
    lm.shape = p.shape();
    lm.t = h.observation_time();
    lm.observed = changes_count(rec);
    std::vector<double> path;
    double peak = -std::numeric_limits<double>::infinity();
    for (int m = 0; m < kTableCap; ++m) {
        path.push_back(lm.rates[m % kCycleLength]);
        double v;
        try {
            v = invert_likelihood(m, lm.t, path, lm.shape, cfg);
        } catch (const NumericalError&) {
            // Far tail beyond working precision: treat as not representable.
            if (m > lm.observed && peak - (lm.log_table.empty() ? 0.0 : lm.log_table.back()) > 20.0) break;
            throw;
        }
        lm.log_table.push_back(v);
        peak = std::max(peak, v);
        if (m > lm.observed && v < peak && v < peak - kTableDepth) break;
    }
    return lm;
}

int simulate_count(Engine& eng, const LanguageModel& lm) {
    double time = 0.0;
    int m = 0;
    std::gamma_distribution<double> delay(lm.shape.poisson() ? 1.0 : lm.shape.alpha,
                                          lm.shape.poisson() ? 1.0 : 1.0 / lm.shape.beta);
    while (true) {
        time += std::exponential_distribution<double>(lm.rates[m % kCycleLength])(eng);
        if (!lm.shape.poisson()) time += delay(eng);
        if (time > lm.t) return m;
        ++m;
    }
}

struct Accumulator {
    std::int64_t lower = 0;
    std::vector<std::int64_t> sum, sum_sq, any;
    explicit Accumulator(std::size_t n) : sum(n), sum_sq(n), any(n) {}
    void merge(const Accumulator& o) {
        lower += o.lower;
        for (std::size_t i = 0; i < sum.size(); ++i) {
            sum[i] += o.sum[i];
            sum_sq[i] += o.sum_sq[i];
            any[i] += o.any[i];
        }
    }
};

void run_block(std::int64_t block, std::int64_t n_sim, std::uint64_t seed, const std::vector<LanguageModel>& models,
               double observed, Accumulator& acc) {
    Engine eng = substream(seed, static_cast<std::uint64_t>(block));
    const std::int64_t first = block * kBlock, last = std::min(n_sim, first + kBlock);
    for (std::int64_t r = first; r < last; ++r) {
        double ll = 0.0;
        for (std::size_t i = 0; i < models.size(); ++i) {
            const int m = simulate_count(eng, models[i]);
            ll += static_cast<std::size_t>(m) < models[i].log_table.size()
                      ? models[i].log_table[static_cast<std::size_t>(m)]
                      : -std::numeric_limits<double>::infinity();
            acc.sum[i] += m;
            acc.sum_sq[i] += static_cast<std::int64_t>(m) * m;
            acc.any[i] += m > 0;
        }
        if (ll < observed) ++acc.lower;
    }
}

std::vector<LanguageModel> build_models(std::span<const LanguageHistory> histories, Article article,
                                        std::span<const OriginFixationParams> params, const InversionConfig& cfg) {
    if (histories.empty()) throw DomainError("goodness of fit needs a nonempty dataset");
    if (params.size() != 1 && params.size() != histories.size())
        throw DomainError("need one parameter set per language (or one shared)");
    std::vector<LanguageModel> models;
    for (std::size_t i = 0; i < histories.size(); ++i)
        models.push_back(build_model(histories[i], article, params.size() == 1 ? params[0] : params[i], cfg));
    return models;
}

double observed_total(const std::vector<LanguageModel>& models) {
    double ll = 0.0;
    for (const auto& m : models) ll += m.log_table[static_cast<std::size_t>(m.observed)];
    return ll;
}

GofResult summarise(std::span<const LanguageHistory> histories, const std::vector<LanguageModel>& models,
                    const Accumulator& acc, std::int64_t n_sim, std::uint64_t seed, double observed) {
    GofResult g;
    g.n_sim = n_sim;
    g.seed = seed;
    g.observed_log_likelihood = observed;
    g.p_value = static_cast<double>(acc.lower) / static_cast<double>(n_sim);
    double oc = 0.0, ob = 0.0;
    int nc = 0, nb = 0;
    const double n = static_cast<double>(n_sim);
    for (std::size_t i = 0; i < models.size(); ++i) {
        const double mean = static_cast<double>(acc.sum[i]) / n;
        const double var = static_cast<double>(acc.sum_sq[i]) / n - mean * mean;
        const double x = models[i].observed;
        if (var > 0.0) {
            oc += (x - mean) * (x - mean) / var;
            ++nc;
        } else {
            g.excluded_changes.push_back(histories[i].name);
        }
        const double pb = static_cast<double>(acc.any[i]) / n;
        const double vb = pb * (1.0 - pb);
        const double xb = models[i].observed > 0 ? 1.0 : 0.0;
        if (vb > 0.0) {
            ob += (xb - pb) * (xb - pb) / vb;
            ++nb;
        } else {
            g.excluded_binary.push_back(histories[i].name);
        }
    }
    g.overdispersion_changes = nc ? oc / nc : std::numeric_limits<double>::quiet_NaN();
    g.overdispersion_binary = nb ? ob / nb : std::numeric_limits<double>::quiet_NaN();
    return g;
}

void check_n(std::int64_t n_sim) {
    if (n_sim < 1000) throw DomainError("goodness of fit needs at least 1000 simulations");
}

}  // namespace

// ============================================================================
// Entry points
// ============================================================================

GofResult monte_carlo_gof_serial(std::span<const LanguageHistory> histories, Article article,
                                 std::span<const OriginFixationParams> params, std::int64_t n_sim,
                                 std::uint64_t seed, const InversionConfig& cfg) {
    check_n(n_sim);
    const auto models = build_models(histories, article, params, cfg);
    const double observed = observed_total(models);
    Accumulator acc(models.size());
    const std::int64_t blocks = (n_sim + kBlock - 1) / kBlock;
    for (std::int64_t b = 0; b < blocks; ++b) run_block(b, n_sim, seed, models, observed, acc);
    return summarise(histories, models, acc, n_sim, seed, observed);
}

GofResult monte_carlo_gof(std::span<const LanguageHistory> histories, Article article,
                          std::span<const OriginFixationParams> params, std::int64_t n_sim, std::uint64_t seed,
                          const InversionConfig& cfg) {
    check_n(n_sim);
    const auto models = build_models(histories, article, params, cfg);
    const double observed = observed_total(models);
    Accumulator total(models.size());
    const std::int64_t blocks = (n_sim + kBlock - 1) / kBlock;
#pragma omp parallel
    {
        Accumulator local(models.size());
#pragma omp for schedule(dynamic)
        for (std::int64_t b = 0; b < blocks; ++b) run_block(b, n_sim, seed, models, observed, local);
#pragma omp critical
        total.merge(local);
    }
    return summarise(histories, models, total, n_sim, seed, observed);
}

}  // namespace langchange
