#include "langchange/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <fmt/format.h>

#include "langchange/errors.hpp"
#include "langchange/rng.hpp"

namespace langchange {

double aicc(int k, int n, double log_likelihood) {
    if (n <= k + 1) throw DomainError(fmt::format("aicc: need n > k+1 (k = {}, n = {})", k, n));
    return 2.0 * k - 2.0 * log_likelihood + 2.0 * k * (k + 1.0) / (n - k - 1.0);
}

// ============================================================================
// 1-D search
// ============================================================================

MaximumResult maximize_log_scale(const std::function<double(double)>& f, double lo, double hi, double rel_tol) {
    if (!(lo > 0.0) || !(hi > lo)) throw DomainError("maximize_log_scale: need 0 < lo < hi");
    MaximumResult res;
    auto eval = [&](double u) {
        ++res.evaluations;
        try {
            double v = f(std::exp(u));
            return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
        } catch (const NumericalError&) {
            ++res.failed_evaluations;
            return -std::numeric_limits<double>::infinity();
        }
    };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    const double a0 = std::log(lo), b0 = std::log(hi);
    double a = a0, b = b0;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = eval(c), fd = eval(d);
    while (b - a > rel_tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d);
        }
    }
    const double u = fc >= fd ? c : d;
    res.value = std::max(fc, fd);
    res.argmax = std::exp(u);
    res.at_boundary = (u - a0) < 2.0 * rel_tol || (b0 - u) < 2.0 * rel_tol;
    if (!std::isfinite(res.value)) throw NumericalError("likelihood maximisation found no finite value");
    return res;
}

namespace {

void flag_skipped_stages(std::span<const LanguageHistory> histories, Article article, FitReport& r) {
    for (const auto& h : histories)
        if (has_skipped_stage(h.record(article))) r.flags.push_back("skipped_stage:" + h.name);
}

}  // namespace

FitReport fit_poisson_baseline(std::span<const LanguageHistory> histories, Article article,
                               const CycleDistribution& fractions, const InversionConfig& cfg,
                               const SearchOptions& search) {
    auto objective = [&](double omega_bar) {
        return dataset_log_likelihood(histories, article, OriginFixationParams::baseline(omega_bar, fractions), cfg);
    };
    auto best = maximize_log_scale(objective, search.lower, search.upper, search.rel_tol);
    FitReport r;
    r.scenario = "baseline";
    r.article = article;
    r.parameter_name = "omega_bar";
    r.mle_value = best.argmax;
    r.log_likelihood = best.value;
    r.k = 1;
    r.n = static_cast<int>(histories.size());
    if (r.n > r.k + 1) {
        r.aicc = aicc(r.k, r.n, r.log_likelihood);
    } else {
        // Too few languages for the small-sample correction.
        r.aicc = std::numeric_limits<double>::quiet_NaN();
        r.flags.push_back("aicc_undefined_small_n");
    }
    r.reference = "baseline";
    r.delta_aicc = 0.0;
    r.at_boundary = best.at_boundary;
    if (best.at_boundary) r.flags.push_back("mle_at_search_boundary");
    flag_skipped_stages(histories, article, r);
    r.notes.push_back("omega_i = omega_bar/(4 f_i)");
    r.settings["search_lower"] = search.lower;
    r.settings["search_upper"] = search.upper;
    r.settings["precision_digits"] = cfg.precision_digits;
    r.settings["euler_nodes"] = cfg.node_count();
    return r;
}

// ============================================================================
// Scenarios
// ============================================================================

WrightFisherParams WrightFisherParams::usage(double r, double memory_time, double s) {
    WrightFisherParams wf;
    wf.r = r;
    wf.epsilon = 1.0 / (r * memory_time);
    wf.s = s;
    return wf;
}

namespace {

// eta-independent per-language pieces: omega_i = eta_bar kappa / (4 f_i).
struct LanguageScenario {
    double kappa = 0.0;
    double mean_fixation = 0.0;
    double var_fixation = 0.0;
    bool poisson = true;
    double ne = 0.0;
};

std::vector<LanguageScenario> prepare(const ScenarioContext& ctx, const WrightFisherParams& wf) {
    if (ctx.mean_sizes.size() != ctx.histories.size())
        throw DomainError("scenario needs one mean population size per language");
    if (!(wf.r > 0.0) || !(wf.epsilon > 0.0)) throw DomainError("scenario needs R > 0 and epsilon > 0");
    if (std::isinf(wf.s) && wf.s < 0.0) throw DomainError("s = -infinity forbids fixation");
    std::vector<LanguageScenario> out(ctx.histories.size());
    const bool network = std::isfinite(wf.nu);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double n = ctx.mean_sizes[i];
        if (!(n > 0.0)) throw DomainError("mean population size must be positive");
        if (wf.epsilon / n > 1.0) throw DomainError(fmt::format("epsilon/N exceeds 1 for {}", ctx.histories[i].name));
        double ne = n / wf.epsilon;
        if (network) {
            NetworkSpec spec{std::max(2.0, std::round(n)), wf.nu, wf.z_min, std::min(wf.epsilon, 1.0)};
            auto m = sample_power_law_moments(spec, substream_seed(ctx.seed, i));
            ne = n / wf.epsilon * m.mean * m.mean / m.mean_square;
        }
        DiffusionParams dp{ne, wf.s, wf.memory_time()};
        auto& ls = out[i];
        ls.ne = ne;
        ls.kappa = n * wf.r * fixation_probability(wf.epsilon / n, dp);
        if (!(ls.kappa > 0.0))
            throw NumericalError(fmt::format("fixation probability underflows for {}", ctx.histories[i].name));
        if (!std::isinf(wf.s)) {
            auto mom = fixation_time_moments(dp);
            ls.mean_fixation = mom.mean;
            ls.var_fixation = mom.variance;
            ls.poisson = false;
        }
    }
    return out;
}

std::vector<OriginFixationParams> params_at(const ScenarioContext& ctx, const std::vector<LanguageScenario>& ls,
                                            double eta_bar) {
    std::vector<OriginFixationParams> out(ls.size());
    for (std::size_t i = 0; i < ls.size(); ++i) {
        auto& p = out[i];
        for (int j = 0; j < kCycleLength; ++j)
            p.stage_rates[j] = eta_bar * ls[i].kappa / (kCycleLength * ctx.fractions.fractions[j]);
        p.mean_fixation = ls[i].mean_fixation;
        p.var_fixation = ls[i].var_fixation;
        p.poisson_limit = ls[i].poisson;
    }
    return out;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<OriginFixationParams> scenario_params(const ScenarioContext& ctx, const WrightFisherParams& wf) {
    return params_at(ctx, prepare(ctx, wf), wf.eta_bar);
}

double binary_overdispersion(std::span<const LanguageHistory> histories, Article article,
                             std::span<const OriginFixationParams> params, const InversionConfig& cfg) {
    double acc = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < histories.size(); ++i) {
        const auto& p = params.size() == 1 ? params[0] : params[i];
        const auto& rec = histories[i].record(article);
        const double rate = p.stage_rates[rec.stages.front().index()];
        const double ln_p0 = invert_likelihood(0, histories[i].observation_time(), std::span<const double>(&rate, 1),
                                               p.shape(), cfg);
        const double p0 = std::exp(ln_p0), p1 = -std::expm1(ln_p0);
        const double var = p0 * p1;
        if (!(var > 0.0)) continue;
        const double x = changes_count(rec) > 0 ? 1.0 : 0.0;
        acc += (x - p1) * (x - p1) / var;
        ++used;
    }
    if (used == 0) throw NumericalError("binary overdispersion undefined: no language has positive variance");
    return acc / used;
}

FitReport evaluate_scenario(const ScenarioContext& ctx, const WrightFisherParams& wf, const std::string& scenario) {
    const auto ls = prepare(ctx, wf);
    std::vector<double> kappas;
    for (const auto& l : ls) kappas.push_back(l.kappa);
    const double omega_guess = ctx.baseline.mle_value > 0.0 ? ctx.baseline.mle_value : 1e-3;
    const double eta_guess = omega_guess / median(kappas);
    const double span_factor = std::pow(10.0, ctx.search_decades);

    auto objective = [&](double eta_bar) {
        auto params = params_at(ctx, ls, eta_bar);
        return dataset_log_likelihood(ctx.histories, ctx.article, params, ctx.inversion);
    };
    auto best = maximize_log_scale(objective, eta_guess / span_factor, eta_guess * span_factor);

    FitReport r;
    r.scenario = scenario;
    r.article = ctx.article;
    r.parameter_name = "eta_bar";
    r.mle_value = best.argmax;
    r.log_likelihood = best.value;
    r.k = ctx.k;
    r.n = static_cast<int>(ctx.histories.size());
    r.aicc = aicc(r.k, r.n, r.log_likelihood);
    r.reference = ctx.baseline.scenario.empty() ? "none" : ctx.baseline.scenario;
    r.delta_aicc = ctx.baseline.scenario.empty() ? 0.0 : r.aicc - ctx.baseline.aicc;
    r.at_boundary = best.at_boundary;
    if (best.at_boundary) r.flags.push_back("mle_at_search_boundary");
    if (best.failed_evaluations) r.flags.push_back(fmt::format("inversion_failures_during_search:{}", best.failed_evaluations));
    if (wf.epsilon > 1.0) r.flags.push_back("unphysical_epsilon");
    flag_skipped_stages(ctx.histories, ctx.article, r);
    r.overdispersion_binary = binary_overdispersion(ctx.histories, ctx.article, params_at(ctx, ls, best.argmax),
                                                    ctx.inversion);
    r.overdispersion_method = "exact_binary";
    r.notes.push_back("eta_i = eta_bar/(4 f_i)");
    r.notes.push_back(std::isfinite(wf.nu) ? "Ne from sampled degree moments" : "homogeneous community, Ne = N/epsilon");
    if (std::isinf(wf.s)) r.notes.push_back("s = infinity limit: Q = 1, T_F = 0");
    r.settings["R"] = wf.r;
    r.settings["epsilon"] = wf.epsilon;
    r.settings["T_M"] = wf.memory_time();
    r.settings["s"] = wf.s;
    r.settings["nu"] = wf.nu;
    r.settings["z_min"] = wf.z_min;
    r.settings["k"] = ctx.k;
    return r;
}

// ============================================================================
// Sweeps
// ============================================================================

namespace {

SweepRow run_point(const ScenarioContext& ctx, const SweepPoint& pt, const std::string& scenario) {
    SweepRow row;
    row.coords = pt.coords;
    try {
        row.report = evaluate_scenario(ctx, pt.wf, scenario);
    } catch (const Error& e) {
        row.error = e.what();
    }
    return row;
}

}  // namespace

std::vector<SweepRow> sweep_serial(const ScenarioContext& ctx, std::span<const SweepPoint> grid,
                                   const std::string& scenario) {
    std::vector<SweepRow> rows;
    for (const auto& pt : grid) rows.push_back(run_point(ctx, pt, scenario));
    return rows;
}

std::vector<SweepRow> sweep(const ScenarioContext& ctx, std::span<const SweepPoint> grid, const std::string& scenario) {
    std::vector<SweepRow> rows(grid.size());
    const auto n = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) rows[i] = run_point(ctx, grid[i], scenario);
    return rows;
}

std::vector<double> selection_grid(double lo_exp, double hi_exp, int per_decade, bool both_signs, bool with_infinity) {
    std::vector<double> pos;
    const int steps = static_cast<int>(std::lround((hi_exp - lo_exp) * per_decade));
    for (int i = 0; i <= steps; ++i) pos.push_back(std::pow(10.0, lo_exp + static_cast<double>(i) / per_decade));
    std::vector<double> out;
    if (both_signs)
        for (auto it = pos.rbegin(); it != pos.rend(); ++it) out.push_back(-*it);
    out.push_back(0.0);
    out.insert(out.end(), pos.begin(), pos.end());
    if (with_infinity) out.push_back(kInfinity);
    return out;
}

}  // namespace langchange
