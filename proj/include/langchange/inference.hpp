#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "langchange/data_model.hpp"
#include "langchange/fixation.hpp"
#include "langchange/likelihood.hpp"

namespace langchange {

// ============================================================================
// Model comparison
// ============================================================================

// 2k - 2 lnL + 2k(k+1)/(n-k-1). Throws DomainError when n <= k+1.
double aicc(int k, int n, double log_likelihood);

struct MaximumResult {
    double argmax = 0.0;
    double value = 0.0;
    bool at_boundary = false;
    int evaluations = 0;
    int failed_evaluations = 0;  // probes where f threw a NumericalError
};

// Golden-section maximisation of f over ln x in [ln lo, ln hi], stopping when
// the bracket is narrower than rel_tol in ln x.
MaximumResult maximize_log_scale(const std::function<double(double)>& f, double lo, double hi,
                                 double rel_tol = 1e-4);

struct FitReport {
    std::string scenario;
    Article article = Article::definite;
    std::string parameter_name;  // "omega_bar" or "eta_bar"
    double mle_value = 0.0;
    double log_likelihood = 0.0;
    int k = 1;
    int n = 0;
    double aicc = 0.0;
    std::string reference;  // model the delta is taken against
    double delta_aicc = 0.0;
    std::optional<double> p_value;
    std::optional<double> overdispersion_changes;
    std::optional<double> overdispersion_binary;
    std::string overdispersion_method;  // "monte_carlo" or "exact_binary"
    bool at_boundary = false;
    std::vector<std::string> flags;          // conditions needing attention
    std::vector<std::string> notes;          // modelling conventions in force
    std::map<std::string, double> settings;  // resolved scenario coordinates
};

// ============================================================================
// Baseline
// ============================================================================

struct SearchOptions {
    double lower = 1e-7;
    double upper = 1e-1;
    double rel_tol = 1e-4;
};

FitReport fit_poisson_baseline(std::span<const LanguageHistory> histories, Article article,
                               const CycleDistribution& fractions, const InversionConfig& cfg = default_inversion(),
                               const SearchOptions& search = {});

// ============================================================================
// Wright-Fisher scenarios
// ============================================================================

struct WrightFisherParams {
    double nu = kInfinity;  // infinity = homogeneous (well-mixed) community
    int z_min = 2;
    double r = 0.04;        // interactions per year
    double epsilon = 1.0;   // update fraction
    double eta_bar = 0.0;   // fitted
    double s = 0.0;         // selection strength, may be +inf

    double memory_time() const { return 1.0 / (r * epsilon); }
    // Usage-based parameterisation: epsilon = 1/(R T_M).
    static WrightFisherParams usage(double r, double memory_time, double s);
};

struct ScenarioContext {
    std::span<const LanguageHistory> histories;
    Article article = Article::definite;
    CycleDistribution fractions;
    std::vector<double> mean_sizes;  // N-bar per language
    FitReport baseline;              // reference for delta AICc
    int k = 1;                       // free parameters per scenario
    InversionConfig inversion = default_inversion();
    std::uint64_t seed = 1;          // network degree samples
    double search_decades = 6.0;     // eta_bar bracket half-width around the scale guess
};

// Per-language population-level parameters at a given eta_bar.
std::vector<OriginFixationParams> scenario_params(const ScenarioContext& ctx, const WrightFisherParams& wf);

FitReport evaluate_scenario(const ScenarioContext& ctx, const WrightFisherParams& wf,
                            const std::string& scenario = "custom");

// Exact binary overdispersion from L_0 per language.
double binary_overdispersion(std::span<const LanguageHistory> histories, Article article,
                             std::span<const OriginFixationParams> params,
                             const InversionConfig& cfg = default_inversion());

struct SweepPoint {
    WrightFisherParams wf;
    std::map<std::string, double> coords;
};

struct SweepRow {
    std::map<std::string, double> coords;
    std::optional<FitReport> report;
    std::string error;  // non-empty when the grid point failed
};

// Evaluates every grid point (OpenMP over points); failures are recorded.
std::vector<SweepRow> sweep(const ScenarioContext& ctx, std::span<const SweepPoint> grid, const std::string& scenario);
std::vector<SweepRow> sweep_serial(const ScenarioContext& ctx, std::span<const SweepPoint> grid,
                                   const std::string& scenario);

// Selection grid: 0, +/- logspace(10^lo .. 10^hi, per_decade), optionally +inf.
std::vector<double> selection_grid(double lo_exp, double hi_exp, int per_decade, bool both_signs, bool with_infinity);

// ============================================================================
// Monte Carlo goodness of fit
// ============================================================================

struct GofResult {
    double p_value = 0.0;
    double overdispersion_changes = 0.0;
    double overdispersion_binary = 0.0;
    double observed_log_likelihood = 0.0;
    std::int64_t n_sim = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> excluded_changes;  // zero simulated variance
    std::vector<std::string> excluded_binary;
};

GofResult monte_carlo_gof(std::span<const LanguageHistory> histories, Article article,
                          std::span<const OriginFixationParams> params, std::int64_t n_sim, std::uint64_t seed,
                          const InversionConfig& cfg = default_inversion());
GofResult monte_carlo_gof_serial(std::span<const LanguageHistory> histories, Article article,
                                 std::span<const OriginFixationParams> params, std::int64_t n_sim,
                                 std::uint64_t seed, const InversionConfig& cfg = default_inversion());

}  // namespace langchange
