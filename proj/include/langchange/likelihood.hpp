#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "langchange/data_model.hpp"
#include "langchange/fixation.hpp"

namespace langchange {

// ============================================================================
// Probability L_m(t) of exactly m completed changes in time t for exponential
// originations followed by Gamma(alpha, beta) fixation delays, by numerical
// inversion of its Laplace transform.
// ============================================================================

using cdouble = std::complex<double>;

// Fixation-delay law; beta = infinity is the Poisson (instant fixation) limit.
struct FixationShape {
    double alpha = 1.0;
    double beta = kInfinity;
    bool poisson() const { return std::isinf(beta); }
    static FixationShape instantaneous() { return {}; }
};

// Euler summation tables (Abate-Whitt): 2M+1 evaluations, reported as
// node_count = 2M.
struct InversionConfig {
    int precision_digits = 5;
    int euler_m = 9;
    std::vector<cdouble> nodes;   // beta_k, k = 0..2M
    std::vector<double> weights;  // 10^{M/3} (-1)^k eta_k
    int node_count() const { return 2 * euler_m; }

    // M = ceil(digits / 0.6).
    static InversionConfig for_digits(int digits = 5);
    // Throws NumericalError if n nodes cannot deliver the requested digits.
    static InversionConfig with_nodes(int node_count, int digits = 5);
};

const InversionConfig& default_inversion();

// (1/s) prod_{i<=m} w_i/(w_i+s) (b/(b+s))^{m a} [1 - w_{m+1}/(w_{m+1}+s) (b/(b+s))^a].
// rates holds w_1..w_{m+1}. Throws DomainError at a pole.
cdouble likelihood_transform(cdouble s, int m, std::span<const double> rates, const FixationShape& shape);

// ln L_m(t).
double invert_likelihood(int m, double t, std::span<const double> rates, const FixationShape& shape,
                         const InversionConfig& cfg = default_inversion());

double interference_factor(double omega, double mean_fixation);

// Population-level parameters; rates indexed by the stage being left.
struct OriginFixationParams {
    std::array<double, kCycleLength> stage_rates{};
    double mean_fixation = 0.0;
    double var_fixation = 0.0;
    bool poisson_limit = true;

    // omega_i = omega_bar / (4 f_i), Poisson limit.
    static OriginFixationParams baseline(double omega_bar, const CycleDistribution& dist);
    FixationShape shape() const;
};

// Rates w_1..w_{m+1} along the path starting at the record's first stage.
std::vector<double> path_rates(const ArticleRecord& record, const OriginFixationParams& params);

// sum_{i<=m} ln C_i + ln L_m(t).
double language_log_likelihood(const LanguageHistory& history, Article article, const OriginFixationParams& params,
                               const InversionConfig& cfg = default_inversion());

// Sum over languages; per-language params (size = histories.size()) or shared.
// The parallel kernel writes per-language terms then sums in language order.
double dataset_log_likelihood(std::span<const LanguageHistory> histories, Article article,
                              std::span<const OriginFixationParams> params,
                              const InversionConfig& cfg = default_inversion());
double dataset_log_likelihood(std::span<const LanguageHistory> histories, Article article,
                              const OriginFixationParams& params, const InversionConfig& cfg = default_inversion());
// Serial reference implementation of the same sum.
double dataset_log_likelihood_serial(std::span<const LanguageHistory> histories, Article article,
                                     std::span<const OriginFixationParams> params,
                                     const InversionConfig& cfg = default_inversion());

}  // namespace langchange
