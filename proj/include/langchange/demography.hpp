#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "langchange/data_model.hpp"

namespace langchange {

// ============================================================================
// Historical population model N_i(t) = w_i N0 g(t), ln g a quartic in t
// (years since 1BCE).
// ============================================================================

using GrowthCoeffs = std::array<double, 5>;  // c0..c4 of ln g(t)

// Coefficients as published for the shipped survey, used by the fits.
inline constexpr GrowthCoeffs kPublishedGrowthCoeffs{-0.0127, -2.00e-4, 2.13e-7, 2.04e-10, 2.55e-14};
inline constexpr double kPublishedN0 = 14600.0;

struct DemographyFit {
    double n0 = 0.0;
    std::map<std::string, double> weights;  // region -> w_i, reference = 1
    GrowthCoeffs g_coeffs{};
    double r_squared = 0.0;
    std::pair<double, double> residual_quantiles{};  // (q2.5, q97.5), log units
    std::string reference_region;
    std::vector<double> times;       // t_j, years since 1BCE
    std::vector<double> log_growth;  // fitted b_j = ln g(t_j)
    std::vector<double> residuals;   // per record, log units, in input order
    std::size_t constrained_time_index = 0;
};

// Calendar year -> years since 1BCE (there is no year 0).
double years_since_1bce(double calendar_year);

// Least squares over a_i = ln w_i, b_j = ln g(t_j) with w_reference = 1 and
// b = 0 at the time point nearest t = 0, then a quartic fit of b_j.
DemographyFit fit_population_model(const std::vector<RegionPopulationRecord>& records,
                                   const std::string& reference_region = "Iceland");

double growth_g(double t, const GrowthCoeffs& coeffs);

// Time-average of g over the union of the windows (adaptive quadrature,
// relative tolerance 1e-6).
double mean_growth(const std::vector<ObservationWindow>& windows, const GrowthCoeffs& coeffs);

// sum over composition of fraction * fitted region weight; throws LookupError.
double composite_weight(const LanguageHistory& language, const std::map<std::string, double>& region_weights);

// N0 * composite weight * mean g over the windows.
double language_mean_size(const LanguageHistory& language, const DemographyFit& fit);

// N0 * tabulated language weight * mean g over the windows (used by fits).
double tabulated_mean_size(const LanguageHistory& language, double n0, const GrowthCoeffs& coeffs);

// Type-7 (linear interpolation) sample quantile.
double quantile(std::vector<double> values, double p);

}  // namespace langchange
