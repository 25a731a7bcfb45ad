#include "langchange/demography.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "langchange/errors.hpp"

namespace langchange {

double years_since_1bce(double calendar_year) {
    return calendar_year > 0.0 ? calendar_year : calendar_year + 1.0;
}

double growth_g(double t, const GrowthCoeffs& c) {
    double p = c[4];
    for (int k = 3; k >= 0; --k) p = p * t + c[k];
    return std::exp(p);
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw DomainError("quantile of empty sample");
    std::sort(values.begin(), values.end());
    double h = (static_cast<double>(values.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

// ============================================================================
// Least-squares fit
// ============================================================================

DemographyFit fit_population_model(const std::vector<RegionPopulationRecord>& records,
                                   const std::string& reference_region) {
    std::set<std::string> region_set;
    std::set<double> time_set;
    for (const auto& r : records) {
        region_set.insert(r.region);
        time_set.insert(years_since_1bce(r.year));
    }
    if (!region_set.count(reference_region))
        throw ConfigError("reference region '" + reference_region + "' not present in population records");
    if (region_set.size() < 1 || time_set.size() < 2)
        throw FitError("population fit needs at least two time points");

    std::vector<std::string> regions(region_set.begin(), region_set.end());
    std::vector<double> times(time_set.begin(), time_set.end());
    std::size_t j0 = 0;
    for (std::size_t j = 1; j < times.size(); ++j)
        if (std::abs(times[j]) < std::abs(times[j0])) j0 = j;

    // Unknowns: ln N0, a_i for i != reference, b_j for j != j0.
    std::map<std::string, int> a_col;
    int col = 1;
    for (const auto& r : regions)
        if (r != reference_region) a_col[r] = col++;
    std::vector<int> b_col(times.size(), -1);
    for (std::size_t j = 0; j < times.size(); ++j)
        if (j != j0) b_col[j] = col++;
    const int n_unknowns = col;

    const auto n = static_cast<Eigen::Index>(records.size());
    if (n < n_unknowns) throw FitError("population fit underdetermined: fewer records than unknowns");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n_unknowns);
    Eigen::VectorXd y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& r = records[static_cast<std::size_t>(k)];
        A(k, 0) = 1.0;
        if (auto it = a_col.find(r.region); it != a_col.end()) A(k, it->second) = 1.0;
        auto j = static_cast<std::size_t>(
            std::lower_bound(times.begin(), times.end(), years_since_1bce(r.year)) - times.begin());
        if (b_col[j] >= 0) A(k, b_col[j]) = 1.0;
        y(k) = std::log(r.size);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < n_unknowns) throw FitError("population fit underdetermined after constraints");
    Eigen::VectorXd x = qr.solve(y);

    DemographyFit fit;
    fit.reference_region = reference_region;
    fit.n0 = std::exp(x(0));
    for (const auto& r : regions) {
        auto it = a_col.find(r);
        fit.weights[r] = it == a_col.end() ? 1.0 : std::exp(x(it->second));
    }
    fit.times = times;
    fit.constrained_time_index = j0;
    fit.log_growth.resize(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) fit.log_growth[j] = b_col[j] >= 0 ? x(b_col[j]) : 0.0;

    Eigen::VectorXd res = y - A * x;
    fit.residuals.assign(res.data(), res.data() + res.size());
    double ymean = y.mean();
    double ss_tot = (y.array() - ymean).square().sum();
    double ss_res = res.squaredNorm();
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.residual_quantiles = {quantile(fit.residuals, 0.025), quantile(fit.residuals, 0.975)};

    // Quartic in u = t/1000 for conditioning, then mapped back to t.
    const auto m = static_cast<Eigen::Index>(times.size());
    if (m < 5) throw FitError("growth polynomial needs at least five time points");
    Eigen::MatrixXd V(m, 5);
    Eigen::VectorXd b(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        double u = times[static_cast<std::size_t>(j)] / 1000.0;
        double p = 1.0;
        for (int k = 0; k < 5; ++k, p *= u) V(j, k) = p;
        b(j) = fit.log_growth[static_cast<std::size_t>(j)];
    }
    Eigen::VectorXd d = V.colPivHouseholderQr().solve(b);
    double scale = 1.0;
    for (int k = 0; k < 5; ++k, scale *= 1000.0) fit.g_coeffs[k] = d(k) / scale;
    return fit;
}

// ============================================================================
// Language averages
// ============================================================================

double mean_growth(const std::vector<ObservationWindow>& windows, const GrowthCoeffs& coeffs) {
    using boost::math::quadrature::gauss_kronrod;
    double integral = 0.0, length = 0.0;
    for (const auto& w : windows) {
        double a = years_since_1bce(w.start), b = years_since_1bce(w.end);
        integral += gauss_kronrod<double, 31>::integrate([&](double t) { return growth_g(t, coeffs); }, a, b, 15,
                                                          1e-6);
        length += b - a;
    }
    if (!(length > 0.0)) throw DomainError("mean_growth: empty observation windows");
    return integral / length;
}

double composite_weight(const LanguageHistory& language, const std::map<std::string, double>& region_weights) {
    if (language.composition.empty()) throw LookupError("language '" + language.name + "' has no composition");
    double w = 0.0;
    for (const auto& [region, frac] : language.composition) {
        auto it = region_weights.find(region);
        if (it == region_weights.end())
            throw LookupError("unknown region '" + region + "' in composition of " + language.name);
        w += frac * it->second;
    }
    return w;
}

double language_mean_size(const LanguageHistory& language, const DemographyFit& fit) {
    return fit.n0 * composite_weight(language, fit.weights) * mean_growth(language.windows, fit.g_coeffs);
}

double tabulated_mean_size(const LanguageHistory& language, double n0, const GrowthCoeffs& coeffs) {
    return n0 * language.weight * mean_growth(language.windows, coeffs);
}

}  // namespace langchange
