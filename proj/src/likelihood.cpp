#include "langchange/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>

#include <fmt/format.h>

#include "langchange/errors.hpp"

namespace langchange {

namespace {

// ============================================================================
// Complex helpers accurate near zero
// ============================================================================

// log(1+z): Re = log1p(2x + x^2 + y^2)/2, Im = atan2(y, 1+x).
cdouble clog1p(cdouble z) {
    const double x = z.real(), y = z.imag();
    return {0.5 * std::log1p(x * (2.0 + x) + y * y), std::atan2(y, 1.0 + x)};
}

// exp(z) - 1: Re = expm1(x) cos y - 2 sin^2(y/2), Im = e^x sin y.
cdouble cexpm1(cdouble z) {
    const double x = z.real(), y = z.imag();
    const double h = std::sin(0.5 * y);
    return {std::expm1(x) * std::cos(y) - 2.0 * h * h, std::exp(x) * std::sin(y)};
}

// Exponent of the combined survival factor w/(w+s) (b/(b+s))^a.
cdouble survival_exponent(cdouble s, double omega, const FixationShape& shape) {
    cdouble z = clog1p(s / omega);
    if (!shape.poisson()) z += shape.alpha * clog1p(s / shape.beta);
    return z;
}

// ln Lhat_m(s - shift) evaluated without forming s - shift in the product
// factors (each (w - shift) + s keeps a positive real part).
cdouble log_shifted_transform(cdouble s, double shift, int m, std::span<const double> rates,
                              const FixationShape& shape) {
    const cdouble sigma = s - shift;
    cdouble acc = 0.0;
    for (int i = 0; i < m; ++i) acc += std::log(rates[i]) - std::log((rates[i] - shift) + s);
    if (!shape.poisson() && m > 0)
        acc += static_cast<double>(m) * shape.alpha * (std::log(shape.beta) - std::log((shape.beta - shift) + s));
    // (1/sigma) [1 - exp(-z)] with the removable singularity at sigma = 0.
    const cdouble z = survival_exponent(sigma, rates[m], shape);
    cdouble ratio;
    if (std::abs(sigma) == 0.0) {
        ratio = 1.0 / rates[m] + (shape.poisson() ? 0.0 : shape.alpha / shape.beta);
    } else {
        ratio = -cexpm1(-z) / sigma;
    }
    return acc + std::log(ratio);
}

// ln of (1/t) sum_k w_k Re F(beta_k / t) given ln F at the nodes.
template <typename LogF>
double euler_log_sum(double t, const InversionConfig& cfg, LogF&& log_f, const char* what) {
    const std::size_t n = cfg.nodes.size();
    thread_local std::vector<cdouble> logs;
    logs.resize(n);
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        logs[k] = log_f(cfg.nodes[k] / t);
        if (!std::isfinite(logs[k].real()) && logs[k].real() != -std::numeric_limits<double>::infinity())
            throw NumericalError(fmt::format("Laplace inversion ({}): non-finite transform value", what));
        top = std::max(top, logs[k].real());
    }
    if (!std::isfinite(top)) throw NumericalError(fmt::format("Laplace inversion ({}): transform vanishes", what));
    double sum = 0.0, abs_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double mag = std::exp(logs[k].real() - top);
        const double term = cfg.weights[k] * mag * std::cos(logs[k].imag());
        sum += term;
        abs_sum += std::abs(cfg.weights[k]) * mag;
    }
    if (!(sum > 0.0) || sum < abs_sum * 1e-10)
        throw NumericalError(fmt::format("Laplace inversion ({}): cancellation exceeds working precision at t = {}",
                                         what, t));
    return top + std::log(sum) - std::log(t);
}

void check_rates(int m, std::span<const double> rates, const FixationShape& shape) {
    if (m < 0) throw DomainError("negative change count");
    if (rates.size() < static_cast<std::size_t>(m) + 1)
        throw DomainError(fmt::format("need {} path rates, got {}", m + 1, rates.size()));
    for (int i = 0; i <= m; ++i)
        if (!(rates[i] > 0.0) || !std::isfinite(rates[i])) throw DomainError("path rates must be positive and finite");
    if (!shape.poisson() && (!(shape.alpha > 0.0) || !(shape.beta > 0.0)))
        throw DomainError("Gamma shape and rate must be positive");
}

}  // namespace

// ============================================================================
// Euler tables
// ============================================================================

InversionConfig InversionConfig::for_digits(int digits) {
    if (digits < 1) throw DomainError("precision digits must be >= 1");
    InversionConfig cfg;
    cfg.precision_digits = digits;
    cfg.euler_m = static_cast<int>(std::ceil(digits / 0.6 - 1e-12));
    const int M = cfg.euler_m;
    const double A = M * std::numbers::ln10 / 3.0;
    std::vector<double> eta(2 * M + 1, 1.0);
    eta[0] = 0.5;
    eta[2 * M] = std::ldexp(1.0, -M);
    double binom = 1.0;  // C(M, k)
    for (int k = 1; k < M; ++k) {
        binom = binom * (M - k + 1) / k;
        eta[2 * M - k] = eta[2 * M - k + 1] + std::ldexp(binom, -M);
    }
    const double scale = std::pow(10.0, M / 3.0);
    for (int k = 0; k <= 2 * M; ++k) {
        cfg.nodes.emplace_back(A, std::numbers::pi * k);
        cfg.weights.push_back(scale * (k % 2 ? -1.0 : 1.0) * eta[k]);
    }
    return cfg;
}

InversionConfig InversionConfig::with_nodes(int node_count, int digits) {
    auto cfg = for_digits(digits);
    if (node_count < cfg.node_count())
        throw NumericalError(fmt::format("{} digits need at least {} Euler nodes, {} configured", digits,
                                         cfg.node_count(), node_count));
    if (node_count % 2) throw DomainError("Euler node count must be even");
    // More nodes than the minimum: raise M, digits follow.
    if (node_count > cfg.node_count()) {
        int more = static_cast<int>(std::floor(0.6 * (node_count / 2) + 1e-12));
        cfg = for_digits(more);
        cfg.precision_digits = std::max(digits, more);
    }
    return cfg;
}

const InversionConfig& default_inversion() {
    static const InversionConfig cfg = InversionConfig::for_digits(5);
    return cfg;
}

// ============================================================================
// Transform and inversion
// ============================================================================

cdouble likelihood_transform(cdouble s, int m, std::span<const double> rates, const FixationShape& shape) {
    check_rates(m, rates, shape);
    if (std::abs(s) == 0.0) throw DomainError("likelihood_transform: pole at s = 0");
    cdouble v = 1.0 / s;
    for (int i = 0; i < m; ++i) {
        if (std::abs(rates[i] + s) == 0.0) throw DomainError("likelihood_transform: pole at s = -omega");
        v *= rates[i] / (rates[i] + s);
    }
    cdouble fix = 1.0;
    if (!shape.poisson()) {
        if (std::abs(shape.beta + s) == 0.0) throw DomainError("likelihood_transform: pole at s = -beta");
        fix = std::pow(shape.beta / (shape.beta + s), shape.alpha);
        v *= std::pow(fix, static_cast<double>(m));
    }
    if (std::abs(rates[m] + s) == 0.0) throw DomainError("likelihood_transform: pole at s = -omega");
    return v * (1.0 - rates[m] / (rates[m] + s) * fix);
}

double invert_likelihood(int m, double t, std::span<const double> rates, const FixationShape& shape,
                         const InversionConfig& cfg) {
    check_rates(m, rates, shape);
    if (t < 0.0 || std::isnan(t)) throw DomainError("invert_likelihood: negative time");
    if (t == 0.0) return m == 0 ? 0.0 : -std::numeric_limits<double>::infinity();

    if (m == 0) {
        // 1 - L0 has transform (1/s) exp(-z(s)); use it while 1 - L0 <= 1/2.
        double x = std::exp(euler_log_sum(
            t, cfg, [&](cdouble s) { return -std::log(s) - survival_exponent(s, rates[0], shape); }, "1-L0"));
        if (x <= 0.5) return std::log1p(-x);
    }
    double shift = rates[0];
    for (int i = 1; i <= m; ++i) shift = std::min(shift, rates[i]);
    if (!shape.poisson()) shift = std::min(shift, shape.beta);
    const double log_r = euler_log_sum(
        t, cfg, [&](cdouble s) { return log_shifted_transform(s, shift, m, rates, shape); }, "shifted");
    return -shift * t + log_r;
}

double interference_factor(double omega, double mean_fixation) {
    if (omega < 0.0 || mean_fixation < 0.0) throw DomainError("interference_factor: negative argument");
    return std::exp(-omega * mean_fixation);
}

// ============================================================================
// Dataset likelihood
// ============================================================================

OriginFixationParams OriginFixationParams::baseline(double omega_bar, const CycleDistribution& dist) {
    OriginFixationParams p;
    for (int i = 0; i < kCycleLength; ++i) {
        if (!(dist.fractions[i] > 0.0)) throw DomainError("stage fraction must be positive");
        p.stage_rates[i] = omega_bar / (kCycleLength * dist.fractions[i]);
    }
    p.poisson_limit = true;
    return p;
}

FixationShape OriginFixationParams::shape() const {
    if (poisson_limit || mean_fixation == 0.0) return FixationShape::instantaneous();
    auto g = gamma_params(mean_fixation, var_fixation);
    return {g.alpha, g.beta};
}

std::vector<double> path_rates(const ArticleRecord& record, const OriginFixationParams& params) {
    if (record.stages.empty()) throw ValidationError("article record has no stages");
    const int m = changes_count(record);
    std::vector<double> rates(static_cast<std::size_t>(m) + 1);
    int stage = record.stages.front().index();
    for (int k = 0; k <= m; ++k, stage = (stage + 1) % kCycleLength) rates[k] = params.stage_rates[stage];
    return rates;
}

double language_log_likelihood(const LanguageHistory& history, Article article, const OriginFixationParams& params,
                               const InversionConfig& cfg) {
    const auto& record = history.record(article);
    const int m = changes_count(record);
    const auto rates = path_rates(record, params);
    const auto shape = params.shape();
    double ll = invert_likelihood(m, history.observation_time(), rates, shape, cfg);
    if (!shape.poisson())
        for (int i = 0; i < m; ++i) ll += -rates[i] * params.mean_fixation;  // ln C_i
    return ll;
}

namespace {

const OriginFixationParams& params_for(std::span<const OriginFixationParams> params, std::size_t i) {
    return params.size() == 1 ? params[0] : params[i];
}

void check_params(std::span<const LanguageHistory> histories, std::span<const OriginFixationParams> params) {
    if (histories.empty()) throw DomainError("dataset is empty");
    if (params.size() != 1 && params.size() != histories.size())
        throw DomainError("need one parameter set per language (or one shared)");
}

}  // namespace

double dataset_log_likelihood_serial(std::span<const LanguageHistory> histories, Article article,
                                     std::span<const OriginFixationParams> params, const InversionConfig& cfg) {
    check_params(histories, params);
    double total = 0.0;
    for (std::size_t i = 0; i < histories.size(); ++i)
        total += language_log_likelihood(histories[i], article, params_for(params, i), cfg);
    return total;
}

double dataset_log_likelihood(std::span<const LanguageHistory> histories, Article article,
                              std::span<const OriginFixationParams> params, const InversionConfig& cfg) {
    check_params(histories, params);
    const auto n = static_cast<std::ptrdiff_t>(histories.size());
    std::vector<double> terms(histories.size());
    std::vector<std::exception_ptr> errors(histories.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            terms[i] = language_log_likelihood(histories[i], article, params_for(params, i), cfg);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    double total = 0.0;
    for (double v : terms) total += v;
    return total;
}

double dataset_log_likelihood(std::span<const LanguageHistory> histories, Article article,
                              const OriginFixationParams& params, const InversionConfig& cfg) {
    return dataset_log_likelihood(histories, article, std::span<const OriginFixationParams>(&params, 1), cfg);
}

}  // namespace langchange
