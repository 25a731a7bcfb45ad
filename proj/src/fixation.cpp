#include "langchange/fixation.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fmt/format.h>

#include "langchange/errors.hpp"

namespace langchange {

const char* regime_name(MomentRegime r) {
    switch (r) {
        case MomentRegime::taylor: return "taylor";
        case MomentRegime::quadrature: return "quadrature";
        case MomentRegime::asymptotic: return "asymptotic";
        case MomentRegime::instantaneous: return "instantaneous";
    }
    return "?";
}

namespace {

// phi(u) = (1 - e^{-S u})/S, -> u as S -> 0.
double phi(double S, double u) { return S == 0.0 ? u : -std::expm1(-S * u) / S; }

// psi(u) = phi(u)/u, -> 1 as u -> 0.
double psi(double S, double u) {
    double z = S * u;
    if (z == 0.0) return 1.0;
    if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
    return -std::expm1(-z) / z;
}

// For tanh-sinh on [a,b]: xc is a-x near a (<=0) and b-x near b (>=0).
double distance_to_upper(double x, double xc, double b) { return xc > 0.0 ? xc : b - x; }

constexpr double kInnerTol = 1e-11;
constexpr double kOuterTol = 1e-10;

void check_convergence(double value, double err, double l1, double tol, const char* what) {
    if (!std::isfinite(value) || err > 1e3 * tol * std::max(l1, 1e-300))
        throw NumericalError(fmt::format("fixation-time quadrature did not converge ({}): value {}, error {}", what,
                                         value, err));
}

// F1(x)/x for the neutral-scaled recursion; xm = 1 - x held separately.
double kernel_over_x(double S, double x, double xm) {
    static thread_local boost::math::quadrature::tanh_sinh<double> ts;
    const double p1 = phi(S, 1.0);
    double err = 0.0, l1 = 0.0;

    // Paths fixed at y <= x: int_0^x psi(y) phi(y) e^{-S(x-y)} / (1-y) dy.
    // For x < 1/2 substitute y = x v (x - y = x (1 - v) stays exact); for
    // x >= 1/2 substitute l = ln(1-y), which absorbs the near-singular 1/(1-y)
    // as x -> 1.
    double first = 0.0;
    if (x > 0.0 && x < 0.5) {
        first = ts.integrate(
            [&](double v, double vc) {
                const double y = x * v;
                const double x_minus_y = x * distance_to_upper(v, vc, 1.0);
                return psi(S, y) * phi(S, y) * std::exp(-S * x_minus_y) / (xm + x_minus_y);
            },
            0.0, 1.0, kInnerTol, &err, &l1);
        check_convergence(first, err, l1, kInnerTol, "inner lower");
    } else if (x >= 0.5) {
        const double lo = std::log(xm);
        first = ts.integrate(
            [&](double l, double lc) {
                const double y = -std::expm1(l);
                const double from_lo = lc < 0.0 ? -lc : l - lo;
                const double x_minus_y = xm * std::expm1(from_lo);
                return psi(S, y) * phi(S, y) * std::exp(-S * x_minus_y);
            },
            lo, 0.0, kInnerTol, &err, &l1);
        check_convergence(first, err, l1, kInnerTol, "inner lower");
        first /= x;
    }
    first *= phi(S, xm) / (p1 * p1);
    // int_x^1 psi(y) psi(1-y) dy with y = x + xm u, 1 - y = xm (1 - u).
    double second = 0.0;
    if (xm > 0.0) {
        second = ts.integrate(
            [&](double u, double uc) {
                const double y = x + xm * u;
                return psi(S, y) * psi(S, xm * distance_to_upper(u, uc, 1.0));
            },
            0.0, 1.0, kInnerTol, &err, &l1);
        check_convergence(second, err, l1, kInnerTol, "inner upper");
        second *= xm * psi(S, x) / (p1 * p1);
    }
    return first + second;
}

}  // namespace

// ============================================================================
// Fixation probability
// ============================================================================

double fixation_probability(double x0, const DiffusionParams& p) {
    if (!(x0 >= 0.0 && x0 <= 1.0)) throw DomainError("fixation_probability: x0 outside [0,1]");
    if (x0 == 0.0) return 0.0;
    if (x0 == 1.0) return 1.0;
    if (std::isinf(p.s)) return p.s > 0.0 ? 1.0 : 0.0;
    const double S = 2.0 * p.ne * p.s;
    if (S == 0.0) return x0;
    if (S > 0.0) return std::expm1(-S * x0) / std::expm1(-S);
    // S < 0: (e^{|S|x0}-1)/(e^{|S|}-1) = e^{-|S|(1-x0)} (1-e^{-|S|x0})/(1-e^{-|S|})
    const double A = -S;
    return std::exp(-A * (1.0 - x0)) * std::expm1(-A * x0) / std::expm1(-A);
}

// ============================================================================
// Moment branches
// ============================================================================

namespace moments {

double first_moment_kernel(double S, double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return x * kernel_over_x(std::abs(S), x, 1.0 - x);
}

double h1_quadrature(double S) {
    S = std::abs(S);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double p1 = phi(S, 1.0);
    double err = 0.0, l1 = 0.0;
    double v = ts.integrate(
        [&](double y, double yc) { return psi(S, y) * psi(S, distance_to_upper(y, yc, 1.0)); }, 0.0, 1.0,
        kOuterTol, &err, &l1);
    check_convergence(v, err, l1, kOuterTol, "mean");
    return v / p1;
}

double h2_quadrature(double S) {
    S = std::abs(S);
    boost::math::quadrature::tanh_sinh<double> ts;
    double err = 0.0, l1 = 0.0;
    double v = ts.integrate(
        [&](double x, double xc) {
            double xm = distance_to_upper(x, xc, 1.0);
            return kernel_over_x(S, x, xm) * psi(S, xm);
        },
        0.0, 1.0, kOuterTol, &err, &l1);
    check_convergence(v, err, l1, kOuterTol, "second moment");
    return 2.0 * v;
}

double h1_taylor(double S) { return 1.0 - S * S / 72.0; }

double h2_taylor(double S) {
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    return pi2 / 3.0 - 2.0 + (pi2 / 36.0 - 17.0 / 54.0) * S * S;
}

double h1_asymptotic(double S) { return 2.0 / S * (std::log(S) + kEulerGamma - 1.0 / S); }

double h2_asymptotic(double S) {
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    double L = std::log(S) + kEulerGamma;
    return (4.0 * L * L + pi2 / 3.0) / (S * S);
}

}  // namespace moments

FixationMoments fixation_time_moments(const DiffusionParams& p) {
    if (!(p.ne > 0.0) || !(p.memory_time > 0.0))
        throw DomainError("fixation_time_moments: Ne and T_M must be positive");
    FixationMoments out;
    if (std::isinf(p.s)) {
        out.regime = out.second_regime = MomentRegime::instantaneous;
        return out;
    }
    if (std::isnan(p.s)) throw DomainError("fixation_time_moments: s is NaN");
    const double S = 2.0 * p.ne * std::abs(p.s);
    double h1 = 0.0, h2 = 0.0;
    if (S < kMeanTaylorBelow) {
        h1 = moments::h1_taylor(S);
        out.regime = MomentRegime::taylor;
    } else if (S > kAsymptoticAbove) {
        h1 = moments::h1_asymptotic(S);
        out.regime = MomentRegime::asymptotic;
    } else {
        h1 = moments::h1_quadrature(S);
        out.regime = MomentRegime::quadrature;
    }
    if (S < kSecondTaylorBelow) {
        h2 = moments::h2_taylor(S);
        out.second_regime = MomentRegime::taylor;
    } else if (S > kAsymptoticAbove) {
        h2 = moments::h2_asymptotic(S);
        out.second_regime = MomentRegime::asymptotic;
    } else {
        h2 = moments::h2_quadrature(S);
        out.second_regime = MomentRegime::quadrature;
    }
    const double scale = 2.0 * p.ne * p.memory_time;
    out.mean = scale * h1;
    out.second_moment = scale * scale * h2;
    out.variance = out.second_moment - out.mean * out.mean;
    if (!(out.variance > 0.0))
        throw NumericalError(fmt::format("fixation-time variance not positive at 2Ne|s| = {}", S));
    return out;
}

GammaShape gamma_params(double mean, double variance) {
    if (!(mean > 0.0) || !(variance > 0.0)) throw DomainError("gamma_params: mean and variance must be positive");
    return {mean * mean / variance, mean / variance};
}

GammaShape gamma_params(const FixationMoments& m) { return gamma_params(m.mean, m.variance); }

double origination_rate(double n, double r, double eta, double epsilon, const DiffusionParams& diffusion) {
    if (!(n > 0.0) || !(r > 0.0) || !(eta >= 0.0) || !(epsilon > 0.0) || epsilon / n > 1.0)
        throw DomainError("origination_rate: invalid arguments");
    return n * r * eta * fixation_probability(epsilon / n, diffusion);
}

}  // namespace langchange
