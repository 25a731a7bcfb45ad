#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace langchange {

// ============================================================================
// Wright-Fisher diffusion: fixation probability and conditional fixation-time
// moments. s = +/-infinity is an exact limit (instantaneous fixation).
// ============================================================================

inline constexpr double kEulerGamma = 0.57721566490153286061;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Regime switch points on S = 2 Ne |s|.
inline constexpr double kMeanTaylorBelow = 1e-3;
inline constexpr double kSecondTaylorBelow = 1e-2;
inline constexpr double kAsymptoticAbove = 500.0;

struct DiffusionParams {
    double ne = 1.0;           // effective population size
    double s = 0.0;            // selection strength, may be +/-inf
    double memory_time = 1.0;  // T_M, years
};

enum class MomentRegime { taylor, quadrature, asymptotic, instantaneous };

const char* regime_name(MomentRegime r);

struct FixationMoments {
    double mean = 0.0;           // years
    double variance = 0.0;       // years^2
    double second_moment = 0.0;  // years^2
    MomentRegime regime = MomentRegime::quadrature;         // branch used for the mean
    MomentRegime second_regime = MomentRegime::quadrature;  // branch used for the second moment
};

// Q(x0) = (1 - exp(-2 Ne s x0)) / (1 - exp(-2 Ne s)); stable for all s.
double fixation_probability(double x0, const DiffusionParams& p);

// Moments conditioned on fixation, single-mutant limit. Symmetric in s.
FixationMoments fixation_time_moments(const DiffusionParams& p);

// Dimensionless pieces, S = 2 Ne |s| >= 0:
//   mean = 2 Ne T_M h1(S),   second moment = 4 Ne^2 T_M^2 h2(S).
namespace moments {
double h1_quadrature(double S);
double h2_quadrature(double S);
double h1_taylor(double S);
double h2_taylor(double S);
double h1_asymptotic(double S);
double h2_asymptotic(double S);
// Kernel F1(x)/(2 Ne T_M) of the first-moment recursion.
double first_moment_kernel(double S, double x);
}  // namespace moments

struct GammaShape {
    double alpha = 0.0;
    double beta = 0.0;  // rate
};

// alpha = mean^2/var, beta = mean/var. Throws DomainError on non-positive input.
GammaShape gamma_params(const FixationMoments& m);
GammaShape gamma_params(double mean, double variance);

// omega = N R eta Q(eps/N).
double origination_rate(double n, double r, double eta, double epsilon, const DiffusionParams& diffusion);

// ============================================================================
// Networks
// ============================================================================

struct NetworkSpec {
    double n = 2.0;         // speakers
    double nu = kInfinity;  // degree exponent; infinity = every degree z_min
    int z_min = 2;
    double epsilon = 1.0;
};

struct DegreeMoments {
    double mean = 0.0;         // z-bar
    double mean_square = 0.0;  // mean of z^2
};

DegreeMoments degree_moments(std::span<const int> degrees);

// Ne = (N/eps) zbar^2 / mean(z^2).
double effective_population_size(const NetworkSpec& spec, std::span<const int> degrees);
double effective_population_size(const NetworkSpec& spec, const DegreeMoments& m);

// Truncated discrete power law p_z ~ z^-(1+nu) on [z_min, N-1]. Exact
// cumulative table up to a body cutoff; beyond it tail sums come from the
// Euler-Maclaurin expansion and inversion is by integer bisection.
class PowerLawDegreeLaw {
public:
    explicit PowerLawDegreeLaw(const NetworkSpec& spec);
    int z_min() const { return z_min_; }
    std::int64_t z_max() const { return z_max_; }
    int body_max() const { return body_max_; }
    double pmf(std::int64_t z) const;
    double survival(std::int64_t z) const;  // P(Z >= z)
    std::int64_t sample(double u) const;    // inverse CDF, u in (0,1)

private:
    double unnormalised_tail(std::int64_t z) const;  // sum_{k=z}^{z_max} k^-(1+nu)

    int z_min_;
    std::int64_t z_max_;
    int body_max_;
    double nu_;
    bool degenerate_;
    double norm_ = 1.0;
    std::vector<double> cdf_;  // body, normalised
};

// N i.i.d. degrees via inverse CDF; deterministic in seed.
std::vector<int> sample_power_law_degrees(const NetworkSpec& spec, std::uint64_t seed);

// Moments of an N-draw sample from the same law without materialising it:
// multinomial body counts by sequential binomials, tail draws individually.
DegreeMoments sample_power_law_moments(const NetworkSpec& spec, std::uint64_t seed);

}  // namespace langchange
