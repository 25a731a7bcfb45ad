#include <algorithm>
#include <cmath>

#include "langchange/errors.hpp"
#include "langchange/fixation.hpp"
#include "langchange/rng.hpp"

namespace langchange {

DegreeMoments degree_moments(std::span<const int> degrees) {
    if (degrees.empty()) throw DomainError("degree sample is empty");
    long double sum = 0.0L, sum2 = 0.0L;
    for (int z : degrees) {
        if (z < 1) throw DomainError("degrees must be >= 1");
        sum += z;
        sum2 += static_cast<long double>(z) * z;
    }
    const auto n = static_cast<long double>(degrees.size());
    return {static_cast<double>(sum / n), static_cast<double>(sum2 / n)};
}

double effective_population_size(const NetworkSpec& spec, const DegreeMoments& m) {
    if (!(spec.epsilon > 0.0 && spec.epsilon <= 1.0)) throw DomainError("epsilon must lie in (0,1]");
    return spec.n / spec.epsilon * m.mean * m.mean / m.mean_square;
}

double effective_population_size(const NetworkSpec& spec, std::span<const int> degrees) {
    return effective_population_size(spec, degree_moments(degrees));
}

// ============================================================================
// Truncated discrete power law
// ============================================================================

namespace {
constexpr int kBodyCutoff = 4096;
}

PowerLawDegreeLaw::PowerLawDegreeLaw(const NetworkSpec& spec)
    : z_min_(spec.z_min),
      z_max_(static_cast<std::int64_t>(spec.n) - 1),
      body_max_(0),
      nu_(spec.nu),
      degenerate_(std::isinf(spec.nu)) {
    if (spec.n < 2.0) throw DomainError("network needs N >= 2");
    if (spec.z_min < 1) throw DomainError("z_min must be >= 1");
    if (!(spec.nu > 0.0)) throw DomainError("degree exponent nu must be positive");
    if (z_min_ > z_max_) throw DomainError("z_min exceeds N-1");
    body_max_ = static_cast<int>(std::min<std::int64_t>(z_max_, std::max(kBodyCutoff, z_min_)));
    if (degenerate_) return;
    cdf_.resize(static_cast<std::size_t>(body_max_ - z_min_ + 1));
    long double acc = 0.0L;
    for (int z = z_min_; z <= body_max_; ++z) {
        acc += std::pow(static_cast<long double>(z), -(1.0L + nu_));
        cdf_[static_cast<std::size_t>(z - z_min_)] = static_cast<double>(acc);
    }
    norm_ = static_cast<double>(acc) + unnormalised_tail(body_max_ + 1);
    for (auto& c : cdf_) c /= norm_;
}

double PowerLawDegreeLaw::unnormalised_tail(std::int64_t z) const {
    if (z > z_max_) return 0.0;
    const double a = 1.0 + nu_;
    const double z0 = static_cast<double>(z), z1 = static_cast<double>(z_max_);
    auto f = [&](double x) { return std::pow(x, -a); };
    auto f1 = [&](double x) { return -a * std::pow(x, -a - 1.0); };
    auto f3 = [&](double x) { return -a * (a + 1.0) * (a + 2.0) * std::pow(x, -a - 3.0); };
    const double integral = (std::pow(z0, 1.0 - a) - std::pow(z1, 1.0 - a)) / (a - 1.0);
    return integral + 0.5 * (f(z0) + f(z1)) + (f1(z1) - f1(z0)) / 12.0 - (f3(z1) - f3(z0)) / 720.0;
}

double PowerLawDegreeLaw::survival(std::int64_t z) const {
    if (z <= z_min_) return 1.0;
    if (z > z_max_) return 0.0;
    if (degenerate_) return 0.0;
    if (z <= body_max_) return 1.0 - cdf_[static_cast<std::size_t>(z - 1 - z_min_)];
    return unnormalised_tail(z) / norm_;
}

double PowerLawDegreeLaw::pmf(std::int64_t z) const {
    if (z < z_min_ || z > z_max_) return 0.0;
    if (degenerate_) return z == z_min_ ? 1.0 : 0.0;
    return std::pow(static_cast<double>(z), -(1.0 + nu_)) / norm_;
}

std::int64_t PowerLawDegreeLaw::sample(double u) const {
    if (degenerate_) return z_min_;
    if (u <= cdf_.back() || body_max_ == z_max_) {
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return z_min_ + (it - cdf_.begin());
    }
    // Smallest z with P(Z > z) <= 1 - u, in (body_max, z_max].
    const double target = 1.0 - u;
    std::int64_t lo = body_max_, hi = z_max_;  // survival(lo+1) > target >= survival(hi+1)
    while (hi - lo > 1) {
        std::int64_t mid = lo + (hi - lo) / 2;
        if (survival(mid + 1) <= target)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

std::vector<int> sample_power_law_degrees(const NetworkSpec& spec, std::uint64_t seed) {
    PowerLawDegreeLaw law(spec);
    Engine eng(splitmix64(seed));
    std::vector<int> out(static_cast<std::size_t>(spec.n));
    for (auto& z : out) z = static_cast<int>(law.sample(uniform_open(eng)));
    return out;
}

DegreeMoments sample_power_law_moments(const NetworkSpec& spec, std::uint64_t seed) {
    PowerLawDegreeLaw law(spec);
    const auto n = static_cast<std::int64_t>(spec.n);
    if (std::isinf(spec.nu)) return {double(spec.z_min), double(spec.z_min) * spec.z_min};
    Engine eng(splitmix64(seed));
    long double sum = 0.0L, sum2 = 0.0L;
    std::int64_t remaining = n;
    double mass_left = 1.0;
    for (int z = law.z_min(); z <= law.body_max() && remaining > 0; ++z) {
        const double p = law.pmf(z);
        double q = mass_left > 0.0 ? std::min(1.0, p / mass_left) : 1.0;
        std::int64_t k = q >= 1.0 ? remaining : std::binomial_distribution<std::int64_t>(remaining, q)(eng);
        sum += static_cast<long double>(k) * z;
        sum2 += static_cast<long double>(k) * z * z;
        remaining -= k;
        mass_left = law.survival(z + 1);
    }
    // Remaining draws are conditioned on Z > body_max.
    const double tail_lo = 1.0 - law.survival(law.body_max() + 1);
    for (std::int64_t i = 0; i < remaining; ++i) {
        const double u = tail_lo + (1.0 - tail_lo) * uniform_open(eng);
        const auto z = static_cast<long double>(law.sample(std::min(u, std::nextafter(1.0, 0.0))));
        sum += z;
        sum2 += z * z;
    }
    return {static_cast<double>(sum / n), static_cast<double>(sum2 / n)};
}

}  // namespace langchange
