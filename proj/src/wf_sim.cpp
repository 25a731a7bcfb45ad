#include "langchange/wf_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/gamma.hpp>

#include "langchange/errors.hpp"
#include "langchange/likelihood.hpp"
#include "langchange/rng.hpp"

namespace langchange {

namespace {

double perceive(double y, double s, double eta) {
    const double den = 1.0 + y * s;
    return std::clamp(((1.0 - y) / den) * eta + (1.0 + s) * y / den, 0.0, 1.0);
}

std::int64_t binomial(Engine& eng, std::int64_t n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<std::int64_t>(n, p)(eng);
}

void validate(const SimConfig& cfg) {
    if (cfg.n < 2) throw DomainError("simulation needs N >= 2");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0)) throw DomainError("epsilon must lie in (0,1]");
    if (!(cfg.r > 0.0)) throw DomainError("interaction rate must be positive");
    if (cfg.s <= -1.0) throw DomainError("selection strength must exceed -1");
    if (cfg.eta < 0.0 || cfg.eta > 1.0) throw DomainError("eta must lie in [0,1]");
    if (cfg.x0_speakers < 0 || cfg.x0_speakers > cfg.n) throw DomainError("x0_speakers outside [0, N]");
}

double initial_level(const SimConfig& cfg) { return cfg.initial_level < 0.0 ? cfg.epsilon : cfg.initial_level; }

bool use_count_kernel(const SimConfig& cfg) {
    return cfg.homogeneous && cfg.epsilon == 1.0 && initial_level(cfg) == 1.0;
}

// ============================================================================
// Innovator-count kernel (homogeneous, eps = 1): the state is the number k of
// speakers using the innovation; innovators see (k-1)/(N-1), others k/(N-1).
// ============================================================================

SimOutcome count_kernel(const SimConfig& cfg) {
    Engine eng(cfg.seed);
    SimOutcome out;
    const std::int64_t n = cfg.n;
    std::int64_t k = cfg.x0_speakers;
    bool seen_positive = k > 0;
    const double denom = static_cast<double>(n - 1);
    for (std::int64_t step = 0;; ++step) {
        if (cfg.trajectory_stride > 0 && step % cfg.trajectory_stride == 0)
            out.trajectory.push_back(static_cast<double>(k) / n);
        if (k == n) {
            out.fixed = true;
        } else if (k == 0 && cfg.eta == 0.0) {
            out.lost = true;
        } else if (step >= cfg.max_steps) {
            out.truncated = true;
        }
        if (out.fixed || out.lost || out.truncated) {
            out.steps = step;
            out.time = step / cfg.r;
            return out;
        }
        if (k == 0 && seen_positive) {
            ++out.restarts;
            seen_positive = false;
        }
        const double p_in = perceive((k - 1) / denom, cfg.s, cfg.eta);
        const double p_out = perceive(k / denom, cfg.s, cfg.eta);
        k = binomial(eng, k, p_in) + binomial(eng, n - k, p_out);
        seen_positive = seen_positive || k > 0;
    }
}

}  // namespace

// ============================================================================
// Networks
// ============================================================================

std::vector<std::vector<int>> build_network(const NetworkSpec& spec, std::uint64_t seed) {
    auto degrees = sample_power_law_degrees(spec, seed);
    const int n = static_cast<int>(degrees.size());
    Engine eng(substream_seed(seed, 1));
    std::int64_t total = 0;
    for (int z : degrees) total += z;
    if (total % 2) ++degrees[std::uniform_int_distribution<int>(0, n - 1)(eng)];
    std::vector<int> stubs;
    stubs.reserve(static_cast<std::size_t>(total + 1));
    for (int i = 0; i < n; ++i) stubs.insert(stubs.end(), static_cast<std::size_t>(degrees[i]), i);
    std::shuffle(stubs.begin(), stubs.end(), eng);
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
        const int a = stubs[i], b = stubs[i + 1];
        if (a == b) continue;
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (auto& nb : adj) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    // Erased self-loops/multi-edges can isolate a node; attach it somewhere.
    for (int i = 0; i < n; ++i) {
        if (!adj[i].empty()) continue;
        int j = std::uniform_int_distribution<int>(0, n - 2)(eng);
        if (j >= i) ++j;
        adj[i].push_back(j);
        adj[j].insert(std::lower_bound(adj[j].begin(), adj[j].end(), i), i);
    }
    return adj;
}

// ============================================================================
// Per-speaker reference kernel
// ============================================================================

SimOutcome simulate_run_reference(const SimConfig& cfg) {
    validate(cfg);
    Engine eng(cfg.seed);
    const int n = cfg.n;
    std::vector<std::vector<int>> adj;
    if (!cfg.homogeneous) {
        NetworkSpec spec = cfg.network;
        spec.n = n;
        spec.epsilon = cfg.epsilon;
        adj = build_network(spec, substream_seed(cfg.seed, 0xA5A5));
    }
    std::vector<double> x(static_cast<std::size_t>(n), 0.0), next(x.size());
    const double level = initial_level(cfg);
    for (int i = 0; i < cfg.x0_speakers; ++i) x[i] = level;
    const double hi = 1.0 - cfg.absorb_tol, lo = cfg.absorb_tol;
    SimOutcome out;
    bool seen_positive = cfg.x0_speakers > 0 && level > 0.0;
    for (std::int64_t step = 0;; ++step) {
        double sum = 0.0, mn = 1.0, mx = 0.0;
        for (double v : x) {
            sum += v;
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        if (cfg.trajectory_stride > 0 && step % cfg.trajectory_stride == 0) out.trajectory.push_back(sum / n);
        if (mn >= hi) {
            out.fixed = true;
        } else if (mx <= lo && cfg.eta == 0.0) {
            out.lost = true;
        } else if (step >= cfg.max_steps) {
            out.truncated = true;
        }
        if (out.fixed || out.lost || out.truncated) {
            out.steps = step;
            out.time = step / cfg.r;
            return out;
        }
        if (mx <= lo && seen_positive) {
            ++out.restarts;
            seen_positive = false;
        }
        for (int i = 0; i < n; ++i) {
            double y;
            if (cfg.homogeneous) {
                y = (sum - x[i]) / (n - 1);
            } else {
                double acc = 0.0;
                for (int j : adj[i]) acc += x[j];
                y = acc / static_cast<double>(adj[i].size());
            }
            y = std::clamp(y, 0.0, 1.0);
            const double tau = uniform_open(eng) < perceive(y, cfg.s, cfg.eta) ? 1.0 : 0.0;
            next[i] = std::clamp((1.0 - cfg.epsilon) * x[i] + cfg.epsilon * tau, 0.0, 1.0);
            if (next[i] > lo) seen_positive = true;
        }
        x.swap(next);
    }
}

SimOutcome simulate_run(const SimConfig& cfg) {
    validate(cfg);
    return use_count_kernel(cfg) ? count_kernel(cfg) : simulate_run_reference(cfg);
}

// ============================================================================
// Batches
// ============================================================================

namespace {

BatchSummary summarise(const std::vector<SimOutcome>& outs) {
    BatchSummary b;
    b.runs = static_cast<std::int64_t>(outs.size());
    for (const auto& o : outs) {
        if (o.fixed) {
            ++b.fixed;
            b.fixation_times.push_back(o.time);
        }
        b.lost += o.lost;
        b.truncated += o.truncated;
    }
    return b;
}

SimConfig run_config(const SimConfig& cfg, std::int64_t index) {
    SimConfig c = cfg;
    c.seed = substream_seed(cfg.seed, static_cast<std::uint64_t>(index));
    c.trajectory_stride = 0;
    return c;
}

}  // namespace

BatchSummary run_batch_serial(const SimConfig& cfg, std::int64_t n_runs, std::int64_t first_run) {
    validate(cfg);
    std::vector<SimOutcome> outs(static_cast<std::size_t>(n_runs));
    for (std::int64_t i = 0; i < n_runs; ++i) outs[i] = simulate_run(run_config(cfg, first_run + i));
    return summarise(outs);
}

BatchSummary run_batch(const SimConfig& cfg, std::int64_t n_runs, std::int64_t first_run) {
    validate(cfg);
    std::vector<SimOutcome> outs(static_cast<std::size_t>(n_runs));
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < n_runs; ++i) outs[i] = simulate_run(run_config(cfg, first_run + i));
    return summarise(outs);
}

// ============================================================================
// Fixation-time distribution
// ============================================================================

namespace {

double diffusion_ne(const SimConfig& cfg) {
    if (cfg.homogeneous) return cfg.n / cfg.epsilon;
    NetworkSpec spec = cfg.network;
    spec.n = cfg.n;
    spec.epsilon = cfg.epsilon;
    return effective_population_size(spec, sample_power_law_degrees(spec, cfg.seed));
}

}  // namespace

FixationTimeDistribution fixation_time_distribution(const SimConfig& cfg, std::int64_t target_fixations,
                                                    std::int64_t max_runs, int bins) {
    if (cfg.eta != 0.0) throw DomainError("fixation-time distribution needs eta = 0");
    if (bins < 1) throw DomainError("need at least one histogram bin");
    FixationTimeDistribution d;
    std::vector<double> times;
    const DiffusionParams dp{diffusion_ne(cfg), cfg.s, 1.0 / (cfg.r * cfg.epsilon)};
    const double q = fixation_probability(std::min(1.0, initial_level(cfg) * cfg.x0_speakers / cfg.n), dp);
    const std::int64_t batch = std::max<std::int64_t>(
        10000, static_cast<std::int64_t>(std::ceil(1.1 * static_cast<double>(target_fixations) / std::max(q, 1e-9))));
    while (static_cast<std::int64_t>(times.size()) < target_fixations && d.runs < max_runs) {
        const std::int64_t n = std::min(batch, max_runs - d.runs);
        auto b = run_batch(cfg, n, d.runs);
        d.runs += n;
        times.insert(times.end(), b.fixation_times.begin(), b.fixation_times.end());
    }
    if (static_cast<std::int64_t>(times.size()) > target_fixations) times.resize(static_cast<std::size_t>(target_fixations));
    d.fixations = static_cast<std::int64_t>(times.size());
    d.too_few = d.fixations < 100;
    d.diffusion = fixation_time_moments(dp);
    d.gamma = gamma_params(d.diffusion);
    if (d.fixations == 0) return d;
    long double sum = 0.0L, sum2 = 0.0L;
    for (double t : times) {
        sum += t;
        sum2 += static_cast<long double>(t) * t;
    }
    const auto nf = static_cast<long double>(d.fixations);
    d.mean = static_cast<double>(sum / nf);
    d.variance = d.fixations > 1 ? static_cast<double>((sum2 - sum * sum / nf) / (nf - 1.0L)) : 0.0;
    const double top = *std::max_element(times.begin(), times.end());
    const double width = top / bins;
    d.counts.assign(static_cast<std::size_t>(bins), 0);
    for (int i = 0; i <= bins; ++i) d.bin_edges.push_back(width * i);
    for (double t : times) {
        auto bin = width > 0.0 ? static_cast<std::size_t>(t / width) : 0;
        d.counts[std::min(bin, d.counts.size() - 1)]++;
    }
    boost::math::gamma_distribution<double> g(d.gamma.alpha, 1.0 / d.gamma.beta);
    for (int i = 0; i < bins; ++i) d.gamma_density.push_back(boost::math::pdf(g, width * (i + 0.5)));
    return d;
}

// ============================================================================
// Interference experiment
// ============================================================================

InterferenceCurve interference_experiment(const SimConfig& cfg, std::span<const double> intensities,
                                          std::int64_t n_runs) {
    validate(cfg);
    if (cfg.eta != 0.0) throw DomainError("interference experiment seeds the first innovation explicitly; set eta = 0");
    if (n_runs < 1) throw DomainError("need at least one run");
    for (double i : intensities)
        if (!(i >= 0.0) || !std::isfinite(i)) throw DomainError("interference intensities must be finite and >= 0");
    const DiffusionParams dp{diffusion_ne(cfg), cfg.s, 1.0 / (cfg.r * cfg.epsilon)};
    const double mean_fix = fixation_time_moments(dp).mean;

    // Sweeps of the first innovation; fixed sweep j races a unit-exponential
    // clock E_j, rescaled to the next origination time E_j / omega. The same
    // clocks serve every intensity (common random numbers).
    const auto batch = run_batch(cfg, n_runs);
    const auto& times = batch.fixation_times;
    if (times.empty()) throw NumericalError("interference experiment: no fixations among the sweeps");
    std::vector<double> clock(times.size());
    const auto clock_seed = substream_seed(cfg.seed, 0xC10C);
    for (std::size_t j = 0; j < clock.size(); ++j) {
        Engine eng(substream_seed(clock_seed, j));
        clock[j] = std::exponential_distribution<double>(1.0)(eng);
    }

    InterferenceCurve curve;
    curve.mean_fixation = mean_fix;
    const auto nf = static_cast<std::int64_t>(times.size());
    for (double intensity : intensities) {
        InterferencePoint pt;
        pt.intensity = intensity;
        pt.omega = intensity / mean_fix;
        pt.runs = nf;
        for (std::size_t j = 0; j < times.size(); ++j)
            pt.first_fixed += pt.omega == 0.0 || pt.omega * times[j] < clock[j];
        pt.probability = static_cast<double>(pt.first_fixed) / static_cast<double>(nf);
        pt.stderr_ = std::sqrt(pt.probability * (1.0 - pt.probability) / static_cast<double>(nf));
        pt.exponential = std::exp(-intensity);
        curve.max_abs_deviation = std::max(curve.max_abs_deviation, std::abs(pt.probability - pt.exponential));
        curve.points.push_back(pt);
    }
    std::vector<std::size_t> order(curve.points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](auto a, auto b) { return curve.points[a].intensity < curve.points[b].intensity; });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (curve.points[order[i]].probability > curve.points[order[i - 1]].probability) curve.monotone = false;
    return curve;
}

// ============================================================================
// Time to first change
// ============================================================================

ChangeTimeCurve first_change_curve(const SimConfig& cfg, std::span<const double> times, std::int64_t n_runs) {
    if (!(cfg.eta > 0.0)) throw DomainError("first-change curve needs eta > 0");
    SimConfig c = cfg;
    c.x0_speakers = 0;
    auto batch = run_batch(c, n_runs);
    ChangeTimeCurve out;
    out.runs = batch.runs;
    out.completed = batch.fixed;
    out.times.assign(times.begin(), times.end());
    auto sorted = batch.fixation_times;
    std::sort(sorted.begin(), sorted.end());
    long double sum = 0.0L;
    for (double t : sorted) sum += t;
    out.mean_time = sorted.empty() ? 0.0 : static_cast<double>(sum / sorted.size());
    const DiffusionParams dp{diffusion_ne(cfg), cfg.s, 1.0 / (cfg.r * cfg.epsilon)};
    out.omega = origination_rate(cfg.n, cfg.r, cfg.eta, cfg.epsilon, dp);
    const auto mom = fixation_time_moments(dp);
    const auto g = gamma_params(mom);
    const FixationShape shape{g.alpha, g.beta};
    for (double t : out.times) {
        auto below = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
        out.simulated.push_back(static_cast<double>(below) / static_cast<double>(out.runs));
        out.origin_fixation.push_back(
            t > 0.0 ? -std::expm1(invert_likelihood(0, t, std::span<const double>(&out.omega, 1), shape)) : 0.0);
        out.poisson.push_back(out.mean_time > 0.0 ? -std::expm1(-t / out.mean_time) : 0.0);
    }
    return out;
}

}  // namespace langchange
