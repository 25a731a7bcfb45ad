#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "langchange/fixation.hpp"

namespace langchange {

// ============================================================================
// Individual-based Wright-Fisher model. Each tick (1/R years) every speaker
// samples a token from its neighbourhood, perceives the innovation with
// probability p = ((1-y)/(1+ys)) eta + (1+s) y/(1+ys), y the neighbour mean,
// and updates x' = (1-eps) x + eps tau. Updates are synchronous.
// ============================================================================

struct SimConfig {
    int n = 100;
    double epsilon = 1.0;
    double s = 0.0;
    double eta = 0.0;
    double r = 1.0;  // ticks per year
    bool homogeneous = true;
    NetworkSpec network;     // used when !homogeneous (n, epsilon taken from above)
    int x0_speakers = 1;     // speakers starting at initial_level
    double initial_level = -1.0;  // < 0 means epsilon
    std::int64_t max_steps = 100'000'000;
    std::uint64_t seed = 1;
    int trajectory_stride = 0;  // 0 = no trajectory
    // With eps < 1 frequencies approach 0/1 geometrically; values within tol
    // of the boundary count as absorbed.
    double absorb_tol = 1e-9;
};

struct SimOutcome {
    bool fixed = false;
    bool lost = false;
    bool truncated = false;
    double time = 0.0;  // years
    std::int64_t steps = 0;
    std::int64_t restarts = 0;  // returns to all-zero while eta > 0
    std::vector<double> trajectory;  // population mean every stride ticks
};

// Dispatches to the innovator-count kernel for homogeneous eps = 1, else the
// per-speaker kernel.
SimOutcome simulate_run(const SimConfig& cfg);
// Per-speaker reference kernel (any eps, networks).
SimOutcome simulate_run_reference(const SimConfig& cfg);

// Undirected simple graph from the configuration model on sampled degrees.
std::vector<std::vector<int>> build_network(const NetworkSpec& spec, std::uint64_t seed);

struct BatchSummary {
    std::int64_t runs = 0;
    std::int64_t fixed = 0;
    std::int64_t lost = 0;
    std::int64_t truncated = 0;
    std::vector<double> fixation_times;  // in run order
    double fixation_fraction() const { return runs ? static_cast<double>(fixed) / runs : 0.0; }
};

// Run i uses seed substream(cfg.seed, first_run + i). OpenMP over runs.
BatchSummary run_batch(const SimConfig& cfg, std::int64_t n_runs, std::int64_t first_run = 0);
BatchSummary run_batch_serial(const SimConfig& cfg, std::int64_t n_runs, std::int64_t first_run = 0);

struct FixationTimeDistribution {
    std::int64_t runs = 0;
    std::int64_t fixations = 0;
    double mean = 0.0;
    double variance = 0.0;
    FixationMoments diffusion;  // Ne = N/eps, T_M = 1/(R eps)
    GammaShape gamma;
    std::vector<double> bin_edges;     // years, size bins+1
    std::vector<std::int64_t> counts;  // per bin
    std::vector<double> gamma_density; // Gamma pdf at bin centres
    bool too_few = false;              // < 100 fixations
};

// Runs batches until target_fixations fixations (or max_runs), then takes
// exactly the first target_fixations fixations in run order.
FixationTimeDistribution fixation_time_distribution(const SimConfig& cfg, std::int64_t target_fixations,
                                                    std::int64_t max_runs, int bins = 50);

struct InterferencePoint {
    double intensity = 0.0;  // I = omega T_F
    double omega = 0.0;      // I / mean fixation time, per year
    std::int64_t runs = 0;         // fixed sweeps
    std::int64_t first_fixed = 0;  // sweeps completed before the next origination
    double probability = 0.0;
    double stderr_ = 0.0;
    double exponential = 0.0;  // e^{-I}
};

struct InterferenceCurve {
    std::vector<InterferencePoint> points;
    double mean_fixation = 0.0;
    double max_abs_deviation = 0.0;  // max |P - e^{-I}|
    bool monotone = true;
};

// Two-change race: n_runs sweeps of a single first innovation (eta = 0);
// the next origination arrives as a Poisson process of rate omega = I / T_F
// from the moment the first is introduced. P is the fraction of fixed sweeps
// that complete before that origination, i.e. without interference.
InterferenceCurve interference_experiment(const SimConfig& cfg, std::span<const double> intensities,
                                          std::int64_t n_runs);

struct ChangeTimeCurve {
    std::vector<double> times;
    std::vector<double> simulated;        // P(first change fixed by t)
    std::vector<double> origin_fixation;  // 1 - L_0(t) with Gamma delays
    std::vector<double> poisson;          // exponential with the simulated mean
    double omega = 0.0;
    double mean_time = 0.0;
    std::int64_t runs = 0;
    std::int64_t completed = 0;
};

// Time to the first fixed innovation starting from x = 0 with eta > 0.
ChangeTimeCurve first_change_curve(const SimConfig& cfg, std::span<const double> times, std::int64_t n_runs);

}  // namespace langchange
