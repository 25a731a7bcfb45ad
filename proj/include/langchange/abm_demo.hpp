#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace langchange {

// ============================================================================
// Demonstration agent-based model: birth and death, inherited and expanding
// interlocutor networks, age-dependent interaction rates, heterogeneous
// update fractions eps ~ Beta and biases chi ~ Normal. Used to show that the
// population-mean innovation frequency has Wright-Fisher jump moments.
// ============================================================================

struct DemoParams {
    double k_capacity = 1000.0;     // K
    double mu_k = 2.0;              // mean offspring (geometric, support k >= 0)
    double mu_b = 30.0, sigma_b = 8.0;   // parent age at birth, years
    double mu_e = 18.0, sigma_e = 4.0;   // age at network expansion, years
    double mu_d = 60.0, sigma_d = 12.0;  // lifespan, years
    double mu_i = 3.0;              // inherited parent interlocutors
    double mu_i_expanded = 10.0;    // interlocutors after expansion
    double h = 0.2;                 // age homophily, 1/years
    double w0 = 1.0;                // weight of existing interlocutors at expansion
    double mu_r0 = 1.0, sigma_r0 = 0.1;  // interaction rate at birth, 1/years
    double mu_r = 10.0, sigma_r = 10.0;  // rate decrease, R_inf = R_0/(1+r)
    double mu_theta = 20.0, sigma_theta = 10.0;  // rate decay time, years
    double q = 0.5;                 // participation probability
    double mu_eps = 0.15, sigma_eps = 0.15;
    double mu_chi = 0.005, sigma_chi = 0.0;

    void validate() const;  // throws DomainError
};

struct DemoRunOptions {
    double duration = 5000.0;  // years of linguistic dynamics
    double burn_in = 600.0;    // years of demography only, before t = 0
    double sample_dt = 10.0;
    double initial_x = 0.5;    // every agent alive at t = 0
    std::uint64_t seed = 1;
};

struct DemoTrajectory {
    double sample_dt = 0.0;
    std::vector<double> times;       // 0, dt, 2 dt, ...
    std::vector<double> mean_x;      // population mean frequency
    std::vector<std::int64_t> population;
    std::int64_t restarts = 0;             // extinctions followed by a new founder
    std::int64_t isolated_interactions = 0;  // skipped: no living interlocutor
    std::int64_t dropped_offspring = 0;      // birth age resampling exhausted
    std::int64_t births = 0;
    std::int64_t rejected_births = 0;
    double mean_population() const;
};

// Event-driven simulation; ties ordered by (time, agent serial, event type).
// Linguistic interactions update x only from t = 0, when every living agent
// is set to initial_x.
DemoTrajectory run_demo(const DemoParams& params, const DemoRunOptions& opts);

// Replicate j starts from initial_x = (j + 0.5)/n and uses seed
// substream(opts.seed, j). OpenMP over replicates.
std::vector<DemoTrajectory> run_demo_replicates(const DemoParams& params, const DemoRunOptions& opts, int n);
std::vector<DemoTrajectory> run_demo_replicates_serial(const DemoParams& params, const DemoRunOptions& opts, int n);

// ============================================================================
// Jump moments
// ============================================================================

struct JumpMomentBin {
    double lo = 0.0, hi = 0.0;
    double x_mean = 0.0;
    std::int64_t count = 0;
    double m1 = 0.0;  // mean dx
    double m2 = 0.0;  // mean dx^2
    bool dropped = false;  // fewer than min_count increments
};

struct JumpMoments {
    double dt = 0.0;
    std::vector<JumpMomentBin> bins;
    std::int64_t increments = 0;
    std::int64_t dropped_bins = 0;
    // Least-squares amplitudes of A x(1-x) over all increments.
    double a1 = 0.0, a1_stderr = 0.0;
    double a2 = 0.0, a2_stderr = 0.0;
    // Count-weighted R^2 of the parabola against the retained bin means.
    double r2_first = 0.0, r2_second = 0.0;
};

// Non-overlapping increments over dt (a multiple of sample_dt), binned by
// the starting value.
JumpMoments estimate_jump_moments(std::span<const std::vector<double>> series, double sample_dt, double dt,
                                  int n_bins = 20, std::int64_t min_count = 20);
JumpMoments estimate_jump_moments(std::span<const DemoTrajectory> runs, double dt, int n_bins = 20,
                                  std::int64_t min_count = 20);

// ============================================================================
// Naive parameter estimates
// ============================================================================

struct NaiveEstimates {
    double r_bar = 0.0;        // lifetime-averaged interaction rate, 1/years
    double eps_mean = 0.0;
    double eps_sq_mean = 0.0;
    double n_bar = 0.0;
    double memory_time = 0.0;  // T_M = 1/(R eps)
    double s = 0.0;            // mean chi
    double ne = 0.0;           // N eps / <eps^2>
    double a1 = 0.0;           // dt s / T_M
    double a2 = 0.0;           // dt / (T_M Ne)
};

// R_bar = E[int_0^d R(a) da] / E[d] by Monte Carlo over lifetimes and rate
// parameters; n_bar <= 0 means K.
NaiveEstimates naive_estimates(const DemoParams& params, double n_bar = 0.0, double dt = 10.0,
                               std::int64_t samples = 200'000, std::uint64_t seed = 1);

}  // namespace langchange
