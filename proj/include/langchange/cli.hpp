#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "langchange/abm_demo.hpp"
#include "langchange/data_model.hpp"

namespace langchange::cli {

// ============================================================================
// Command-line front end. Each command resolves its options (config file,
// then flags), runs the wrapped operations and writes its files into out_dir.
// Every output embeds the resolved configuration; nothing depends on the
// worker count or the clock, so reruns are byte-identical.
// ============================================================================

struct CommonOptions {
    std::string data_dir;        // empty = default_data_dir()
    std::string out_dir = ".";
    int jobs = 0;                // 0 = OpenMP default
    std::uint64_t seed = 1;
    int precision_digits = 5;    // Euler inversion
};

struct DemographyOptions {
    std::string regions;  // empty = <data_dir>/regions.tsv
    std::string reference_region = "Iceland";
};

struct BaselineOptions {
    std::vector<Article> articles{Article::definite, Article::indefinite};
    std::int64_t replicates = 1'000'000;  // Monte Carlo GOF; 0 skips it
};

struct GofOptions {
    std::vector<Article> articles{Article::definite, Article::indefinite};
    std::int64_t replicates = 1'000'000;
    double omega_bar = 0.0;  // <= 0: baseline MLE
};

struct SweepOptions {
    std::string model = "child";  // child | usage | network | custom
    std::vector<Article> articles{Article::definite, Article::indefinite};
    std::string sizes = "fitted";  // fitted | published growth model for N-bar
    std::string regions;
    int k = 1;
    // selection grid
    double s_min = 1e-4;
    double s_max = 1e2;  // +inf appends s = inf to a grid ending at 1e2
    int per_decade = 2;
    bool negative = false;
    bool zero = true;
    // structural settings
    double r = 0.04;
    double epsilon = 1.0;
    std::vector<double> nu{1.1, 1.2, 1.3, 1.5, 2.0};
    int z_min = 2;
    std::vector<double> memory_times;  // years; usage curves, or network curves at nu = 1.2
    double r_min = 1e-2, r_max = 1e7;
    int r_per_decade = 1;
    double s = 0.0;  // usage/custom selection strength
    double nu_custom = 0.0;  // custom model: 0 = homogeneous
};

struct WfOptions {
    std::string preset = "fig3a";  // fig3a | fig3b | interference | first-change
    int n = 100;
    double s = 0.0;
    double epsilon = 1.0;
    double eta = 0.0;
    double r = 1.0;
    double nu = 0.0;  // 0 = homogeneous
    int z_min = 2;
    std::int64_t runs = 1'000'000;
    std::int64_t fixations = 10'000;
    int bins = 50;
    std::vector<double> intensities{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
    std::vector<double> times;  // first-change evaluation times (years)
};

struct AbmOptions {
    DemoParams params;
    double duration = 10'000.0;
    double burn_in = 600.0;
    double sample_dt = 10.0;
    double dt = 10.0;
    int replicates = 8;
    int bins = 20;
    std::int64_t min_count = 20;
};

struct ReportOptions {
    int per_decade = 4;
};

void cmd_fit_demography(const CommonOptions& common, const DemographyOptions& opts);
void cmd_baseline(const CommonOptions& common, const BaselineOptions& opts);
void cmd_gof(const CommonOptions& common, const GofOptions& opts);
void cmd_sweep(const CommonOptions& common, const SweepOptions& opts);
void cmd_simulate_wf(const CommonOptions& common, const WfOptions& opts);
void cmd_simulate_abm(const CommonOptions& common, const AbmOptions& opts);
void cmd_report(const CommonOptions& common, const ReportOptions& opts);

// Parses argv and dispatches. Returns 0 on success, 1 on numerical failure,
// 2 on input errors (including bad command lines).
int run(int argc, const char* const* argv);

}  // namespace langchange::cli
