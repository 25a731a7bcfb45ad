#include "langchange/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <omp.h>

#include "langchange/dataset.hpp"
#include "langchange/demography.hpp"
#include "langchange/errors.hpp"
#include "langchange/inference.hpp"
#include "langchange/rng.hpp"
#include "langchange/wf_sim.hpp"

namespace langchange::cli {

using json = nlohmann::ordered_json;

namespace {

// ============================================================================
// Output helpers
// ============================================================================

// JSON has no infinities; non-finite values are written as strings.
json num(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

std::string csv_num(double x) {
    if (std::isfinite(x)) return fmt::format("{:.17g}", x);
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

std::string data_dir(const CommonOptions& c) { return c.data_dir.empty() ? default_data_dir() : c.data_dir; }

std::filesystem::path out_path(const CommonOptions& c, const std::string& name) {
    std::filesystem::create_directories(c.out_dir);
    return std::filesystem::path(c.out_dir) / name;
}

void write_file(const CommonOptions& c, const std::string& name, const std::string& content) {
    const auto path = out_path(c, name);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write output file: " + path.string());
    out << content;
    if (!out) throw ConfigError("failed writing output file: " + path.string());
}

void write_json(const CommonOptions& c, const std::string& name, const json& j) {
    write_file(c, name, j.dump(2) + "\n");
}

// CSV files start with one '#' line holding the resolved configuration.
std::string csv_header(const json& config, const std::string& columns) {
    return "# " + config.dump() + "\n" + columns + "\n";
}

json common_json(const CommonOptions& c, const std::string& command) {
    // jobs and out_dir are deliberately absent: they do not affect results.
    return json{{"command", command},
                {"data_dir", data_dir(c)},
                {"seed", c.seed},
                {"precision_digits", c.precision_digits}};
}

json articles_json(const std::vector<Article>& articles) {
    json a = json::array();
    for (auto x : articles) a.push_back(std::string(article_name(x)));
    return a;
}

json report_json(const FitReport& r) {
    json j{{"scenario", r.scenario},
           {"article", std::string(article_name(r.article))},
           {"parameter", r.parameter_name},
           {"mle", num(r.mle_value)},
           {"log_likelihood", num(r.log_likelihood)},
           {"k", r.k},
           {"n", r.n},
           {"aicc", num(r.aicc)},
           {"reference", r.reference},
           {"delta_aicc", num(r.delta_aicc)}};
    j["p_value"] = r.p_value ? num(*r.p_value) : json(nullptr);
    j["overdispersion_changes"] = r.overdispersion_changes ? num(*r.overdispersion_changes) : json(nullptr);
    j["overdispersion_binary"] = r.overdispersion_binary ? num(*r.overdispersion_binary) : json(nullptr);
    j["overdispersion_method"] = r.overdispersion_method;
    j["at_boundary"] = r.at_boundary;
    j["flags"] = r.flags;
    j["notes"] = r.notes;
    json s = json::object();
    for (const auto& [k, v] : r.settings) s[k] = num(v);
    j["settings"] = s;
    return j;
}

json gof_json(const GofResult& g) {
    return json{{"p_value", num(g.p_value)},
                {"overdispersion_changes", num(g.overdispersion_changes)},
                {"overdispersion_binary", num(g.overdispersion_binary)},
                {"observed_log_likelihood", num(g.observed_log_likelihood)},
                {"replicates", g.n_sim},
                {"seed", g.seed},
                {"excluded_changes", g.excluded_changes},
                {"excluded_binary", g.excluded_binary}};
}

std::string sig3(double x) {
    if (!std::isfinite(x)) return csv_num(x);
    return fmt::format("{:.3g}", x);
}

void apply_jobs(const CommonOptions& c) {
    if (c.jobs < 0) throw DomainError("--jobs must be >= 0");
    if (c.jobs > 0) omp_set_num_threads(c.jobs);
}

// ============================================================================
// Shared pipeline pieces
// ============================================================================

std::string regions_path(const CommonOptions& c, const std::string& given) {
    return given.empty() ? (std::filesystem::path(data_dir(c)) / "regions.tsv").string() : given;
}

DemographyFit fit_demography(const CommonOptions& c, const std::string& regions, const std::string& reference) {
    const std::string path = regions_path(c, regions);
    if (!std::filesystem::exists(path)) throw ConfigError("regions file not found: " + path);
    return fit_population_model(load_regions(path), reference);
}

std::vector<double> mean_sizes(const CommonOptions& c, const Dataset& d, const std::string& mode,
                               const std::string& regions) {
    double n0 = kPublishedN0;
    GrowthCoeffs coeffs = kPublishedGrowthCoeffs;
    if (mode == "fitted") {
        const auto fit = fit_demography(c, regions, "Iceland");
        n0 = fit.n0;
        coeffs = fit.g_coeffs;
    } else if (mode != "published") {
        throw ConfigError("--sizes must be 'fitted' or 'published', got '" + mode + "'");
    }
    std::vector<double> out;
    for (const auto& h : d.histories) out.push_back(tabulated_mean_size(h, n0, coeffs));
    return out;
}

FitReport baseline_with_gof(const Dataset& d, Article a, const InversionConfig& inv, std::int64_t replicates,
                            std::uint64_t seed, std::optional<GofResult>* gof_out = nullptr) {
    FitReport r = fit_poisson_baseline(d.histories, a, d.wals.at(a), inv);
    if (replicates > 0) {
        const auto p = OriginFixationParams::baseline(r.mle_value, d.wals.at(a));
        const auto g = monte_carlo_gof(d.histories, a, std::span<const OriginFixationParams>(&p, 1), replicates,
                                       seed, inv);
        r.p_value = g.p_value;
        r.overdispersion_changes = g.overdispersion_changes;
        r.overdispersion_binary = g.overdispersion_binary;
        r.overdispersion_method = "monte_carlo";
        if (gof_out) *gof_out = g;
    }
    return r;
}

}  // namespace

// ============================================================================
// fit-demography
// ============================================================================

void cmd_fit_demography(const CommonOptions& c, const DemographyOptions& o) {
    apply_jobs(c);
    const std::string path = regions_path(c, o.regions);
    if (!std::filesystem::exists(path)) throw ConfigError("regions file not found: " + path);
    const auto records = load_regions(path);
    const auto fit = fit_population_model(records, o.reference_region);

    json cfg = common_json(c, "fit-demography");
    cfg["regions"] = path;
    cfg["reference_region"] = o.reference_region;
    json w = json::object();
    for (const auto& [k, v] : fit.weights) w[k] = num(v);
    json coeffs = json::array(), published = json::array();
    for (double x : fit.g_coeffs) coeffs.push_back(num(x));
    for (double x : kPublishedGrowthCoeffs) published.push_back(num(x));
    json out{{"config", cfg},
             {"n0", num(fit.n0)},
             {"reference_region", fit.reference_region},
             {"r_squared", num(fit.r_squared)},
             {"residual_quantiles", {num(fit.residual_quantiles.first), num(fit.residual_quantiles.second)}},
             {"g_coeffs", coeffs},
             {"published_g_coeffs", published},
             {"published_n0", num(kPublishedN0)},
             {"weights", w},
             {"records", records.size()}};
    write_json(c, "demography_fit.json", out);

    std::string csv = csv_header(cfg, "region,year,t,size,residual");
    for (std::size_t i = 0; i < records.size(); ++i)
        csv += fmt::format("{},{},{},{},{}\n", records[i].region, csv_num(records[i].year),
                           csv_num(years_since_1bce(records[i].year)), csv_num(records[i].size),
                           csv_num(fit.residuals[i]));
    write_file(c, "residuals.csv", csv);

    fmt::print("N0 = {}  R^2 = {}  residual range [{}, {}]  reference {}\n", sig3(fit.n0), sig3(fit.r_squared),
               sig3(fit.residual_quantiles.first), sig3(fit.residual_quantiles.second), fit.reference_region);
}

// ============================================================================
// baseline / gof
// ============================================================================

void cmd_baseline(const CommonOptions& c, const BaselineOptions& o) {
    apply_jobs(c);
    if (o.replicates < 0) throw DomainError("--replicates must be >= 0");
    const auto d = load_dataset(data_dir(c));
    const auto inv = InversionConfig::for_digits(c.precision_digits);
    json cfg = common_json(c, "baseline");
    cfg["articles"] = articles_json(o.articles);
    cfg["replicates"] = o.replicates;
    json reports = json::array();
    for (Article a : o.articles) {
        const auto r = baseline_with_gof(d, a, inv, o.replicates, c.seed);
        reports.push_back(report_json(r));
        fmt::print("{:<10} omega_bar = {}/yr  lnL = {}  AICc = {}", article_name(a), sig3(r.mle_value),
                   sig3(r.log_likelihood), sig3(r.aicc));
        if (r.p_value)
            fmt::print("  p = {}  O = ({}, {})", sig3(*r.p_value), sig3(*r.overdispersion_changes),
                       sig3(*r.overdispersion_binary));
        fmt::print("\n");
    }
    write_json(c, "fit_report.json", json{{"config", cfg}, {"reports", reports}});
}

void cmd_gof(const CommonOptions& c, const GofOptions& o) {
    apply_jobs(c);
    if (o.replicates < 1) throw DomainError("--replicates must be >= 1");
    const auto d = load_dataset(data_dir(c));
    const auto inv = InversionConfig::for_digits(c.precision_digits);
    for (Article a : o.articles) {
        double omega = o.omega_bar;
        std::string source = "given";
        if (!(omega > 0.0)) {
            omega = fit_poisson_baseline(d.histories, a, d.wals.at(a), inv).mle_value;
            source = "baseline_mle";
        }
        const auto p = OriginFixationParams::baseline(omega, d.wals.at(a));
        const auto g = monte_carlo_gof(d.histories, a, std::span<const OriginFixationParams>(&p, 1), o.replicates,
                                       c.seed, inv);
        json cfg = common_json(c, "gof");
        cfg["article"] = std::string(article_name(a));
        cfg["replicates"] = o.replicates;
        cfg["omega_bar"] = num(omega);
        cfg["omega_bar_source"] = source;
        json out = gof_json(g);
        out = json{{"config", cfg}, {"result", out}};
        write_json(c, fmt::format("gof_{}.json", article_name(a)), out);
        fmt::print("{:<10} p = {}  O_changes = {}  O_binary = {}  ({} replicates)\n", article_name(a),
                   sig3(g.p_value), sig3(g.overdispersion_changes), sig3(g.overdispersion_binary), g.n_sim);
    }
}

// ============================================================================
// sweep
// ============================================================================

namespace {

std::vector<double> logspace(double lo, double hi, int per_decade) {
    if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) throw DomainError("invalid logarithmic grid");
    const double a = std::log10(lo), b = std::log10(hi);
    const int steps = static_cast<int>(std::llround((b - a) * per_decade));
    std::vector<double> out;
    for (int i = 0; i <= steps; ++i) out.push_back(std::pow(10.0, a + (steps ? (b - a) * i / steps : 0.0)));
    return out;
}

std::vector<double> s_grid(const SweepOptions& o) {
    const bool inf = std::isinf(o.s_max) && o.s_max > 0;
    const double top = inf ? 1e2 : o.s_max;
    if (!(o.s_min > 0.0) || !(top >= o.s_min)) throw DomainError("selection grid needs 0 < s_min <= s_max");
    std::vector<double> out;
    const auto mags = logspace(o.s_min, top, o.per_decade);
    if (o.negative)
        for (auto it = mags.rbegin(); it != mags.rend(); ++it)
            if (*it < 1.0) out.push_back(-*it);  // s > -1 only
    if (o.zero) out.push_back(0.0);
    out.insert(out.end(), mags.begin(), mags.end());
    if (inf) out.push_back(kInfinity);
    return out;
}

std::vector<SweepPoint> sweep_grid(const SweepOptions& o, json& grid_cfg) {
    std::vector<SweepPoint> grid;
    auto add = [&](WrightFisherParams wf, std::map<std::string, double> coords) {
        grid.push_back(SweepPoint{wf, std::move(coords)});
    };
    if (o.model == "child") {
        const auto ss = s_grid(o);
        for (double s : ss) {
            WrightFisherParams wf;
            wf.r = o.r;
            wf.epsilon = o.epsilon;
            wf.s = s;
            wf.z_min = o.z_min;
            add(wf, {{"s", s}, {"r", o.r}, {"epsilon", o.epsilon}});
        }
        grid_cfg["r"] = num(o.r);
        grid_cfg["epsilon"] = num(o.epsilon);
    } else if (o.model == "usage") {
        std::vector<double> tms = o.memory_times;
        if (tms.empty()) {
            const double hour = 1.0 / (365.25 * 24.0);
            tms = {25.0, 1.0, 24.0 * hour, hour, hour / 60.0};
        }
        const auto rs = logspace(o.r_min, o.r_max, o.r_per_decade);
        for (double tm : tms)
            for (double r : rs) {
                auto wf = WrightFisherParams::usage(r, tm, o.s);
                wf.z_min = o.z_min;
                add(wf, {{"memory_time", tm}, {"r", r}, {"epsilon", wf.epsilon}, {"s", o.s}});
            }
        json t = json::array();
        for (double x : tms) t.push_back(num(x));
        grid_cfg["memory_times"] = t;
        grid_cfg["r_min"] = num(o.r_min);
        grid_cfg["r_max"] = num(o.r_max);
        grid_cfg["r_per_decade"] = o.r_per_decade;
        grid_cfg["s"] = num(o.s);
    } else if (o.model == "network") {
        const auto ss = s_grid(o);
        if (o.memory_times.empty()) {
            for (double nu : o.nu)
                for (double s : ss) {
                    WrightFisherParams wf;
                    wf.nu = nu;
                    wf.z_min = o.z_min;
                    wf.r = o.r;
                    wf.epsilon = o.epsilon;
                    wf.s = s;
                    add(wf, {{"nu", nu}, {"s", s}, {"r", o.r}, {"epsilon", o.epsilon}});
                }
            json n = json::array();
            for (double x : o.nu) n.push_back(num(x));
            grid_cfg["nu"] = n;
            grid_cfg["r"] = num(o.r);
            grid_cfg["epsilon"] = num(o.epsilon);
        } else {
            // Memory-time curves at nu = 1.2 with eps = 1, so R = 1/T_M.
            for (double tm : o.memory_times)
                for (double s : ss) {
                    WrightFisherParams wf;
                    wf.nu = 1.2;
                    wf.z_min = o.z_min;
                    wf.epsilon = 1.0;
                    wf.r = 1.0 / tm;
                    wf.s = s;
                    add(wf, {{"nu", 1.2}, {"memory_time", tm}, {"s", s}, {"r", wf.r}, {"epsilon", 1.0}});
                }
            json t = json::array();
            for (double x : o.memory_times) t.push_back(num(x));
            grid_cfg["memory_times"] = t;
            grid_cfg["nu"] = num(1.2);
        }
        grid_cfg["z_min"] = o.z_min;
    } else if (o.model == "custom") {
        WrightFisherParams wf;
        wf.nu = o.nu_custom > 0.0 ? o.nu_custom : kInfinity;
        wf.z_min = o.z_min;
        wf.r = o.r;
        wf.epsilon = o.epsilon;
        wf.s = o.s;
        add(wf, {{"nu", wf.nu}, {"s", o.s}, {"r", o.r}, {"epsilon", o.epsilon}});
        grid_cfg["nu"] = num(wf.nu);
        grid_cfg["r"] = num(o.r);
        grid_cfg["epsilon"] = num(o.epsilon);
        grid_cfg["s"] = num(o.s);
        grid_cfg["z_min"] = o.z_min;
    } else {
        throw ConfigError("--model must be child, usage, network or custom; got '" + o.model + "'");
    }
    if (o.model == "child" || o.model == "network") {
        grid_cfg["s_min"] = num(o.s_min);
        grid_cfg["s_max"] = num(o.s_max);
        grid_cfg["per_decade"] = o.per_decade;
        grid_cfg["negative"] = o.negative;
        grid_cfg["zero"] = o.zero;
    }
    return grid;
}

}  // namespace

void cmd_sweep(const CommonOptions& c, const SweepOptions& o) {
    apply_jobs(c);
    if (o.k < 1) throw DomainError("--k must be >= 1");
    json cfg = common_json(c, "sweep");
    cfg["model"] = o.model;
    cfg["sizes"] = o.sizes;
    cfg["k"] = o.k;
    json grid_cfg = json::object();
    const auto grid = sweep_grid(o, grid_cfg);
    cfg["grid"] = grid_cfg;

    const auto d = load_dataset(data_dir(c));
    const auto sizes = mean_sizes(c, d, o.sizes, o.regions);
    const auto inv = InversionConfig::for_digits(c.precision_digits);

    // Coordinates in a fixed column order.
    std::vector<std::string> keys;
    for (const auto& p : grid)
        for (const auto& [k, v] : p.coords)
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);

    for (Article a : o.articles) {
        ScenarioContext ctx;
        ctx.histories = d.histories;
        ctx.article = a;
        ctx.fractions = d.wals.at(a);
        ctx.mean_sizes = sizes;
        ctx.baseline = fit_poisson_baseline(d.histories, a, d.wals.at(a), inv);
        ctx.k = o.k;
        ctx.inversion = inv;
        ctx.seed = c.seed;
        const auto rows = sweep(ctx, grid, o.model);

        json acfg = cfg;
        acfg["article"] = std::string(article_name(a));
        acfg["baseline_aicc"] = num(ctx.baseline.aicc);
        std::string cols;
        for (const auto& k : keys) cols += k + ",";
        cols += "eta_bar,log_likelihood,aicc,delta_aicc,overdispersion_binary,at_boundary,flags,error";
        std::string csv = csv_header(acfg, cols);
        double best = kInfinity;
        for (const auto& row : rows) {
            for (const auto& k : keys) {
                auto it = row.coords.find(k);
                csv += (it == row.coords.end() ? std::string() : csv_num(it->second)) + ",";
            }
            if (row.report) {
                const auto& r = *row.report;
                std::string flags;
                for (const auto& f : r.flags) flags += (flags.empty() ? "" : ";") + f;
                csv += fmt::format("{},{},{},{},{},{},{},\n", csv_num(r.mle_value), csv_num(r.log_likelihood),
                                   csv_num(r.aicc), csv_num(r.delta_aicc),
                                   r.overdispersion_binary ? csv_num(*r.overdispersion_binary) : "",
                                   r.at_boundary ? 1 : 0, flags);
                best = std::min(best, r.delta_aicc);
            } else {
                std::string err = row.error;
                std::replace(err.begin(), err.end(), ',', ';');
                std::replace(err.begin(), err.end(), '\n', ' ');
                csv += ",,,,,,," + err + "\n";
            }
        }
        const auto name = fmt::format("sweep_{}_{}.csv", o.model, article_name(a));
        write_file(c, name, csv);
        fmt::print("{:<10} {} grid points, min delta AICc = {} -> {}\n", article_name(a), rows.size(), sig3(best), name);
    }
}

// ============================================================================
// simulate wf
// ============================================================================

void cmd_simulate_wf(const CommonOptions& c, const WfOptions& o) {
    apply_jobs(c);
    SimConfig sc;
    sc.n = o.n;
    sc.s = o.s;
    sc.epsilon = o.epsilon;
    sc.eta = o.eta;
    sc.r = o.r;
    sc.seed = c.seed;
    sc.homogeneous = !(o.nu > 0.0);
    if (!sc.homogeneous) {
        sc.network.nu = o.nu;
        sc.network.z_min = o.z_min;
    }
    json cfg = common_json(c, "simulate wf");
    cfg["preset"] = o.preset;
    cfg["n"] = o.n;
    cfg["s"] = num(o.s);
    cfg["epsilon"] = num(o.epsilon);
    cfg["eta"] = num(o.eta);
    cfg["r"] = num(o.r);
    cfg["nu"] = sc.homogeneous ? json("homogeneous") : num(o.nu);
    cfg["z_min"] = o.z_min;

    if (o.preset == "fig3a" || o.preset == "fig3b" || o.preset == "histogram") {
        cfg["fixations"] = o.fixations;
        cfg["max_runs"] = o.runs;
        cfg["bins"] = o.bins;
        const auto d = fixation_time_distribution(sc, o.fixations, o.runs, o.bins);
        std::string csv = csv_header(cfg, "bin,lo,hi,count,gamma_density");
        for (std::size_t i = 0; i < d.counts.size(); ++i)
            csv += fmt::format("{},{},{},{},{}\n", i, csv_num(d.bin_edges[i]), csv_num(d.bin_edges[i + 1]),
                               d.counts[i], csv_num(d.gamma_density[i]));
        write_file(c, "fixation_hist.csv", csv);
        json out{{"config", cfg},
                 {"runs", d.runs},
                 {"fixations", d.fixations},
                 {"too_few_fixations", d.too_few},
                 {"simulated_mean", num(d.mean)},
                 {"simulated_variance", num(d.variance)},
                 {"diffusion_mean", num(d.diffusion.mean)},
                 {"diffusion_variance", num(d.diffusion.variance)},
                 {"gamma_alpha", num(d.gamma.alpha)},
                 {"gamma_beta", num(d.gamma.beta)}};
        write_json(c, "fixation_summary.json", out);
        fmt::print("fixations {} of {} runs: mean {} (diffusion {}), variance {} (diffusion {})\n", d.fixations,
                   d.runs, sig3(d.mean), sig3(d.diffusion.mean), sig3(d.variance), sig3(d.diffusion.variance));
    } else if (o.preset == "interference") {
        cfg["runs"] = o.runs;
        json in = json::array();
        for (double x : o.intensities) in.push_back(num(x));
        cfg["intensities"] = in;
        const auto curve = interference_experiment(sc, o.intensities, o.runs);
        std::string csv = csv_header(cfg, "I,P,stderr,exponential,omega,fixed_sweeps,completed");
        for (const auto& p : curve.points)
            csv += fmt::format("{},{},{},{},{},{},{}\n", csv_num(p.intensity), csv_num(p.probability),
                               csv_num(p.stderr_), csv_num(p.exponential), csv_num(p.omega), p.runs, p.first_fixed);
        write_file(c, "interference.csv", csv);
        fmt::print("mean fixation {} ; max |P - exp(-I)| = {} ; monotone {}\n", sig3(curve.mean_fixation),
                   sig3(curve.max_abs_deviation), curve.monotone ? "yes" : "no");
    } else if (o.preset == "first-change") {
        cfg["runs"] = o.runs;
        std::vector<double> times = o.times;
        if (times.empty())
            for (int i = 1; i <= 40; ++i) times.push_back(100.0 * i);
        json tj = json::array();
        for (double t : times) tj.push_back(num(t));
        cfg["times"] = tj;
        const auto curve = first_change_curve(sc, times, o.runs);
        std::string csv = csv_header(cfg, "t,simulated,origin_fixation,poisson");
        for (std::size_t i = 0; i < curve.times.size(); ++i)
            csv += fmt::format("{},{},{},{}\n", csv_num(curve.times[i]), csv_num(curve.simulated[i]),
                               csv_num(curve.origin_fixation[i]), csv_num(curve.poisson[i]));
        write_file(c, "first_change.csv", csv);
        fmt::print("{} runs, {} completed, mean time {}, omega {}\n", curve.runs, curve.completed,
                   sig3(curve.mean_time), sig3(curve.omega));
    } else {
        throw ConfigError("--preset must be fig3a, fig3b, histogram, interference or first-change; got '" +
                          o.preset + "'");
    }
}

// ============================================================================
// simulate abm
// ============================================================================

namespace {

json demo_params_json(const DemoParams& p) {
    return json{{"K", num(p.k_capacity)},     {"mu_k", num(p.mu_k)},
                {"mu_b", num(p.mu_b)},        {"sigma_b", num(p.sigma_b)},
                {"mu_e", num(p.mu_e)},        {"sigma_e", num(p.sigma_e)},
                {"mu_d", num(p.mu_d)},        {"sigma_d", num(p.sigma_d)},
                {"mu_i", num(p.mu_i)},        {"mu_i_expanded", num(p.mu_i_expanded)},
                {"h", num(p.h)},              {"w0", num(p.w0)},
                {"mu_R", num(p.mu_r0)},       {"sigma_R", num(p.sigma_r0)},
                {"mu_r", num(p.mu_r)},        {"sigma_r", num(p.sigma_r)},
                {"mu_theta", num(p.mu_theta)}, {"sigma_theta", num(p.sigma_theta)},
                {"q", num(p.q)},              {"mu_eps", num(p.mu_eps)},
                {"sigma_eps", num(p.sigma_eps)}, {"mu_chi", num(p.mu_chi)},
                {"sigma_chi", num(p.sigma_chi)}};
}

}  // namespace

void cmd_simulate_abm(const CommonOptions& c, const AbmOptions& o) {
    apply_jobs(c);
    DemoRunOptions ro;
    ro.duration = o.duration;
    ro.burn_in = o.burn_in;
    ro.sample_dt = o.sample_dt;
    ro.seed = c.seed;
    json cfg = common_json(c, "simulate abm");
    cfg["params"] = demo_params_json(o.params);
    cfg["duration"] = num(o.duration);
    cfg["burn_in"] = num(o.burn_in);
    cfg["sample_dt"] = num(o.sample_dt);
    cfg["dt"] = num(o.dt);
    cfg["replicates"] = o.replicates;
    cfg["bins"] = o.bins;
    cfg["min_count"] = o.min_count;

    const auto runs = run_demo_replicates(o.params, ro, o.replicates);
    const auto jm = estimate_jump_moments(runs, o.dt, o.bins, o.min_count);
    double n_bar = 0.0;
    for (const auto& r : runs) n_bar += r.mean_population();
    n_bar /= static_cast<double>(runs.size());
    const auto naive = naive_estimates(o.params, n_bar, o.dt, 200'000, substream_seed(c.seed, 0x4E41));

    std::string traj = csv_header(cfg, "replicate,t,mean_x,population");
    for (std::size_t j = 0; j < runs.size(); ++j)
        for (std::size_t i = 0; i < runs[j].times.size(); ++i)
            traj += fmt::format("{},{},{},{}\n", j, csv_num(runs[j].times[i]), csv_num(runs[j].mean_x[i]),
                                runs[j].population[i]);
    write_file(c, "demo_trajectory.csv", traj);

    std::string csv = csv_header(cfg, "x_lo,x_hi,x_mean,count,m1,m2,fit_m1,fit_m2,naive_m1,naive_m2,dropped");
    for (const auto& b : jm.bins) {
        const double g = b.x_mean * (1.0 - b.x_mean);
        csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", csv_num(b.lo), csv_num(b.hi), csv_num(b.x_mean),
                           b.count, csv_num(b.m1), csv_num(b.m2), csv_num(jm.a1 * g), csv_num(jm.a2 * g),
                           csv_num(naive.a1 * g), csv_num(naive.a2 * g), b.dropped ? 1 : 0);
    }
    write_file(c, "jump_moments.csv", csv);

    std::int64_t restarts = 0, isolated = 0, dropped = 0;
    for (const auto& r : runs) {
        restarts += r.restarts;
        isolated += r.isolated_interactions;
        dropped += r.dropped_offspring;
    }
    json naive_j{{"r_bar", num(naive.r_bar)},
                 {"eps_mean", num(naive.eps_mean)},
                 {"eps_sq_mean", num(naive.eps_sq_mean)},
                 {"n_bar", num(naive.n_bar)},
                 {"memory_time", num(naive.memory_time)},
                 {"s", num(naive.s)},
                 {"ne", num(naive.ne)},
                 {"a1", num(naive.a1)},
                 {"a2", num(naive.a2)}};
    json out{{"config", cfg},
             {"increments", jm.increments},
             {"dropped_bins", jm.dropped_bins},
             {"a1", num(jm.a1)},
             {"a1_stderr", num(jm.a1_stderr)},
             {"a2", num(jm.a2)},
             {"a2_stderr", num(jm.a2_stderr)},
             {"r2_first", num(jm.r2_first)},
             {"r2_second", num(jm.r2_second)},
             {"naive", naive_j},
             {"restarts", restarts},
             {"isolated_interactions", isolated},
             {"dropped_offspring", dropped}};
    write_json(c, "abm_summary.json", out);
    fmt::print("A1 = {} +- {} (naive {})  A2 = {} +- {} (naive {}), R^2 second = {}\n", sig3(jm.a1),
               sig3(jm.a1_stderr), sig3(naive.a1), sig3(jm.a2), sig3(jm.a2_stderr), sig3(naive.a2),
               sig3(jm.r2_second));
}

// ============================================================================
// report
// ============================================================================

void cmd_report(const CommonOptions& c, const ReportOptions& o) {
    apply_jobs(c);
    if (o.per_decade < 1) throw DomainError("--per-decade must be >= 1");
    const auto d = load_dataset(data_dir(c));
    json cfg = common_json(c, "report");
    cfg["per_decade"] = o.per_decade;

    std::string rates = csv_header(cfg, "language,article,changes,time,rate");
    std::map<Article, std::vector<double>> by_article;
    for (const auto& h : d.histories)
        for (Article a : {Article::definite, Article::indefinite}) {
            const int m = changes_count(h.record(a));
            const double t = h.observation_time();
            const double r = rate_estimate(m, t);
            by_article[a].push_back(r);
            rates += fmt::format("{},{},{},{},{}\n", h.name, article_name(a), m, csv_num(t), csv_num(r));
        }
    write_file(c, "rates.csv", rates);

    // Histogram on log10(rate) with per_decade bins per decade.
    double lo = kInfinity, hi = -kInfinity;
    for (const auto& [a, v] : by_article)
        for (double r : v) {
            lo = std::min(lo, std::log10(r));
            hi = std::max(hi, std::log10(r));
        }
    const double step = 1.0 / o.per_decade;
    const double start = std::floor(lo / step) * step;
    const int nb = std::max(1, static_cast<int>(std::ceil((hi - start) / step + 1e-12)));
    std::string hist = csv_header(cfg, "log10_lo,log10_hi,definite,indefinite");
    for (int b = 0; b < nb; ++b) {
        const double a0 = start + b * step, a1 = a0 + step;
        std::array<int, 2> counts{0, 0};
        for (Article a : {Article::definite, Article::indefinite})
            for (double r : by_article[a]) {
                const double x = std::log10(r);
                const int idx = std::min(nb - 1, static_cast<int>(std::floor((x - start) / step)));
                if (idx == b) ++counts[a == Article::definite ? 0 : 1];
            }
        hist += fmt::format("{},{},{},{}\n", csv_num(a0), csv_num(a1), counts[0], counts[1]);
    }
    write_file(c, "rate_histogram.csv", hist);
    for (Article a : {Article::definite, Article::indefinite})
        fmt::print("{:<10} median rate {}/yr over {} languages\n", article_name(a),
                   sig3(quantile(by_article[a], 0.5)), by_article[a].size());
}

// ============================================================================
// Argument parsing
// ============================================================================

namespace {

std::vector<Article> parse_articles(const std::string& s) {
    if (s == "both") return {Article::definite, Article::indefinite};
    if (s == "definite") return {Article::definite};
    if (s == "indefinite") return {Article::indefinite};
    throw ConfigError("--article must be definite, indefinite or both; got '" + s + "'");
}

struct BiasPreset {
    double mu, sigma;
};

BiasPreset bias_preset(const std::string& s) {
    if (s == "i") return {0.0, 0.005};
    if (s == "ii") return {0.005, 0.0};
    if (s == "iii") return {0.005, 0.005};
    throw ConfigError("--bias must be i, ii or iii; got '" + s + "'");
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Language-change origin-fixation toolkit"};
    app.set_config("--config", "", "TOML/INI configuration file; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    CommonOptions common;
    app.add_option("--data-dir", common.data_dir, "Dataset directory (default: $LANGCHANGE_DATA_DIR or built-in)");
    app.add_option("--out", common.out_dir, "Output directory")->capture_default_str();
    app.add_option("--jobs", common.jobs, "Worker threads (0 = OpenMP default); results do not depend on it");
    app.add_option("--seed", common.seed, "Master random seed")->capture_default_str();
    app.add_option("--digits", common.precision_digits, "Euler inversion precision digits")->capture_default_str();

    DemographyOptions demo;
    auto* fd = app.add_subcommand("fit-demography", "Fit the regional population model");
    fd->add_option("--regions", demo.regions, "Regional population table");
    fd->add_option("--reference-region", demo.reference_region, "Region with weight 1")->capture_default_str();

    std::string article = "both";
    BaselineOptions base;
    auto* bl = app.add_subcommand("baseline", "Fit the Poisson baseline (with Monte Carlo goodness of fit)");
    bl->add_option("--article", article, "definite | indefinite | both")->capture_default_str();
    bl->add_option("--replicates", base.replicates, "GOF replicates (0 skips)")->capture_default_str();

    GofOptions gof;
    auto* gf = app.add_subcommand("gof", "Monte Carlo goodness of fit of the Poisson model");
    gf->add_option("--article", article, "definite | indefinite | both")->capture_default_str();
    gf->add_option("--replicates", gof.replicates, "Replicates")->capture_default_str();
    gf->add_option("--omega-bar", gof.omega_bar, "Rate to test (default: baseline MLE)");

    SweepOptions sw;
    std::string s_max = "100";
    auto* sp = app.add_subcommand("sweep", "Delta AICc sweeps of Wright-Fisher scenarios");
    sp->add_option("--model", sw.model, "child | usage | network | custom")->capture_default_str();
    sp->add_option("--article", article, "definite | indefinite | both")->capture_default_str();
    sp->add_option("--sizes", sw.sizes, "fitted | published growth model for mean sizes")->capture_default_str();
    sp->add_option("--regions", sw.regions, "Regional population table (fitted sizes)");
    sp->add_option("--k", sw.k, "Free parameters per scenario")->capture_default_str();
    sp->add_option("--s-min", sw.s_min, "Smallest positive selection strength")->capture_default_str();
    sp->add_option("--s-max", s_max, "Largest selection strength; 'inf' appends s = inf")->capture_default_str();
    sp->add_option("--per-decade", sw.per_decade, "Selection grid points per decade")->capture_default_str();
    sp->add_flag("--negative", sw.negative, "Include negative selection strengths");
    sp->add_option("--r", sw.r, "Interactions per year")->capture_default_str();
    sp->add_option("--epsilon", sw.epsilon, "Update fraction")->capture_default_str();
    sp->add_option("--nu", sw.nu, "Degree exponents (network model)")->capture_default_str();
    sp->add_option("--z-min", sw.z_min, "Minimum degree")->capture_default_str();
    sp->add_option("--memory-times", sw.memory_times, "Memory times in years (usage; network at nu = 1.2)");
    sp->add_option("--r-min", sw.r_min, "Smallest interaction rate (usage)")->capture_default_str();
    sp->add_option("--r-max", sw.r_max, "Largest interaction rate (usage)")->capture_default_str();
    sp->add_option("--r-per-decade", sw.r_per_decade, "Rate grid points per decade (usage)")->capture_default_str();
    sp->add_option("--s", sw.s, "Selection strength (usage, custom)")->capture_default_str();
    sp->add_option("--nu-custom", sw.nu_custom, "Degree exponent for the custom model (0 = homogeneous)");

    auto* sim = app.add_subcommand("simulate", "Forward simulations");
    sim->require_subcommand(1);
    WfOptions wf;
    auto* wfc = sim->add_subcommand("wf", "Wright-Fisher simulations");
    wfc->add_option("--preset", wf.preset, "fig3a | fig3b | histogram | interference | first-change")
        ->capture_default_str();
    auto* o_n = wfc->add_option("--n", wf.n, "Speakers");
    auto* o_s = wfc->add_option("--s", wf.s, "Selection strength");
    wfc->add_option("--epsilon", wf.epsilon, "Update fraction");
    auto* o_eta = wfc->add_option("--eta", wf.eta, "Innovation probability per interaction");
    wfc->add_option("--r", wf.r, "Interactions per year");
    wfc->add_option("--nu", wf.nu, "Degree exponent (0 = homogeneous)");
    wfc->add_option("--z-min", wf.z_min, "Minimum degree");
    auto* o_runs = wfc->add_option("--runs", wf.runs, "Runs (maximum for histograms)");
    wfc->add_option("--fixations", wf.fixations, "Fixations for the histogram");
    wfc->add_option("--bins", wf.bins, "Histogram bins");
    wfc->add_option("--intensities", wf.intensities, "Interference intensities I");
    wfc->add_option("--times", wf.times, "Evaluation times for first-change curves");

    AbmOptions abm;
    std::string bias = "ii";
    auto* ab = sim->add_subcommand("abm", "Demonstration agent-based model and jump moments");
    ab->add_option("--bias", bias, "Bias configuration i | ii | iii")->capture_default_str();
    auto* o_mu_chi = ab->add_option("--mu-chi", abm.params.mu_chi, "Mean bias (overrides --bias)");
    auto* o_sigma_chi = ab->add_option("--sigma-chi", abm.params.sigma_chi, "Bias spread (overrides --bias)");
    ab->add_option("--capacity", abm.params.k_capacity, "Carrying capacity K")->capture_default_str();
    ab->add_option("--duration", abm.duration, "Years of linguistic dynamics per replicate")->capture_default_str();
    ab->add_option("--burn-in", abm.burn_in, "Years of demography before t = 0")->capture_default_str();
    ab->add_option("--sample-dt", abm.sample_dt, "Sampling interval (years)")->capture_default_str();
    ab->add_option("--dt", abm.dt, "Jump-moment interval (years)")->capture_default_str();
    ab->add_option("--replicates", abm.replicates, "Replicates")->capture_default_str();
    ab->add_option("--bins", abm.bins, "Frequency bins")->capture_default_str();

    ReportOptions rep;
    auto* rp = app.add_subcommand("report", "Per-language rate estimates (m+1)/t and their histogram");
    rp->add_option("--per-decade", rep.per_decade, "Histogram bins per decade")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fd->parsed()) {
            cmd_fit_demography(common, demo);
        } else if (bl->parsed()) {
            base.articles = parse_articles(article);
            cmd_baseline(common, base);
        } else if (gf->parsed()) {
            gof.articles = parse_articles(article);
            cmd_gof(common, gof);
        } else if (sp->parsed()) {
            sw.articles = parse_articles(article);
            if (s_max == "inf" || s_max == "+inf" || s_max == "infinity") {
                sw.s_max = kInfinity;
            } else {
                try {
                    std::size_t pos = 0;
                    sw.s_max = std::stod(s_max, &pos);
                    if (pos != s_max.size()) throw std::invalid_argument(s_max);
                } catch (const std::exception&) {
                    throw ConfigError("--s-max must be a number or 'inf'; got '" + s_max + "'");
                }
            }
            cmd_sweep(common, sw);
        } else if (wfc->parsed()) {
            WfOptions w = wf;
            if (w.preset == "fig3b") {
                if (!o_n->count()) w.n = 150;
                if (!o_s->count()) w.s = 0.01;
            } else if (w.preset == "first-change") {
                if (!o_eta->count()) w.eta = 1e-3;
                if (!o_runs->count()) w.runs = 20'000;
            } else if (w.preset == "fig3a" || w.preset == "histogram") {
                if (!o_runs->count()) w.runs = 10'000'000;
            }
            cmd_simulate_wf(common, w);
        } else if (ab->parsed()) {
            const auto b = bias_preset(bias);
            if (!o_mu_chi->count()) abm.params.mu_chi = b.mu;
            if (!o_sigma_chi->count()) abm.params.sigma_chi = b.sigma;
            cmd_simulate_abm(common, abm);
        } else if (rp->parsed()) {
            cmd_report(common, rep);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace langchange::cli
