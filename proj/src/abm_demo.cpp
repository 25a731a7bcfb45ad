#include "langchange/abm_demo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <tuple>

#include "langchange/errors.hpp"
#include "langchange/rng.hpp"

namespace langchange {

// ============================================================================
// Parameters
// ============================================================================

namespace {

void require_scale(double mu, double sigma, const char* name, bool allow_zero_mean = false) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError(std::string(name) + ": standard deviation must be >= 0");
    if (!std::isfinite(mu) || mu < 0.0 || (mu == 0.0 && !(allow_zero_mean && sigma == 0.0)))
        throw DomainError(std::string(name) + ": mean must be positive");
}

// Gamma with given mean and standard deviation; sigma = 0 is the point mass.
double draw_gamma(Engine& eng, double mu, double sigma) {
    if (sigma == 0.0 || mu == 0.0) return mu;
    const double shape = mu * mu / (sigma * sigma);
    return std::gamma_distribution<double>(shape, mu / shape)(eng);
}

double draw_beta(Engine& eng, double mu, double sigma) {
    if (sigma == 0.0) return mu;
    const double nu = mu * (1.0 - mu) / (sigma * sigma) - 1.0;
    const double a = std::gamma_distribution<double>(mu * nu, 1.0)(eng);
    const double b = std::gamma_distribution<double>((1.0 - mu) * nu, 1.0)(eng);
    return a / (a + b);
}

double draw_normal(Engine& eng, double mu, double sigma) {
    return sigma == 0.0 ? mu : std::normal_distribution<double>(mu, sigma)(eng);
}

}  // namespace

void DemoParams::validate() const {
    if (!(k_capacity >= 1.0)) throw DomainError("carrying capacity must be >= 1");
    if (!(mu_k > 0.0) || !std::isfinite(mu_k)) throw DomainError("mean offspring must be positive");
    require_scale(mu_b, sigma_b, "parent age at birth");
    require_scale(mu_e, sigma_e, "expansion age");
    require_scale(mu_d, sigma_d, "lifespan");
    if (!(mu_i >= 0.0) || !(mu_i_expanded >= 0.0)) throw DomainError("interlocutor counts must be >= 0");
    if (!(h >= 0.0) || !(w0 > 0.0)) throw DomainError("homophily must be >= 0 and w0 > 0");
    require_scale(mu_r0, sigma_r0, "interaction rate");
    require_scale(mu_r, sigma_r, "rate decrease", true);
    require_scale(mu_theta, sigma_theta, "rate decay time");
    if (!(q > 0.0 && q <= 1.0)) throw DomainError("participation probability must lie in (0,1]");
    if (!(mu_eps > 0.0 && mu_eps <= 1.0) || !(sigma_eps >= 0.0)) throw DomainError("update fraction mean must lie in (0,1]");
    if (sigma_eps > 0.0 && !(sigma_eps * sigma_eps < mu_eps * (1.0 - mu_eps)))
        throw DomainError("update fraction variance too large for a Beta distribution");
    if (!std::isfinite(mu_chi) || !(sigma_chi >= 0.0)) throw DomainError("bias distribution invalid");
}

double DemoTrajectory::mean_population() const {
    if (population.empty()) return 0.0;
    long double sum = 0.0L;
    for (auto n : population) sum += n;
    return static_cast<double>(sum / population.size());
}

// ============================================================================
// Simulation
// ============================================================================

namespace {

struct Ref {
    std::int32_t slot;
    std::uint64_t serial;
};

struct Agent {
    std::uint64_t serial = 0;
    bool alive = false;
    double birth = 0.0, death = 0.0;
    double r0 = 0.0, r_inf = 0.0, theta = 1.0;
    double eps = 0.0, chi = 0.0, x = 0.0;
    double age_key = 0.0;  // exp(h (birth - t_ref)); homophily weights are ratios
    std::vector<Ref> interlocutors;
    std::size_t live_index = 0;

    double rate(double age) const { return r_inf + (r0 - r_inf) * std::exp(-age / theta); }
};

enum class EventType : int { death = 0, birth = 1, expansion = 2, interaction = 3, sample = 4 };

struct Event {
    double time;
    std::uint64_t serial;
    EventType type;
    std::int32_t slot;
    bool operator>(const Event& o) const {
        return std::tie(time, serial, type) > std::tie(o.time, o.serial, o.type);
    }
};

class DemoSim {
public:
    DemoSim(const DemoParams& p, const DemoRunOptions& o) : p_(p), o_(o), eng_(o.seed) {}

    DemoTrajectory run() {
        out_.sample_dt = o_.sample_dt;
        found(-o_.burn_in, o_.initial_x);
        push({0.0, kSampleSerial, EventType::sample, -1});
        while (!queue_.empty()) {
            const Event ev = queue_.top();
            queue_.pop();
            if (ev.type == EventType::sample) {
                if (ev.time == 0.0)
                    for (int s : live_) agents_[s].x = o_.initial_x;
                sample(ev.time);
                const double next = static_cast<double>(out_.times.size()) * o_.sample_dt;
                if (next <= o_.duration * (1.0 + 1e-12)) push({next, kSampleSerial, EventType::sample, -1});
                else break;
                continue;
            }
            Agent& a = agents_[ev.slot];
            if (!a.alive || a.serial != ev.serial) continue;
            switch (ev.type) {
                case EventType::death: die(ev.slot, ev.time); break;
                case EventType::birth: give_birth(ev.slot, ev.time); break;
                case EventType::expansion: expand(ev.slot, ev.time); break;
                case EventType::interaction: interact(ev.slot, ev.time); break;
                default: break;
            }
        }
        return std::move(out_);
    }

private:
    static constexpr std::uint64_t kSampleSerial = std::numeric_limits<std::uint64_t>::max();

    void push(const Event& e) { queue_.push(e); }

    std::int32_t allocate() {
        if (!free_.empty()) {
            auto s = free_.back();
            free_.pop_back();
            return s;
        }
        agents_.emplace_back();
        return static_cast<std::int32_t>(agents_.size() - 1);
    }

    bool alive(const Ref& r) const { return agents_[r.slot].alive && agents_[r.slot].serial == r.serial; }

    // New agent born at time t; parent < 0 for a founder.
    void create(double t, std::int32_t parent, double x) {
        const std::int32_t slot = allocate();
        Agent& a = agents_[slot];
        a = Agent{};
        a.serial = next_serial_++;
        a.alive = true;
        a.birth = t;
        const double life = draw_gamma(eng_, p_.mu_d, p_.sigma_d);
        a.death = t + life;
        a.r0 = draw_gamma(eng_, p_.mu_r0, p_.sigma_r0);
        a.r_inf = a.r0 / (1.0 + draw_gamma(eng_, p_.mu_r, p_.sigma_r));
        a.theta = draw_gamma(eng_, p_.mu_theta, p_.sigma_theta);
        a.eps = draw_beta(eng_, p_.mu_eps, p_.sigma_eps);
        a.chi = draw_normal(eng_, p_.mu_chi, p_.sigma_chi);
        a.x = x;
        if (p_.h * (t - t_ref_) > 300.0) rebase(t);
        a.age_key = std::exp(p_.h * (t - t_ref_));
        if (parent >= 0) {
            const Agent& par = agents_[parent];
            a.interlocutors.push_back({parent, par.serial});
            std::vector<Ref> inherit;
            for (const Ref& r : par.interlocutors)
                if (alive(r) && r.slot != slot) inherit.push_back(r);
            const double pi = inherit.empty() ? 0.0 : std::min(1.0, p_.mu_i / static_cast<double>(inherit.size()));
            for (const Ref& r : inherit)
                if (uniform_open(eng_) < pi) a.interlocutors.push_back(r);
        }
        a.live_index = live_.size();
        live_.push_back(slot);

        push({a.death, a.serial, EventType::death, slot});
        const auto kids = std::geometric_distribution<int>(1.0 / (1.0 + p_.mu_k))(eng_);
        for (int k = 0; k < kids; ++k) {
            double b = 0.0;
            int tries = 0;
            do b = draw_gamma(eng_, p_.mu_b, p_.sigma_b);
            while (b >= life && ++tries < 100);
            if (b >= life) {
                ++out_.dropped_offspring;
                continue;
            }
            push({t + b, a.serial, EventType::birth, slot});
        }
        const double e = draw_gamma(eng_, p_.mu_e, p_.sigma_e);
        if (e < life) push({t + e, a.serial, EventType::expansion, slot});
        schedule_interaction(slot, t);
    }

    void found(double t, double x) {
        if (live_.empty() && agents_.empty()) t_ref_ = t;
        create(t, -1, x);
    }

    void rebase(double t) {
        const double f = std::exp(-p_.h * (t - t_ref_));
        for (int s : live_) agents_[s].age_key *= f;
        t_ref_ = t;
    }

    // Thinning against the (decreasing) intensity at the current age.
    void schedule_interaction(std::int32_t slot, double t) {
        const Agent& a = agents_[slot];
        double age = t - a.birth;
        for (;;) {
            const double bound = a.rate(age);
            age += std::exponential_distribution<double>(bound)(eng_);
            if (a.birth + age >= a.death) return;
            if (uniform_open(eng_) * bound <= a.rate(age)) break;
        }
        push({a.birth + age, a.serial, EventType::interaction, slot});
    }

    void die(std::int32_t slot, double t) {
        Agent& a = agents_[slot];
        const double x = a.x;
        a.alive = false;
        a.interlocutors.clear();
        a.interlocutors.shrink_to_fit();
        const std::size_t i = a.live_index;
        live_[i] = live_.back();
        agents_[live_[i]].live_index = i;
        live_.pop_back();
        free_.push_back(slot);
        if (live_.empty()) {
            ++out_.restarts;
            found(t, x);
        }
    }

    // Above capacity a birth is accepted with probability K/(N mu_k), so an
    // agent leaves K/N offspring on average and N is pulled back towards K.
    void give_birth(std::int32_t slot, double t) {
        const double n = static_cast<double>(live_.size());
        if (n >= p_.k_capacity && uniform_open(eng_) >= p_.k_capacity / (n * p_.mu_k)) {
            ++out_.rejected_births;
            return;
        }
        ++out_.births;
        create(t, slot, agents_[slot].x);
    }

    // Interlocutor n is marked with probability min(1, mu_i' w_n / Z); the
    // marks are drawn by geometric skipping under the bound mu_i' max(w) / Z.
    void expand(std::int32_t slot, double /*t*/) {
        Agent& a = agents_[slot];
        mark_.resize(agents_.size(), 0);
        for (const Ref& r : a.interlocutors)
            if (alive(r)) mark_[r.slot] = 1;
        weights_.resize(live_.size());
        double z = 0.0;
        for (std::size_t i = 0; i < live_.size(); ++i) {
            const std::int32_t n = live_[i];
            double w = 0.0;
            if (n != slot) {
                if (mark_[n]) w = p_.w0;
                else if (p_.h == 0.0) w = 1.0;
                else {
                    const double k = agents_[n].age_key;
                    w = k < a.age_key ? k / a.age_key : a.age_key / k;
                }
            }
            weights_[i] = w;
            z += w;
        }
        for (const Ref& r : a.interlocutors)
            if (alive(r)) mark_[r.slot] = 0;
        a.interlocutors.clear();
        if (!(z > 0.0)) return;
        const double scale = p_.mu_i_expanded / z;
        const double p_max = std::min(1.0, scale * std::max(p_.w0, 1.0));
        if (!(p_max > 0.0)) return;
        std::geometric_distribution<std::int64_t> skip(p_max);
        const auto n_live = static_cast<std::int64_t>(live_.size());
        for (std::int64_t i = p_max < 1.0 ? skip(eng_) : 0; i < n_live; i += 1 + (p_max < 1.0 ? skip(eng_) : 0)) {
            const double p = std::min(1.0, scale * weights_[i]);
            if (p > 0.0 && (p >= p_max || uniform_open(eng_) * p_max < p))
                a.interlocutors.push_back({live_[i], agents_[live_[i]].serial});
        }
    }

    void interact(std::int32_t slot, double t) {
        Agent& a = agents_[slot];
        std::erase_if(a.interlocutors, [&](const Ref& r) { return !alive(r); });
        if (t >= 0.0) {
            if (a.interlocutors.empty()) {
                ++out_.isolated_interactions;
            } else {
                double sum = 0.0;
                int count = 0;
                while (count == 0) {
                    for (const Ref& r : a.interlocutors)
                        if (p_.q >= 1.0 || uniform_open(eng_) < p_.q) {
                            sum += agents_[r.slot].x;
                            ++count;
                        }
                }
                const double y = sum / count;
                const double p = std::clamp((1.0 + a.chi) * y / (1.0 + a.chi * y), 0.0, 1.0);
                const double tau = uniform_open(eng_) < p ? 1.0 : 0.0;
                a.x = (1.0 - a.eps) * a.x + a.eps * tau;
            }
        }
        schedule_interaction(slot, t);
    }

    void sample(double t) {
        long double sum = 0.0L;
        for (int s : live_) sum += agents_[s].x;
        out_.times.push_back(t);
        out_.mean_x.push_back(static_cast<double>(sum / live_.size()));
        out_.population.push_back(static_cast<std::int64_t>(live_.size()));
    }

    const DemoParams& p_;
    const DemoRunOptions& o_;
    Engine eng_;
    DemoTrajectory out_;
    std::vector<Agent> agents_;
    std::vector<std::int32_t> live_, free_;
    std::vector<char> mark_;
    std::vector<double> weights_;
    std::uint64_t next_serial_ = 0;
    double t_ref_ = 0.0;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
};

void validate_options(const DemoRunOptions& o) {
    if (!(o.duration > 0.0) || !std::isfinite(o.duration)) throw DomainError("duration must be positive");
    if (!(o.burn_in >= 0.0) || !std::isfinite(o.burn_in)) throw DomainError("burn-in must be >= 0");
    if (!(o.sample_dt > 0.0)) throw DomainError("sample interval must be positive");
    if (!(o.initial_x >= 0.0 && o.initial_x <= 1.0)) throw DomainError("initial_x must lie in [0,1]");
}

DemoRunOptions replicate_options(const DemoRunOptions& opts, int j, int n) {
    DemoRunOptions o = opts;
    o.initial_x = (j + 0.5) / n;
    o.seed = substream_seed(opts.seed, static_cast<std::uint64_t>(j));
    return o;
}

}  // namespace

DemoTrajectory run_demo(const DemoParams& params, const DemoRunOptions& opts) {
    params.validate();
    validate_options(opts);
    return DemoSim(params, opts).run();
}

std::vector<DemoTrajectory> run_demo_replicates(const DemoParams& params, const DemoRunOptions& opts, int n) {
    params.validate();
    validate_options(opts);
    if (n < 1) throw DomainError("need at least one replicate");
    std::vector<DemoTrajectory> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 1)
    for (int j = 0; j < n; ++j) {
        const DemoRunOptions o = replicate_options(opts, j, n);
        out[j] = DemoSim(params, o).run();
    }
    return out;
}

std::vector<DemoTrajectory> run_demo_replicates_serial(const DemoParams& params, const DemoRunOptions& opts, int n) {
    params.validate();
    validate_options(opts);
    if (n < 1) throw DomainError("need at least one replicate");
    std::vector<DemoTrajectory> out;
    for (int j = 0; j < n; ++j) {
        const DemoRunOptions o = replicate_options(opts, j, n);
        out.push_back(DemoSim(params, o).run());
    }
    return out;
}

// ============================================================================
// Jump moments
// ============================================================================

JumpMoments estimate_jump_moments(std::span<const std::vector<double>> series, double sample_dt, double dt,
                                  int n_bins, std::int64_t min_count) {
    if (!(sample_dt > 0.0) || !(dt > 0.0)) throw DomainError("time steps must be positive");
    const double ratio = dt / sample_dt;
    const auto stride = static_cast<std::size_t>(std::llround(ratio));
    if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio)
        throw DomainError("dt must be a positive multiple of the sampling interval");
    if (n_bins < 1) throw DomainError("need at least one bin");

    JumpMoments jm;
    jm.dt = dt;
    jm.bins.resize(static_cast<std::size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b) {
        jm.bins[b].lo = static_cast<double>(b) / n_bins;
        jm.bins[b].hi = static_cast<double>(b + 1) / n_bins;
    }
    std::vector<long double> sx(n_bins, 0.0L), s1(n_bins, 0.0L), s2(n_bins, 0.0L);
    long double g1 = 0.0L, g2 = 0.0L, gg = 0.0L;
    struct Inc { double g, d1, d2; };
    std::vector<Inc> incs;
    for (const auto& x : series) {
        for (std::size_t i = 0; i + stride < x.size(); i += stride) {
            const double x0 = x[i], d = x[i + stride] - x0;
            if (!(x0 >= 0.0 && x0 <= 1.0)) throw DomainError("trajectory values must lie in [0,1]");
            const int b = std::min(n_bins - 1, static_cast<int>(x0 * n_bins));
            ++jm.bins[b].count;
            sx[b] += x0;
            s1[b] += d;
            s2[b] += static_cast<long double>(d) * d;
            const double g = x0 * (1.0 - x0);
            g1 += static_cast<long double>(g) * d;
            g2 += static_cast<long double>(g) * d * d;
            gg += static_cast<long double>(g) * g;
            incs.push_back({g, d, d * d});
        }
    }
    jm.increments = static_cast<std::int64_t>(incs.size());
    if (gg > 0.0L) {
        jm.a1 = static_cast<double>(g1 / gg);
        jm.a2 = static_cast<double>(g2 / gg);
        long double r1 = 0.0L, r2 = 0.0L;
        for (const auto& c : incs) {
            r1 += std::pow(static_cast<long double>(c.d1) - jm.a1 * c.g, 2);
            r2 += std::pow(static_cast<long double>(c.d2) - jm.a2 * c.g, 2);
        }
        const auto dof = static_cast<long double>(std::max<std::int64_t>(jm.increments - 1, 1));
        jm.a1_stderr = static_cast<double>(std::sqrt(r1 / dof / gg));
        jm.a2_stderr = static_cast<double>(std::sqrt(r2 / dof / gg));
    }

    long double wsum = 0.0L, m1w = 0.0L, m2w = 0.0L;
    for (int b = 0; b < n_bins; ++b) {
        auto& bin = jm.bins[b];
        if (bin.count > 0) {
            bin.x_mean = static_cast<double>(sx[b] / bin.count);
            bin.m1 = static_cast<double>(s1[b] / bin.count);
            bin.m2 = static_cast<double>(s2[b] / bin.count);
        }
        bin.dropped = bin.count < min_count;
        if (bin.dropped) {
            ++jm.dropped_bins;
            continue;
        }
        wsum += bin.count;
        m1w += bin.count * static_cast<long double>(bin.m1);
        m2w += bin.count * static_cast<long double>(bin.m2);
    }
    auto r_squared = [&](auto moment, double a, long double mean) {
        long double res = 0.0L, tot = 0.0L;
        for (const auto& bin : jm.bins) {
            if (bin.dropped) continue;
            const double m = moment(bin);
            res += bin.count * std::pow(static_cast<long double>(m) - a * bin.x_mean * (1.0 - bin.x_mean), 2);
            tot += bin.count * std::pow(static_cast<long double>(m) - mean, 2);
        }
        if (tot == 0.0L) return res == 0.0L ? 1.0 : 0.0;
        return static_cast<double>(1.0L - res / tot);
    };
    if (wsum > 0.0L) {
        jm.r2_first = r_squared([](const JumpMomentBin& b) { return b.m1; }, jm.a1, m1w / wsum);
        jm.r2_second = r_squared([](const JumpMomentBin& b) { return b.m2; }, jm.a2, m2w / wsum);
    }
    return jm;
}

JumpMoments estimate_jump_moments(std::span<const DemoTrajectory> runs, double dt, int n_bins, std::int64_t min_count) {
    if (runs.empty()) throw DomainError("no trajectories");
    std::vector<std::vector<double>> series;
    for (const auto& r : runs) {
        if (r.sample_dt != runs.front().sample_dt) throw DomainError("trajectories use different sampling intervals");
        series.push_back(r.mean_x);
    }
    return estimate_jump_moments(series, runs.front().sample_dt, dt, n_bins, min_count);
}

// ============================================================================
// Naive estimates
// ============================================================================

NaiveEstimates naive_estimates(const DemoParams& params, double n_bar, double dt, std::int64_t samples,
                               std::uint64_t seed) {
    params.validate();
    if (samples < 1) throw DomainError("need at least one sample");
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    Engine eng(seed);
    long double exposure = 0.0L, lifetime = 0.0L;
    for (std::int64_t i = 0; i < samples; ++i) {
        const double d = draw_gamma(eng, params.mu_d, params.sigma_d);
        const double r0 = draw_gamma(eng, params.mu_r0, params.sigma_r0);
        const double r_inf = r0 / (1.0 + draw_gamma(eng, params.mu_r, params.sigma_r));
        const double theta = draw_gamma(eng, params.mu_theta, params.sigma_theta);
        exposure += r_inf * d - (r0 - r_inf) * theta * std::expm1(-d / theta);
        lifetime += d;
    }
    NaiveEstimates e;
    e.r_bar = static_cast<double>(exposure / lifetime);
    e.eps_mean = params.mu_eps;
    e.eps_sq_mean = params.mu_eps * params.mu_eps + params.sigma_eps * params.sigma_eps;
    e.n_bar = n_bar > 0.0 ? n_bar : params.k_capacity;
    e.memory_time = 1.0 / (e.r_bar * e.eps_mean);
    e.s = params.mu_chi;
    e.ne = e.n_bar * e.eps_mean / e.eps_sq_mean;
    e.a1 = dt * e.s / e.memory_time;
    e.a2 = dt / (e.memory_time * e.ne);
    return e;
}

}  // namespace langchange
