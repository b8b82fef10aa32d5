#include "supctrl/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include <boost/random/normal_distribution.hpp>

#include "supctrl/errors.hpp"

namespace supctrl {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;

constexpr std::uint32_t kNormalStream = 0;
constexpr std::uint32_t kUniformStream = 1;
constexpr std::uint32_t kHorizonStream = 2;

// Crossing probabilities below e^-30 are treated as zero.
constexpr double kBridgeLogCutoff = -30.0;

double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

// Runs body(path_index) for every path in [0, n) on the worker pool. Each
// path writes only its own slot, so the split does not affect the result.
template <class Body>
void parallel_paths(std::size_t n, unsigned workers, Body&& body) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

// Normal increments for one path; the antithetic partner of path 2k+1 reuses
// the stream of 2k with flipped signs.
class PathNoise {
public:
    PathNoise(const SimConfig& cfg, std::uint64_t path)
        : base_(cfg.antithetic ? path / 2 : path),
          sign_(cfg.antithetic && (path % 2 == 1) ? -1.0 : 1.0),
          normals_(cfg.seed, base_, kNormalStream),
          uniforms_(cfg.seed, path, kUniformStream) {}

    double normal() { return sign_ * nd_(normals_); }
    double uniform() { return uniforms_.uniform(); }
    /// Shared by both members of an antithetic pair.
    double horizon(double rate, std::uint64_t seed) const {
        PhiloxStream h(seed, base_, kHorizonStream);
        return -std::log(h.uniform()) / rate;
    }

private:
    std::uint64_t base_;
    double sign_;
    PhiloxStream normals_;
    PhiloxStream uniforms_;
    boost::random::normal_distribution<double> nd_;
};

// Maximum of a Brownian bridge from a to b with variance s2 over the step,
// sampled only when it can exceed `level`.
double bridge_max(double a, double b, double s2, double level, PathNoise& noise) {
    const double hi = std::max(a, b);
    if (level > hi && s2 > 0.0) {
        const double log_p = -2.0 * (level - a) * (level - b) / s2;
        if (log_p < kBridgeLogCutoff) return hi;
    }
    if (!(s2 > 0.0)) return hi;
    const double d = b - a;
    return 0.5 * (a + b + std::sqrt(d * d - 2.0 * s2 * std::log(noise.uniform())));
}

// Probability that a Brownian bridge from a to b (both below y) crosses y.
double bridge_cross(double a, double b, double s2, double y) {
    if (!(s2 > 0.0)) return 0.0;
    const double log_p = -2.0 * (y - a) * (y - b) / s2;
    return log_p < kBridgeLogCutoff ? 0.0 : std::exp(log_p);
}

// Coefficients of the hat-diffusion with inline drift, volatility and kill rate.
struct HatGbm {
    double a, s, rho;
    double drift(double x) const { return a * x; }
    double volatility(double x) const { return s * x; }
    double kill_rate(double) const { return rho; }
};

struct HatGeneric {
    const HatDiffusionSpec* hat;
    double drift(double x) const { return hat->drift(x); }
    double volatility(double x) const { return hat->volatility(x); }
    double kill_rate(double x) const { return hat->kill_rate(x); }
};

template <class Fn>
decltype(auto) visit_hat(const HatDiffusionSpec& hat, Fn&& fn) {
    const DiffusionSpec& base = hat.base();
    if (base.is_gbm()) {
        const auto& g = base.gbm_coefficients();
        return fn(HatGbm{g.mu + g.sigma * g.sigma, g.sigma, base.rate() - g.mu});
    }
    return fn(HatGeneric{&hat});
}

struct KilledOutcome {
    double value;
    double residual_weight;
};

// One path of the killed hat-diffusion from x0 until it leaves (z, y)
// (z = 0 disables the lower barrier). Crossings inside a step are detected
// with the bridge probability at the frozen step volatility.
template <class C>
KilledOutcome killed_path(const C& c, const SimConfig& cfg, std::uint64_t path, double z, double y, double x0,
                          const std::function<double(double)>& g) {
    PathNoise noise(cfg, path);
    const double dt = cfg.dt, sq = std::sqrt(dt);
    const double log_cut = std::log(cfg.weight_cutoff);
    double x = x0, logw = 0.0;
    while (true) {
        const double v = c.volatility(x);
        const double s2 = v * v * dt;
        const double next = x + c.drift(x) * dt + v * sq * noise.normal();
        logw -= c.kill_rate(x) * dt;
        if (next >= y) return {std::exp(logw) * g(y), 0.0};
        if (z > 0.0 && next <= z) return {std::exp(logw) * g(z), 0.0};
        if (cfg.bridge) {
            const double pu = bridge_cross(x, next, s2, y);
            const double pl = z > 0.0 ? bridge_cross(-x, -next, s2, -z) : 0.0;
            if (pu > 0.0 || pl > 0.0) {
                const double u = noise.uniform();
                if (u < pu) return {std::exp(logw) * g(y), 0.0};
                if (u < pu + pl) return {std::exp(logw) * g(z), 0.0};
            }
        }
        if (next <= 0.0) return {0.0, 0.0};
        x = next;
        if (logw < log_cut) return {0.0, std::exp(logw)};
    }
}

}  // namespace

PhiloxStream::PhiloxStream(std::uint64_t seed, std::uint64_t path, std::uint32_t substream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      path_lo_(static_cast<std::uint32_t>(path)),
      path_hi_((static_cast<std::uint32_t>(path >> 32) & 0x0FFFFFFFu) | (substream << 28)) {}

PhiloxStream::Block PhiloxStream::block(Block c, std::array<std::uint32_t, 2> k) {
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kW0;
        k[1] += kW1;
    }
    return c;
}

PhiloxStream::result_type PhiloxStream::operator()() {
    if (pos_ >= 4) {
        buf_ = block({static_cast<std::uint32_t>(index_), static_cast<std::uint32_t>(index_ >> 32), path_lo_, path_hi_},
                     key_);
        ++index_;
        pos_ = 0;
    }
    const std::uint64_t v = (static_cast<std::uint64_t>(buf_[pos_]) << 32) | buf_[pos_ + 1];
    pos_ += 2;
    return v;
}

double PhiloxStream::uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

void SimConfig::validate() const {
    if (n_paths == 0) throw ConfigError("simulation.paths must be positive");
    if (antithetic && n_paths % 2 != 0) throw ConfigError("simulation.paths must be even with antithetic pairs");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("simulation.dt must be positive");
    if (!(discount_cutoff > 0.0 && discount_cutoff < 1.0)) throw ConfigError("discount cutoff must lie in (0, 1)");
    if (!(weight_cutoff > 0.0 && weight_cutoff < 1.0)) throw ConfigError("weight cutoff must lie in (0, 1)");
}

unsigned worker_count(const SimConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    if (const char* env = std::getenv("SUPCTRL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string step_size_warning(const DiffusionSpec& spec, const SimConfig& cfg, double x0) {
    const double diffusive = spec.volatility(x0) * std::sqrt(cfg.dt);
    const double drift = std::fabs(spec.drift(x0)) * cfg.dt;
    if (diffusive <= 0.1 * x0 && drift <= 0.1 * x0) return {};
    return "dt = " + std::to_string(cfg.dt) + " is coarse at x0 = " + std::to_string(x0) +
           ": one step moves the state by more than 10%";
}

McEstimate summarize(const std::vector<double>& values, bool antithetic) {
    std::vector<double> units;
    if (antithetic) {
        units.resize(values.size() / 2);
        for (std::size_t k = 0; k < units.size(); ++k) units[k] = 0.5 * (values[2 * k] + values[2 * k + 1]);
    } else {
        units = values;
    }
    McEstimate e;
    e.n_effective = units.size();
    if (units.empty()) return e;
    e.mean = pairwise_sum(units.data(), units.size()) / units.size();
    std::vector<double> sq(units.size());
    for (std::size_t k = 0; k < units.size(); ++k) sq[k] = (units[k] - e.mean) * (units[k] - e.mean);
    if (units.size() > 1) {
        e.std_error = std::sqrt(pairwise_sum(sq.data(), sq.size()) / (units.size() - 1) / units.size());
    }
    return e;
}

std::vector<double> simulate_supremum_at_exp_time(const DiffusionSpec& spec, const SimConfig& cfg, double x0) {
    cfg.validate();
    if (!spec.contains(x0)) throw DomainError("simulation start must lie inside the state space");
    std::vector<double> out(cfg.n_paths);
    spec.visit_coefficients([&](const auto& c) {
        parallel_paths(cfg.n_paths, worker_count(cfg), [&](std::size_t p) {
            PathNoise noise(cfg, p);
            const double horizon = noise.horizon(spec.rate(), cfg.seed);
            double t = 0.0, x = x0, m = x0;
            while (t < horizon) {
                const double h = std::min(cfg.dt, horizon - t);
                const double v = c.volatility(x);
                const double next = x + c.drift(x) * h + v * std::sqrt(h) * noise.normal();
                m = cfg.bridge ? std::max(m, bridge_max(x, next, v * v * h, m, noise)) : std::max(m, next);
                t += h;
                if (next <= 0.0) break;
                x = next;
            }
            out[p] = m;
        });
    });
    return out;
}

McEstimate estimate_from_samples(const std::vector<double>& samples, const std::function<double(double)>& g,
                                 bool antithetic) {
    std::vector<double> v(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) v[i] = g(samples[i]);
    return summarize(v, antithetic);
}

McEstimate simulate_reflected_payoff(const ControlProblem& problem, const SimConfig& cfg, double y, double x0) {
    cfg.validate();
    const DiffusionSpec& spec = problem.spec();
    if (!spec.contains(x0) || !spec.contains(y)) throw DomainError("reflection level and start must lie inside");
    const double slope = problem.option_value(y).d1;
    const double lump = x0 > y ? problem.option_value(x0).f - problem.option_value(y).f : 0.0;
    const double start = std::min(x0, y);
    const double r = spec.rate();
    const bool discount = cfg.horizon == HorizonPolicy::discount_weight;
    const double t_cut = -std::log(cfg.discount_cutoff) / r;

    std::vector<double> out(cfg.n_paths);
    spec.visit_coefficients([&](const auto& c) {
        parallel_paths(cfg.n_paths, worker_count(cfg), [&](std::size_t p) {
            PathNoise noise(cfg, p);
            const double horizon = discount ? t_cut : noise.horizon(r, cfg.seed);
            const double decay = std::exp(-r * cfg.dt);
            double t = 0.0, x = start, acc = 0.0, w = 1.0;
            while (t < horizon) {
                const double h = std::min(cfg.dt, horizon - t);
                const double v = c.volatility(x);
                double next = x + c.drift(x) * h + v * std::sqrt(h) * noise.normal();
                t += h;
                if (discount) w *= decay;
                if (next > y) {
                    acc += w * (next - y);
                    next = y;
                }
                if (next <= 0.0) break;
                x = next;
            }
            out[p] = lump + slope * acc;
        });
    });
    McEstimate e = summarize(out, cfg.antithetic);
    if (discount) {
        // Strong Markov at the cutoff: the remaining control is worth at most
        // e^{-r t_cut} psi_hat_0(y) / psi_hat_0'(y) per unit of slope.
        const Jet q = problem.fundamentals().psi_hat0(y);
        e.truncation_bound = std::fabs(slope) * cfg.discount_cutoff * q.f / q.d1;
    }
    return e;
}

ReflectedPath record_reflected_path(const DiffusionSpec& spec, const SimConfig& cfg, double y, double x0,
                                    std::uint64_t path, std::size_t steps) {
    if (!spec.contains(x0) || !spec.contains(y)) throw DomainError("reflection level and start must lie inside");
    ReflectedPath rec;
    rec.x_pre.reserve(steps);
    rec.x_post.reserve(steps);
    rec.z.reserve(steps);
    PathNoise noise(cfg, path);
    double x = std::min(x0, y), z = std::max(0.0, x0 - y);
    const double sq = std::sqrt(cfg.dt);
    spec.visit_coefficients([&](const auto& c) {
        for (std::size_t k = 0; k < steps; ++k) {
            const double pre = x + c.drift(x) * cfg.dt + c.volatility(x) * sq * noise.normal();
            const double dz = std::max(0.0, pre - y);
            z += dz;
            x = pre - dz;
            rec.x_pre.push_back(pre);
            rec.x_post.push_back(x);
            rec.z.push_back(z);
            if (x <= 0.0) break;
        }
    });
    return rec;
}

McEstimate simulate_hat_stopping(const ControlProblem& problem, const SimConfig& cfg, double y_stop, double x0) {
    const HatDiffusionSpec hat(problem.kernel().fundamentals_ptr());
    const double payoff = problem.option_value(y_stop).d1;
    if (x0 >= y_stop) {
        McEstimate e;
        e.mean = problem.option_value(x0).d1;
        e.n_effective = cfg.n_paths;
        return e;
    }
    auto g = [payoff](double) { return payoff; };
    return simulate_killed_exit(hat, cfg, 0.0, y_stop, x0, g);
}

McEstimate simulate_killed_exit(const HatDiffusionSpec& hat, const SimConfig& cfg, double z, double y, double x0,
                                const std::function<double(double)>& g) {
    cfg.validate();
    if (!(z >= 0.0 && z < x0 && x0 < y && hat.base().contains(y))) {
        throw DomainError("killed exit needs 0 <= z < x < y < b");
    }
    std::vector<double> out(cfg.n_paths), residual(cfg.n_paths);
    visit_hat(hat, [&](const auto& c) {
        parallel_paths(cfg.n_paths, worker_count(cfg), [&](std::size_t p) {
            const KilledOutcome o = killed_path(c, cfg, p, z, y, x0, g);
            out[p] = o.value;
            residual[p] = o.residual_weight;
        });
    });
    McEstimate e = summarize(out, cfg.antithetic);
    const double bound = std::max(std::fabs(g(y)), z > 0.0 ? std::fabs(g(z)) : 0.0);
    e.truncation_bound = bound * pairwise_sum(residual.data(), residual.size()) / residual.size();
    return e;
}

}  // namespace supctrl
