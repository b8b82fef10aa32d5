#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "supctrl/control.hpp"
#include "supctrl/stopping.hpp"

namespace supctrl {

/// Philox4x32-10 counter-based generator. Each (seed, path, substream)
/// triple owns an independent stream, so results do not depend on how
/// paths are spread over workers.
class PhiloxStream {
public:
    using result_type = std::uint64_t;

    PhiloxStream(std::uint64_t seed, std::uint64_t path, std::uint32_t substream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    /// Uniform on the open interval (0, 1).
    double uniform();

    using Block = std::array<std::uint32_t, 4>;
    static Block block(Block counter, std::array<std::uint32_t, 2> key);

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t path_lo_, path_hi_;
    std::uint64_t index_ = 0;
    Block buf_{};
    int pos_ = 4;
};

enum class HorizonPolicy {
    exponential_time,  ///< T ~ Exp(r) drawn once per path, payoff undiscounted up to T
    discount_weight,   ///< e^{-rt} weights along the path up to a cutoff time
};

struct SimConfig {
    std::size_t n_paths = 100000;
    double dt = 1e-3;
    HorizonPolicy horizon = HorizonPolicy::exponential_time;
    std::uint64_t seed = 20240611;
    bool antithetic = true;
    /// Brownian-bridge correction of the running maximum and of barrier
    /// crossings within a step.
    bool bridge = true;
    /// Discount-weight mode stops once e^{-rt} falls below this.
    double discount_cutoff = 1e-7;
    /// Kill-weight cutoff for the hat-diffusion.
    double weight_cutoff = 1e-8;
    /// 0 picks SUPCTRL_THREADS or the hardware concurrency.
    unsigned threads = 0;

    void validate() const;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_effective = 0;
    /// Upper bound on the bias from truncated paths (hat stopping and
    /// discount-weight runs); 0 otherwise.
    double truncation_bound = 0.0;
};

/// Mean and standard error of per-path values; antithetic pairs (2k, 2k+1)
/// are averaged first. Pairwise summation keeps the result independent of
/// accumulation order.
McEstimate summarize(const std::vector<double>& values, bool antithetic);

/// Returns, per path, the running maximum of X up to T ~ Exp(r) (or up to
/// absorption at 0 when 0 is attainable).
std::vector<double> simulate_supremum_at_exp_time(const DiffusionSpec& spec, const SimConfig& cfg, double x0);

/// E[g(M_T)] from supremum samples.
McEstimate estimate_from_samples(const std::vector<double>& samples, const std::function<double(double)>& g,
                                 bool antithetic);

/// Discounted payoff of downward Skorokhod reflection at y started from x0.
McEstimate simulate_reflected_payoff(const ControlProblem& problem, const SimConfig& cfg, double y, double x0);

/// One reflected path, recorded step by step for invariant checks.
struct ReflectedPath {
    std::vector<double> x_pre;   // state before projection
    std::vector<double> x_post;  // state after projection
    std::vector<double> z;       // cumulative control
};
ReflectedPath record_reflected_path(const DiffusionSpec& spec, const SimConfig& cfg, double y, double x0,
                                    std::uint64_t path, std::size_t steps);

/// E_x0[e^{-int rho} A'(X^_tau)], tau the first passage of X^ above y_stop.
McEstimate simulate_hat_stopping(const ControlProblem& problem, const SimConfig& cfg, double y_stop, double x0);

/// E_x0[e^{-int rho} g(X^_tau)] for the first exit of X^ from (z, y).
McEstimate simulate_killed_exit(const HatDiffusionSpec& hat, const SimConfig& cfg, double z, double y, double x0,
                                const std::function<double(double)>& g);

/// Non-empty when sigma(x0) sqrt(dt) or |mu(x0)| dt exceeds a tenth of x0.
std::string step_size_warning(const DiffusionSpec& spec, const SimConfig& cfg, double x0);

/// Worker count used for a run: cfg.threads, else SUPCTRL_THREADS, else the
/// hardware concurrency.
unsigned worker_count(const SimConfig& cfg);

}  // namespace supctrl
