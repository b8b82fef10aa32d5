#include <benchmark/benchmark.h>

#include "supctrl/control.hpp"
#include "supctrl/montecarlo.hpp"
#include "supctrl/stopping.hpp"

using namespace supctrl;

namespace {

FundamentalPtr fixture_fs(bool numeric) {
    FundamentalOptions o;
    if (!numeric) return make_fundamental_solutions(DiffusionSpec::gbm(0.01, 0.1, 0.05), o);
    o.mode = SolutionMode::numeric;
    return make_fundamental_solutions(
        DiffusionSpec::generic(Expression::parse("0.01*x"), Expression::parse("0.1*x"), 0.05), o);
}

ControlProblem fixture(bool numeric) {
    return ControlProblem(fixture_fs(numeric), PayoffSpec::power_exp_blend(0.5, 12, 10, 0.1));
}

}  // namespace

static void BM_PsiEvaluation(benchmark::State& state) {
    const auto fs = fixture_fs(state.range(0) != 0);
    double x = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fs->psi(x));
        x = x < 8.0 ? x * 1.01 : 0.5;
    }
}
BENCHMARK(BM_PsiEvaluation)->Arg(0)->Arg(1);

static void BM_NumericFundamentalsBuild(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(fixture_fs(true));
    state.SetLabel("ODE tabulation");
}
BENCHMARK(BM_NumericFundamentalsBuild)->Unit(benchmark::kMillisecond);

static void BM_SolveThreshold(benchmark::State& state) {
    const ControlProblem p = fixture(state.range(0) != 0);
    for (auto _ : state) benchmark::DoNotOptimize(solve_threshold(p).y_star());
}
BENCHMARK(BM_SolveThreshold)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_SupremumIdentity(benchmark::State& state) {
    const ControlProblem p = fixture(false);
    const double y = solve_threshold(p).y_star();
    for (auto _ : state) benchmark::DoNotOptimize(supremum_identity_check(p, y, 1.0).abs_diff);
}
BENCHMARK(BM_SupremumIdentity)->Unit(benchmark::kMicrosecond);

static void BM_GittinsSignal(benchmark::State& state) {
    const ControlProblem p = fixture(false);
    const double y = solve_threshold(p).y_star();
    for (auto _ : state) benchmark::DoNotOptimize(gittins_signal(p, y, FlowMonotonicity::increasing).value);
}
BENCHMARK(BM_GittinsSignal)->Unit(benchmark::kMillisecond);

static void BM_Philox(benchmark::State& state) {
    PhiloxStream s(1, 0);
    for (auto _ : state) benchmark::DoNotOptimize(s());
}
BENCHMARK(BM_Philox);

// Steps per second of the reflected-payoff simulation.
static void BM_ReflectedPayoffSteps(benchmark::State& state) {
    const ControlProblem p = fixture(false);
    const double y = solve_threshold(p).y_star();
    SimConfig c;
    c.n_paths = 200;
    c.dt = 1e-3;
    c.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(simulate_reflected_payoff(p, c, y, 1.0).mean);
    // E[T] = 1/r time units per path.
    state.counters["steps"] = benchmark::Counter(c.n_paths / 0.05 / c.dt, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_ReflectedPayoffSteps)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
