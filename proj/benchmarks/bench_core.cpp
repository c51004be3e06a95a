// Microbenchmarks for the hot paths: transforms, the nonlinearity, solver
// steps, and action evaluation.

#include "burgers_ldp/action.hpp"
#include "burgers_ldp/noise.hpp"
#include "burgers_ldp/solver.hpp"
#include "burgers_ldp/spectral.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace burgers_ldp;

SpectralField random_field(std::size_t n, std::uint64_t seed) {
    SpectralField u(n);
    NormalSampler xi(seed, 0);
    for (std::size_t k = 1; k <= n; ++k)
        u.coeff(k) = xi() / static_cast<double>(k * k);
    return u;
}

void bm_to_grid(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const TransformPlan plan(n, TransformPlan::default_dealias_m(n));
    const SpectralField u = random_field(n, 7);
    GridField g(plan.m_intervals());
    for (auto _ : state) {
        plan.to_grid(u, g);
        benchmark::DoNotOptimize(g.v.data());
    }
}
BENCHMARK(bm_to_grid)->Arg(32)->Arg(64)->Arg(128);

void bm_nonlinearity(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const TransformPlan plan(n, TransformPlan::default_dealias_m(n));
    const SpectralField u = random_field(n, 7);
    GridField scratch(plan.m_intervals());
    SpectralField out(n);
    for (auto _ : state) {
        burgers_nonlinearity(u, plan, scratch, out);
        benchmark::DoNotOptimize(out.c.data());
    }
}
BENCHMARK(bm_nonlinearity)->Arg(32)->Arg(64)->Arg(128);

void bm_ou_step(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const NoiseSpec q(0.25, 1.0, 0.01, 0.1, n);
    const OuStepCoeffs coeffs = ou_step_coeffs(q, 1e-3);
    NormalSampler xi(11, 0);
    SpectralField z(n);
    for (auto _ : state) {
        ou_exact_step(z, coeffs, xi);
        benchmark::DoNotOptimize(z.c.data());
    }
}
BENCHMARK(bm_ou_step)->Arg(32)->Arg(128);

void bm_solver_step(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    SolverConfig cfg;
    cfg.n_modes = n;
    const StepPlan plan(cfg);
    StepWorkspace ws = make_step_workspace(plan);
    SpectralField y = random_field(n, 3);
    const SpectralField z = random_field(n, 5);
    double t = 0.0;
    for (auto _ : state) {
        t += cfg.h;
        step_y(plan, ws, y, &z, nullptr, t);
        benchmark::DoNotOptimize(y.c.data());
    }
}
BENCHMARK(bm_solver_step)->Arg(32)->Arg(64);

void bm_action_gradient(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    ActionProblem prob;
    prob.n_modes = n;
    prob.n_intervals = 64;
    prob.horizon = 1.0;
    prob.start = SpectralField(n);
    prob.target = random_field(n, 13);
    ActionEvaluator eval(prob);

    TrajectoryPath path;
    path.t0 = 0.0;
    path.dt = prob.h();
    for (std::size_t i = 0; i <= prob.n_intervals; ++i) {
        SpectralField s(n);
        const double w = static_cast<double>(i) / static_cast<double>(prob.n_intervals);
        for (std::size_t k = 0; k < n; ++k) s.c[k] = w * prob.target.c[k];
        path.states.push_back(s);
    }
    std::vector<SpectralField> grad;
    for (auto _ : state) {
        benchmark::DoNotOptimize(eval.value_and_gradient(path, grad));
    }
}
BENCHMARK(bm_action_gradient)->Arg(8)->Arg(16);

} // namespace

BENCHMARK_MAIN();
