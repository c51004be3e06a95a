#include "burgers_ldp/experiments.hpp"
#include "burgers_ldp/noise.hpp"
#include "burgers_ldp/rng.hpp"
#include "burgers_ldp/spectral.hpp"

#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

using namespace burgers_ldp;

namespace {

// Scoped override of the worker cap, restored on destruction.
struct ThreadGuard {
    explicit ThreadGuard(const char* value) {
        const char* old = std::getenv("BURGERS_LDP_THREADS");
        saved_ = old ? old : "";
        had_ = old != nullptr;
        setenv("BURGERS_LDP_THREADS", value, 1);
    }
    ~ThreadGuard() {
        if (had_)
            setenv("BURGERS_LDP_THREADS", saved_.c_str(), 1);
        else
            unsetenv("BURGERS_LDP_THREADS");
    }
    std::string saved_;
    bool had_ = false;
};

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.epsilons = {0.3};
    cfg.n_modes = 8;
    cfg.solver.n_modes = 8;
    cfg.solver.h = 0.05;
    cfg.n_chains = 4;
    cfg.burn_in = 2.0;
    cfg.horizon = 6.0;
    cfg.spacing = 1.0;
    cfg.radius_grid = {0.05, 0.1, 0.2};
    cfg.seed = 5;
    return cfg;
}

} // namespace

TEST_CASE("parallel reduce sums every block exactly once") {
    for (std::size_t n : {0u, 1u, 7u, 1000u}) {
        const auto total = parallel_reduce(
            n, std::uint64_t{0},
            [](std::size_t, std::size_t first, std::size_t last, std::uint64_t& acc) {
                for (std::size_t i = first; i < last; ++i) acc += i;
            },
            [](std::uint64_t& out, const std::uint64_t& part) { out += part; }, 16);
        CHECK(total == static_cast<std::uint64_t>(n) * (n - (n ? 1 : 0)) / 2);
    }
}

TEST_CASE("parallel reduce propagates worker exceptions") {
    CHECK_THROWS_AS(parallel_reduce(
                        100, 0,
                        [](std::size_t b, std::size_t, std::size_t, int&) {
                            if (b == 3) throw std::runtime_error("block 3 failed");
                        },
                        [](int&, const int&) {}, 8),
                    std::runtime_error);
}

TEST_CASE("parallel reduce is bit-stable across thread counts") {
    auto run = [] {
        return parallel_reduce(
            5000, 0.0,
            [](std::size_t b, std::size_t first, std::size_t last, double& acc) {
                NormalSampler xi(99, b);
                for (std::size_t i = first; i < last; ++i) acc += xi() * 1e-3;
            },
            [](double& out, const double& part) { out += part; }, 64);
    };
    ThreadGuard one("1");
    const double serial = run();
    {
        ThreadGuard three("3");
        CHECK(run() == serial);
    }
    {
        ThreadGuard seven("7");
        CHECK(run() == serial);
    }
}

TEST_CASE("experiment config validation") {
    ExperimentConfig cfg = small_config();
    CHECK_NOTHROW(cfg.validate());

    ExperimentConfig bad = cfg;
    bad.epsilons = {0.1, 0.2}; // must descend
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cfg;
    bad.n_chains = 1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cfg;
    bad.spacing = 1.03; // not a step multiple
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cfg;
    bad.burn_in = bad.horizon;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cfg;
    bad.sigma_small = 0.3; // needs sigma < 1/4 - alpha/2
    CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("sigma"), std::invalid_argument);

    const NoiseSpec q = cfg.noise_for(0.3);
    CHECK(q.epsilon == 0.3);
    CHECK(q.n_modes == cfg.n_modes);
    CHECK(q.delta == doctest::Approx(cfg.schedule.delta(0.3)).epsilon(1e-15));
}

TEST_CASE("invariant sampling is deterministic and thread-independent") {
    const ExperimentConfig cfg = small_config();
    ThreadGuard one("1");
    const InvariantEnsemble a = sample_invariant(cfg, 0);
    InvariantEnsemble b;
    {
        ThreadGuard four("4");
        b = sample_invariant(cfg, 0);
    }

    CHECK(a.n_chains == cfg.n_chains);
    CHECK(a.n_per_chain == 4); // samples at burn_in + spacing, ..., horizon
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i)
        for (std::size_t k = 1; k <= cfg.n_modes; ++k)
            CHECK(a.states[i].coeff(k) == b.states[i].coeff(k));

    // Post-burn-in states of a noisy chain should not be stuck at zero.
    double total = 0.0;
    for (const SpectralField& s : a.states) total += h_norm(s);
    CHECK(total > 0.0);
}

TEST_CASE("stationary energy matches the trace identity") {
    // In stationarity the drift and the noise injection balance:
    // E ||u||_{H^1}^2 = eps Tr(Q_N) / 2, nonlinearity included, because the
    // convective term moves no energy.
    ExperimentConfig cfg;
    cfg.epsilons = {0.3};
    cfg.n_modes = 16;
    cfg.solver.n_modes = 16;
    cfg.solver.h = 0.02;
    cfg.n_chains = 6;
    cfg.burn_in = 4.0;
    cfg.horizon = 40.0;
    cfg.spacing = 1.0;
    cfg.radius_grid = {0.1};
    cfg.seed = 11;

    const InvariantEnsemble ens = sample_invariant(cfg, 0);
    const MomentEstimate m = ensemble_moment(ens, 1.0);
    CHECK(m.n_samples == ens.n_chains * ens.n_per_chain);
    CHECK(m.std_err > 0.0);

    const double target = 0.3 * trace_q(cfg.noise_for(0.3)).truncated / 2.0;
    CHECK(std::abs(m.mean - target) <= 3.0 * m.std_err + 0.02 * target);
}

TEST_CASE("independent seeds agree within combined errors") {
    ExperimentConfig cfg;
    cfg.epsilons = {0.25};
    cfg.n_modes = 12;
    cfg.solver.n_modes = 12;
    cfg.solver.h = 0.02;
    cfg.n_chains = 6;
    cfg.burn_in = 4.0;
    cfg.horizon = 44.0;
    cfg.spacing = 1.0;
    cfg.radius_grid = {0.1};

    cfg.seed = 1;
    const MomentEstimate m1 = ensemble_moment(sample_invariant(cfg, 0), 1.0);
    cfg.seed = 2;
    const MomentEstimate m2 = ensemble_moment(sample_invariant(cfg, 0), 1.0);
    const double combined = std::sqrt(m1.std_err * m1.std_err + m2.std_err * m2.std_err);
    CHECK(std::abs(m1.mean - m2.mean) <= 3.0 * combined);
}

TEST_CASE("tail rows carry the censoring rule") {
    const TailRow solid = make_tail_row(0.5, 0.1, 1000, 50, 0.007);
    CHECK(solid.p_hat == doctest::Approx(0.05));
    CHECK_FALSE(solid.censored);
    CHECK(solid.diagnostic == doctest::Approx(-0.5 * std::log(0.05)).epsilon(1e-12));

    const TailRow thin = make_tail_row(0.5, 0.4, 1000, 4, 0.002);
    CHECK(thin.censored);
    CHECK(std::isnan(thin.diagnostic));

    const TailRow empty = make_tail_row(0.5, 0.9, 1000, 0, 0.0);
    CHECK(empty.p_hat == 0.0);
    CHECK(empty.censored);
    CHECK(std::isnan(empty.diagnostic));
}

TEST_CASE("invariant tail report is ordered and internally consistent") {
    ExperimentConfig cfg = small_config();
    cfg.epsilons = {0.4, 0.2};
    cfg.n_chains = 4;
    cfg.horizon = 12.0;

    std::vector<InvariantEnsemble> ensembles;
    for (std::size_t e = 0; e < cfg.epsilons.size(); ++e)
        ensembles.push_back(sample_invariant(cfg, e));
    const TailReport report = invariant_tail_report(ensembles, cfg);

    CHECK_FALSE(report.quantity.empty());
    CHECK_FALSE(report.notes.empty());
    REQUIRE(report.rows.size() == cfg.epsilons.size() * cfg.radius_grid.size());

    std::size_t row = 0;
    for (double eps : cfg.epsilons) {
        double prev = 2.0;
        for (double radius : cfg.radius_grid) {
            const TailRow& r = report.rows[row++];
            CHECK(r.epsilon == eps);
            CHECK(r.radius == radius);
            CHECK(r.p_hat == doctest::Approx(static_cast<double>(r.n_hits) /
                                             static_cast<double>(r.n_samples)));
            CHECK(r.censored == (r.n_hits < 5));
            // Nested events: larger radii can only lose hits.
            CHECK(r.p_hat <= prev);
            prev = r.p_hat;
        }
    }
}

TEST_CASE("time-averaged tails share one sample count per epsilon") {
    ExperimentConfig cfg = small_config();
    cfg.epsilons = {0.4, 0.2};
    cfg.horizon = 30.0;
    const TailReport report = time_average_tail_report(cfg);
    REQUIRE(report.rows.size() == 6);
    for (std::size_t e = 0; e < 2; ++e) {
        const std::size_t base = e * 3;
        CHECK(report.rows[base].n_samples > 0);
        for (std::size_t j = 1; j < 3; ++j) {
            CHECK(report.rows[base + j].n_samples == report.rows[base].n_samples);
            CHECK(report.rows[base + j].p_hat <= report.rows[base + j - 1].p_hat);
        }
    }
}

TEST_CASE("linear tails match the exact stationary law") {
    // One diagonal mode: the stationary law is N(0, eps / (2 pi^2)), so the
    // exceedance probability is erfc(R / sqrt(2 v)) and the estimate must sit
    // within binomial error of it.
    GaussianTailConfig cfg(NoiseSpec(0.0, 1.0, 0.0, 1.0, 1));
    cfg.radius = 0.3;
    cfg.epsilons = {0.5, 0.25};
    cfg.n_samples = {200000, 200000};
    cfg.seed = 3;

    const TailReport report = gaussian_tail_experiment(cfg);
    REQUIRE(report.rows.size() == 2);
    for (const TailRow& r : report.rows) {
        const double v = r.epsilon / (2.0 * kPi * kPi);
        const double p = std::erfc(cfg.radius / std::sqrt(2.0 * v));
        CHECK_FALSE(r.censored);
        CHECK(std::abs(r.p_hat - p) <= 3.0 * r.std_err);
        CHECK(r.diagnostic == doctest::Approx(-r.epsilon * std::log(r.p_hat)).epsilon(1e-12));
    }
    // Rarer events at smaller noise.
    CHECK(report.rows[1].p_hat < report.rows[0].p_hat);
}

TEST_CASE("energy balance closes within Monte Carlo error") {
    const std::size_t n = 16;
    SpectralField x(n);
    x.coeff(1) = 0.4;
    x.coeff(3) = 0.2;
    const NoiseSpec noise(0.0, 1.0, 0.1, 0.2, n);
    SolverConfig solver;
    solver.n_modes = n;
    solver.h = 2e-3;

    const EnergyBalanceResult res = energy_balance_experiment(x, noise, solver, 0.5, 4000, 21);
    CHECK(res.n_traj == 4000);
    CHECK(res.lhs_std_err > 0.0);
    const double x_sq = h_norm(x) * h_norm(x);
    CHECK(res.rhs == doctest::Approx(x_sq + 0.5 * 0.2 * trace_q(noise).truncated).epsilon(1e-12));
    CHECK(std::abs(res.lhs_mean - res.rhs) <= 3.0 * res.lhs_std_err + 0.02 * res.rhs);
}

TEST_CASE("tube probabilities recover the tube exponent") {
    // Single linear mode from 0 toward phi e_1: the cheapest path that stays
    // r-close to the instanton ends at the tube wall, so the exponent is
    // a (phi - r)^2 (coth(aT) + 1)/2 rather than the full action.
    const double phi = 0.3, r = 0.15, horizon = 1.0;
    SpectralField target(1);
    target.coeff(1) = phi;

    PathTubeConfig cfg(target, NoiseSpec(0.0, 1.0, 0.0, 1.0, 1));
    cfg.horizon = horizon;
    cfg.mam_intervals = 128;
    cfg.tube_radius = r;
    cfg.epsilons = {0.1, 0.05};
    cfg.n_traj = {20000, 60000};
    cfg.solver.n_modes = 1;
    cfg.solver.h = 0.05;
    cfg.solver.nonlinearity = false;
    cfg.mam.grad_tol = 1e-10;

    const PathTubeReport report = ldp_path_check(cfg);
    const double a = kPi * kPi;
    const double coth = 1.0 / std::tanh(a * horizon);
    const double full = 0.5 * a * phi * phi * (coth + 1.0);
    const double wall = 0.5 * a * (phi - r) * (phi - r) * (coth + 1.0);

    CHECK(report.instanton.converged);
    CHECK(report.action_star == doctest::Approx(full).epsilon(1e-3));
    CHECK_FALSE(report.tails.notes.empty());
    REQUIRE(report.tails.rows.size() == 2);

    const TailRow& coarse = report.tails.rows[0];
    const TailRow& fine = report.tails.rows[1];
    CHECK_FALSE(coarse.censored);
    CHECK_FALSE(fine.censored);
    CHECK(fine.p_hat < coarse.p_hat);
    // The measured exponent approaches the wall value, not the full action.
    CHECK(fine.diagnostic < report.action_star);
    CHECK(fine.diagnostic == doctest::Approx(wall).epsilon(0.25));
}

TEST_CASE("a wide tube is almost surely hit") {
    SpectralField target(4);
    target.coeff(1) = 0.2;

    PathTubeConfig cfg(target, NoiseSpec(0.0, 1.0, 0.1, 1.0, 4));
    cfg.horizon = 1.0;
    cfg.mam_intervals = 32;
    cfg.tube_radius = 50.0;
    cfg.epsilons = {0.2};
    cfg.n_traj = {500};
    cfg.solver.n_modes = 4;
    cfg.solver.h = 0.02;

    const PathTubeReport report = ldp_path_check(cfg);
    REQUIRE(report.tails.rows.size() == 1);
    CHECK(report.tails.rows[0].p_hat == 1.0);
    CHECK(report.tails.rows[0].diagnostic == 0.0);
    CHECK_FALSE(report.tails.rows[0].censored);
}
