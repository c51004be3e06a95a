#pragma once
/// @file
/// Monte Carlo probes of the large-deviations behavior: invariant-measure
/// sampling, tail exponents, the Ito energy balance, and tube probabilities
/// around minimum-action paths.
///
/// Everything here is reproducible by construction: work is split into a
/// fixed number of contiguous blocks (independent of how many threads run
/// them), every block or trajectory derives its own RNG stream from the
/// master seed, and partial results merge in block order.  Outputs are
/// byte-identical across thread counts.

#include "burgers_ldp/action.hpp"
#include "burgers_ldp/noise.hpp"
#include "burgers_ldp/solver.hpp"
#include "burgers_ldp/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace burgers_ldp {

/// Worker cap: BURGERS_LDP_THREADS when set (read on every call), otherwise
/// the hardware concurrency, clamped to [1, 256].
std::size_t thread_count();

/// Deterministic parallel reduction.  [0, n_items) is cut into n_blocks fixed
/// contiguous ranges; body(block, first, last, accum) fills one accumulator
/// per block, and merge(total, accum) combines them in block order.  The
/// partition and merge order never depend on the thread count, so results are
/// bit-stable as long as body is deterministic per block.
template <typename Accum, typename BlockBody, typename Merge>
Accum parallel_reduce(std::size_t n_items, Accum zero, BlockBody body, Merge merge,
                      std::size_t n_blocks = 1024) {
    if (n_items == 0) return zero;
    n_blocks = std::min(n_blocks, n_items);
    std::vector<Accum> partial(n_blocks, zero);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto run = [&]() {
        try {
            for (;;) {
                const std::size_t b = next.fetch_add(1);
                if (b >= n_blocks || failed.load()) return;
                const std::size_t first = n_items * b / n_blocks;
                const std::size_t last = n_items * (b + 1) / n_blocks;
                body(b, first, last, partial[b]);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            failed.store(true);
        }
    };

    const std::size_t workers = std::min(thread_count(), n_blocks);
    if (workers <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(run);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    for (auto& p : partial) merge(zero, p);
    return zero;
}

/// Desk-scale experiments resolve fewer modes than the solver default.
inline SolverConfig desk_scale_solver() {
    SolverConfig s;
    s.n_modes = 32;
    return s;
}

/// Shared knobs of the ladder experiments: the epsilon ladder, the delta
/// schedule, the noise family exponents, and the sampling layout.
struct ExperimentConfig {
    std::vector<double> epsilons; ///< strictly decreasing, all positive
    double alpha = 0.0;
    double beta = 1.0;
    DeltaSchedule schedule = DeltaSchedule::standard(0.0, 1.0);
    std::size_t n_modes = 32; ///< desk-scale default, smaller than the solver's
    SolverConfig solver = desk_scale_solver();

    std::size_t n_chains = 8;   ///< independent chains per epsilon
    std::size_t n_traj = 10000; ///< ensemble size for trajectory experiments
    double burn_in = 10.0;
    double horizon = 1000.0; ///< total span per chain, burn-in included
    double spacing = 1.0;    ///< decimation spacing between retained states

    std::vector<double> radius_grid;
    double sigma_small = 0.1; ///< H^{2 sigma} tails; needs 0 < sigma < 1/4 - alpha/2

    std::uint64_t seed = 1;

    void validate() const;
    NoiseSpec noise_for(double epsilon) const;
};

/// Decimated post-burn-in states of several independent chains, stored
/// chain-major (chain c occupies [c*n_per_chain, (c+1)*n_per_chain)).
struct InvariantEnsemble {
    double epsilon = 0.0;
    double burn_in = 0.0;
    double spacing = 0.0;
    std::size_t n_chains = 0;
    std::size_t n_per_chain = 0;
    std::vector<SpectralField> states;
};

/// Long-run samples of the invariant law at cfg.epsilons[eps_index], from
/// n_chains independent chains started at 0.
InvariantEnsemble sample_invariant(const ExperimentConfig& cfg, std::size_t eps_index);

struct MomentEstimate {
    double mean = 0.0;
    double std_err = 0.0; ///< between-chain standard error
    std::size_t n_samples = 0;
};

/// Mean of ||x||_{H^r}^2 over the ensemble, with the SE taken across chains.
MomentEstimate ensemble_moment(const InvariantEnsemble& ens, double sobolev_r);

struct TailRow {
    double epsilon = 0.0;
    double radius = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_hits = 0;
    double p_hat = 0.0;
    double std_err = 0.0;
    double diagnostic = 0.0; ///< -epsilon * log(p_hat); NaN when censored
    bool censored = false;   ///< fewer than 5 hits: p_hat untrustworthy
};

TailRow make_tail_row(double epsilon, double radius, std::size_t n_samples,
                      std::size_t n_hits, double std_err);

struct TailReport {
    std::string quantity;
    std::vector<TailRow> rows;
    std::vector<std::string> notes;
};

/// P(||x||_{H^{2 sigma}} >= R) under the sampled invariant laws, for every
/// (ensemble, R in cfg.radius_grid) pair.
TailReport invariant_tail_report(const std::vector<InvariantEnsemble>& ensembles,
                                 const ExperimentConfig& cfg);

/// Time-average of 1{||u(t)||_H >= R} along one long trajectory per epsilon
/// (the ergodic stand-in for the time-averaged tail probability).
TailReport time_average_tail_report(const ExperimentConfig& cfg);

/// Stationary tails of the linear system, sampled through the exact OU
/// transition at step `spacing` (the chain decorrelates to machine precision
/// at spacing 1, so rows carry plain binomial errors).
struct GaussianTailConfig {
    NoiseSpec base;               ///< epsilon is overridden per ladder rung
    double radius = 0.5;
    std::vector<double> epsilons; ///< descending
    std::vector<std::size_t> n_samples; ///< one entry per epsilon
    double spacing = 1.0;
    std::size_t burn_steps = 16;
    std::uint64_t seed = 9;

    explicit GaussianTailConfig(NoiseSpec base_spec) : base(std::move(base_spec)) {}
};

TailReport gaussian_tail_experiment(const GaussianTailConfig& cfg);

/// MC check of the energy balance
///   E||u(T)||^2 + 2 E int_0^T ||u(s)||_{H^1}^2 ds = ||x||^2 + T eps Tr(Q_N),
/// exact for the truncated system; the estimate carries the trajectory SE.
struct EnergyBalanceResult {
    double lhs_mean = 0.0;
    double lhs_std_err = 0.0;
    double rhs = 0.0;
    std::size_t n_traj = 0;
};

EnergyBalanceResult energy_balance_experiment(const SpectralField& x, const NoiseSpec& noise,
                                              const SolverConfig& solver, double horizon,
                                              std::size_t n_traj, std::uint64_t seed);

/// Tube probabilities around the minimum-action path to phi:
/// P(sup over the step grid of ||u(t) - u*(t)||_H < tube_radius).
struct PathTubeConfig {
    SpectralField phi;
    double horizon = 2.0;
    std::size_t mam_intervals = 256;
    double tube_radius = 0.15;
    std::vector<double> epsilons;    ///< descending
    std::vector<std::size_t> n_traj; ///< one entry per epsilon
    NoiseSpec base;                  ///< epsilon is overridden per rung
    SolverConfig solver;
    MamOptions mam;
    std::uint64_t seed = 17;

    PathTubeConfig(SpectralField target, NoiseSpec base_spec)
        : phi(std::move(target)), base(std::move(base_spec)) {
        solver.n_modes = phi.n_modes();
    }
};

struct PathTubeReport {
    MamResult instanton;
    double action_star = 0.0; ///< action of the minimizer u*
    TailReport tails;
};

/// The exponent of the tube event is the infimum of the action over the tube,
/// which sits below action_star for any positive radius (paths hugging the
/// tube wall cost less than reaching phi exactly); the report notes both.
PathTubeReport ldp_path_check(const PathTubeConfig& cfg);

} // namespace burgers_ldp
