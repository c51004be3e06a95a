#pragma once
// Trace-class diagonal noise family and the exact mode-wise OU sampler.
//
// The covariance is Q = A^alpha (I + delta A^beta)^{-1}, diagonal in the sine
// basis, truncated to N modes, with the driving amplitude scaled by
// sqrt(epsilon).  The admissible window 0 <= alpha < 1/2, 1/2 < beta - alpha <= 1
// keeps the family trace class for every delta > 0 while the small-delta trace
// grows no faster than delta^{-(1+2 alpha)/(2 beta)}.  delta = 0 selects the
// diagonal limit family A^alpha (not trace class when alpha >= 0; only the
// truncated system is simulated in that regime).

#include "burgers_ldp/rng.hpp"
#include "burgers_ldp/spectral.hpp"

#include <cstddef>
#include <vector>

namespace burgers_ldp {

struct NoiseSpec {
    double alpha;
    double beta;
    double delta;
    double epsilon;
    std::size_t n_modes;

    /// Validates the parameter window; throws std::invalid_argument with a
    /// message naming the violated constraint.  epsilon = 0 is the noise-free
    /// limit (the convolution stays at 0).
    NoiseSpec(double alpha, double beta, double delta, double epsilon, std::size_t n_modes);
};

/// Per-mode amplitude of Q^{1/2}:
/// sigma_k = (k pi)^alpha (1 + delta (k pi)^{2 beta})^{-1/2}.
/// k is 1-based and must lie in [1, n_modes].
double sigma_k(const NoiseSpec& q, std::size_t k);

struct TraceResult {
    double truncated;    ///< sum of sigma_k^2 over k <= n_modes
    double tail_bound;   ///< analytic upper bound on the discarded tail; +inf when delta == 0
    double extrapolated; ///< truncated plus a high-accuracy tail estimate (= truncated when delta == 0)
};

/// Trace of Q over the first n_modes modes, with tail certification.
TraceResult trace_q(const NoiseSpec& q);

/// Schedule delta(epsilon) = epsilon^theta.  Admissible when
/// theta (1+2 alpha)/(2 beta) < 1, so that epsilon times the trace blow-up
/// still vanishes as epsilon -> 0.
struct DeltaSchedule {
    double theta;

    DeltaSchedule(double theta, double alpha, double beta);
    static DeltaSchedule standard(double alpha, double beta); ///< theta = beta/(1+2 alpha)
    double delta(double epsilon) const;
};

/// Spec at a ladder point: delta taken from the schedule.
NoiseSpec noise_at(double alpha, double beta, const DeltaSchedule& s, double epsilon,
                   std::size_t n_modes);

/// Exact one-step factors of the mode-wise OU recursion
///   Z_k(t+h) = e^{-a_k h} Z_k(t) + g_k xi_k,
///   g_k^2 = epsilon sigma_k^2 (1 - e^{-2 a_k h}) / (2 a_k),
/// which reproduces the transition law of the stochastic convolution exactly
/// for any h > 0.
struct OuStepCoeffs {
    std::vector<double> decay;
    std::vector<double> gain;
    double h = 0.0;
};

OuStepCoeffs ou_step_coeffs(const NoiseSpec& q, double h);

void ou_exact_step(SpectralField& z, const OuStepCoeffs& c, NormalSampler& xi);

/// Convolution state bundling the field, its clock and its RNG stream.
struct OuState {
    SpectralField z;
    double t = 0.0;
    NormalSampler rng;

    OuState(const NoiseSpec& q, std::uint64_t master_seed, std::uint64_t stream)
        : z(q.n_modes), rng(master_seed, stream) {}
};

/// One exact transition of length h; advances the clock.  Hot loops should
/// cache ou_step_coeffs once and use the overload above instead.
void ou_exact_step(OuState& state, const NoiseSpec& q, double h);

/// Stationary variance epsilon sigma_k^2 / (2 a_k) of mode k.
double ou_stationary_variance(const NoiseSpec& q, std::size_t k);

} // namespace burgers_ldp
