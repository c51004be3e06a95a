#pragma once
/// @file
/// Discrete Freidlin-Wentzell action and its minimization.
///
/// A path u_0, ..., u_M on [0, T], h = T/M, is scored through the midpoint
/// residuals
///   H_i = (u_{i+1} - u_i)/h + A ubar_i - B(ubar_i),   ubar_i = (u_i + u_{i+1})/2,
/// by
///   S[u] = (h/2) sum_{i<M} sum_k w_k H_{ik}^2.
/// The weight w_k = (k pi)^{-2 alpha} inverts the noise symbol A^alpha, so S
/// is half the squared L^2-in-time norm of the control f with
/// f_{ik} = sqrt(w_k) H_{ik}; supplying a NoiseSpec switches to w_k =
/// 1/sigma_k^2 for the regularized family.
///
/// The minimizer over the interior states (endpoints pinned) is computed by
/// L-BFGS.  The search is preconditioned with the exact inverse of the
/// quadratic-part Hessian, which is tridiagonal in each mode; this removes
/// the (M/pi)^2 spread between the stiffest and softest path directions that
/// otherwise stalls first-order methods.

#include "burgers_ldp/noise.hpp"
#include "burgers_ldp/solver.hpp"
#include "burgers_ldp/spectral.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace burgers_ldp {

struct ActionProblem {
    std::size_t n_modes = 0;
    std::size_t n_intervals = 0; ///< M time intervals, h = horizon / M; >= 2 to
                                 ///< evaluate, >= 8 to minimize
    double horizon = 0.0;
    double alpha = 0.0;
    bool nonlinear = true;
    /// When set, w_k = 1/sigma_k^2 from this spec (epsilon plays no role);
    /// otherwise w_k = (k pi)^{-2 alpha}.
    std::optional<NoiseSpec> weight_noise;
    SpectralField start;
    SpectralField target;
    std::size_t dealias_m = 0; ///< 0 selects the default 3N/2 + 1 grid

    double h() const { return horizon / static_cast<double>(n_intervals); }
    void validate() const;
};

/// w_k for k = 1..n_modes under the problem's weighting.
std::vector<double> mode_weights(const ActionProblem& p);

/// Scores paths on a fixed problem, reusing transform plans and scratch
/// between calls.  Not thread-safe; give each thread its own evaluator.
class ActionEvaluator {
public:
    explicit ActionEvaluator(ActionProblem p);

    const ActionProblem& problem() const { return p_; }
    const std::vector<double>& weights() const { return w_; }

    /// S[u] for a full path u_0..u_M (endpoints are the path's own; the
    /// problem's start/target are not consulted).
    double value(const TrajectoryPath& path);

    /// Fused S[u] and dS/du_j for the interior states j = 1..M-1.
    double value_and_gradient(const TrajectoryPath& path, std::vector<SpectralField>& grad);

    /// Control realizing the path: f_{ik} = sqrt(w_k) H_{ik} at the interval
    /// midpoints, so S[u] = (h/2) sum_i ||f_i||^2.  Uses the residuals of the
    /// last value/value_and_gradient call's path if `path` is omitted.
    TrajectoryPath control(const TrajectoryPath& path);

private:
    double residuals(const TrajectoryPath& path, bool with_adjoint_inputs);
    void check_path(const TrajectoryPath& path) const;

    ActionProblem p_;
    double h_;
    std::vector<double> w_;
    std::vector<double> sqrt_w_;
    TransformPlan plan_;
    std::vector<SpectralField> wh_;   // w o H_i per interval
    std::vector<GridField> ubar_pts_; // midpoint states on the grid (nonlinear runs)
    GridField grid_scratch_;
    SpectralField ubar_, bterm_, adj_prev_, adj_cur_;
};

struct MamOptions {
    double grad_tol = 1e-8; ///< stop when ||g||_2 <= grad_tol
    std::size_t max_iter = 5000;
    std::size_t lbfgs_memory = 8;
    bool verbose = false; ///< per-iteration line on stderr
};

struct MamResult {
    TrajectoryPath path;    ///< minimizing path including endpoints
    TrajectoryPath control; ///< midpoint controls of the minimizer
    double action = 0.0;
    double grad_norm = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Minimizes the action with endpoints pinned at problem.start/target,
/// starting from straight-line interpolation between them.
MamResult mam_minimize(const ActionProblem& p, const MamOptions& opt = {});

/// Same, warm-started from `initial` (full path on the problem grid).
MamResult mam_minimize(const ActionProblem& p, const TrajectoryPath& initial,
                       const MamOptions& opt);

struct QuasipotentialOptions {
    double t0 = 1.0;           ///< first horizon; rung j uses T = t0 * 2^j
    std::size_t max_rungs = 6;
    double rel_tol = 1e-3;     ///< accept once doubling T improves less than this
    std::size_t m_per_unit_t = 128;
    std::size_t m_cap = 4096;  ///< ceiling on intervals per rung
    MamOptions mam;
};

struct QuasipotentialResult {
    double value = 0.0;
    double horizon = 0.0;       ///< horizon of the accepted rung
    std::vector<double> ladder; ///< minimum found on each rung
    MamResult best;
    /// True when the ladder settled below rel_tol; false when the rung budget
    /// ran out first.  The horizon-doubling ladder is a heuristic for the
    /// T -> infinity infimum either way.
    bool converged = false;
};

/// inf_T min-action from base.start to base.target, approximated by horizon
/// doubling with warm starts.  base.horizon / base.n_intervals are ignored;
/// the ladder supplies them.
QuasipotentialResult quasipotential(const ActionProblem& base,
                                    const QuasipotentialOptions& opt = {});

} // namespace burgers_ldp
