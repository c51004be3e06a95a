#pragma once
// Time integration of the stochastic Burgers equation and its deterministic
// skeleton.
//
// The stochastic solve splits u = Y + Z: Z is the stochastic convolution,
// advanced by the distribution-exact OU recursion, and Y solves the shifted
// equation Y' = -A Y + B(Y + Z), advanced mode-wise by either an exponential
// Euler step
//   Y_k <- e^{-a_k h} Y_k + h phi1(a_k h) B(Y+Z)_k,  phi1(x) = (1 - e^{-x})/x,
// or a semi-implicit step (I + hA) Y_new = Y + h B(Y+Z).  Both are first
// order; the exponential step is exact on the linear part, the semi-implicit
// step is dissipative unconditionally in h.

#include "burgers_ldp/noise.hpp"
#include "burgers_ldp/spectral.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace burgers_ldp {

enum class Scheme { exponential_euler, semi_implicit };

struct SolverConfig {
    double h = 1e-3;
    Scheme scheme = Scheme::exponential_euler;
    std::size_t n_modes = 64;
    std::size_t dealias_m = 0;  ///< 0 selects the default 3N/2 + 1 grid
    bool nonlinearity = true;
    double blowup_factor = 1e3; ///< step rejected when ||Y_new|| > factor (1 + ||Y||)

    void validate() const;
};

/// Raised when a step is rejected by the blow-up guard.
class BlowUpError : public std::runtime_error {
public:
    BlowUpError(double t, double norm);
    double time() const { return t_; }
    double norm() const { return norm_; }

private:
    double t_;
    double norm_;
};

/// Per-mode step factors and the dealiasing plan for one configuration.
/// Immutable after construction; share freely across threads.
class StepPlan {
public:
    explicit StepPlan(const SolverConfig& cfg);

    const SolverConfig& config() const { return cfg_; }
    const TransformPlan& transform() const { return transform_; }

    /// e^{-a_k h}; identical per-mode factors to semigroup_apply(., h).
    const std::vector<double>& decay() const { return decay_; }

private:
    friend void step_y(const StepPlan&, struct StepWorkspace&, SpectralField&,
                       const SpectralField*, const SpectralField*, double);
    SolverConfig cfg_;
    TransformPlan transform_;
    std::vector<double> decay_;    // e^{-a h}
    std::vector<double> phi1h_;    // h phi1(a h)
    std::vector<double> implicit_; // 1/(1 + a h)
};

/// Reusable per-thread scratch buffers for step_y.
struct StepWorkspace {
    GridField grid;
    SpectralField sum;
    SpectralField b;
};

StepWorkspace make_step_workspace(const StepPlan& plan);

/// Advances Y by one step of the shifted equation against a frozen convolution
/// sample z (pass nullptr for z = 0) and optional extra forcing (added to B
/// before the integrating factor).  `t_next` is only used in the blow-up
/// diagnostic.  Throws BlowUpError on step rejection.
void step_y(const StepPlan& plan, StepWorkspace& ws, SpectralField& y,
            const SpectralField* z, const SpectralField* forcing, double t_next);

/// Convenience single-step wrapper matching the stochastic splitting.
SpectralField step_y(const SpectralField& y, const SpectralField& z, const SolverConfig& cfg);

/// States on a uniform time grid t_i = t0 + i dt.
struct TrajectoryPath {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<SpectralField> states;

    std::size_t n_states() const { return states.size(); }
    std::size_t n_steps() const { return states.empty() ? 0 : states.size() - 1; }
    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    std::size_t n_modes() const { return states.empty() ? 0 : states.front().n_modes(); }

    /// Checks dt > 0 (when more than one state) and a consistent mode count.
    void validate() const;
};

/// Value of the piecewise-linear interpolant of `path` at time t, clamped to
/// the recorded span.
SpectralField path_value_at(const TrajectoryPath& path, double t);

struct SimulationResult {
    TrajectoryPath u; ///< full solution Y + Z
    TrajectoryPath z; ///< realized stochastic convolution
};

/// Integrates the SBE from x over n_steps of cfg.h, recording u and z every
/// `record_every` steps (which must divide n_steps).
SimulationResult simulate_sbe(const SpectralField& x, const NoiseSpec& noise,
                              const SolverConfig& cfg, std::size_t n_steps,
                              std::size_t record_every, NormalSampler& xi);

/// Deterministic controlled flow u' = -A u + B(u) + A^{alpha/2} f.
/// `controls` holds f on the step grid (left endpoint used per step); pass an
/// empty path for f = 0.  Requires controls.dt == cfg.h when non-empty.
TrajectoryPath solve_skeleton(const SpectralField& x, const TrajectoryPath& controls,
                              double alpha, const SolverConfig& cfg, std::size_t n_steps,
                              std::size_t record_every = 1);

/// Deterministic solution map of the shifted equation against a given
/// convolution path phi (sampled at every step of cfg.h): returns Y with
/// Y' = -A Y + B(Y + phi), Y_0 = x - phi_0.  Add phi back for u.
TrajectoryPath gx_map(const SpectralField& x, const TrajectoryPath& phi,
                      const SolverConfig& cfg);

} // namespace burgers_ldp
