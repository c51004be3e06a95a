#include "burgers_ldp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace burgers_ldp {

void SolverConfig::validate() const {
    if (!(h > 0.0))
        throw std::invalid_argument("SolverConfig: step size h must be positive");
    if (n_modes < 1)
        throw std::invalid_argument("SolverConfig: n_modes must be at least 1");
    if (!(blowup_factor > 0.0))
        throw std::invalid_argument("SolverConfig: blowup_factor must be positive");
    if (dealias_m != 0 && dealias_m < n_modes + 1)
        throw std::invalid_argument("SolverConfig: dealias_m must be 0 (default) or at least n_modes + 1");
}

BlowUpError::BlowUpError(double t, double norm)
    : std::runtime_error("solution norm " + std::to_string(norm) +
                         " exceeded the blow-up guard at t = " + std::to_string(t)),
      t_(t), norm_(norm) {}

StepPlan::StepPlan(const SolverConfig& cfg)
    : cfg_((cfg.validate(), cfg)),
      transform_(cfg.n_modes,
                 cfg.dealias_m != 0 ? cfg.dealias_m : TransformPlan::default_dealias_m(cfg.n_modes)),
      decay_(cfg.n_modes), phi1h_(cfg.n_modes), implicit_(cfg.n_modes) {
    for (std::size_t k = 1; k <= cfg.n_modes; ++k) {
        const double a = laplacian_eigenvalue(k);
        const double x = a * cfg.h;
        decay_[k - 1] = std::exp(-x);
        // h phi1(ah) = (1 - e^{-ah})/a, stable for small ah via expm1
        phi1h_[k - 1] = -std::expm1(-x) / a;
        implicit_[k - 1] = 1.0 / (1.0 + x);
    }
}

StepWorkspace make_step_workspace(const StepPlan& plan) {
    StepWorkspace ws;
    ws.grid.m = plan.transform().m_intervals();
    ws.grid.v.assign(ws.grid.m - 1, 0.0);
    ws.sum = SpectralField(plan.config().n_modes);
    ws.b = SpectralField(plan.config().n_modes);
    return ws;
}

void step_y(const StepPlan& plan, StepWorkspace& ws, SpectralField& y,
            const SpectralField* z, const SpectralField* forcing, double t_next) {
    const SolverConfig& cfg = plan.cfg_;
    const std::size_t n = cfg.n_modes;
    if (y.n_modes() != n)
        throw std::invalid_argument("step_y: state has " + std::to_string(y.n_modes()) +
                                    " modes, plan expects " + std::to_string(n));

    double norm_old_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm_old_sq += y.c[i] * y.c[i];

    if (cfg.nonlinearity) {
        if (z != nullptr) {
            for (std::size_t i = 0; i < n; ++i) ws.sum.c[i] = y.c[i] + z->c[i];
        } else {
            ws.sum.c = y.c;
        }
        burgers_nonlinearity(ws.sum, plan.transform_, ws.grid, ws.b);
    } else {
        std::fill(ws.b.c.begin(), ws.b.c.end(), 0.0);
    }
    if (forcing != nullptr) {
        for (std::size_t i = 0; i < n; ++i) ws.b.c[i] += forcing->c[i];
    }

    double norm_new_sq = 0.0;
    if (cfg.scheme == Scheme::exponential_euler) {
        for (std::size_t i = 0; i < n; ++i) {
            y.c[i] = plan.decay_[i] * y.c[i] + plan.phi1h_[i] * ws.b.c[i];
            norm_new_sq += y.c[i] * y.c[i];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            y.c[i] = (y.c[i] + cfg.h * ws.b.c[i]) * plan.implicit_[i];
            norm_new_sq += y.c[i] * y.c[i];
        }
    }

    const double guard = cfg.blowup_factor * (1.0 + std::sqrt(norm_old_sq));
    if (!(std::sqrt(norm_new_sq) <= guard))
        throw BlowUpError(t_next, std::sqrt(norm_new_sq));
}

SpectralField step_y(const SpectralField& y, const SpectralField& z, const SolverConfig& cfg) {
    StepPlan plan(cfg);
    StepWorkspace ws = make_step_workspace(plan);
    SpectralField out = y;
    step_y(plan, ws, out, &z, nullptr, cfg.h);
    return out;
}

void TrajectoryPath::validate() const {
    if (states.size() > 1 && !(dt > 0.0))
        throw std::invalid_argument("TrajectoryPath: dt must be positive");
    for (const SpectralField& s : states) {
        if (s.n_modes() != n_modes())
            throw std::invalid_argument("TrajectoryPath: states disagree on the mode count");
    }
}

SpectralField path_value_at(const TrajectoryPath& path, double t) {
    if (path.states.empty()) throw std::invalid_argument("path_value_at: empty path");
    if (path.states.size() == 1 || !(path.dt > 0.0)) return path.states.front();
    const double s = (t - path.t0) / path.dt;
    if (s <= 0.0) return path.states.front();
    if (s >= static_cast<double>(path.n_steps())) return path.states.back();
    const auto i = static_cast<std::size_t>(s);
    const double frac = s - static_cast<double>(i);
    SpectralField out = path.states[i];
    const SpectralField& right = path.states[i + 1];
    for (std::size_t k = 0; k < out.c.size(); ++k)
        out.c[k] += frac * (right.c[k] - out.c[k]);
    return out;
}

SimulationResult simulate_sbe(const SpectralField& x, const NoiseSpec& noise,
                              const SolverConfig& cfg, std::size_t n_steps,
                              std::size_t record_every, NormalSampler& xi) {
    cfg.validate();
    if (noise.n_modes != cfg.n_modes)
        throw std::invalid_argument("simulate_sbe: noise and solver disagree on the mode count");
    if (x.n_modes() != cfg.n_modes)
        throw std::invalid_argument("simulate_sbe: initial state has the wrong mode count");
    if (record_every == 0 || n_steps % record_every != 0)
        throw std::invalid_argument("simulate_sbe: record_every must divide n_steps");

    StepPlan plan(cfg);
    StepWorkspace ws = make_step_workspace(plan);
    const OuStepCoeffs ou = ou_step_coeffs(noise, cfg.h);

    SpectralField y = x;
    SpectralField z(cfg.n_modes); // convolution started from zero

    SimulationResult result;
    result.u.t0 = 0.0;
    result.u.dt = cfg.h * static_cast<double>(record_every);
    result.z.t0 = 0.0;
    result.z.dt = result.u.dt;
    result.u.states.reserve(n_steps / record_every + 1);
    result.z.states.reserve(n_steps / record_every + 1);
    result.u.states.push_back(y + z);
    result.z.states.push_back(z);

    for (std::size_t i = 1; i <= n_steps; ++i) {
        const double t = cfg.h * static_cast<double>(i);
        // Y and Z both step from their left-endpoint values.
        step_y(plan, ws, y, &z, nullptr, t);
        for (std::size_t k = 0; k < cfg.n_modes; ++k)
            z.c[k] = ou.decay[k] * z.c[k] + ou.gain[k] * xi();
        if (i % record_every == 0) {
            result.u.states.push_back(y + z);
            result.z.states.push_back(z);
        }
    }
    return result;
}

TrajectoryPath solve_skeleton(const SpectralField& x, const TrajectoryPath& controls,
                              double alpha, const SolverConfig& cfg, std::size_t n_steps,
                              std::size_t record_every) {
    cfg.validate();
    if (x.n_modes() != cfg.n_modes)
        throw std::invalid_argument("solve_skeleton: initial state has the wrong mode count");
    if (record_every == 0 || n_steps % record_every != 0)
        throw std::invalid_argument("solve_skeleton: record_every must divide n_steps");

    const bool forced = !controls.states.empty();
    if (forced) {
        controls.validate();
        if (controls.n_modes() != cfg.n_modes)
            throw std::invalid_argument("solve_skeleton: controls have the wrong mode count");
        if (controls.n_states() < n_steps)
            throw std::invalid_argument("solve_skeleton: need a control value at the left endpoint of every step");
        if (std::abs(controls.dt - cfg.h) > 1e-12 * cfg.h)
            throw std::invalid_argument("solve_skeleton: controls must be sampled on the solver step grid");
    }

    // Precompute A^{alpha/2} f on the step grid.
    std::vector<SpectralField> lifted;
    if (forced) {
        lifted.reserve(n_steps);
        for (std::size_t i = 0; i < n_steps; ++i)
            lifted.push_back(apply_fractional_a(controls.states[i], alpha / 2.0));
    }

    StepPlan plan(cfg);
    StepWorkspace ws = make_step_workspace(plan);
    SpectralField y = x;

    TrajectoryPath out;
    out.t0 = 0.0;
    out.dt = cfg.h * static_cast<double>(record_every);
    out.states.reserve(n_steps / record_every + 1);
    out.states.push_back(y);
    for (std::size_t i = 1; i <= n_steps; ++i) {
        const SpectralField* f = forced ? &lifted[i - 1] : nullptr;
        step_y(plan, ws, y, nullptr, f, cfg.h * static_cast<double>(i));
        if (i % record_every == 0) out.states.push_back(y);
    }
    return out;
}

TrajectoryPath gx_map(const SpectralField& x, const TrajectoryPath& phi,
                      const SolverConfig& cfg) {
    cfg.validate();
    phi.validate();
    if (phi.states.empty())
        throw std::invalid_argument("gx_map: convolution path is empty");
    if (phi.n_modes() != cfg.n_modes)
        throw std::invalid_argument("gx_map: convolution path has the wrong mode count");
    if (phi.n_steps() > 0 && std::abs(phi.dt - cfg.h) > 1e-12 * cfg.h)
        throw std::invalid_argument("gx_map: convolution path must be sampled on the solver step grid");
    if (x.n_modes() != cfg.n_modes)
        throw std::invalid_argument("gx_map: initial state has the wrong mode count");

    StepPlan plan(cfg);
    StepWorkspace ws = make_step_workspace(plan);
    SpectralField y = x - phi.states.front();

    TrajectoryPath out;
    out.t0 = phi.t0;
    out.dt = cfg.h;
    out.states.reserve(phi.n_states());
    out.states.push_back(y);
    for (std::size_t i = 1; i < phi.n_states(); ++i) {
        step_y(plan, ws, y, &phi.states[i - 1], nullptr,
               phi.t0 + cfg.h * static_cast<double>(i));
        out.states.push_back(y);
    }
    return out;
}

} // namespace burgers_ldp
