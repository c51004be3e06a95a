#include "burgers_ldp/action.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace burgers_ldp {

void ActionProblem::validate() const {
    if (n_modes < 1)
        throw std::invalid_argument("ActionProblem: n_modes must be at least 1");
    if (n_intervals < 2)
        throw std::invalid_argument("ActionProblem: n_intervals must be at least 2");
    if (!(horizon > 0.0))
        throw std::invalid_argument("ActionProblem: horizon must be positive");
    if (!(alpha >= 0.0 && alpha < 0.5))
        throw std::invalid_argument("ActionProblem: alpha must lie in [0, 1/2)");
    if (weight_noise && weight_noise->n_modes != n_modes)
        throw std::invalid_argument("ActionProblem: weight_noise disagrees on the mode count");
    if (start.n_modes() != n_modes || target.n_modes() != n_modes)
        throw std::invalid_argument("ActionProblem: endpoint states must have n_modes coefficients");
    if (dealias_m != 0 && dealias_m < n_modes + 1)
        throw std::invalid_argument("ActionProblem: dealias_m must be 0 (default) or at least n_modes + 1");
}

std::vector<double> mode_weights(const ActionProblem& p) {
    std::vector<double> w(p.n_modes);
    for (std::size_t k = 1; k <= p.n_modes; ++k) {
        if (p.weight_noise) {
            const double s = sigma_k(*p.weight_noise, k);
            w[k - 1] = 1.0 / (s * s);
        } else {
            w[k - 1] = std::pow(static_cast<double>(k) * kPi, -2.0 * p.alpha);
        }
    }
    return w;
}

ActionEvaluator::ActionEvaluator(ActionProblem p)
    : p_((p.validate(), std::move(p))),
      h_(p_.h()),
      w_(mode_weights(p_)),
      sqrt_w_(p_.n_modes),
      plan_(p_.n_modes,
            p_.dealias_m != 0 ? p_.dealias_m : TransformPlan::default_dealias_m(p_.n_modes)),
      wh_(p_.n_intervals, SpectralField(p_.n_modes)),
      grid_scratch_(plan_.m_intervals()),
      ubar_(p_.n_modes), bterm_(p_.n_modes), adj_prev_(p_.n_modes), adj_cur_(p_.n_modes) {
    for (std::size_t k = 0; k < p_.n_modes; ++k) sqrt_w_[k] = std::sqrt(w_[k]);
    if (p_.nonlinear)
        ubar_pts_.assign(p_.n_intervals, GridField(plan_.m_intervals()));
}

void ActionEvaluator::check_path(const TrajectoryPath& path) const {
    if (path.n_states() != p_.n_intervals + 1)
        throw std::invalid_argument("ActionEvaluator: path has " + std::to_string(path.n_states()) +
                                    " states, problem grid needs " +
                                    std::to_string(p_.n_intervals + 1));
    if (path.n_modes() != p_.n_modes)
        throw std::invalid_argument("ActionEvaluator: path has the wrong mode count");
    if (path.n_steps() > 0 && path.dt > 0.0 && std::abs(path.dt - h_) > 1e-9 * h_)
        throw std::invalid_argument("ActionEvaluator: path step disagrees with horizon / n_intervals");
}

double ActionEvaluator::residuals(const TrajectoryPath& path, bool with_adjoint_inputs) {
    const std::size_t n = p_.n_modes;
    double s = 0.0;
    for (std::size_t i = 0; i < p_.n_intervals; ++i) {
        const SpectralField& u0 = path.states[i];
        const SpectralField& u1 = path.states[i + 1];
        for (std::size_t k = 0; k < n; ++k) ubar_.c[k] = 0.5 * (u0.c[k] + u1.c[k]);
        if (p_.nonlinear) {
            burgers_nonlinearity(ubar_, plan_, grid_scratch_, bterm_);
            if (with_adjoint_inputs) plan_.to_grid(ubar_, ubar_pts_[i]);
        }
        SpectralField& wh = wh_[i];
        for (std::size_t k = 0; k < n; ++k) {
            double res = (u1.c[k] - u0.c[k]) / h_ + laplacian_eigenvalue(k + 1) * ubar_.c[k];
            if (p_.nonlinear) res -= bterm_.c[k];
            s += w_[k] * res * res;
            wh.c[k] = w_[k] * res;
        }
    }
    return 0.5 * h_ * s;
}

double ActionEvaluator::value(const TrajectoryPath& path) {
    check_path(path);
    return residuals(path, false);
}

double ActionEvaluator::value_and_gradient(const TrajectoryPath& path,
                                           std::vector<SpectralField>& grad) {
    check_path(path);
    const double s = residuals(path, true);
    const std::size_t n = p_.n_modes;
    const std::size_t m = p_.n_intervals;
    grad.assign(m >= 1 ? m - 1 : 0, SpectralField(n));

    if (p_.nonlinear && m >= 1)
        advection_adjoint(ubar_pts_[0], wh_[0], plan_, grid_scratch_, adj_prev_);
    for (std::size_t j = 1; j < m; ++j) {
        if (p_.nonlinear)
            advection_adjoint(ubar_pts_[j], wh_[j], plan_, grid_scratch_, adj_cur_);
        SpectralField& g = grad[j - 1];
        const SpectralField& hl = wh_[j - 1];
        const SpectralField& hr = wh_[j];
        for (std::size_t k = 0; k < n; ++k) {
            const double a = laplacian_eigenvalue(k + 1);
            double v = (hl.c[k] - hr.c[k]) + 0.5 * h_ * a * (hl.c[k] + hr.c[k]);
            if (p_.nonlinear) v -= 0.5 * h_ * (adj_prev_.c[k] + adj_cur_.c[k]);
            g.c[k] = v;
        }
        if (p_.nonlinear) std::swap(adj_prev_, adj_cur_);
    }
    return s;
}

TrajectoryPath ActionEvaluator::control(const TrajectoryPath& path) {
    check_path(path);
    residuals(path, false);
    TrajectoryPath f;
    f.t0 = path.t0 + 0.5 * h_;
    f.dt = h_;
    f.states.assign(p_.n_intervals, SpectralField(p_.n_modes));
    for (std::size_t i = 0; i < p_.n_intervals; ++i)
        for (std::size_t k = 0; k < p_.n_modes; ++k)
            f.states[i].c[k] = wh_[i].c[k] / sqrt_w_[k];
    return f;
}

namespace {

// Exact inverse of the quadratic-part (B = 0) Hessian over interior states.
// In mode k the quadratic action is (w/h) sum_i [(1+b) u_{i+1} - (1-b) u_i]^2 / 2
// with b = a h / 2, so the Hessian is the constant tridiagonal
//   diag = (w/h) ((1+b)^2 + (1-b)^2),  off = -(w/h) (1 - b^2),
// which is strictly diagonally dominant (gap 4 w b^2 / h, or 4 w / h once
// b > 1) and solved by a cached Thomas factorization.
class QuadraticHessianSolver {
public:
    QuadraticHessianSolver(const ActionProblem& p, const std::vector<double>& w)
        : n_(p.n_modes), ni_(p.n_intervals - 1), off_(p.n_modes), cp_(n_ * ni_),
          invm_(n_ * ni_), y_(ni_) {
        const double h = p.h();
        for (std::size_t k = 0; k < n_; ++k) {
            const double b = 0.5 * laplacian_eigenvalue(k + 1) * h;
            const double d = (w[k] / h) * ((1.0 + b) * (1.0 + b) + (1.0 - b) * (1.0 - b));
            const double e = -(w[k] / h) * (1.0 - b * b);
            off_[k] = e;
            double prev_cp = 0.0;
            for (std::size_t i = 0; i < ni_; ++i) {
                const double m = d - e * prev_cp;
                invm_[k * ni_ + i] = 1.0 / m;
                prev_cp = e / m;
                cp_[k * ni_ + i] = prev_cp;
            }
        }
    }

    // g <- H0^{-1} g, with g laid out as g[i * n_modes + k].
    void solve(std::vector<double>& g) {
        if (ni_ == 0) return;
        for (std::size_t k = 0; k < n_; ++k) {
            const double e = off_[k];
            y_[0] = g[k] * invm_[k * ni_];
            for (std::size_t i = 1; i < ni_; ++i)
                y_[i] = (g[i * n_ + k] - e * y_[i - 1]) * invm_[k * ni_ + i];
            g[(ni_ - 1) * n_ + k] = y_[ni_ - 1];
            for (std::size_t i = ni_ - 1; i-- > 0;)
                g[i * n_ + k] = y_[i] - cp_[k * ni_ + i] * g[(i + 1) * n_ + k];
        }
    }

private:
    std::size_t n_, ni_;
    std::vector<double> off_, cp_, invm_, y_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void flatten(const TrajectoryPath& path, std::vector<double>& x) {
    const std::size_t n = path.n_modes();
    for (std::size_t j = 1; j + 1 < path.n_states(); ++j)
        for (std::size_t k = 0; k < n; ++k) x[(j - 1) * n + k] = path.states[j].c[k];
}

void unflatten(const std::vector<double>& x, TrajectoryPath& path) {
    const std::size_t n = path.n_modes();
    for (std::size_t j = 1; j + 1 < path.n_states(); ++j)
        for (std::size_t k = 0; k < n; ++k) path.states[j].c[k] = x[(j - 1) * n + k];
}

void flatten_grad(const std::vector<SpectralField>& grad, std::vector<double>& g) {
    const std::size_t n = grad.empty() ? 0 : grad.front().n_modes();
    for (std::size_t j = 0; j < grad.size(); ++j)
        for (std::size_t k = 0; k < n; ++k) g[j * n + k] = grad[j].c[k];
}

struct LbfgsPair {
    std::vector<double> s, y;
    double rho;
};

} // namespace

MamResult mam_minimize(const ActionProblem& p, const MamOptions& opt) {
    p.validate();
    TrajectoryPath init;
    init.t0 = 0.0;
    init.dt = p.h();
    init.states.reserve(p.n_intervals + 1);
    const double m = static_cast<double>(p.n_intervals);
    for (std::size_t i = 0; i <= p.n_intervals; ++i) {
        const double s = static_cast<double>(i) / m;
        SpectralField u(p.n_modes);
        for (std::size_t k = 0; k < p.n_modes; ++k)
            u.c[k] = (1.0 - s) * p.start.c[k] + s * p.target.c[k];
        init.states.push_back(std::move(u));
    }
    return mam_minimize(p, init, opt);
}

MamResult mam_minimize(const ActionProblem& p, const TrajectoryPath& initial,
                       const MamOptions& opt) {
    p.validate();
    if (p.n_intervals < 8)
        throw std::invalid_argument("mam_minimize: n_intervals must be at least 8");
    ActionEvaluator eval(p);

    TrajectoryPath work = initial;
    work.t0 = 0.0;
    work.dt = p.h();
    if (work.n_states() != p.n_intervals + 1)
        throw std::invalid_argument("mam_minimize: initial path is not on the problem grid");
    work.states.front() = p.start;
    work.states.back() = p.target;

    MamResult result;
    const std::size_t dim = (p.n_intervals - 1) * p.n_modes;
    QuadraticHessianSolver precond(p, eval.weights());
    std::vector<SpectralField> gfields;
    std::vector<double> x(dim), g(dim), dir(dim), q(dim), x_try(dim), g_new(dim);
    flatten(work, x);
    double s_val = eval.value_and_gradient(work, gfields);
    flatten_grad(gfields, g);

    std::deque<LbfgsPair> pairs;
    std::vector<double> alpha_coef;
    const double c1 = 1e-4;
    std::size_t iter = 0;
    bool converged = false;
    bool stalled = false;

    for (; iter < opt.max_iter; ++iter) {
        const double gnorm = std::sqrt(dot(g, g));
        if (opt.verbose)
            std::fprintf(stderr, "mam iter %zu  S = %.12e  |g| = %.3e\n", iter, s_val, gnorm);
        if (gnorm <= opt.grad_tol) {
            converged = true;
            break;
        }

        // Two-loop recursion with the tridiagonal solve as the seed matrix.
        q = g;
        alpha_coef.assign(pairs.size(), 0.0);
        for (std::size_t i = pairs.size(); i-- > 0;) {
            alpha_coef[i] = pairs[i].rho * dot(pairs[i].s, q);
            for (std::size_t j = 0; j < dim; ++j) q[j] -= alpha_coef[i] * pairs[i].y[j];
        }
        precond.solve(q);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const double beta = pairs[i].rho * dot(pairs[i].y, q);
            for (std::size_t j = 0; j < dim; ++j)
                q[j] += (alpha_coef[i] - beta) * pairs[i].s[j];
        }
        for (std::size_t j = 0; j < dim; ++j) dir[j] = -q[j];

        double gd = dot(g, dir);
        if (!(gd < 0.0)) {
            // Stale curvature pairs can spoil descent; fall back to the exact
            // quadratic preconditioner alone.
            pairs.clear();
            q = g;
            precond.solve(q);
            for (std::size_t j = 0; j < dim; ++j) dir[j] = -q[j];
            gd = dot(g, dir);
            if (!(gd < 0.0)) break;
        }

        double t = 1.0;
        double s_try = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int halvings = 0; halvings < 60; ++halvings) {
            for (std::size_t j = 0; j < dim; ++j) x_try[j] = x[j] + t * dir[j];
            unflatten(x_try, work);
            s_try = eval.value(work);
            if (s_try <= s_val + c1 * t * gd) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            stalled = true;
            break;
        }

        const double s_new = eval.value_and_gradient(work, gfields);
        flatten_grad(gfields, g_new);

        LbfgsPair pair;
        pair.s.resize(dim);
        pair.y.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            pair.s[j] = x_try[j] - x[j];
            pair.y[j] = g_new[j] - g[j];
        }
        const double sy = dot(pair.s, pair.y);
        const double ss = std::sqrt(dot(pair.s, pair.s));
        const double yy = std::sqrt(dot(pair.y, pair.y));
        if (sy > 1e-10 * ss * yy) {
            pair.rho = 1.0 / sy;
            pairs.push_back(std::move(pair));
            if (pairs.size() > opt.lbfgs_memory) pairs.pop_front();
        }

        x.swap(x_try);
        g.swap(g_new);
        s_val = s_new;
    }

    if (stalled)
        converged = std::sqrt(dot(g, g)) <= opt.grad_tol;

    unflatten(x, work);
    result.path = work;
    result.action = s_val;
    result.grad_norm = std::sqrt(dot(g, g));
    result.iterations = iter;
    result.converged = converged;
    result.control = eval.control(work);
    return result;
}

QuasipotentialResult quasipotential(const ActionProblem& base,
                                    const QuasipotentialOptions& opt) {
    if (opt.max_rungs < 1)
        throw std::invalid_argument("quasipotential: max_rungs must be at least 1");
    if (!(opt.t0 > 0.0))
        throw std::invalid_argument("quasipotential: t0 must be positive");
    if (opt.m_per_unit_t < 1)
        throw std::invalid_argument("quasipotential: m_per_unit_t must be at least 1");
    if (opt.m_cap < 8)
        throw std::invalid_argument("quasipotential: m_cap must be at least 8");

    QuasipotentialResult result;
    double prev_value = std::numeric_limits<double>::infinity();
    TrajectoryPath prev_path;
    double best_value = std::numeric_limits<double>::infinity();
    bool settled = false;

    for (std::size_t rung = 0; rung < opt.max_rungs; ++rung) {
        const double horizon = opt.t0 * std::ldexp(1.0, static_cast<int>(rung));
        std::size_t m = static_cast<std::size_t>(
            std::llround(static_cast<double>(opt.m_per_unit_t) * horizon));
        m = std::clamp<std::size_t>(m, 8, opt.m_cap);

        ActionProblem prob = base;
        prob.horizon = horizon;
        prob.n_intervals = m;

        MamResult res;
        if (rung == 0) {
            res = mam_minimize(prob, opt.mam);
        } else {
            // Warm start: hold the start state over the new early stretch,
            // then replay the previous minimizer over the final window.
            const double shift = horizon - prev_path.dt * static_cast<double>(prev_path.n_steps());
            TrajectoryPath init;
            init.t0 = 0.0;
            init.dt = prob.h();
            init.states.reserve(m + 1);
            for (std::size_t i = 0; i <= m; ++i) {
                const double t = init.dt * static_cast<double>(i);
                init.states.push_back(t <= shift ? base.start
                                                 : path_value_at(prev_path, t - shift));
            }
            res = mam_minimize(prob, init, opt.mam);
        }

        result.ladder.push_back(res.action);
        if (res.action < best_value) {
            best_value = res.action;
            result.best = res;
            result.horizon = horizon;
        }
        if (rung > 0) {
            const double drop = prev_value - res.action;
            if (drop <= opt.rel_tol * std::max(std::abs(res.action), 1e-300)) {
                settled = true;
                break;
            }
        }
        prev_value = res.action;
        prev_path = res.path;
    }

    result.value = best_value;
    result.converged = settled && result.best.converged;
    return result;
}

} // namespace burgers_ldp
