#include "burgers_ldp/spectral.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace burgers_ldp {

SpectralField SpectralField::mode(std::size_t n_modes, std::size_t k, double amplitude) {
    if (k < 1 || k > n_modes)
        throw std::invalid_argument("SpectralField::mode: k = " + std::to_string(k) +
                                    " out of range [1, " + std::to_string(n_modes) + "]");
    SpectralField u(n_modes);
    u.c[k - 1] = amplitude;
    return u;
}

static void require_same_modes(const SpectralField& a, const SpectralField& b, const char* who) {
    if (a.n_modes() != b.n_modes())
        throw std::invalid_argument(std::string(who) + ": mismatched n_modes (" +
                                    std::to_string(a.n_modes()) + " vs " +
                                    std::to_string(b.n_modes()) + ")");
}

SpectralField operator+(const SpectralField& a, const SpectralField& b) {
    require_same_modes(a, b, "operator+");
    SpectralField r = a;
    for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] += b.c[i];
    return r;
}

SpectralField operator-(const SpectralField& a, const SpectralField& b) {
    require_same_modes(a, b, "operator-");
    SpectralField r = a;
    for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] -= b.c[i];
    return r;
}

SpectralField operator*(double s, const SpectralField& a) {
    SpectralField r = a;
    for (double& x : r.c) x *= s;
    return r;
}

void add_scaled(SpectralField& u, double s, const SpectralField& v) {
    require_same_modes(u, v, "add_scaled");
    for (std::size_t i = 0; i < u.c.size(); ++i) u.c[i] += s * v.c[i];
}

double inner_h(const SpectralField& a, const SpectralField& b) {
    require_same_modes(a, b, "inner_h");
    double s = 0.0;
    for (std::size_t i = 0; i < a.c.size(); ++i) s += a.c[i] * b.c[i];
    return s;
}

double sobolev_norm(const SpectralField& u, double r) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.c.size(); ++i) {
        const double w = static_cast<double>(i + 1) * kPi;
        s += std::pow(w, 2.0 * r) * u.c[i] * u.c[i];
    }
    return std::sqrt(s);
}

double h_norm(const SpectralField& u) {
    double s = 0.0;
    for (double x : u.c) s += x * x;
    return std::sqrt(s);
}

SpectralField apply_fractional_a(const SpectralField& u, double s) {
    SpectralField r = u;
    for (std::size_t i = 0; i < r.c.size(); ++i) {
        const double w = static_cast<double>(i + 1) * kPi;
        r.c[i] *= std::pow(w * w, s);
    }
    return r;
}

SpectralField semigroup_apply(const SpectralField& u, double t) {
    if (t < 0.0)
        throw std::invalid_argument("semigroup_apply: t must be >= 0, got " + std::to_string(t));
    SpectralField r = u;
    for (std::size_t i = 0; i < r.c.size(); ++i)
        r.c[i] *= std::exp(-laplacian_eigenvalue(i + 1) * t);
    return r;
}

TransformPlan::TransformPlan(std::size_t n_modes, std::size_t m_intervals)
    : n_(n_modes), m_(m_intervals) {
    if (n_ == 0) throw std::invalid_argument("TransformPlan: n_modes must be >= 1");
    if (m_ < n_ + 1)
        throw std::invalid_argument("TransformPlan: need M >= N+1 grid intervals, got M = " +
                                    std::to_string(m_) + " for N = " + std::to_string(n_));
    const std::size_t rows = n_, cols = m_ - 1;
    sin_.resize(rows * cols);
    cos_.resize(rows * cols);
    for (std::size_t k = 1; k <= rows; ++k) {
        for (std::size_t j = 1; j <= cols; ++j) {
            const double arg = kPi * static_cast<double>(k) * static_cast<double>(j) /
                               static_cast<double>(m_);
            sin_[(k - 1) * cols + (j - 1)] = std::sin(arg);
            cos_[(k - 1) * cols + (j - 1)] = std::cos(arg);
        }
    }
}

std::size_t TransformPlan::default_dealias_m(std::size_t n_modes) {
    return (3 * n_modes + 1) / 2 + 1;
}

static void require_plan_field(const TransformPlan& p, const SpectralField& u, const char* who) {
    if (u.n_modes() != p.n_modes())
        throw std::invalid_argument(std::string(who) + ": field has " +
                                    std::to_string(u.n_modes()) + " modes, plan expects " +
                                    std::to_string(p.n_modes()));
}

void TransformPlan::to_grid(const SpectralField& u, GridField& out) const {
    require_plan_field(*this, u, "TransformPlan::to_grid");
    out.m = m_;
    out.v.assign(m_ - 1, 0.0);
    const std::size_t cols = m_ - 1;
    constexpr double sqrt2 = 1.41421356237309504880;
    for (std::size_t k = 0; k < n_; ++k) {
        const double a = sqrt2 * u.c[k];
        if (a == 0.0) continue;
        const double* row = &sin_[k * cols];
        for (std::size_t j = 0; j < cols; ++j) out.v[j] += a * row[j];
    }
}

void TransformPlan::from_grid(const GridField& g, SpectralField& out) const {
    if (g.m != m_)
        throw std::invalid_argument("TransformPlan::from_grid: grid has M = " +
                                    std::to_string(g.m) + ", plan expects " + std::to_string(m_));
    out.c.assign(n_, 0.0);
    const std::size_t cols = m_ - 1;
    constexpr double sqrt2 = 1.41421356237309504880;
    const double scale = sqrt2 / static_cast<double>(m_);
    for (std::size_t k = 0; k < n_; ++k) {
        const double* row = &sin_[k * cols];
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += g.v[j] * row[j];
        out.c[k] = scale * s;
    }
}

void TransformPlan::derivative_to_grid(const SpectralField& u, GridField& out) const {
    require_plan_field(*this, u, "TransformPlan::derivative_to_grid");
    out.m = m_;
    out.v.assign(m_ - 1, 0.0);
    const std::size_t cols = m_ - 1;
    constexpr double sqrt2 = 1.41421356237309504880;
    for (std::size_t k = 0; k < n_; ++k) {
        const double a = sqrt2 * static_cast<double>(k + 1) * kPi * u.c[k];
        if (a == 0.0) continue;
        const double* row = &cos_[k * cols];
        for (std::size_t j = 0; j < cols; ++j) out.v[j] += a * row[j];
    }
}

void TransformPlan::cosine_coeffs(const GridField& g, std::vector<double>& out) const {
    if (g.m != m_)
        throw std::invalid_argument("TransformPlan::cosine_coeffs: grid has M = " +
                                    std::to_string(g.m) + ", plan expects " + std::to_string(m_));
    out.assign(n_, 0.0);
    const std::size_t cols = m_ - 1;
    constexpr double sqrt2 = 1.41421356237309504880;
    const double scale = sqrt2 / static_cast<double>(m_);
    for (std::size_t k = 0; k < n_; ++k) {
        const double* row = &cos_[k * cols];
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += g.v[j] * row[j];
        out[k] = scale * s;
    }
}

// Square on the grid, expand the square in the cosine basis, differentiate
// term by term: (u^2)(x) = sum_m c_m sqrt(2) cos(m pi x) gives
// B(u)_k = -(k pi / 2) c_k.  With M >= 3N/2 + 1 the cosine projection of the
// band-2N product is exact, so <B(u), u> = 0 holds to rounding.
void burgers_nonlinearity(const SpectralField& u, const TransformPlan& plan,
                          GridField& scratch, SpectralField& out) {
    plan.to_grid(u, scratch);
    for (double& x : scratch.v) x = x * x;
    thread_local std::vector<double> cosc;
    plan.cosine_coeffs(scratch, cosc);
    out.c.assign(plan.n_modes(), 0.0);
    for (std::size_t k = 1; k <= plan.n_modes(); ++k)
        out.c[k - 1] = -0.5 * static_cast<double>(k) * kPi * cosc[k - 1];
}

SpectralField burgers_nonlinearity(const SpectralField& u, const TransformPlan& plan) {
    GridField scratch(plan.m_intervals());
    SpectralField out;
    burgers_nonlinearity(u, plan, scratch, out);
    return out;
}

SpectralField burgers_nonlinearity(const SpectralField& u) {
    TransformPlan plan(u.n_modes(), TransformPlan::default_dealias_m(u.n_modes()));
    return burgers_nonlinearity(u, plan);
}

void advection_adjoint(const GridField& u_points, const SpectralField& v,
                       const TransformPlan& plan, GridField& scratch,
                       SpectralField& out) {
    if (u_points.m != plan.m_intervals())
        throw std::invalid_argument("advection_adjoint: grid/plan size mismatch");
    plan.derivative_to_grid(v, scratch);
    for (std::size_t j = 0; j < scratch.v.size(); ++j) scratch.v[j] *= -u_points.v[j];
    plan.from_grid(scratch, out);
}

} // namespace burgers_ldp
