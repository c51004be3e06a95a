#pragma once
// Sine spectral basis on (0,1) with homogeneous Dirichlet conditions.
//
// Fields are coefficient vectors against e_k(x) = sqrt(2) sin(k pi x),
// k = 1..N.  The negative Dirichlet Laplacian A = -d^2/dx^2 acts diagonally
// with eigenvalues (k pi)^2, so fractional powers, the heat semigroup and
// Sobolev norms are all per-mode multipliers.  The quadratic advection term
// B(u) = 1/2 d/dx(u^2) is evaluated pseudo-spectrally on an interior
// collocation grid wide enough that the product of two band-limited fields
// projects back onto the first N modes without aliasing.

#include <cstddef>
#include <vector>

namespace burgers_ldp {

inline constexpr double kPi = 3.14159265358979323846;

/// Eigenvalue (k pi)^2 of A on mode k (1-based).
inline double laplacian_eigenvalue(std::size_t k) {
    const double w = static_cast<double>(k) * kPi;
    return w * w;
}

/// Coefficients against the sine basis; c[i] multiplies e_{i+1}.
struct SpectralField {
    std::vector<double> c;

    SpectralField() = default;
    explicit SpectralField(std::size_t n_modes) : c(n_modes, 0.0) {}
    explicit SpectralField(std::vector<double> coeffs) : c(std::move(coeffs)) {}

    /// Field with a single excited mode (1-based k).
    static SpectralField mode(std::size_t n_modes, std::size_t k, double amplitude);

    std::size_t n_modes() const { return c.size(); }
    double coeff(std::size_t k) const { return c[k - 1]; }
    double& coeff(std::size_t k) { return c[k - 1]; }
};

SpectralField operator+(const SpectralField& a, const SpectralField& b);
SpectralField operator-(const SpectralField& a, const SpectralField& b);
SpectralField operator*(double s, const SpectralField& a);

/// u += s * v
void add_scaled(SpectralField& u, double s, const SpectralField& v);

/// L^2 (= H) inner product; Parseval makes it the plain coefficient dot product.
double inner_h(const SpectralField& a, const SpectralField& b);

/// || u ||_{H^r} = (sum_k (k pi)^{2r} u_k^2)^{1/2}.  r may be negative.
double sobolev_norm(const SpectralField& u, double r);

/// || u ||_H, the r = 0 case.
double h_norm(const SpectralField& u);

/// A^s u, per-mode factor (k pi)^{2s}.  s may be negative.
SpectralField apply_fractional_a(const SpectralField& u, double s);

/// Heat semigroup e^{-tA} u, per-mode factor e^{-(k pi)^2 t}.  Requires t >= 0.
SpectralField semigroup_apply(const SpectralField& u, double t);

/// Point values at the interior nodes x_j = j/M, j = 1..M-1.
struct GridField {
    std::vector<double> v;
    std::size_t m = 0;

    GridField() = default;
    explicit GridField(std::size_t m_intervals)
        : v(m_intervals > 0 ? m_intervals - 1 : 0, 0.0), m(m_intervals) {}
};

/// Cached sin/cos tables for direct-summation transforms between N modes and
/// an M-interval interior grid.
///
/// The trapezoid quadrature behind from_grid / cosine_coeffs is exact for
/// integrands band-limited below 2M, so a product of two N-mode fields (band
/// limit 2N) projects alias-free onto modes 1..N as long as 2M - N > 2N,
/// i.e. M >= 3N/2 + 1.
class TransformPlan {
public:
    TransformPlan(std::size_t n_modes, std::size_t m_intervals);

    std::size_t n_modes() const { return n_; }
    std::size_t m_intervals() const { return m_; }

    /// Smallest grid that dealiases the quadratic term: M = 3N/2 + 1 (rounded up).
    static std::size_t default_dealias_m(std::size_t n_modes);

    /// v_j = sum_k c_k sqrt(2) sin(k pi j / M)
    void to_grid(const SpectralField& u, GridField& out) const;

    /// c_k = (sqrt(2)/M) sum_j v_j sin(k pi j / M), exact for band limit < 2M - N
    void from_grid(const GridField& g, SpectralField& out) const;

    /// v_j = u'(x_j) = sum_k c_k sqrt(2) k pi cos(k pi j / M)
    void derivative_to_grid(const SpectralField& u, GridField& out) const;

    /// c_k = integral f sqrt(2) cos(k pi x) dx of grid data (f = 0 at endpoints)
    void cosine_coeffs(const GridField& g, std::vector<double>& out) const;

private:
    std::size_t n_;
    std::size_t m_;
    std::vector<double> sin_; // sin_[(k-1)*(m-1) + (j-1)] = sin(k pi j / M)
    std::vector<double> cos_;
};

/// Dealiased B(u) = 1/2 d/dx(u^2) projected onto the first N modes.
/// Allocation-free variant; `scratch` must come from the same plan size.
void burgers_nonlinearity(const SpectralField& u, const TransformPlan& plan,
                          GridField& scratch, SpectralField& out);

SpectralField burgers_nonlinearity(const SpectralField& u, const TransformPlan& plan);

/// Convenience overload on the default dealiasing grid.
SpectralField burgers_nonlinearity(const SpectralField& u);

/// Adjoint of the advection linearization: out = (DB(u))^T v = -P_N(u * v'),
/// with u supplied as point values and v' the cosine-series derivative of v.
void advection_adjoint(const GridField& u_points, const SpectralField& v,
                       const TransformPlan& plan, GridField& scratch,
                       SpectralField& out);

} // namespace burgers_ldp
