#include "burgers_ldp/noise.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace burgers_ldp {

NoiseSpec::NoiseSpec(double alpha_, double beta_, double delta_, double epsilon_,
                     std::size_t n_modes_)
    : alpha(alpha_), beta(beta_), delta(delta_), epsilon(epsilon_), n_modes(n_modes_) {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("NoiseSpec: " + msg); };
    if (!(alpha >= 0.0 && alpha < 0.5))
        fail("requires 0 <= alpha < 1/2, got alpha = " + std::to_string(alpha));
    const double gap = beta - alpha;
    if (!(gap > 0.5 && gap <= 1.0))
        fail("requires 1/2 < beta - alpha <= 1 (trace-class regularity window), got beta - alpha = " +
             std::to_string(gap));
    if (!(delta >= 0.0))
        fail("requires delta >= 0 (delta = 0 is the diagonal limit family), got delta = " +
             std::to_string(delta));
    if (!(epsilon >= 0.0))
        fail("requires epsilon >= 0 (epsilon = 0 is the noise-free limit), got epsilon = " +
             std::to_string(epsilon));
    if (n_modes < 1) fail("requires n_modes >= 1");
}

static double sigma_sq_unchecked(double alpha, double beta, double delta, std::size_t k) {
    const double w = static_cast<double>(k) * kPi;
    return std::pow(w, 2.0 * alpha) / (1.0 + delta * std::pow(w, 2.0 * beta));
}

double sigma_k(const NoiseSpec& q, std::size_t k) {
    if (k < 1 || k > q.n_modes)
        throw std::out_of_range("sigma_k: k = " + std::to_string(k) + " out of range [1, " +
                                    std::to_string(q.n_modes) + "]");
    return std::sqrt(sigma_sq_unchecked(q.alpha, q.beta, q.delta, k));
}

// Tail of sum_{k > K} sigma_k^2 bounded through sigma_k^2 <= (k pi)^{2a-2b}/delta
// and an integral comparison; finite because 2(beta - alpha) > 1.
static double power_tail_bound(double alpha, double beta, double delta, double from_k) {
    if (delta <= 0.0) return std::numeric_limits<double>::infinity();
    const double p = 2.0 * beta - 2.0 * alpha; // > 1
    return std::pow(kPi, -p) / delta * std::pow(from_k, 1.0 - p) / (p - 1.0);
}

TraceResult trace_q(const NoiseSpec& q) {
    TraceResult r{0.0, 0.0, 0.0};
    for (std::size_t k = 1; k <= q.n_modes; ++k)
        r.truncated += sigma_sq_unchecked(q.alpha, q.beta, q.delta, k);
    r.tail_bound = power_tail_bound(q.alpha, q.beta, q.delta, static_cast<double>(q.n_modes));

    if (q.delta <= 0.0) {
        r.extrapolated = r.truncated;
        return r;
    }
    // Extend the sum directly until the certified remainder is negligible,
    // then add the midpoint-rule remainder of the pure power-law regime.
    double ext = r.truncated;
    std::size_t k = q.n_modes + 1;
    const std::size_t k_stop = std::max<std::size_t>(1000000, 100 * q.n_modes);
    for (; k <= k_stop; ++k) ext += sigma_sq_unchecked(q.alpha, q.beta, q.delta, k);
    ext += power_tail_bound(q.alpha, q.beta, q.delta, static_cast<double>(k_stop) + 0.5);
    r.extrapolated = ext;
    return r;
}

DeltaSchedule::DeltaSchedule(double theta_, double alpha, double beta) : theta(theta_) {
    if (!(theta > 0.0))
        throw std::invalid_argument("DeltaSchedule: requires theta > 0, got " + std::to_string(theta));
    const double rate = theta * (1.0 + 2.0 * alpha) / (2.0 * beta);
    if (!(rate < 1.0))
        throw std::invalid_argument(
            "DeltaSchedule: requires theta (1+2 alpha)/(2 beta) < 1 so that epsilon times the "
            "trace blow-up vanishes; got " + std::to_string(rate));
}

DeltaSchedule DeltaSchedule::standard(double alpha, double beta) {
    return DeltaSchedule(beta / (1.0 + 2.0 * alpha), alpha, beta);
}

double DeltaSchedule::delta(double epsilon) const {
    if (!(epsilon >= 0.0))
        throw std::invalid_argument("DeltaSchedule::delta: requires epsilon >= 0");
    return std::pow(epsilon, theta);
}

NoiseSpec noise_at(double alpha, double beta, const DeltaSchedule& s, double epsilon,
                   std::size_t n_modes) {
    return NoiseSpec(alpha, beta, s.delta(epsilon), epsilon, n_modes);
}

OuStepCoeffs ou_step_coeffs(const NoiseSpec& q, double h) {
    if (!(h > 0.0))
        throw std::invalid_argument("ou_step_coeffs: requires h > 0, got " + std::to_string(h));
    OuStepCoeffs c;
    c.h = h;
    c.decay.resize(q.n_modes);
    c.gain.resize(q.n_modes);
    for (std::size_t k = 1; k <= q.n_modes; ++k) {
        const double a = laplacian_eigenvalue(k);
        c.decay[k - 1] = std::exp(-a * h);
        const double s2 = sigma_sq_unchecked(q.alpha, q.beta, q.delta, k);
        c.gain[k - 1] = std::sqrt(q.epsilon * s2 * (-std::expm1(-2.0 * a * h)) / (2.0 * a));
    }
    return c;
}

void ou_exact_step(SpectralField& z, const OuStepCoeffs& c, NormalSampler& xi) {
    if (z.n_modes() != c.decay.size())
        throw std::invalid_argument("ou_exact_step: field/coefficient mode count mismatch");
    for (std::size_t i = 0; i < z.c.size(); ++i)
        z.c[i] = c.decay[i] * z.c[i] + c.gain[i] * xi();
}

void ou_exact_step(OuState& state, const NoiseSpec& q, double h) {
    const OuStepCoeffs c = ou_step_coeffs(q, h);
    ou_exact_step(state.z, c, state.rng);
    state.t += h;
}

double ou_stationary_variance(const NoiseSpec& q, std::size_t k) {
    if (k < 1 || k > q.n_modes)
        throw std::out_of_range("ou_stationary_variance: k out of range");
    return q.epsilon * sigma_sq_unchecked(q.alpha, q.beta, q.delta, k) /
           (2.0 * laplacian_eigenvalue(k));
}

} // namespace burgers_ldp
