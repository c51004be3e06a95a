#include "burgers_ldp/noise.hpp"
#include "burgers_ldp/rng.hpp"
#include "burgers_ldp/spectral.hpp"

#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace burgers_ldp;

TEST_CASE("noise spec validation names the violated constraint") {
    CHECK_THROWS_WITH_AS(NoiseSpec(-0.1, 0.8, 0.01, 0.1, 4),
                         doctest::Contains("0 <= alpha < 1/2"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(NoiseSpec(0.5, 1.2, 0.01, 0.1, 4),
                         doctest::Contains("0 <= alpha < 1/2"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(NoiseSpec(0.0, 0.4, 0.01, 0.1, 4),
                         doctest::Contains("beta - alpha"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(NoiseSpec(0.0, 1.3, 0.01, 0.1, 4),
                         doctest::Contains("beta - alpha"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(NoiseSpec(0.0, 1.0, -1e-9, 0.1, 4), doctest::Contains("delta"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(NoiseSpec(0.0, 1.0, 0.01, -0.1, 4), doctest::Contains("epsilon"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(NoiseSpec(0.0, 1.0, 0.01, 0.1, 0), doctest::Contains("n_modes"),
                         std::invalid_argument);
    // Boundary members of the family used throughout: the noise-free and
    // diagonal limits.
    CHECK_NOTHROW(NoiseSpec(0.0, 1.0, 0.0, 0.0, 4));
}

TEST_CASE("per-mode amplitudes") {
    SUBCASE("diagonal limit is flat at alpha = 0") {
        const NoiseSpec q(0.0, 1.0, 0.0, 0.1, 6);
        for (std::size_t k = 1; k <= 6; ++k) CHECK(sigma_k(q, k) == 1.0);
    }
    SUBCASE("closed form at alpha = 0.25") {
        const NoiseSpec q(0.25, 1.0, 0.01, 0.1, 4);
        // pi^{1/4} (1 + 0.01 pi^2)^{-1/2}, evaluated at extended precision
        CHECK(sigma_k(q, 1) == doctest::Approx(1.2701315025280607).epsilon(1e-13));
    }
    SUBCASE("strictly decreasing in delta") {
        double prev = sigma_k(NoiseSpec(0.25, 1.0, 0.0, 0.1, 4), 2);
        for (double delta : {0.01, 0.1, 1.0, 10.0}) {
            const double cur = sigma_k(NoiseSpec(0.25, 1.0, delta, 0.1, 4), 2);
            CHECK(cur < prev);
            prev = cur;
        }
    }
    SUBCASE("k out of range is rejected") {
        const NoiseSpec q(0.0, 1.0, 0.01, 0.1, 4);
        CHECK_THROWS_AS(sigma_k(q, 0), std::out_of_range);
        CHECK_THROWS_AS(sigma_k(q, 5), std::out_of_range);
    }
}

TEST_CASE("trace against the cotangent closed form") {
    // alpha = 0, beta = 1: Tr = sum_k 1/(1 + delta (k pi)^2), and the series
    // identity sum 1/(k^2 + a^2) = (pi a coth(pi a) - 1)/(2 a^2) with
    // a = 1/(pi sqrt(delta)) gives Tr = (coth(1/sqrt delta)/sqrt delta - 1)/2.
    const NoiseSpec q(0.0, 1.0, 0.01, 0.1, 2048);
    const TraceResult tr = trace_q(q);
    CHECK(tr.extrapolated == doctest::Approx(4.5000000206115363).epsilon(1e-9));
    CHECK(tr.truncated < tr.extrapolated);
    CHECK(tr.extrapolated < tr.truncated + tr.tail_bound);
}

TEST_CASE("single-term trace") {
    const NoiseSpec q(0.0, 1.0, 1.0, 0.1, 1);
    CHECK(trace_q(q).truncated == doctest::Approx(0.0919996683503752).epsilon(1e-14));
}

TEST_CASE("small-delta trace scaling stays bounded") {
    // Tr(delta) * delta^{(1+2 alpha)/(2 beta)} bounded as delta sweeps
    // 1e-1..1e-5 at alpha = 0, beta = 1.
    double largest = 0.0;
    for (double delta : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
        const NoiseSpec q(0.0, 1.0, delta, 0.1, 1024);
        const double product = trace_q(q).extrapolated * std::sqrt(delta);
        CHECK(product > 0.0);
        largest = std::max(largest, product);
    }
    CHECK(largest < 0.51); // the exact limit is coth-form 1/2
}

TEST_CASE("tail bound is positive, finite, and decreasing in N") {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {8u, 16u, 32u, 64u}) {
        const NoiseSpec q(0.25, 1.0, 0.05, 0.1, n);
        const TraceResult tr = trace_q(q);
        CHECK(tr.tail_bound > 0.0);
        CHECK(std::isfinite(tr.tail_bound));
        CHECK(tr.tail_bound < prev);
        prev = tr.tail_bound;
    }
}

TEST_CASE("truncated trace increases in N and the summability series converges") {
    double prev_trace = 0.0;
    double prev_sum = 0.0;
    for (std::size_t n : {4u, 8u, 16u, 32u, 64u}) {
        const NoiseSpec q(0.25, 1.0, 0.05, 0.1, n);
        const double tr = trace_q(q).truncated;
        CHECK(tr > prev_trace);
        prev_trace = tr;

        // sum_k sigma_k^2 / k^2: truncations monotone increasing and finite
        double s = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            const double sg = sigma_k(q, k);
            s += sg * sg / static_cast<double>(k * k);
        }
        CHECK(s > prev_sum);
        CHECK(std::isfinite(s));
        prev_sum = s;
    }
}

TEST_CASE("delta schedule") {
    SUBCASE("standard exponent makes the Assumption-5.1 quantity sqrt(epsilon)") {
        const double alpha = 0.25, beta = 1.0;
        const DeltaSchedule s = DeltaSchedule::standard(alpha, beta);
        CHECK(s.theta == doctest::Approx(beta / (1.0 + 2.0 * alpha)).epsilon(1e-15));
        for (double eps : {0.5, 0.1, 0.01}) {
            const double delta = s.delta(eps);
            const double q = eps * std::pow(delta, -(1.0 + 2.0 * alpha) / (2.0 * beta));
            CHECK(q == doctest::Approx(std::sqrt(eps)).epsilon(1e-12));
        }
    }
    SUBCASE("epsilon = 1 maps to delta = 1") {
        CHECK(DeltaSchedule(0.7, 0.0, 1.0).delta(1.0) == 1.0);
    }
    SUBCASE("halving epsilon scales delta by 2^{-theta}") {
        const DeltaSchedule s(0.7, 0.0, 1.0);
        CHECK(s.delta(0.05) / s.delta(0.1) == doctest::Approx(std::pow(2.0, -0.7)).epsilon(1e-13));
    }
    SUBCASE("inadmissible exponent is rejected") {
        // theta (1+2 alpha)/(2 beta) >= 1 must fail: theta = 2, alpha = 0, beta = 1.
        CHECK_THROWS_AS(DeltaSchedule(2.0, 0.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(DeltaSchedule(-0.5, 0.0, 1.0), std::invalid_argument);
    }
}

TEST_CASE("ou step coefficients") {
    const NoiseSpec q(0.25, 1.0, 0.01, 0.1, 8);

    SUBCASE("h <= 0 is rejected") {
        CHECK_THROWS_AS(ou_step_coeffs(q, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(ou_step_coeffs(q, -1.0), std::invalid_argument);
    }
    SUBCASE("epsilon = 0 keeps Z at zero") {
        const NoiseSpec q0(0.25, 1.0, 0.01, 0.0, 8);
        OuState state(q0, 42, 0);
        for (int i = 0; i < 50; ++i) ou_exact_step(state, q0, 0.1);
        for (double z : state.z.c) CHECK(z == 0.0);
        CHECK(state.t == doctest::Approx(5.0));
    }
    SUBCASE("large-h gain approaches the stationary variance") {
        const OuStepCoeffs c = ou_step_coeffs(q, 50.0);
        for (std::size_t k = 1; k <= 8; ++k) {
            CHECK(c.gain[k - 1] * c.gain[k - 1] ==
                  doctest::Approx(ou_stationary_variance(q, k)).epsilon(1e-12));
            CHECK(c.decay[k - 1] < 1e-200);
        }
    }
    SUBCASE("chapman-kolmogorov composition of half steps") {
        // Two steps h1 then h2 compose to one step h1 + h2: decays multiply
        // and variances satisfy g^2(h1+h2) = g^2(h2) + decay(h2)^2 g^2(h1).
        const OuStepCoeffs a = ou_step_coeffs(q, 0.013);
        const OuStepCoeffs b = ou_step_coeffs(q, 0.029);
        const OuStepCoeffs full = ou_step_coeffs(q, 0.042);
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(a.decay[i] * b.decay[i] == doctest::Approx(full.decay[i]).epsilon(1e-12));
            const double composed =
                b.gain[i] * b.gain[i] + b.decay[i] * b.decay[i] * a.gain[i] * a.gain[i];
            CHECK(composed == doctest::Approx(full.gain[i] * full.gain[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("stationary variance of mode 1 matches a long sample" *
          doctest::timeout(60)) {
    // One exact step of length 2 from zero is already the stationary law to
    // machine precision (decay e^{-2 pi^2} ~ 3e-9 squared in the variance),
    // so independent draws of it sample the invariant law directly.
    const NoiseSpec q(0.0, 1.0, 0.01, 0.1, 1);
    const double target = 0.1 * sigma_k(q, 1) * sigma_k(q, 1) * 0.050660591821168886;
    CHECK(ou_stationary_variance(q, 1) == doctest::Approx(target).epsilon(1e-10));

    const OuStepCoeffs c = ou_step_coeffs(q, 2.0);
    const std::size_t n = 100000;
    NormalSampler xi(2026, 0);
    SpectralField z(1);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        z.c[0] = 0.0;
        ou_exact_step(z, c, xi);
        sum += z.c[0];
        sum_sq += z.c[0] * z.c[0];
    }
    const double mean = sum / static_cast<double>(n);
    const double var = (sum_sq - static_cast<double>(n) * mean * mean) /
                       static_cast<double>(n - 1);
    // Var of the sample variance of a Gaussian: 2 v^2/(n-1).
    const double se = target * std::sqrt(2.0 / static_cast<double>(n - 1));
    CHECK(std::abs(var - target) <= 3.0 * se);
}

TEST_CASE("convolution tails shrink with epsilon") {
    // P(||Z(t)||_{H^{2 sigma}} >= R) at fixed t and R, decreasing across the
    // schedule.  sigma = 0.1 < 1/4 - alpha/2 with alpha = 0.
    const double t = 1.0, radius = 0.16, sigma = 0.1;
    const DeltaSchedule sched = DeltaSchedule::standard(0.0, 1.0);
    const std::size_t n = 40000;
    std::vector<double> p_hat;
    for (double eps : {0.4, 0.2, 0.1}) {
        const NoiseSpec q = noise_at(0.0, 1.0, sched, eps, 16);
        const OuStepCoeffs c = ou_step_coeffs(q, t);
        NormalSampler xi(918, static_cast<std::uint64_t>(eps * 1000));
        SpectralField z(16);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::fill(z.c.begin(), z.c.end(), 0.0);
            ou_exact_step(z, c, xi);
            if (sobolev_norm(z, 2.0 * sigma) >= radius) ++hits;
        }
        p_hat.push_back(static_cast<double>(hits) / static_cast<double>(n));
    }
    // Monotone decrease with 3-SE separation between neighbors.
    for (std::size_t i = 1; i < p_hat.size(); ++i) {
        const double se = std::sqrt((p_hat[i - 1] * (1 - p_hat[i - 1]) +
                                     p_hat[i] * (1 - p_hat[i])) /
                                    static_cast<double>(n));
        CHECK(p_hat[i] < p_hat[i - 1] - 3.0 * se);
    }
}
