#include "comprof/polya_gamma.hpp"

#include <cmath>
#include <numbers>

namespace comprof {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPiSq = kPi * kPi;
// Switch point between the left (inverse Gaussian) and right (exponential)
// proposal pieces.
constexpr double kTrunc = 2.0 / kPi;
const double kLogPi = std::log(kPi);
const double kLog2OverPi = std::log(2.0 / kPi);

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Coefficient a_n(x) of the alternating series for the J*(1) density.
double series_coefficient(int n, double x) {
  const double k = n + 0.5;
  if (x <= kTrunc) {
    return std::exp(kLogPi + std::log(k) + 1.5 * (kLog2OverPi - std::log(x)) - 2.0 * k * k / x);
  }
  return std::exp(kLogPi + std::log(k) - x * kPiSq * 0.5 * k * k);
}

// Gamma(1/2) truncated to (pi/2, inf), by rejection from a shifted exponential.
double truncated_gamma_half(Rng& rng) {
  constexpr double kShift = kPi / 2.0;
  const double scale = std::sqrt(kPi / 2.0);
  for (;;) {
    const double x = 2.0 * rng.exponential() + kShift;
    if (rng.uniform() <= scale / std::sqrt(x)) return x;
  }
}

double inverse_gaussian(double mu, Rng& rng) {
  const double n = rng.normal();
  const double v = n * n;
  double x = mu + 0.5 * mu * (mu * v - std::sqrt(4.0 * mu * v + mu * mu * v * v));
  if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
  return x;
}

// Inverse Gaussian IG(1/z, 1) truncated to (0, kTrunc).
double truncated_inverse_gaussian(double z, Rng& rng) {
  const double mu = 1.0 / z;
  if (mu > kTrunc) {
    for (;;) {
      const double x = 1.0 / truncated_gamma_half(rng);
      if (std::log(rng.uniform()) < -0.5 * z * z * x) return x;
    }
  }
  double x = kTrunc + 1.0;
  while (x >= kTrunc) x = inverse_gaussian(mu, rng);
  return x;
}

// Draw from J*(1, z) with z >= 0.
double sample_jacobi_star(double z, Rng& rng) {
  const double k = 0.5 * z * z + kPiSq / 8.0;
  const double log_a = std::log(4.0) - kLogPi - z;
  const double log_k = std::log(k);
  const double kt = k * kTrunc;
  const double w = std::sqrt(kPi / 2.0);

  const double log_left = log_a + std::log(normal_cdf(w * (kTrunc * z - 1.0))) + log_k + kt;
  const double log_left2 = log_a + 2.0 * z + std::log(normal_cdf(-w * (kTrunc * z + 1.0))) + log_k + kt;
  const double right_prob = 1.0 / (1.0 + std::exp(log_left) + std::exp(log_left2));

  for (;;) {
    const double x = rng.uniform() < right_prob ? kTrunc + rng.exponential() / k
                                                : truncated_inverse_gaussian(z, rng);
    double s = series_coefficient(0, x);
    const double u = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_coefficient(n, x);
        if (u <= s) return x;
      } else {
        s += series_coefficient(n, x);
        if (u > s) break;
      }
    }
  }
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double psi(double w, double x) { return std::exp(log_psi(w, x)); }

double log_psi(double w, double x) { return 0.5 * (w - x * w * w); }

PgDraw sample_pg1(double c, Rng& rng) {
  // PG(1, c) = J*(1, |c| / 2) / 4.
  return {0.25 * sample_jacobi_star(0.5 * std::fabs(c), rng), c};
}

}  // namespace comprof
