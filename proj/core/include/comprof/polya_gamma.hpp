#pragma once

#include "comprof/rng.hpp"

namespace comprof {

double sigmoid(double x);
/// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x);

/// psi(w, x) = exp((w - x w^2) / 2), the Gaussian-mixture kernel whose
/// PG(1, 0) average equals 2 * sigmoid(w).
double psi(double w, double x);
double log_psi(double w, double x);

struct PgDraw {
  double value;
  double tilt;
};

/// Exact draw from PG(1, c) using the alternating-series sampler for the
/// exponentially tilted Jacobi distribution. Distribution is symmetric in c.
PgDraw sample_pg1(double c, Rng& rng);

}  // namespace comprof
