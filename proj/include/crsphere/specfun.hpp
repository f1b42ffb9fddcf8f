#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace crs::specfun {

/// Degree and exponents of P_k^{(alpha,beta)}.
struct JacobiParams {
  int degree = 0;
  double alpha = 0.0;
  double beta = 0.0;
};

/// Coefficients of one recurrence step written around x = 1:
///   P_{k+1}(x) = (slope * (x - 1) + at_one) * P_k(x) - lag * P_{k-1}(x).
/// Splitting off (x - 1) keeps the step accurate near x = 1 for large beta.
struct JacobiStep {
  double slope;
  double at_one;
  double lag;
};

JacobiStep jacobi_step(int k, double alpha, double beta);

double jacobi_eval(const JacobiParams& params, double x);

/// P_0..P_max_degree at every x; result[i][k] = P_k(xs[i]).
std::vector<std::vector<double>> jacobi_row(int max_degree, double alpha, double beta,
                                            std::span<const double> xs);

/// P_k^{(alpha,beta)}(1) = binom(k + alpha, k).
double jacobi_at_one(int k, double alpha);

double log_factorial(int m);
double log_binomial(double top, double bottom);
double binomial(int top, int bottom);

struct GaussRule {
  std::vector<double> nodes;    // ascending in (-1, 1)
  std::vector<double> weights;  // against (1-x)^alpha (1+x)^beta
};

/// Gauss-Jacobi rule with `count` nodes, exact for polynomials of degree <= 2*count - 1.
GaussRule gauss_jacobi(int count, double alpha, double beta);

/// Smooth dyadic partition of unity. phi is supported in (1/2, 2) and
/// sum_{nu in Z} phi(2^nu t) = 1 for t > 0; phi0(t) = 1 - sum_{nu >= 1} phi(2^nu t).
class BumpPair {
 public:
  double phi(double t) const;
  double phi0(double t) const;
  /// Cutoff with eta = 1 on (-inf, 1], 0 on [2, inf); phi(t) = eta(t) - eta(2t).
  static double eta(double t);
  /// Stable fingerprint of the construction (definition string plus sampled values).
  std::uint64_t definition_hash() const;
  static const char* definition();
};

BumpPair build_bump();

/// Process-wide instance used by the multiplier code.
const BumpPair& bump();

}  // namespace crs::specfun
