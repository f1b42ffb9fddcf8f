#include "crsphere/specfun.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string_view>

namespace crs::specfun {

namespace {

void check_exponents(double alpha, double beta) {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha <= -1.0 || beta <= -1.0)
    throw std::invalid_argument("jacobi: exponents must be finite and > -1");
}

}  // namespace

JacobiStep jacobi_step(int k, double alpha, double beta) {
  if (k == 0) return {(alpha + beta + 2.0) / 2.0, alpha + 1.0, 0.0};
  const double kk = k;
  const double p = alpha + beta;
  const double s = 2.0 * kk + p;
  const double den = 2.0 * (kk + 1.0) * (kk + p + 1.0) * s;
  const double slope = (s + 1.0) * (s + 2.0) * s / den;
  // a_k + b_k; every term is non-negative so there is no cancellation.
  const double at_one = (s + 1.0) * (4.0 * kk * kk + 4.0 * kk * (p + 1.0) + 2.0 * p * (alpha + 1.0)) / den;
  const double lag = 2.0 * (kk + alpha) * (kk + beta) * (s + 2.0) / den;
  return {slope, at_one, lag};
}

double jacobi_eval(const JacobiParams& params, double x) {
  if (params.degree < 0) throw std::invalid_argument("jacobi_eval: negative degree");
  check_exponents(params.alpha, params.beta);
  if (!(std::abs(x) <= 1.0 + 1e-12)) throw std::domain_error("jacobi_eval: x outside [-1, 1]");
  const double y = x - 1.0;
  double prev = 0.0;
  double cur = 1.0;
  for (int k = 0; k < params.degree; ++k) {
    const JacobiStep st = jacobi_step(k, params.alpha, params.beta);
    const double next = (st.slope * y + st.at_one) * cur - st.lag * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

std::vector<std::vector<double>> jacobi_row(int max_degree, double alpha, double beta,
                                            std::span<const double> xs) {
  if (max_degree < 0) throw std::invalid_argument("jacobi_row: negative degree");
  check_exponents(alpha, beta);
  std::vector<JacobiStep> steps(static_cast<std::size_t>(max_degree));
  for (int k = 0; k < max_degree; ++k) steps[k] = jacobi_step(k, alpha, beta);

  std::vector<std::vector<double>> out;
  out.reserve(xs.size());
  for (double x : xs) {
    if (!(std::abs(x) <= 1.0 + 1e-12)) throw std::domain_error("jacobi_row: x outside [-1, 1]");
    std::vector<double> row(static_cast<std::size_t>(max_degree) + 1);
    const double y = x - 1.0;
    double prev = 0.0;
    double cur = 1.0;
    row[0] = 1.0;
    for (int k = 0; k < max_degree; ++k) {
      const double next = (steps[k].slope * y + steps[k].at_one) * cur - steps[k].lag * prev;
      prev = cur;
      cur = next;
      row[k + 1] = cur;
    }
    out.push_back(std::move(row));
  }
  return out;
}

double jacobi_at_one(int k, double alpha) { return std::exp(log_binomial(k + alpha, k)); }

double log_factorial(int m) {
  if (m < 0) throw std::invalid_argument("log_factorial: negative argument");
  if (m <= 20) {
    std::uint64_t f = 1;
    for (int i = 2; i <= m; ++i) f *= static_cast<std::uint64_t>(i);
    return std::log(static_cast<double>(f));
  }
  return std::lgamma(static_cast<double>(m) + 1.0);
}

double log_binomial(double top, double bottom) {
  return std::lgamma(top + 1.0) - std::lgamma(bottom + 1.0) - std::lgamma(top - bottom + 1.0);
}

double binomial(int top, int bottom) {
  if (bottom < 0 || bottom > top) return 0.0;
  bottom = std::min(bottom, top - bottom);
  double r = 1.0;
  for (int i = 1; i <= bottom; ++i) r = r * (top - bottom + i) / i;
  return r < 9e15 ? std::round(r) : r;
}

GaussRule gauss_jacobi(int count, double alpha, double beta) {
  if (count < 1) throw std::invalid_argument("gauss_jacobi: count must be >= 1");
  check_exponents(alpha, beta);
  const double p = alpha + beta;

  Eigen::VectorXd diag(count);
  Eigen::VectorXd sub(std::max(count - 1, 0));
  for (int k = 0; k < count; ++k) {
    if (k == 0)
      diag[k] = (beta - alpha) / (p + 2.0);
    else
      diag[k] = (beta * beta - alpha * alpha) / ((2.0 * k + p) * (2.0 * k + p + 2.0));
  }
  for (int k = 1; k < count; ++k) {
    const double s = 2.0 * k + p;
    sub[k - 1] = 2.0 / s *
                 std::sqrt(k * (k + alpha) * (k + beta) * (k + p) / ((s - 1.0) * (s + 1.0)));
  }

  GaussRule rule;
  rule.nodes.resize(count);
  if (count == 1) {
    rule.nodes[0] = diag[0];
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    for (int i = 0; i < count; ++i) rule.nodes[i] = solver.eigenvalues()[i];
  }

  // Newton polish on P_N, then weights from P_N'.
  const double log_const = (p + 1.0) * std::numbers::ln2 + std::lgamma(count + alpha + 1.0) +
                           std::lgamma(count + beta + 1.0) - std::lgamma(count + p + 1.0) -
                           std::lgamma(count + 1.0);
  const double dscale = (count + p + 1.0) / 2.0;
  rule.weights.resize(count);
  for (int i = 0; i < count; ++i) {
    double x = rule.nodes[i];
    double deriv = 0.0;
    for (int it = 0; it < 4; ++it) {
      const double f = jacobi_eval({count, alpha, beta}, x);
      deriv = dscale * jacobi_eval({count - 1, alpha + 1.0, beta + 1.0}, x);
      const double dx = f / deriv;
      x -= dx;
      if (std::abs(dx) <= 1e-17) break;
    }
    x = std::clamp(x, -1.0, 1.0);
    deriv = dscale * jacobi_eval({count - 1, alpha + 1.0, beta + 1.0}, x);
    rule.nodes[i] = x;
    rule.weights[i] = std::exp(log_const) / ((1.0 - x) * (1.0 + x) * deriv * deriv);
  }
  return rule;
}

// ---------------------------------------------------------------------------

double BumpPair::eta(double t) {
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  const double a = std::exp(-1.0 / (2.0 - t));
  const double b = std::exp(-1.0 / (t - 1.0));
  return a / (a + b);
}

double BumpPair::phi(double t) const { return eta(t) - eta(2.0 * t); }

double BumpPair::phi0(double t) const {
  if (t <= 0.0) return 1.0;
  return 1.0 - eta(2.0 * t);
}

const char* BumpPair::definition() {
  return "s(x)=exp(-1/x) (x>0); eta=1 on t<=1, 0 on t>=2, s(2-t)/(s(2-t)+s(t-1)) between; "
         "phi(t)=eta(t)-eta(2t); phi0(t)=1-eta(2t)";
}

std::uint64_t BumpPair::definition_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 1099511628211ull;
  };
  for (char c : std::string_view(definition())) mix(static_cast<std::uint8_t>(c));
  for (int i = 0; i <= 64; ++i) {
    const double v = phi(0.5 + 1.5 * i / 64.0);
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) mix(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  return h;
}

BumpPair build_bump() { return BumpPair{}; }

const BumpPair& bump() {
  static const BumpPair instance = build_bump();
  return instance;
}

}  // namespace crs::specfun
