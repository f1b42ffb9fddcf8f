#include "crsphere/specfun.hpp"

#include <doctest.h>
#include <gmpxx.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace crs::specfun;

namespace {

mpz_class zbinom(int top, int bottom) {
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), top, bottom);
  return r;
}

// Explicit sum  P_k(x) = sum_s C(k+a, k-s) C(k+b, s) ((x-1)/2)^s ((x+1)/2)^{k-s}, exact for integer a, b.
mpq_class jacobi_series(int k, int a, int b, const mpq_class& x) {
  mpq_class lo = (x - 1) / 2, hi = (x + 1) / 2, total = 0;
  for (int s = 0; s <= k; ++s) {
    mpq_class term = mpq_class(zbinom(k + a, k - s) * zbinom(k + b, s));
    for (int i = 0; i < s; ++i) term *= lo;
    for (int i = 0; i < k - s; ++i) term *= hi;
    total += term;
  }
  return total;
}

}  // namespace

TEST_CASE("jacobi degree zero and one") {
  CHECK(jacobi_eval({0, 3.0, 7.0}, 0.3) == 1.0);
  for (double a : {0.0, 1.0, 2.5})
    for (double b : {0.0, 4.0})
      for (double x : {-1.0, -0.2, 0.7, 1.0})
        CHECK(jacobi_eval({1, a, b}, x) == doctest::Approx((a + 1) + (a + b + 2) * (x - 1) / 2).epsilon(1e-15));
}

TEST_CASE("jacobi matches exact explicit series") {
  for (int a : {0, 1, 3})
    for (int b : {0, 2, 9, 40})
      for (int k = 0; k <= 10; ++k)
        for (int num = -64; num <= 64; num += 7) {
          mpq_class x(num, 64);
          const double exact = jacobi_series(k, a, b, x).get_d();
          const double got = jacobi_eval({k, double(a), double(b)}, x.get_d());
          CHECK(std::abs(got - exact) <= 1e-13 * std::max(1.0, std::abs(exact)) * (k + 1));
        }
}

TEST_CASE("jacobi endpoint value is a binomial") {
  for (int a : {0, 1, 2})
    for (int k : {0, 1, 5, 30, 200}) {
      const double expect = binomial(k + a, k);
      CHECK(jacobi_eval({k, double(a), 17.0}, 1.0) == doctest::Approx(expect).epsilon(1e-12));
      CHECK(jacobi_at_one(k, a) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("jacobi relative accuracy at high degree against long double recurrence") {
  // Classic three-term recurrence carried in extended precision.
  auto reference = [](int k, long double a, long double b, long double x) {
    long double p0 = 1, p1 = (a + 1) + (a + b + 2) * (x - 1) / 2;
    if (k == 0) return p0;
    for (int m = 1; m < k; ++m) {
      long double s = 2 * m + a + b;
      long double c1 = 2 * (m + 1) * (m + a + b + 1) * s;
      long double c2 = (s + 1) * (a * a - b * b);
      long double c3 = s * (s + 1) * (s + 2);
      long double c4 = 2 * (m + a) * (m + b) * (s + 2);
      long double p2 = ((c2 + c3 * x) * p1 - c4 * p0) / c1;
      p0 = p1;
      p1 = p2;
    }
    return p1;
  };
  for (int k : {100, 300, 500})
    for (double x : {0.999, 0.9, 0.31}) {
      const long double ref = reference(k, 0.0L, 3.0L, x);
      const double got = jacobi_eval({k, 0.0, 3.0}, x);
      // Compare against the scale P_k(1) since interior values oscillate through zero.
      CHECK(std::abs(got - double(ref)) <= 1e-11 * jacobi_at_one(k, 0.0));
    }
}

TEST_CASE("jacobi_row agrees with jacobi_eval") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> xs{1.0, -1.0};
  for (int i = 0; i < 20; ++i) xs.push_back(u(gen));
  const auto rows = jacobi_row(40, 1.0, 6.0, xs);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (int k = 0; k <= 40; ++k)
      CHECK(std::abs(rows[i][k] - jacobi_eval({k, 1.0, 6.0}, xs[i])) <= 1e-13 * std::max(1.0, std::abs(rows[i][k])));
  const auto zero = jacobi_row(0, 0.0, 0.0, xs);
  for (const auto& r : zero) CHECK(r == std::vector<double>{1.0});
}

TEST_CASE("jacobi rejects points outside the interval") {
  CHECK_THROWS_AS(jacobi_eval({3, 0.0, 0.0}, 1.1), std::domain_error);
  CHECK_NOTHROW(jacobi_eval({3, 0.0, 0.0}, 1.0 + 1e-13));
}

TEST_CASE("jacobi orthogonality under gauss quadrature") {
  for (double a : {0.0, 1.0})
    for (double b : {0.0, 3.0}) {
      const auto g = gauss_jacobi(60, a, b);
      const auto rows = jacobi_row(50, a, b, g.nodes);
      for (int j = 0; j <= 50; j += 3)
        for (int k = j + 1; k <= 50; k += 4) {
          double s = 0, nj = 0, nk = 0;
          for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            s += g.weights[i] * rows[i][j] * rows[i][k];
            nj += g.weights[i] * rows[i][j] * rows[i][j];
            nk += g.weights[i] * rows[i][k] * rows[i][k];
          }
          CHECK(std::abs(s) <= 1e-10 * std::sqrt(nj * nk));
        }
    }
}

TEST_CASE("gauss_jacobi total mass and monomial moments") {
  for (double a : {0.0, 1.0, 2.0}) {
    const auto g = gauss_jacobi(12, a, 0.0);
    // int (1-x)^a (1+x)^m dx = 2^{a+m+1} a! m! / (a+m+1)!
    for (int m = 0; m <= 23; ++m) {
      double s = 0;
      for (std::size_t i = 0; i < g.nodes.size(); ++i) s += g.weights[i] * std::pow(1 + g.nodes[i], m);
      const double exact = std::exp((a + m + 1) * std::numbers::ln2 + std::lgamma(a + 1) + std::lgamma(m + 1.0) -
                                    std::lgamma(a + m + 2));
      CHECK(s == doctest::Approx(exact).epsilon(1e-13));
    }
  }
}

TEST_CASE("jacobi bounded by endpoint value") {
  for (int k : {1, 7, 40, 150}) {
    const double top = jacobi_at_one(k, 2.0);
    for (int i = 0; i <= 2000; ++i) {
      const double x = -1.0 + 2.0 * i / 2000.0;
      CHECK(std::abs(jacobi_eval({k, 2.0, 1.0}, x)) <= top * (1 + 1e-12));
    }
  }
}

TEST_CASE("log factorial") {
  CHECK(log_factorial(0) == 0.0);
  CHECK(log_factorial(5) == doctest::Approx(std::log(120.0)).epsilon(1e-16));
  long double s = 0;
  for (int k = 2; k <= 170; ++k) s += std::log(static_cast<long double>(k));
  CHECK(std::abs(log_factorial(170) - double(s)) <= 1e-13 * double(s));
  CHECK_THROWS(log_factorial(-1));
}

TEST_CASE("binomial helper") {
  CHECK(binomial(10, 3) == 120.0);
  CHECK(binomial(3, 5) == 0.0);
  CHECK(binomial(60, 30) == doctest::Approx(1.1826458156486115e17).epsilon(1e-14));
}

TEST_CASE("bump support, range and partition of unity") {
  const BumpPair& b = bump();
  CHECK(b.phi(0.4) == 0.0);
  CHECK(b.phi(0.5) == 0.0);
  CHECK(b.phi(2.0) == 0.0);
  CHECK(b.phi(3.0) == 0.0);
  CHECK(b.phi0(2.0) == 1.0);
  CHECK(b.phi0(1.0) == 1.0);
  CHECK(b.phi0(0.0) == 1.0);
  CHECK(b.phi0(0.25) == 0.0);
  for (int i = 0; i <= 4000; ++i) {
    const double t = 0.3 + 2.0 * i / 4000.0;
    const double v = b.phi(t);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (double t : {0.7, 1e-3, 0.013, 1.0, 1.5, 37.0, 1e4}) {
    double s = 0;
    for (int nu = -40; nu <= 40; ++nu) s += b.phi(std::ldexp(t, nu));
    CHECK(std::abs(s - 1.0) <= 1e-14);
  }
  // phi0 + sum_{nu >= 1} phi(2^nu t) = 1
  for (double t : {0.01, 0.2, 0.3, 0.6, 0.9}) {
    double s = b.phi0(t);
    for (int nu = 1; nu <= 60; ++nu) s += b.phi(std::ldexp(t, nu));
    CHECK(std::abs(s - 1.0) <= 1e-14);
  }
}

TEST_CASE("bump finite differences stay bounded") {
  const BumpPair& b = bump();
  const double h = 1e-2;
  double worst = 0;
  for (int i = 0; i <= 1700; ++i) {
    const double t = 0.4 + 1.7 * i / 1700.0;
    const double d4 = b.phi(t + 2 * h) - 4 * b.phi(t + h) + 6 * b.phi(t) - 4 * b.phi(t - h) + b.phi(t - 2 * h);
    worst = std::max(worst, std::abs(d4) / std::pow(h, 4));
  }
  CHECK(std::isfinite(worst));
  CHECK(worst < 1e6);
}

TEST_CASE("bump hash is stable") {
  CHECK(build_bump().definition_hash() == bump().definition_hash());
  CHECK(bump().definition_hash() != 0);
}
