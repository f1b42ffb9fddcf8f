#include "crsphere/poly.hpp"

#include <doctest.h>

#include <complex>
#include <random>
#include <sstream>

using namespace crs::poly;
using Poly = BigradedPolynomial;
using cd = std::complex<double>;

namespace {

cd evaluate(const Poly& p, const std::vector<cd>& z) {
  cd total = 0;
  for (const auto& [m, c] : p.terms()) {
    cd v(c.re.get_d(), c.im.get_d());
    for (int j = 0; j < p.dim(); ++j) v *= std::pow(z[j], m.a[j]) * std::pow(std::conj(z[j]), m.b[j]);
    total += v;
  }
  return total;
}

// Wirtinger derivatives by central differences: d/dz = (d/dx - i d/dy)/2, d/dzbar = (d/dx + i d/dy)/2.
std::pair<cd, cd> wirtinger(const Poly& p, std::vector<cd> z, int k) {
  const double h = 1e-5;
  auto shifted = [&](cd delta) {
    auto w = z;
    w[k] += delta;
    return evaluate(p, w);
  };
  const cd dx = (shifted(h) - shifted(-h)) / (2 * h);
  const cd dy = (shifted(cd(0, h)) - shifted(cd(0, -h))) / (2 * h);
  return {(dx - cd(0, 1) * dy) / 2.0, (dx + cd(0, 1) * dy) / 2.0};
}

Poly sample_poly(int n, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> e(0, 2), c(-5, 5);
  Poly p(n);
  for (int t = 0; t < 6; ++t) {
    Monomial m{std::vector<int>(n), std::vector<int>(n)};
    for (int j = 0; j < n; ++j) {
      m.a[j] = e(gen);
      m.b[j] = e(gen);
    }
    p.add_term(m, QComplex(mpq_class(c(gen), 3), mpq_class(c(gen), 7)));
  }
  return p;
}

}  // namespace

TEST_CASE("M operator examples") {
  const int n = 2;
  CHECK(apply_M(1, 2, Poly::z(n, 1)) == QComplex(mpq_class(-1)) * Poly::zbar(n, 2));
  CHECK(apply_M(1, 2, Poly::constant(n, QComplex(mpq_class(7)))).is_zero());
  CHECK(apply_M(1, 2, Poly::z(n, 2)) == Poly::zbar(n, 1));
  CHECK(apply_M_bar(1, 2, Poly::z(n, 1)).is_zero());
  CHECK(apply_M_bar(1, 2, Poly::zbar(n, 2)) == Poly::z(n, 1));
  CHECK(apply_M_bar(1, 2, Poly::zbar(n, 1)) == QComplex(mpq_class(-1)) * Poly::z(n, 2));
  CHECK_THROWS_AS(apply_M(2, 1, Poly::z(n, 1)), std::out_of_range);
  CHECK_THROWS_AS(apply_M(1, 3, Poly::z(n, 1)), std::out_of_range);
  CHECK_THROWS_AS(apply_M_bar(0, 1, Poly::z(n, 1)), std::out_of_range);
}

TEST_CASE("M operators agree with a numerical differentiator") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> g;
  for (int n : {2, 3}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Poly p = sample_poly(n, gen);
      std::vector<cd> z(n);
      for (auto& v : z) v = cd(g(gen), g(gen)) * 0.5;
      for (int j = 1; j <= n; ++j)
        for (int k = j + 1; k <= n; ++k) {
          const auto [dzk, dzbk] = wirtinger(p, z, k - 1);
          const auto [dzj, dzbj] = wirtinger(p, z, j - 1);
          const cd m_expect = std::conj(z[j - 1]) * dzk - std::conj(z[k - 1]) * dzj;
          const cd mb_expect = z[j - 1] * dzbk - z[k - 1] * dzbj;
          CHECK(std::abs(evaluate(apply_M(j, k, p), z) - m_expect) <= 1e-6 * (1 + std::abs(m_expect)));
          CHECK(std::abs(evaluate(apply_M_bar(j, k, p), z) - mb_expect) <= 1e-6 * (1 + std::abs(mb_expect)));
        }
    }
  }
}

TEST_CASE("sublaplacian examples") {
  const int n = 2;
  CHECK(apply_sublaplacian(Poly::z(n, 1)) == Poly::z(n, 1));
  const Poly p = Poly::z(n, 1) * Poly::zbar(n, 2);
  CHECK(apply_sublaplacian(p) == QComplex(mpq_class(4)) * p);
  CHECK(apply_sublaplacian(Poly::constant(n, QComplex(mpq_class(3)))).is_zero());
}

TEST_CASE("sublaplacian preserves bidegree") {
  std::mt19937_64 gen(8);
  for (int n : {2, 3})
    for (int l = 0; l <= 3; ++l)
      for (int lp = 0; lp <= 3; ++lp) {
        Poly p(n);
        const auto as = multi_indices(n, l);
        const auto bs = multi_indices(n, lp);
        for (std::size_t i = 0; i < as.size(); ++i)
          p.add_term(Monomial{as[i], bs[(i * 7) % bs.size()]}, QComplex(mpq_class(int(i) + 1)));
        const Poly lp_p = apply_sublaplacian(p);
        CHECK(lp_p.is_homogeneous());
        if (!lp_p.is_zero()) CHECK(lp_p.bidegree() == std::make_pair(l, lp));
      }
}

TEST_CASE("harmonic basis examples") {
  const auto b10 = harmonic_basis(1, 0, 2);
  REQUIRE(b10.size() == 2);
  CHECK(((b10[0] == Poly::z(2, 1) && b10[1] == Poly::z(2, 2)) || (b10[0] == Poly::z(2, 2) && b10[1] == Poly::z(2, 1))));
  CHECK(harmonic_basis(1, 1, 2).size() == 3);
  for (int n : {2, 3, 4})
    for (int l = 0; l <= 5; ++l) {
      mpz_class c;
      mpz_bin_uiui(c.get_mpz_t(), l + n - 1, l);
      CHECK(harmonic_basis(l, 0, n).size() == c.get_ui());
    }
  CHECK_THROWS_AS(harmonic_basis(5, 4, 2), std::out_of_range);
}

TEST_CASE("harmonic basis is harmonic and matches the dimension oracle") {
  for (int n : {2, 3})
    for (int l = 0; l <= 4; ++l)
      for (int lp = 0; l + lp <= 5; ++lp) {
        const auto basis = harmonic_basis(l, lp, n);
        CHECK(basis.size() == dimension_oracle(l, lp, n));
        for (const auto& p : basis) {
          CHECK(apply_complex_laplacian(p).is_zero());
          CHECK(p.bidegree() == std::make_pair(l, lp));
        }
      }
}

TEST_CASE("dimension oracle examples") {
  CHECK(dimension_oracle(1, 1, 2) == 3);
  for (int l = 0; l <= 20; ++l) CHECK(dimension_oracle(l, 0, 2) == std::uint64_t(l + 1));
  for (int n : {2, 3, 7}) CHECK(dimension_oracle(0, 0, n) == 1);
  // Brute-force rank count for (1,1), n = 2: four monomials, one trace constraint.
  CHECK(dimension_oracle(1, 1, 2) == 4 - 1);
}

TEST_CASE("reduction modulo the sphere relation") {
  const int n = 2;
  // |z|^2 reduces to 1.
  CHECK(reduce_on_sphere(norm_squared(n)) == Poly::constant(n, QComplex(mpq_class(1))));
  // z2 zb2 -> 1 - z1 zb1
  const Poly r = reduce_on_sphere(Poly::z(n, 2) * Poly::zbar(n, 2));
  CHECK(r == Poly::constant(n, QComplex(mpq_class(1))) - Poly::z(n, 1) * Poly::zbar(n, 1));
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Poly p = sample_poly(3, gen);
    const Poly red = reduce_on_sphere(p);
    for (const auto& [m, c] : red.terms()) CHECK((m.a[2] == 0 || m.b[2] == 0));
    // Agreement on the sphere.
    std::normal_distribution<double> g;
    std::vector<cd> z(3);
    double nn = 0;
    for (auto& v : z) {
      v = cd(g(gen), g(gen));
      nn += std::norm(v);
    }
    for (auto& v : z) v /= std::sqrt(nn);
    CHECK(std::abs(evaluate(p, z) - evaluate(red, z)) <= 1e-10 * (1 + std::abs(evaluate(p, z))));
  }
}

TEST_CASE("exact eigenvalue identity on small bidegrees") {
  for (int n : {2, 3})
    for (int l = 0; l <= 3; ++l)
      for (int lp = 0; l + lp <= 3; ++lp) {
        const QComplex lambda(mpq_class(2 * l * lp + (n - 1) * (l + lp)));
        for (const auto& p : harmonic_basis(l, lp, n))
          CHECK(reduce_on_sphere(apply_sublaplacian(p)) == reduce_on_sphere(lambda * p));
      }
}

TEST_CASE("text dump round trip") {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 5; ++trial) {
    const Poly p = sample_poly(3, gen);
    std::stringstream s;
    write_text(s, p);
    CHECK(read_text(s, 3) == p);
  }
  std::stringstream real;
  write_text(real, QComplex(mpq_class(-3, 4)) * Poly::z(2, 1));
  CHECK(real.str() == "1 0 | 0 0 | -3 | 4\n");
  std::istringstream bad("1 0 | 0 | 1 | 2\n");
  CHECK_THROWS(read_text(bad, 2));
  std::istringstream zero_den("1 0 | 0 0 | 1 | 0\n");
  CHECK_THROWS(read_text(zero_den, 2));
}
