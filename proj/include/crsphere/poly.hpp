#pragma once

#include <gmpxx.h>

#include <complex>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace crs::poly {

/// Exact Gaussian-rational coefficient re + i*im.
struct QComplex {
  mpq_class re{0};
  mpq_class im{0};

  QComplex() = default;
  QComplex(mpq_class r) : re(std::move(r)) {}
  QComplex(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {}

  bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
  friend QComplex operator+(const QComplex& x, const QComplex& y) { return {x.re + y.re, x.im + y.im}; }
  friend QComplex operator-(const QComplex& x, const QComplex& y) { return {x.re - y.re, x.im - y.im}; }
  friend QComplex operator*(const QComplex& x, const QComplex& y) {
    return {x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re};
  }
  friend bool operator==(const QComplex& x, const QComplex& y) { return x.re == y.re && x.im == y.im; }
};

/// Exponents of z (a) and of conj z (b).
struct Monomial {
  std::vector<int> a;
  std::vector<int> b;

  int z_degree() const;
  int zbar_degree() const;
  friend auto operator<=>(const Monomial&, const Monomial&) = default;
  friend bool operator==(const Monomial&, const Monomial&) = default;
};

/// Polynomial in z_1..z_n and conj z_1..conj z_n with exact coefficients; zero terms are never stored.
class BigradedPolynomial {
 public:
  explicit BigradedPolynomial(int n);

  static BigradedPolynomial constant(int n, const QComplex& c);
  /// z_j (1-based index).
  static BigradedPolynomial z(int n, int j);
  /// conj z_j (1-based index).
  static BigradedPolynomial zbar(int n, int j);
  static BigradedPolynomial monomial(int n, Monomial m, const QComplex& c);

  int dim() const { return n_; }
  const std::map<Monomial, QComplex>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  void add_term(const Monomial& m, const QComplex& c);

  /// (z-degree, zbar-degree) when homogeneous.
  bool is_homogeneous() const;
  std::pair<int, int> bidegree() const;

  /// d/dz_k and d/d(conj z_k), 1-based.
  BigradedPolynomial d_z(int k) const;
  BigradedPolynomial d_zbar(int k) const;

  BigradedPolynomial& operator+=(const BigradedPolynomial& o);
  BigradedPolynomial& operator-=(const BigradedPolynomial& o);
  friend BigradedPolynomial operator+(BigradedPolynomial x, const BigradedPolynomial& y) { return x += y; }
  friend BigradedPolynomial operator-(BigradedPolynomial x, const BigradedPolynomial& y) { return x -= y; }
  friend BigradedPolynomial operator*(const BigradedPolynomial& x, const BigradedPolynomial& y);
  friend BigradedPolynomial operator*(const QComplex& c, const BigradedPolynomial& p);
  friend bool operator==(const BigradedPolynomial& x, const BigradedPolynomial& y) {
    return x.n_ == y.n_ && x.terms_ == y.terms_;
  }

  std::string to_string() const;

 private:
  int n_;
  std::map<Monomial, QComplex> terms_;
};

/// M_jk = conj(z_j) d/dz_k - conj(z_k) d/dz_j, with 1 <= j < k <= n.
BigradedPolynomial apply_M(int j, int k, const BigradedPolynomial& p);
/// conj(M)_jk = z_j d/d(conj z_k) - z_k d/d(conj z_j).
BigradedPolynomial apply_M_bar(int j, int k, const BigradedPolynomial& p);
/// -sum_{j<k} (M_jk Mbar_jk + Mbar_jk M_jk) p.
BigradedPolynomial apply_sublaplacian(const BigradedPolynomial& p);
/// 4 sum_j d/dz_j d/d(conj z_j) p.
BigradedPolynomial apply_complex_laplacian(const BigradedPolynomial& p);

/// Canonical representative modulo |z|^2 - 1: no monomial contains both z_n and conj z_n.
BigradedPolynomial reduce_on_sphere(const BigradedPolynomial& p);

/// sum_j z_j conj(z_j).
BigradedPolynomial norm_squared(int n);

/// All multi-indices of length n and total degree d, lexicographically descending.
std::vector<std::vector<int>> multi_indices(int n, int d);

/// Basis of harmonic polynomials homogeneous of bidegree (l, lp), by exact nullspace computation.
std::vector<BigradedPolynomial> harmonic_basis(int l, int lp, int n, int degree_cap = 8);

/// d_{l,lp} = C(l+n-1,n-1) C(lp+n-1,n-1) - C(l+n-2,n-1) C(lp+n-2,n-1).
std::uint64_t dimension_oracle(int l, int lp, int n);

/// Numerical value at z (length n).
std::complex<double> evaluate(const BigradedPolynomial& p, std::span<const std::complex<double>> z);

/// One term per line: "a_1 .. a_n | b_1 .. b_n | num | den", with "| im_num | im_den"
/// appended only for non-real coefficients.
void write_text(std::ostream& os, const BigradedPolynomial& p);
BigradedPolynomial read_text(std::istream& is, int n);

}  // namespace crs::poly
