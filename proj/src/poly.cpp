#include "crsphere/poly.hpp"

#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace crs::poly {

int Monomial::z_degree() const { return std::accumulate(a.begin(), a.end(), 0); }
int Monomial::zbar_degree() const { return std::accumulate(b.begin(), b.end(), 0); }

BigradedPolynomial::BigradedPolynomial(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("BigradedPolynomial: n must be positive");
}

BigradedPolynomial BigradedPolynomial::constant(int n, const QComplex& c) {
  return monomial(n, Monomial{std::vector<int>(n, 0), std::vector<int>(n, 0)}, c);
}

BigradedPolynomial BigradedPolynomial::z(int n, int j) {
  if (j < 1 || j > n) throw std::out_of_range("z: index out of range");
  Monomial m{std::vector<int>(n, 0), std::vector<int>(n, 0)};
  m.a[j - 1] = 1;
  return monomial(n, std::move(m), QComplex(1));
}

BigradedPolynomial BigradedPolynomial::zbar(int n, int j) {
  if (j < 1 || j > n) throw std::out_of_range("zbar: index out of range");
  Monomial m{std::vector<int>(n, 0), std::vector<int>(n, 0)};
  m.b[j - 1] = 1;
  return monomial(n, std::move(m), QComplex(1));
}

BigradedPolynomial BigradedPolynomial::monomial(int n, Monomial m, const QComplex& c) {
  if (static_cast<int>(m.a.size()) != n || static_cast<int>(m.b.size()) != n)
    throw std::invalid_argument("monomial: exponent length mismatch");
  BigradedPolynomial p(n);
  p.add_term(m, c);
  return p;
}

void BigradedPolynomial::add_term(const Monomial& m, const QComplex& coeff) {
  QComplex c = coeff;
  c.re.canonicalize();
  c.im.canonicalize();
  if (c.is_zero()) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(m, c);
    return;
  }
  it->second = it->second + c;
  it->second.re.canonicalize();
  it->second.im.canonicalize();
  if (it->second.is_zero()) terms_.erase(it);
}

bool BigradedPolynomial::is_homogeneous() const {
  if (terms_.empty()) return true;
  const auto& first = terms_.begin()->first;
  int za = first.z_degree(), zb = first.zbar_degree();
  for (const auto& [m, c] : terms_)
    if (m.z_degree() != za || m.zbar_degree() != zb) return false;
  return true;
}

std::pair<int, int> BigradedPolynomial::bidegree() const {
  if (!is_homogeneous()) throw std::logic_error("bidegree: polynomial is not homogeneous");
  if (terms_.empty()) return {0, 0};
  const auto& m = terms_.begin()->first;
  return {m.z_degree(), m.zbar_degree()};
}

BigradedPolynomial BigradedPolynomial::d_z(int k) const {
  if (k < 1 || k > n_) throw std::out_of_range("d_z: index out of range");
  BigradedPolynomial out(n_);
  for (const auto& [m, c] : terms_) {
    int e = m.a[k - 1];
    if (e == 0) continue;
    Monomial r = m;
    r.a[k - 1] = e - 1;
    out.add_term(r, QComplex(mpq_class(e)) * c);
  }
  return out;
}

BigradedPolynomial BigradedPolynomial::d_zbar(int k) const {
  if (k < 1 || k > n_) throw std::out_of_range("d_zbar: index out of range");
  BigradedPolynomial out(n_);
  for (const auto& [m, c] : terms_) {
    int e = m.b[k - 1];
    if (e == 0) continue;
    Monomial r = m;
    r.b[k - 1] = e - 1;
    out.add_term(r, QComplex(mpq_class(e)) * c);
  }
  return out;
}

BigradedPolynomial& BigradedPolynomial::operator+=(const BigradedPolynomial& o) {
  if (o.n_ != n_) throw std::invalid_argument("polynomial dimension mismatch");
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

BigradedPolynomial& BigradedPolynomial::operator-=(const BigradedPolynomial& o) {
  if (o.n_ != n_) throw std::invalid_argument("polynomial dimension mismatch");
  for (const auto& [m, c] : o.terms_) add_term(m, QComplex(-c.re, -c.im));
  return *this;
}

BigradedPolynomial operator*(const BigradedPolynomial& x, const BigradedPolynomial& y) {
  if (x.n_ != y.n_) throw std::invalid_argument("polynomial dimension mismatch");
  BigradedPolynomial out(x.n_);
  for (const auto& [mx, cx] : x.terms_) {
    for (const auto& [my, cy] : y.terms_) {
      Monomial m = mx;
      for (int j = 0; j < x.n_; ++j) {
        m.a[j] += my.a[j];
        m.b[j] += my.b[j];
      }
      out.add_term(m, cx * cy);
    }
  }
  return out;
}

BigradedPolynomial operator*(const QComplex& c, const BigradedPolynomial& p) {
  BigradedPolynomial out(p.n_);
  for (const auto& [m, v] : p.terms_) out.add_term(m, c * v);
  return out;
}

namespace {

std::string coeff_string(const QComplex& c) {
  std::ostringstream s;
  if (sgn(c.im) == 0) {
    s << c.re;
  } else {
    s << "(" << c.re << (sgn(c.im) < 0 ? "-" : "+") << abs(c.im) << "i)";
  }
  return s.str();
}

void check_pair(int j, int k, int n) {
  if (j < 1 || k > n || j >= k) throw std::out_of_range("operator index pair must satisfy 1 <= j < k <= n");
}

}  // namespace

std::string BigradedPolynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream s;
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (!first) s << " + ";
    first = false;
    s << coeff_string(c);
    for (int j = 0; j < n_; ++j) {
      if (m.a[j]) s << "*z" << j + 1 << (m.a[j] > 1 ? "^" + std::to_string(m.a[j]) : "");
      if (m.b[j]) s << "*zb" << j + 1 << (m.b[j] > 1 ? "^" + std::to_string(m.b[j]) : "");
    }
  }
  return s.str();
}

BigradedPolynomial apply_M(int j, int k, const BigradedPolynomial& p) {
  const int n = p.dim();
  check_pair(j, k, n);
  return BigradedPolynomial::zbar(n, j) * p.d_z(k) - BigradedPolynomial::zbar(n, k) * p.d_z(j);
}

BigradedPolynomial apply_M_bar(int j, int k, const BigradedPolynomial& p) {
  const int n = p.dim();
  check_pair(j, k, n);
  return BigradedPolynomial::z(n, j) * p.d_zbar(k) - BigradedPolynomial::z(n, k) * p.d_zbar(j);
}

BigradedPolynomial apply_sublaplacian(const BigradedPolynomial& p) {
  const int n = p.dim();
  BigradedPolynomial acc(n);
  for (int j = 1; j <= n; ++j) {
    for (int k = j + 1; k <= n; ++k) {
      acc += apply_M(j, k, apply_M_bar(j, k, p));
      acc += apply_M_bar(j, k, apply_M(j, k, p));
    }
  }
  return QComplex(mpq_class(-1)) * acc;
}

BigradedPolynomial apply_complex_laplacian(const BigradedPolynomial& p) {
  BigradedPolynomial acc(p.dim());
  for (int j = 1; j <= p.dim(); ++j) acc += p.d_z(j).d_zbar(j);
  return QComplex(mpq_class(4)) * acc;
}

BigradedPolynomial norm_squared(int n) {
  BigradedPolynomial s(n);
  for (int j = 1; j <= n; ++j) s += BigradedPolynomial::z(n, j) * BigradedPolynomial::zbar(n, j);
  return s;
}

BigradedPolynomial reduce_on_sphere(const BigradedPolynomial& p) {
  const int n = p.dim();
  BigradedPolynomial replacement = BigradedPolynomial::constant(n, QComplex(1));
  for (int j = 1; j < n; ++j)
    replacement -= BigradedPolynomial::z(n, j) * BigradedPolynomial::zbar(n, j);

  BigradedPolynomial out(n);
  BigradedPolynomial work = p;
  while (!work.is_zero()) {
    BigradedPolynomial next(n);
    for (const auto& [m, c] : work.terms()) {
      int e = std::min(m.a[n - 1], m.b[n - 1]);
      if (e == 0) {
        out.add_term(m, c);
        continue;
      }
      Monomial stripped = m;
      stripped.a[n - 1] -= 1;
      stripped.b[n - 1] -= 1;
      next += BigradedPolynomial::monomial(n, stripped, c) * replacement;
    }
    work = std::move(next);
  }
  return out;
}

namespace {

void compose(int n, int d, int pos, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (pos == n - 1) {
    cur[pos] = d;
    out.push_back(cur);
    return;
  }
  for (int e = d; e >= 0; --e) {
    cur[pos] = e;
    compose(n, d - e, pos + 1, cur, out);
  }
}

}  // namespace

std::vector<std::vector<int>> multi_indices(int n, int d) {
  if (n < 1 || d < 0) throw std::invalid_argument("multi_indices: bad arguments");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  compose(n, d, 0, cur, out);
  return out;
}

std::vector<BigradedPolynomial> harmonic_basis(int l, int lp, int n, int degree_cap) {
  if (l < 0 || lp < 0 || n < 2) throw std::invalid_argument("harmonic_basis: bad arguments");
  if (l + lp > degree_cap) throw std::out_of_range("harmonic_basis: degree cap exceeded");

  std::vector<Monomial> cols;
  for (const auto& a : multi_indices(n, l))
    for (const auto& b : multi_indices(n, lp)) cols.push_back(Monomial{a, b});
  const std::size_t ncol = cols.size();

  std::vector<Monomial> rows;
  std::map<Monomial, std::size_t> row_index;
  if (l > 0 && lp > 0) {
    for (const auto& a : multi_indices(n, l - 1))
      for (const auto& b : multi_indices(n, lp - 1)) {
        row_index.emplace(Monomial{a, b}, rows.size());
        rows.push_back(Monomial{a, b});
      }
  }

  // Laplacian coefficients are real integers, so the nullspace has a real rational basis.
  std::vector<std::vector<mpq_class>> mat(rows.size(), std::vector<mpq_class>(ncol, 0));
  for (std::size_t c = 0; c < ncol; ++c) {
    const Monomial& m = cols[c];
    for (int j = 0; j < n; ++j) {
      if (m.a[j] == 0 || m.b[j] == 0) continue;
      Monomial r = m;
      r.a[j] -= 1;
      r.b[j] -= 1;
      mat[row_index.at(r)][c] += 4 * m.a[j] * m.b[j];
    }
  }

  std::vector<std::size_t> pivot_cols;
  std::size_t prow = 0;
  for (std::size_t c = 0; c < ncol && prow < rows.size(); ++c) {
    std::size_t sel = prow;
    while (sel < rows.size() && sgn(mat[sel][c]) == 0) ++sel;
    if (sel == rows.size()) continue;
    std::swap(mat[sel], mat[prow]);
    mpq_class inv = 1 / mat[prow][c];
    for (auto& v : mat[prow]) v *= inv;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == prow || sgn(mat[r][c]) == 0) continue;
      mpq_class f = mat[r][c];
      for (std::size_t k = c; k < ncol; ++k) mat[r][k] -= f * mat[prow][k];
    }
    pivot_cols.push_back(c);
    ++prow;
  }

  std::vector<bool> is_pivot(ncol, false);
  for (auto c : pivot_cols) is_pivot[c] = true;

  std::vector<BigradedPolynomial> basis;
  for (std::size_t f = 0; f < ncol; ++f) {
    if (is_pivot[f]) continue;
    BigradedPolynomial p(n);
    p.add_term(cols[f], QComplex(1));
    for (std::size_t r = 0; r < pivot_cols.size(); ++r) {
      if (sgn(mat[r][f]) == 0) continue;
      p.add_term(cols[pivot_cols[r]], QComplex(mpq_class(-mat[r][f])));
    }
    basis.push_back(std::move(p));
  }
  return basis;
}

namespace {

mpz_class binom_exact(int top, int bottom) {
  if (bottom < 0 || top < bottom) return 0;
  mpz_class r;
  mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(top), static_cast<unsigned long>(bottom));
  return r;
}

}  // namespace

std::complex<double> evaluate(const BigradedPolynomial& p, std::span<const std::complex<double>> z) {
  if (static_cast<int>(z.size()) != p.dim()) throw std::invalid_argument("evaluate: dimension mismatch");
  std::complex<double> acc = 0.0;
  for (const auto& [m, c] : p.terms()) {
    std::complex<double> t(c.re.get_d(), c.im.get_d());
    for (std::size_t j = 0; j < z.size(); ++j) {
      for (int e = 0; e < m.a[j]; ++e) t *= z[j];
      for (int e = 0; e < m.b[j]; ++e) t *= std::conj(z[j]);
    }
    acc += t;
  }
  return acc;
}

std::uint64_t dimension_oracle(int l, int lp, int n) {
  if (l < 0 || lp < 0 || n < 2) throw std::invalid_argument("dimension_oracle: bad arguments");
  mpz_class d = binom_exact(l + n - 1, n - 1) * binom_exact(lp + n - 1, n - 1) -
                binom_exact(l + n - 2, n - 1) * binom_exact(lp + n - 2, n - 1);
  if (!d.fits_ulong_p()) throw std::overflow_error("dimension_oracle: result too large");
  return d.get_ui();
}

void write_text(std::ostream& os, const BigradedPolynomial& p) {
  for (const auto& [m, c] : p.terms()) {
    for (int j = 0; j < p.dim(); ++j) os << (j ? " " : "") << m.a[j];
    os << " |";
    for (int j = 0; j < p.dim(); ++j) os << " " << m.b[j];
    os << " | " << c.re.get_num() << " | " << c.re.get_den();
    if (sgn(c.im) != 0) os << " | " << c.im.get_num() << " | " << c.im.get_den();
    os << "\n";
  }
}

BigradedPolynomial read_text(std::istream& is, int n) {
  BigradedPolynomial p(n);
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '|')) fields.push_back(f);
    if (fields.size() != 4 && fields.size() != 6) throw std::runtime_error("read_text: malformed line: " + line);
    auto ints = [&](const std::string& s) {
      std::istringstream in(s);
      std::vector<int> v;
      int x;
      while (in >> x) v.push_back(x);
      if (static_cast<int>(v.size()) != n) throw std::runtime_error("read_text: wrong exponent count");
      for (int e : v)
        if (e < 0) throw std::runtime_error("read_text: negative exponent");
      return v;
    };
    auto rational = [](const std::string& num, const std::string& den) {
      std::istringstream a(num), b(den);
      std::string sn, sd;
      a >> sn;
      b >> sd;
      mpz_class zd(sd);
      if (sgn(zd) == 0) throw std::runtime_error("read_text: zero denominator");
      mpq_class q(mpz_class(sn), zd);
      q.canonicalize();
      return q;
    };
    Monomial m{ints(fields[0]), ints(fields[1])};
    QComplex c(rational(fields[2], fields[3]));
    if (fields.size() == 6) c.im = rational(fields[4], fields[5]);
    p.add_term(m, c);
  }
  return p;
}

}  // namespace crs::poly
