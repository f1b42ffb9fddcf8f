#include "crsphere/sphere.hpp"
#include "crsphere/specfun.hpp"

#include <Eigen/Dense>
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace crs;
using std::numbers::pi;

namespace {

SpherePoint apply(const Eigen::MatrixXcd& u, const SpherePoint& z) {
  Eigen::VectorXcd v(z.dim());
  for (int j = 0; j < z.dim(); ++j) v[j] = z[j];
  Eigen::VectorXcd w = u * v;
  return SpherePoint(std::vector<Complex>(w.data(), w.data() + w.size()));
}

Eigen::MatrixXcd random_unitary(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = Complex(g(gen), g(gen));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
}

// Closed-form moment  int |z^a|^2 dsigma = 2 pi^n a! / (n - 1 + |a|)!.
double monomial_moment(const std::vector<int>& a) {
  const int n = static_cast<int>(a.size());
  double lf = 0;
  int total = 0;
  for (int e : a) {
    lf += specfun::log_factorial(e);
    total += e;
  }
  return 2 * std::pow(pi, n) * std::exp(lf - specfun::log_factorial(n - 1 + total));
}

void all_indices(int n, int maxdeg, std::vector<int>& cur, int pos, std::vector<std::vector<int>>& out) {
  if (pos == n) {
    out.push_back(cur);
    return;
  }
  int used = 0;
  for (int j = 0; j < pos; ++j) used += cur[j];
  for (int e = 0; used + e <= maxdeg; ++e) {
    cur[pos] = e;
    all_indices(n, maxdeg, cur, pos + 1, out);
  }
}

}  // namespace

TEST_CASE("sphere point construction") {
  SpherePoint p({Complex(3, 0), Complex(0, 4)});
  CHECK(std::abs(p[0] - Complex(0.6, 0)) < 1e-15);
  CHECK_THROWS(SpherePoint({Complex(0), Complex(0)}));
  CHECK_THROWS(SpherePoint({Complex(1)}));
  CHECK_THROWS(SpherePoint::basis(2, 2));
}

TEST_CASE("distance examples") {
  const auto e1 = SpherePoint::basis(2, 0);
  const auto e2 = SpherePoint::basis(2, 1);
  const SpherePoint m1({Complex(-1), Complex(0)});
  CHECK(distance(e1, e1) == 0.0);
  CHECK(distance(e1, m1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(distance(e1, e2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS(distance(e1, SpherePoint::basis(3, 0)));
}

TEST_CASE("ball membership examples") {
  const auto e1 = SpherePoint::basis(2, 0);
  const auto e2 = SpherePoint::basis(2, 1);
  for (const auto& w : sample_uniform(3, 50, 2)) CHECK(ball_membership(e1, 1.5, w));
  CHECK_FALSE(ball_membership(e1, 0.5, e2));
  CHECK(ball_membership(e1, 1e-6, e1));
}

TEST_CASE("distance is unitarily invariant") {
  std::mt19937_64 gen(11);
  for (int n : {2, 3, 5}) {
    const auto pts = sample_uniform(100 + n, 40, n);
    for (int trial = 0; trial < 5; ++trial) {
      const auto u = random_unitary(n, gen);
      for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
        const double before = distance(pts[i], pts[i + 1]);
        const double after = distance(apply(u, pts[i]), apply(u, pts[i + 1]));
        CHECK(std::abs(before - after) <= 1e-12);
      }
    }
  }
}

TEST_CASE("uniform sampling statistics and determinism") {
  const int count = 1000000;
  const auto pts = sample_uniform(2024, count, 2);
  const auto eta = SpherePoint::basis(2, 0);
  Complex mean_inner = 0;
  double mean_z1 = 0;
  for (const auto& p : pts) {
    mean_inner += inner(p, eta);
    mean_z1 += std::norm(p[0]);
  }
  mean_inner /= double(count);
  mean_z1 /= count;
  CHECK(std::abs(mean_inner) <= 3.0 / std::sqrt(double(count)));
  // Var |z_1|^2 = 1/12 for n = 2.
  CHECK(std::abs(mean_z1 - 0.5) <= 4.0 * std::sqrt(1.0 / 12.0 / count));
  const auto a = sample_uniform(5, 20, 3);
  const auto b = sample_uniform(5, 20, 3);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int j = 0; j < 3; ++j) CHECK(a[i][j] == b[i][j]);
}

TEST_CASE("sphere area against Monte Carlo ball volume") {
  // |S^{2n-1}| = 2n |B^{2n}|, with |B^{2n}| estimated by hits in the cube.
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n : {2, 3}) {
    const int trials = 400000;
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
      double s = 0;
      for (int k = 0; k < 2 * n; ++k) {
        const double v = u(gen);
        s += v * v;
      }
      hits += s < 1.0;
    }
    const double frac = double(hits) / trials;
    const double est = 2 * n * std::pow(2.0, 2 * n) * frac;
    const double sigma = 2 * n * std::pow(2.0, 2 * n) * std::sqrt(frac * (1 - frac) / trials);
    CHECK(std::abs(est - sphere_area(n)) <= 4 * sigma);
  }
  CHECK(sphere_area(2) == doctest::Approx(2 * pi * pi).epsilon(1e-15));
}

TEST_CASE("zonal quadrature examples and exactness") {
  for (int n : {2, 3, 4}) {
    const int deg = 30;
    const auto rule = zonal_quadrature(n, deg);
    const double omega = sphere_area(n);
    CHECK(rule.total_weight() == doctest::Approx(omega).epsilon(1e-13));
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        Complex s = 0;
        for (std::size_t i = 0; i < rule.radial_count(); ++i)
          for (int j = 0; j < rule.angular_count; ++j) {
            const Complex u = std::polar(rule.radius[i], rule.phi(j));
            s += rule.radial_weight[i] * std::pow(u, a) * std::pow(std::conj(u), b);
          }
        // int |<z,eta>|^{2a} dsigma = omega a! (n-1)! / (n-1+a)!
        const double exact =
            a == b ? omega * std::exp(specfun::log_factorial(a) + specfun::log_factorial(n - 1) -
                                      specfun::log_factorial(n - 1 + a))
                   : 0.0;
        CHECK(std::abs(s - exact) <= 1e-12 * omega);
      }
  }
  const auto r2 = zonal_quadrature(2, 4);
  double s = 0;
  for (std::size_t i = 0; i < r2.radial_count(); ++i) s += r2.radial_weight[i] * r2.angular_count * r2.radius[i] * r2.radius[i];
  CHECK(s == doctest::Approx(pi * pi).epsilon(1e-14));
}

TEST_CASE("full sphere quadrature exactness on monomials") {
  for (int n : {2, 3}) {
    const int deg = n == 2 ? 12 : 8;
    const auto rule = sphere_quadrature(n, deg);
    const double omega = sphere_area(n);
    std::vector<std::vector<int>> idx;
    std::vector<int> cur(n);
    all_indices(n, deg, cur, 0, idx);
    for (const auto& a : idx) {
      int da = 0;
      for (int e : a) da += e;
      for (const auto& b : idx) {
        int db = 0;
        for (int e : b) db += e;
        if (da + db > deg) continue;
        Complex s = 0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
          Complex m = 1;
          for (int j = 0; j < n; ++j) m *= std::pow(rule.nodes[k][j], a[j]) * std::pow(std::conj(rule.nodes[k][j]), b[j]);
          s += rule.weights[k] * m;
        }
        const double exact = a == b ? monomial_moment(a) : 0.0;
        CHECK(std::abs(s - exact) <= 1e-12 * std::max(omega, 1.0) * std::max(1.0, std::abs(exact) / omega));
      }
    }
  }
}

TEST_CASE("ball volume grows like radius to the homogeneous dimension") {
  // For n = 3 the curvature of the exact volume near r = 1 bends the slope to about 5.84,
  // so the fit window stops at r = 0.5 there.
  for (int n : {2, 3}) {
    const double top = n == 2 ? 1.0 : 0.5;
    std::vector<double> lx, ly;
    for (int i = 0; i <= 20; ++i) {
      const double r = 0.05 * std::pow(top / 0.05, i / 20.0);
      lx.push_back(std::log(r));
      ly.push_back(std::log(ball_volume(n, r)));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= lx.size();
    my /= ly.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    CHECK(std::abs(sxy / sxx - 2 * n) <= 0.1);
  }
  CHECK(ball_volume(2, 1.5) == doctest::Approx(sphere_area(2)));
}

TEST_CASE("ball volume against uniform samples") {
  const auto pts = sample_uniform(17, 200000, 2);
  const auto e1 = SpherePoint::basis(2, 0);
  for (double r : {0.3, 0.7, 1.0, 1.3}) {
    int hits = 0;
    for (const auto& p : pts) hits += ball_membership(e1, r, p);
    const double frac = double(hits) / pts.size();
    const double sigma = std::sqrt(frac * (1 - frac) / pts.size());
    CHECK(std::abs(frac - ball_volume(2, r) / sphere_area(2)) <= 4 * sigma + 1e-12);
  }
}

TEST_CASE("quadrature csv export") {
  std::ostringstream z, f;
  write_csv(z, zonal_quadrature(2, 2));
  write_csv(f, sphere_quadrature(2, 2));
  CHECK(z.str().rfind("theta,phi,re_u,im_u,weight\n", 0) == 0);
  CHECK(f.str().rfind("re_z1,im_z1,re_z2,im_z2,weight\n", 0) == 0);
}
