#include "crsphere/poly.hpp"
#include "crsphere/spectral.hpp"
#include "crsphere/specfun.hpp"
#include "crsphere/summation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

using namespace crs;
using namespace crs::spectral;
using std::numbers::pi;

namespace {

double omega(int n) { return sphere_area(n); }

// int F(<z, eta>) dsigma(z) on a zonal rule.
template <class F>
Complex zonal_integral(const ZonalQuadrature& rule, F&& f) {
  ComplexCompensatedSum acc;
  for (std::size_t i = 0; i < rule.radial_count(); ++i)
    for (int j = 0; j < rule.angular_count; ++j)
      acc.add(rule.radial_weight[i] * f(std::polar(rule.radius[i], rule.phi(j))));
  return acc.value();
}

// Zonal kernel from the explicit Jacobi series, independent of the recurrence.
Complex zonal_explicit(int l, int lp, int n, Complex u) {
  const int beta = std::abs(l - lp);
  const int q = std::min(l, lp);
  const double x = 2.0 * std::norm(u) - 1.0;
  double p = 0.0;
  for (int s = 0; s <= q; ++s)
    p += specfun::binomial(q + n - 2, q - s) * specfun::binomial(q + beta, s) * std::pow((x - 1) / 2, s) *
         std::pow((x + 1) / 2, q - s);
  const double p1 = specfun::binomial(q + n - 2, q);
  const Complex phase = l >= lp ? std::pow(u, beta) : std::pow(std::conj(u), beta);
  return double(poly::dimension_oracle(l, lp, n)) / omega(n) * phase * p / p1;
}

std::vector<SpherePoint> random_points(int n, std::size_t count, std::uint64_t seed) {
  return sample_uniform(seed, count, n);
}

// f sampled on rule nodes.
template <class F>
std::vector<Complex> sample(const SphereQuadrature& rule, F&& f) {
  std::vector<Complex> out;
  out.reserve(rule.nodes.size());
  for (const auto& z : rule.nodes) out.push_back(f(z));
  return out;
}

}  // namespace

TEST_CASE("eigenvalues and dimensions") {
  for (int n = 2; n <= 4; ++n)
    for (int l = 0; l <= 8; ++l)
      for (int lp = 0; lp <= 8; ++lp) {
        const auto idx = SpectralIndex::make(l, lp, n);
        CHECK(idx.lambda == doctest::Approx(2.0 * l * lp + (n - 1.0) * (l + lp)));
        CHECK(idx.mu == doctest::Approx((l + lp) * (l + lp + 2.0 * n - 2.0)));
        CHECK(idx.d == doctest::Approx(double(poly::dimension_oracle(l, lp, n))).epsilon(1e-14));
        CHECK(idx.q == std::min(l, lp));
        CHECK(idx.Q == std::max(l, lp));
        // hyperbola form of the eigenvalue
        CHECK((2.0 * l + n - 1) * (2.0 * lp + n - 1) == doctest::Approx(2 * idx.lambda + (n - 1.0) * (n - 1.0)));
      }
  CHECK(dimension(3, 0, 2) == 4.0);
  CHECK(dimension(1, 1, 2) == 3.0);
}

TEST_CASE("enumerate_band examples and brute force") {
  CHECK(enumerate_band(0, 0.5, 2).empty());
  const auto band = enumerate_band(0.5, 2.5, 2);
  REQUIRE(band.size() == 4);
  const int expect[4][2] = {{1, 0}, {0, 1}, {2, 0}, {0, 2}};
  for (int k = 0; k < 4; ++k) {
    CHECK(band[k].l == expect[k][0]);
    CHECK(band[k].lp == expect[k][1]);
  }
  CHECK(band[0].lambda == 1.0);
  CHECK(band[2].lambda == 2.0);

  for (int n : {2, 3}) {
    for (double R : {50.0, 200.0}) {
      std::size_t brute = 0;
      for (int l = 0; l <= 400; ++l)
        for (int lp = 0; lp <= 400; ++lp) {
          const double lam = 2.0 * l * lp + (n - 1.0) * (l + lp);
          if (lam > R / 2 && lam < R) ++brute;
        }
      const auto b = enumerate_band(R / 2, R, n);
      CHECK(b.size() == brute);
      for (std::size_t k = 1; k < b.size(); ++k) CHECK(b[k - 1].lambda <= b[k].lambda);
      for (const auto& idx : b) {
        CHECK(idx.lambda > R / 2);
        CHECK(idx.lambda < R);
      }
    }
  }
}

TEST_CASE("zonal kernel examples") {
  for (int n = 2; n <= 4; ++n) {
    CHECK(std::abs(zonal_eval(SpectralIndex::make(0, 0, n), 0.3, 1.1) - 1.0 / omega(n)) < 1e-15);
    for (int l = 1; l <= 6; ++l) {
      const auto idx = SpectralIndex::make(l, 0, n);
      const double c = 0.7, phi = 0.4;
      const Complex expect = specfun::binomial(l + n - 1, l) / omega(n) * std::pow(std::polar(c, phi), l);
      CHECK(std::abs(zonal_eval(idx, c, phi) - expect) < 1e-13 * std::abs(expect) + 1e-300);
    }
    for (int l = 0; l <= 5; ++l)
      for (int lp = 0; lp <= 5; ++lp) {
        const auto idx = SpectralIndex::make(l, lp, n);
        CHECK(std::abs(zonal_eval(idx, 1.0, 0.0) - idx.d / omega(n)) < 1e-13 * idx.d);
        for (Complex u : {Complex(0.3, 0.2), Complex(-0.5, 0.6), Complex(0.9, -0.1), Complex(0.0, 0.0)}) {
          const Complex a = zonal_eval_inner(idx, u);
          const Complex b = zonal_explicit(l, lp, n, u);
          CHECK(std::abs(a - b) < 1e-12 * (1 + std::abs(b)));
        }
      }
  }
  CHECK_THROWS_AS(zonal_eval(SpectralIndex::make(1, 1, 2), 1.5, 0.0), std::domain_error);
  CHECK_THROWS_AS(zonal_eval(SpectralIndex::make(1, 1, 2), -0.2, 0.0), std::domain_error);
}

TEST_CASE("trace identity: squared L2 norm equals diagonal value") {
  for (int n : {2, 3}) {
    for (int l = 0; l <= 6; ++l)
      for (int lp = 0; lp <= 6; ++lp) {
        const auto idx = SpectralIndex::make(l, lp, n);
        const auto rule = zonal_quadrature(n, 2 * (l + lp) + 2);
        const double norm2 =
            zonal_integral(rule, [&](Complex u) { return Complex(std::norm(zonal_eval_inner(idx, u))); }).real();
        CHECK(norm2 == doctest::Approx(idx.d / omega(n)).epsilon(1e-10));
      }
  }
}

TEST_CASE("kernel series agrees with direct zonal sums and ring synthesis") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int n : {2, 3}) {
    std::vector<BlockTerm> terms;
    for (int l = 0; l <= 12; ++l)
      for (int lp = 0; lp <= 12; ++lp) terms.push_back({l, lp, U(gen)});
    const KernelSeries s(n, terms);
    CHECK_FALSE(s.real_symmetric());
    for (Complex u : {Complex(0.2, 0.1), Complex(-0.7, 0.5), Complex(0.95, 0.2), Complex(1.0, 0.0)}) {
      Complex direct = 0;
      for (const auto& t : terms) direct += t.coef * zonal_explicit(t.l, t.lp, n, u);
      CHECK(std::abs(s.evaluate(u) - direct) < 1e-11 * s.abs_sum());
    }
    for (double r : {0.0, 0.3, 0.8, 1.0}) {
      const int M = 40;
      const auto ring = s.ring_values(r, M, 0.0);
      for (int j = 0; j < M; ++j)
        CHECK(std::abs(ring[j] - s.evaluate(std::polar(r, 2 * pi * j / M))) < 1e-12 * s.abs_sum());
    }
  }
}

TEST_CASE("real multipliers give real, even kernels") {
  const auto s = KernelSeries::from_multiplier(MultiplierSpec::riesz(1.0, 60.0), 2, 80);
  CHECK(s.real_symmetric());
  for (int M : {16, 33}) {
    const auto full = s.ring_values(0.9, M, 0.0);
    const auto real = s.ring_values_real(0.9, M, 0.0);
    for (int j = 0; j < M; ++j) {
      CHECK(std::abs(full[j].imag()) < 1e-12 * s.abs_sum());
      CHECK(std::abs(full[j].real() - real[j]) < 1e-12 * s.abs_sum());
      CHECK(std::abs(real[j] - real[(M - j) % M]) < 1e-12 * s.abs_sum());
    }
  }
  // Hermitian symmetry K(conj u) = conj K(u) holds block by block.
  const auto p = KernelSeries::projection(3, 4, 1);
  for (Complex u : {Complex(0.3, 0.4), Complex(-0.2, 0.7)})
    CHECK(std::abs(p.evaluate(std::conj(u)) - std::conj(p.evaluate(u))) < 1e-13 * p.abs_sum());
}

TEST_CASE("projection reproduces and annihilates") {
  const auto rule = sphere_quadrature(2, 6);
  const auto f = sample(rule, [](const SpherePoint& z) { return z[0] * std::conj(z[1]); });
  bool ok = false;
  const auto xs = random_points(2, 20, 77);
  const auto p11 = KernelSeries::projection(2, 1, 1);
  const auto p20 = KernelSeries::projection(2, 2, 0);
  for (const auto& xi : xs) {
    const Complex expect = xi[0] * std::conj(xi[1]);
    CHECK(std::abs(apply_operator(p11, rule, f, xi) - expect) < 1e-10);
    CHECK(std::abs(apply_operator(p20, rule, f, xi)) < 1e-10);
  }
  const auto one = sample(rule, [](const SpherePoint&) { return Complex(1.0); });
  for (double R : {1.0, 5.0, 40.0}) {
    const Complex v = apply_operator(MultiplierSpec::riesz(1.5, R), 4, rule, one, xs[0], 0, &ok);
    CHECK(std::abs(v - 1.0) < 1e-12);
    CHECK(ok);
  }
  apply_operator(MultiplierSpec::riesz(1.5, 40.0), 8, rule, one, xs[0], 0, &ok);
  CHECK_FALSE(ok);
}

TEST_CASE("projection reproduces every harmonic basis element") {
  for (int n : {2, 3}) {
    const int top = n == 2 ? 5 : 3;
    const auto xs = random_points(n, 6, 91 + n);
    for (int l = 0; l <= top; ++l)
      for (int lp = 0; l + lp <= top; ++lp) {
        const auto basis = poly::harmonic_basis(l, lp, n);
        const auto rule = sphere_quadrature(n, 2 * (l + lp));
        const auto P = KernelSeries::projection(n, l, lp);
        const auto other = KernelSeries::projection(n, lp + 1, l);
        for (const auto& h : basis) {
          const auto f = sample(rule, [&](const SpherePoint& z) { return poly::evaluate(h, z.coords()); });
          for (const auto& xi : xs) {
            const Complex expect = poly::evaluate(h, xi.coords());
            CHECK(std::abs(apply_operator(P, rule, f, xi) - expect) < 1e-9 * (1 + std::abs(expect)));
            CHECK(std::abs(apply_operator(other, rule, f, xi)) < 1e-9 * (1 + std::abs(expect)));
          }
        }
      }
  }
}

TEST_CASE("holomorphic phase: P_{l,0} fixes <z, eta>^l") {
  const auto eta = random_points(3, 1, 4)[0];
  const auto xs = random_points(3, 5, 8);
  for (int l = 1; l <= 5; ++l) {
    const auto rule = sphere_quadrature(3, 2 * l);
    const auto f = sample(rule, [&](const SpherePoint& z) { return std::pow(inner(z, eta), l); });
    const auto P = KernelSeries::projection(3, l, 0);
    const auto Pbar = KernelSeries::projection(3, 0, l);
    for (const auto& xi : xs) {
      const Complex expect = std::pow(inner(xi, eta), l);
      CHECK(std::abs(apply_operator(P, rule, f, xi) - expect) < 1e-10);
      CHECK(std::abs(apply_operator(Pbar, rule, f, xi)) < 1e-10);
    }
  }
}

TEST_CASE("kernel-level idempotency and orthogonality") {
  // int Z_a(<xi, zeta>) Z_b(<zeta, eta>) dsigma(zeta) = [a == b] Z_a(<xi, eta>)
  const int n = 2;
  const auto pts = random_points(n, 4, 12);
  const SpherePoint& xi = pts[0];
  const SpherePoint& eta = pts[1];
  const std::pair<int, int> blocks[] = {{0, 0}, {2, 1}, {1, 2}, {3, 0}, {2, 2}, {4, 1}};
  const auto rule = sphere_quadrature(n, 10);
  for (const auto& [l, lp] : blocks)
    for (const auto& [m, mp] : blocks) {
      const auto A = SpectralIndex::make(l, lp, n);
      const auto B = SpectralIndex::make(m, mp, n);
      ComplexCompensatedSum acc;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        acc.add(rule.weights[k] * zonal_eval_inner(A, inner(xi, rule.nodes[k])) *
                zonal_eval_inner(B, inner(rule.nodes[k], eta)));
      const Complex expect = (l == m && lp == mp) ? zonal_eval_inner(A, inner(xi, eta)) : Complex(0.0);
      CHECK(std::abs(acc.value() - expect) < 1e-10 * (A.d + B.d));
    }
}

TEST_CASE("multiplier definitions") {
  const auto& bp = specfun::bump();
  CHECK(multiplier_value(MultiplierSpec::riesz(2, 10), 0) == 1.0);
  CHECK(multiplier_value(MultiplierSpec::riesz(2, 10), 5) == doctest::Approx(0.25));
  CHECK(multiplier_value(MultiplierSpec::riesz(2, 10), 12) == 0.0);
  CHECK(multiplier_value(MultiplierSpec::riesz(0, 10), 9.99) == 1.0);
  CHECK(multiplier_value(MultiplierSpec::heat(0.1), 3) == doctest::Approx(std::exp(-0.3)));
  CHECK(multiplier_value(MultiplierSpec::wave(0.5, 0.01), 4) == doctest::Approx(std::cos(1.0) * std::exp(-0.04)));
  CHECK(dyadic_top(3.9) == 0);
  CHECK(dyadic_top(4) == 1);
  CHECK(dyadic_top(1600) == 5);
  CHECK(dyadic_top(1023.9) == 4);

  // factorization through h and the heat multiplier at r = sqrt(R)
  for (double R : {50.0, 400.0})
    for (int nu = 1; nu <= dyadic_top(R); ++nu)
      for (int l = 0; l <= 40; ++l)
        for (int lp = 0; lp <= 40; ++lp) {
          const double lam = eigenvalue(l, lp, 2);
          const double s = 1 - lam / R;
          const double direct = s > 0 ? s * s * bp.phi(std::ldexp(s, nu)) : 0.0;
          const double a = multiplier_value(MultiplierSpec::dyadic(2, R, nu), lam);
          const double b = hfun_value(nu, std::sqrt(R), 2, std::sqrt(lam)) * std::exp(-lam / R);
          CHECK(std::abs(a - direct) <= 1e-14);
          CHECK(std::abs(a - b) <= 1e-12);
        }

  CHECK_THROWS_AS(MultiplierSpec::riesz(-1, 10).validate(), std::invalid_argument);
  CHECK_THROWS_AS(MultiplierSpec::heat(0).validate(), std::invalid_argument);
  CHECK(parse_kind("remainder") == MultiplierKind::remainder);
  CHECK_THROWS(parse_kind("bogus"));
}

TEST_CASE("partition of the Riesz multiplier") {
  for (double delta : {0.0, 0.5, 1.5, 2.0})
    for (double R : {3.0, 50.0, 400.0, 1600.0}) CHECK(partition_residual(delta, R, 2, 200) <= 1e-12);
  // direct check at lambda = 0 and beyond R
  const double R = 400;
  double total0 = multiplier_value(MultiplierSpec::dyadic0(2, R), 0);
  CHECK(total0 == 1.0);
  for (double lam : {401.0, 1000.0}) {
    CHECK(multiplier_value(MultiplierSpec::dyadic0(2, R), lam) == 0.0);
    CHECK(multiplier_value(MultiplierSpec::remainder(2, R), lam) == 0.0);
    for (int nu = 1; nu <= 4; ++nu) CHECK(multiplier_value(MultiplierSpec::dyadic(2, R, nu), lam) == 0.0);
  }
}

TEST_CASE("build_kernel examples") {
  for (double t : {0.01, 0.2}) {
    const int B = auto_bandlimit(MultiplierSpec::heat(t), 2);
    CHECK(omitted_tail(MultiplierSpec::heat(t), 2, B) <= 1e-14);
    const auto prof = build_kernel(MultiplierSpec::heat(t), 2, B);
    CompensatedSum mass;
    double sup = 0, lo = 0;
    for (std::size_t i = 0; i < prof.radial_count(); ++i)
      for (int j = 0; j < prof.angular_count(); ++j) {
        mass.add(prof.rule.radial_weight[i] * prof.at(i, j).real());
        sup = std::max(sup, prof.at(i, j).real());
        lo = std::min(lo, prof.at(i, j).real());
      }
    CHECK(mass.value() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(lo >= -1e-6 * sup);
  }
  CHECK_THROWS_AS(build_kernel(MultiplierSpec::heat(0.01), 2, 10), std::runtime_error);

  const auto flat = build_kernel(MultiplierSpec::riesz(2, 1.0), 2, 4);
  for (const auto& v : flat.grid) CHECK(std::abs(v - 1.0 / omega(2)) < 1e-15);
}

TEST_CASE("h Fourier tails") {
  const int nu = 2;
  const double r = 20, delta = 2;
  const double l1 = hfun_fourier_l1(nu, r, delta);
  double sup = 0;
  for (int k = 0; k <= 4000; ++k) sup = std::max(sup, std::abs(hfun_value(nu, r, delta, r * k / 4000.0)));
  CHECK(sup <= l1 * (1 + 1e-9));
  const std::vector<double> s = {0.01, 0.1, 1, 10, 100, 1e4};
  const auto tails = hfun_fourier_tails(nu, r, delta, s);
  for (std::size_t k = 1; k < tails.size(); ++k) CHECK(tails[k] <= tails[k - 1]);
  CHECK(tails.back() < 1e-6 * tails.front());
  CHECK(hfun_fourier_tail(nu, r, delta, 10) == doctest::Approx(tails[3]).epsilon(1e-12));

  // spot value of the transform against a direct quadrature: tail difference over [1, 2]
  // equals int_{1 <= |t| <= 2} |h^|, which we bracket with a fine midpoint rule.
  auto hhat = [&](double t) {
    const int K = 20000;
    CompensatedSum acc;
    for (int k = 0; k < K; ++k) {
      const double x = r * (k + 0.5) / K;
      acc.add(hfun_value(nu, r, delta, x) * std::cos(x * t));
    }
    return 2 * acc.value() * r / K / std::sqrt(2 * pi);
  };
  CompensatedSum band;
  const int K = 400;
  for (int k = 0; k < K; ++k) band.add(std::abs(hhat(1 + (k + 0.5) / K)));
  const double direct = 2 * band.value() / K;
  const auto t12 = hfun_fourier_tails(nu, r, delta, std::vector<double>{1, 2});
  CHECK(t12[0] - t12[1] == doctest::Approx(direct).epsilon(1e-5));
}

TEST_CASE("cache round trip and misses") {
  const auto prof = build_kernel(MultiplierSpec::riesz(2, 30), 2, 40);
  const auto dir = std::filesystem::temp_directory_path() / "crsphere_cache_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / cache_key(prof);
  CHECK(cache_key(prof) == cache_key(MultiplierSpec::riesz(2, 30), 2, 40));
  CHECK(cache_key(prof) != cache_key(MultiplierSpec::riesz(2, 31), 2, 40));
  CHECK(cache_key(prof) != cache_key(MultiplierSpec::riesz(2, 30), 2, 41));
  store_profile(path, prof);
  const auto back = load_profile(path);
  REQUIRE(back.has_value());
  REQUIRE(back->grid.size() == prof.grid.size());
  CHECK(std::memcmp(back->grid.data(), prof.grid.data(), prof.grid.size() * sizeof(Complex)) == 0);
  CHECK(back->n == 2);
  CHECK(back->bandlimit == 40);
  CHECK(back->rule.radius == prof.rule.radius);

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  // version bump
  std::string bumped = bytes;
  bumped[4] = static_cast<char>(kCacheVersion + 1);
  {
    std::ofstream out(path, std::ios::binary);
    out << bumped;
  }
  std::string warning;
  CHECK_FALSE(load_profile(path, &warning).has_value());
  CHECK_FALSE(warning.empty());
  // truncation
  {
    std::ofstream out(path, std::ios::binary);
    out << bytes.substr(0, bytes.size() - 9);
  }
  warning.clear();
  CHECK_FALSE(load_profile(path, &warning).has_value());
  CHECK_FALSE(warning.empty());
  // bad magic
  {
    std::ofstream out(path, std::ios::binary);
    out << "XXXX" << bytes.substr(4);
  }
  CHECK_FALSE(load_profile(path).has_value());
  CHECK_FALSE(load_profile(dir / "missing.crrz").has_value());
  std::filesystem::remove_all(dir);

  std::ostringstream csv;
  write_profile_csv(csv, prof);
  CHECK(csv.str().rfind("theta,phi,re_K,im_K\n", 0) == 0);
}
