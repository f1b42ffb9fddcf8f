#include "crsphere/sphere.hpp"

#include "crsphere/specfun.hpp"
#include "crsphere/summation.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

namespace crs {

namespace {

constexpr double kPi = std::numbers::pi;

// Radial Gauss-Jacobi count exact for polynomials of total degree `degree` in (u, conj u).
int radial_count_for(int degree) { return degree / 4 + 1; }

}  // namespace

SpherePoint::SpherePoint(std::vector<Complex> coords) : z_(std::move(coords)) {
  if (z_.size() < 2) throw std::invalid_argument("SpherePoint: dimension must be >= 2");
  CompensatedSum s;
  for (const auto& c : z_) s.add(std::norm(c));
  const double norm = std::sqrt(s.value());
  if (!(norm > 0.0) || !std::isfinite(norm)) throw std::invalid_argument("SpherePoint: zero or non-finite vector");
  for (auto& c : z_) c /= norm;
}

SpherePoint SpherePoint::basis(int n, int j) {
  if (j < 0 || j >= n) throw std::out_of_range("SpherePoint::basis: index out of range");
  std::vector<Complex> v(static_cast<std::size_t>(n));
  v[static_cast<std::size_t>(j)] = 1.0;
  return SpherePoint(std::move(v));
}

Complex inner(const SpherePoint& z, const SpherePoint& w) {
  if (z.dim() != w.dim()) throw std::invalid_argument("inner: dimension mismatch");
  ComplexCompensatedSum s;
  for (int j = 0; j < z.dim(); ++j) s.add(z[j] * std::conj(w[j]));
  return s.value();
}

double distance(const SpherePoint& z, const SpherePoint& w) { return distance_from_inner(inner(z, w)); }

bool ball_membership(const SpherePoint& center, double radius, const SpherePoint& w) {
  return distance(center, w) < radius;
}

std::vector<SpherePoint> sample_uniform(std::uint64_t seed, std::size_t count, int n) {
  if (n < 2) throw std::invalid_argument("sample_uniform: n must be >= 2");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<SpherePoint> out;
  out.reserve(count);
  std::vector<Complex> v(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& c : v) {
      const double re = normal(gen);
      const double im = normal(gen);
      c = {re, im};
    }
    out.emplace_back(v);
  }
  return out;
}

double sphere_area(int n) {
  if (n < 1) throw std::invalid_argument("sphere_area: n must be >= 1");
  return 2.0 * std::pow(kPi, n) / std::exp(specfun::log_factorial(n - 1));
}

double zonal_measure_constant(int n) {
  if (n < 2) throw std::invalid_argument("zonal_measure_constant: n must be >= 2");
  return 2.0 * std::pow(kPi, n - 1) / std::exp(specfun::log_factorial(n - 2));
}

double ball_volume(int n, double radius) {
  if (n < 2) throw std::invalid_argument("ball_volume: n must be >= 2");
  if (radius <= 0.0) return 0.0;
  const double r4 = std::pow(radius, 4);
  if (r4 >= 4.0) return sphere_area(n);
  // Angular extent of {phi : |1 - rho e^{i phi}| < radius^2}.
  auto integrand = [n, r4](double rho) {
    double arc;
    if (rho <= 0.0)
      arc = r4 > 1.0 ? 2.0 * kPi : 0.0;
    else
      arc = 2.0 * std::acos(std::clamp((1.0 + rho * rho - r4) / (2.0 * rho), -1.0, 1.0));
    return arc * rho * std::pow(1.0 - rho * rho, n - 2);
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double r2 = radius * radius;
  std::vector<double> cuts{std::max(0.0, 1.0 - r2)};
  if (r2 > 1.0 && r2 - 1.0 < 1.0) cuts.push_back(r2 - 1.0);
  cuts.push_back(1.0);
  std::sort(cuts.begin(), cuts.end());
  CompensatedSum total;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
    if (cuts[k + 1] > cuts[k]) total.add(integrator.integrate(integrand, cuts[k], cuts[k + 1]));
  return zonal_measure_constant(n) * total.value();
}

// ---------------------------------------------------------------------------

double ZonalQuadrature::phi(int j) const { return 2.0 * kPi * j / angular_count; }

double ZonalQuadrature::theta(std::size_t i) const { return std::acos(std::clamp(radius[i], 0.0, 1.0)); }

double ZonalQuadrature::total_weight() const {
  CompensatedSum s;
  for (double w : radial_weight) s.add(w);
  return s.value() * angular_count;
}

ZonalQuadrature zonal_quadrature_sized(int n, int radial_count, int angular_count) {
  if (n < 2) throw std::invalid_argument("zonal_quadrature: n must be >= 2");
  if (radial_count < 1 || angular_count < 1) throw std::invalid_argument("zonal_quadrature: empty grid");
  ZonalQuadrature rule;
  rule.n = n;
  rule.angular_count = angular_count;
  rule.exact_degree = std::min(4 * radial_count - 1, angular_count - 2);
  const auto gj = specfun::gauss_jacobi(radial_count, n - 2.0, 0.0);
  // dr r (1-r^2)^{n-2} = 2^{-(n-2)}/4 (1-x)^{n-2} dx
  const double scale = zonal_measure_constant(n) * std::pow(2.0, -(n - 2)) / 4.0 * (2.0 * kPi / angular_count);
  for (int i = 0; i < radial_count; ++i) {
    const double x = gj.nodes[i];
    rule.x.push_back(x);
    rule.radius.push_back(std::sqrt(std::max(0.0, (1.0 + x) / 2.0)));
    rule.radial_weight.push_back(scale * gj.weights[i]);
  }
  return rule;
}

ZonalQuadrature zonal_quadrature(int n, int exact_degree) {
  if (exact_degree < 0) throw std::invalid_argument("zonal_quadrature: negative degree");
  ZonalQuadrature rule = zonal_quadrature_sized(n, radial_count_for(exact_degree), exact_degree + 2);
  rule.exact_degree = exact_degree;
  return rule;
}

namespace {

struct RawRule {
  std::vector<std::vector<Complex>> nodes;
  std::vector<double> weights;
};

RawRule sphere_rule_level(int k, int degree) {
  const int m = degree + 2;
  RawRule out;
  if (k == 1) {
    for (int j = 0; j < m; ++j) {
      out.nodes.push_back({std::polar(1.0, 2.0 * kPi * j / m)});
      out.weights.push_back(2.0 * kPi / m);
    }
    return out;
  }
  const RawRule sub = sphere_rule_level(k - 1, degree);
  const auto gj = specfun::gauss_jacobi(radial_count_for(degree), k - 2.0, 0.0);
  const double scale = std::pow(2.0, -(k - 2)) / 4.0;
  for (std::size_t i = 0; i < gj.nodes.size(); ++i) {
    const double x = gj.nodes[i];
    const double c = std::sqrt(std::max(0.0, (1.0 + x) / 2.0));
    const double s = std::sqrt(std::max(0.0, (1.0 - x) / 2.0));
    for (int j = 0; j < m; ++j) {
      const Complex head = std::polar(c, 2.0 * kPi * j / m);
      for (std::size_t a = 0; a < sub.nodes.size(); ++a) {
        std::vector<Complex> v;
        v.reserve(static_cast<std::size_t>(k));
        v.push_back(head);
        for (const auto& t : sub.nodes[a]) v.push_back(s * t);
        out.nodes.push_back(std::move(v));
        out.weights.push_back(gj.weights[i] * scale * (2.0 * kPi / m) * sub.weights[a]);
      }
    }
  }
  return out;
}

}  // namespace

SphereQuadrature sphere_quadrature(int n, int exact_degree) {
  if (n < 2) throw std::invalid_argument("sphere_quadrature: n must be >= 2");
  if (exact_degree < 0) throw std::invalid_argument("sphere_quadrature: negative degree");
  RawRule raw = sphere_rule_level(n, exact_degree);
  SphereQuadrature rule;
  rule.n = n;
  rule.exact_degree = exact_degree;
  rule.weights = std::move(raw.weights);
  rule.nodes.reserve(raw.nodes.size());
  for (auto& v : raw.nodes) rule.nodes.emplace_back(std::move(v));
  return rule;
}

void write_csv(std::ostream& os, const ZonalQuadrature& rule) {
  os << "theta,phi,re_u,im_u,weight\n" << std::setprecision(17);
  for (std::size_t i = 0; i < rule.radial_count(); ++i)
    for (int j = 0; j < rule.angular_count; ++j) {
      const Complex u = std::polar(rule.radius[i], rule.phi(j));
      os << rule.theta(i) << ',' << rule.phi(j) << ',' << u.real() << ',' << u.imag() << ','
         << rule.radial_weight[i] << '\n';
    }
}

void write_csv(std::ostream& os, const SphereQuadrature& rule) {
  for (int j = 1; j <= rule.n; ++j) os << "re_z" << j << ",im_z" << j << ',';
  os << "weight\n" << std::setprecision(17);
  for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
    for (const auto& c : rule.nodes[a].coords()) os << c.real() << ',' << c.imag() << ',';
    os << rule.weights[a] << '\n';
  }
}

}  // namespace crs
