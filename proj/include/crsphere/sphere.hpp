#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace crs {

using Complex = std::complex<double>;

/// Unit vector in C^n, n >= 2. Construction normalizes the input.
class SpherePoint {
 public:
  explicit SpherePoint(std::vector<Complex> coords);

  /// Standard basis vector e_{j+1} of C^n.
  static SpherePoint basis(int n, int j);

  int dim() const { return static_cast<int>(z_.size()); }
  std::span<const Complex> coords() const { return z_; }
  const Complex& operator[](int j) const { return z_[static_cast<std::size_t>(j)]; }

 private:
  std::vector<Complex> z_;
};

/// <z, w> = sum_j z_j conj(w_j).
Complex inner(const SpherePoint& z, const SpherePoint& w);

/// Koranyi distance |1 - <z, w>|^{1/2}.
double distance(const SpherePoint& z, const SpherePoint& w);

/// Distance expressed through u = <z, w>.
inline double distance_from_inner(Complex u) { return std::sqrt(std::abs(1.0 - u)); }

bool ball_membership(const SpherePoint& center, double radius, const SpherePoint& w);

/// Rotation-invariant samples: normalized vectors of 2n independent standard Gaussians.
std::vector<SpherePoint> sample_uniform(std::uint64_t seed, std::size_t count, int n);

/// Surface area omega_{2n-1} = 2 pi^n / (n-1)!.
double sphere_area(int n);

/// Constant c_n in  int F(<z,eta>) dsigma(z) = c_n int_0^1 int_0^{2pi} F(r e^{i phi}) r (1-r^2)^{n-2} dphi dr.
double zonal_measure_constant(int n);

/// |B(z, radius)| evaluated by one-dimensional quadrature of the zonal reduction.
double ball_volume(int n, double radius);

/// Tensor rule over u = r e^{i phi} for integrals of functions of <z, eta>.
/// Radial nodes come from Gauss-Jacobi in x = 2 r^2 - 1 with weight (1-x)^{n-2};
/// the angular grid is uniform.
struct ZonalQuadrature {
  int n = 2;
  int exact_degree = 0;
  std::vector<double> x;              // 2 r^2 - 1, ascending
  std::vector<double> radius;         // r = cos(theta)
  std::vector<double> radial_weight;  // full node weight (angular factor included)
  int angular_count = 1;

  std::size_t radial_count() const { return radius.size(); }
  std::size_t size() const { return radius.size() * static_cast<std::size_t>(angular_count); }
  double phi(int j) const;
  double theta(std::size_t i) const;
  double total_weight() const;
};

ZonalQuadrature zonal_quadrature(int n, int exact_degree);
/// Explicit resolution; exact_degree is recorded as the largest degree the sizes guarantee.
ZonalQuadrature zonal_quadrature_sized(int n, int radial_count, int angular_count);

struct SphereQuadrature {
  int n = 2;
  int exact_degree = 0;
  std::vector<SpherePoint> nodes;
  std::vector<double> weights;
};

/// Product rule from S^{2n-1} = {(cos t e^{i phi}, sin t w') : w' in S^{2n-3}}.
SphereQuadrature sphere_quadrature(int n, int exact_degree);

/// CSV columns: theta,phi,re_u,im_u,weight
void write_csv(std::ostream& os, const ZonalQuadrature& rule);
/// CSV columns: re_z1,im_z1,...,re_zn,im_zn,weight
void write_csv(std::ostream& os, const SphereQuadrature& rule);

}  // namespace crs
