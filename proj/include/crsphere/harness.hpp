#pragma once

#include "crsphere/spectral.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace crs::harness {

/// Exponents attached to the L^p theory at dimension n.
struct ThresholdFunctions {
  int n = 2;

  /// (2n-1) |1/p - 1/2|
  double delta(double p) const;
  /// Exponent of (2q+n-1) in the (L^p, L^2) projector bound.
  double beta(double p) const;
  /// max(0, (2n-2) |1/p - 1/2| - 1/2)
  double necessity(double p) const;
};

/// Tabulated measurements with fitted quantities, gated checks and provenance.
class ExperimentReport {
 public:
  struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string relation;  // "<=", ">=", "==", "in"
    bool pass = false;
    std::string note;
  };

  ExperimentReport(std::string id, std::vector<std::string> columns);

  const std::string& id() const { return id_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  const std::vector<Check>& checks() const { return checks_; }
  const std::map<std::string, double>& fitted() const { return fitted_; }
  const std::map<std::string, std::string>& provenance() const { return provenance_; }

  /// Appends a row; its length must match the column count.
  void add_row(std::vector<double> row);
  void set_fitted(const std::string& key, double value);
  void set_provenance(const std::string& key, const std::string& value);
  /// Records a gated check and returns its outcome.
  bool check_le(const std::string& name, double value, double threshold, std::string note = {});
  bool check_ge(const std::string& name, double value, double threshold, std::string note = {});
  bool check_true(const std::string& name, bool ok, std::string note = {});
  /// Reported but not gated.
  void observe(const std::string& name, double value, std::string note = {});

  bool passed() const;

  /// Header line plus one line per row, at round-trip precision.
  void write_csv(std::ostream& os) const;
  /// Summary: id, provenance, fitted values, checks, pass flag.
  void write_json(std::ostream& os) const;
  /// Two whitespace-separated columns for plotting.
  void write_gnuplot(std::ostream& os, const std::string& x, const std::string& y) const;

 private:
  std::size_t column(const std::string& name) const;

  std::string id_;
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
  std::map<std::string, double> fitted_;
  std::map<std::string, std::string> provenance_;
  std::vector<Check> checks_;
};

/// Provenance common to every report: library version and bump hash.
void stamp(ExperimentReport& report);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
/// Slope over the points with x >= x_max / 10.
double top_decade_slope(const std::vector<double>& x, const std::vector<double>& y);

// Counting and restriction ---------------------------------------------------

/// Sum of (l + lp) over R(1 - 2^{1-nu}) < lambda < R(1 - 2^{-1-nu}), divided by R^2 max(2^{-nu}, R^{-1/2}).
double verify_counting(double R, int nu, int n);

/// ||sum over R1 < lambda < R2 of P_{l,lp}||_{L^1 -> L^2} = sqrt(sum d / omega).
double restriction_norm_exact(double R1, double R2, int n);

/// Same norm from ||K(., eta)||_2 of the summed block kernel on a zonal rule.
double restriction_norm_quadrature(double R1, double R2, int n);

/// d / [omega (2q + n - 1)^{n-2} (1 + Q)^{n-1}]
double projector_bound_ratio(int l, int lp, int n);

/// Counting and restriction ratios over R_grid and every admissible nu. The counting ratio must vary by
/// at most a factor 4 over the top decade at each nu; the restriction ratio
/// restriction_norm_exact / (R^n max(2^{-nu}, R^{-1/2}))^{1/2} likewise.
ExperimentReport lemma_suite(const std::vector<double>& R_grid, int n);

/// projector_bound_ratio over l + lp <= max_total.
ExperimentReport projector_bound_sweep(int max_total, const std::vector<int>& ns);

// Exact and projection suites --------------------------------------------------

/// apply_sublaplacian on every harmonic basis element of bidegree l + lp <= max_total equals lambda times
/// the element modulo |z|^2 - 1, in exact arithmetic; basis sizes match the dimension formula.
ExperimentReport eigen_suite(int n, int max_total);

/// For every block with l + lp <= max_total: reproduction of z_1^l conj(z_2)^lp, idempotency and mutual
/// orthogonality on a random band-limited f, at `points` random points; errors relative to ||f||_2.
ExperimentReport projection_suite(int n, int max_total, int points, std::uint64_t seed, double tol = 1e-9);

// Kernel norms ----------------------------------------------------------------

struct L1Norm {
  double value = 0.0;
  double previous = 0.0;  // value on the preceding grid
  int radial = 0;
  double oversampling = 1.0;
  int refinements = 0;
  bool converged = false;
  std::string warning;
};

struct IntegrationOptions {
  double rel_change = 1e-4;
  int max_refinements = 6;
  double ring_tol = 1e-17;
  int initial_radial = 0;  // 0: derived from the series degree
};

/// int |K(<z, w>)| dsigma(z) on a ragged zonal grid whose angular resolution follows the
/// active Fourier content of each ring. Radial count and angular oversampling double until
/// two successive values agree to opts.rel_change.
L1Norm l1_kernel_norm(const spectral::KernelSeries& series, const IntegrationOptions& opts = {});
L1Norm l1_kernel_norm(const spectral::KernelProfile& profile, const IntegrationOptions& opts = {});

struct TailMass {
  double rho = 0.0;
  double outside = 0.0;  // int_{d > rho} |K|
  double total = 0.0;
  std::vector<double> annulus_lo;  // 2^j
  std::vector<double> annulus_mass;
  L1Norm grid;
};

/// Mass of |K| outside the Koranyi ball of radius rho, with masses on the shells 2^j <= d < 2^{j+1}.
TailMass kernel_tail_mass(const spectral::KernelSeries& series, double rho, const IntegrationOptions& opts = {});
TailMass kernel_tail_mass(const spectral::KernelProfile& profile, double rho, const IntegrationOptions& opts = {});

/// Tail of the dyadic pieces beyond sqrt(R) d = 2^{nu(1 + gamma)}, nu = 1..dyadic_top(R), and the
/// fitted decay exponent eps0 of tail ~ 2^{-nu eps0}.
ExperimentReport tail_decay_fit(double delta, double R, int n, double gamma = 0.25);

// Heat and wave ---------------------------------------------------------------

struct GaussianFit {
  double C1 = 0.0;
  double C2 = 0.0;
  double max_violation = 0.0;  // largest p / bound - 1 over the grid (<= 0 when no violation)
  std::size_t violations = 0;
  double volume_constant = 0.0;  // |B(r)| ~ c r^{2n} on small radii
  double volume_exponent = 0.0;
};

/// Fits p_t(d) <= C2 |B(z, sqrt t)|^{-1} exp(-C1 d^2 / t) over every grid node and t.
/// C2 is the smallest constant allowed at d = 0 and C1 the largest decay rate compatible with it.
GaussianFit gaussian_bound_fit(const std::vector<double>& t_grid, int n, ExperimentReport* report = nullptr);

/// Full heat suite: mass, positivity, Gaussian fit and the L^2 bound, with checks.
ExperimentReport heat_suite(const std::vector<double>& t_grid, int n);

struct FiniteSpeed {
  double t = 0.0;
  double eps = 0.0;
  double rho = 0.0;
  int bandlimit = 0;
  double leakage = 0.0;     // outside / total
  double resolution = 0.0;  // rounding floor of leakage
  double outside = 0.0;
  double total = 0.0;
  L1Norm grid;
};

/// Mass fraction of the mollified wave kernel outside d <= t + 3 sqrt(eps).
/// bandlimit 0 selects the bandlimit whose omitted tail is below 1e-14.
FiniteSpeed finite_speed_check(double t, double eps, int n, int bandlimit = 0);

/// finite_speed_check for each eps: leakage <= max_leakage at every eps, and leakage decreasing as eps
/// decreases. Rounding floors are reported beside each value.
ExperimentReport wave_suite(double t, const std::vector<double>& eps, int n, int bandlimit = 0, double max_leakage = 0.05);

/// partition_residual over every (delta, R), bandlimit from the hyperbola bound; each must be <= tol.
ExperimentReport partition_suite(const std::vector<double>& deltas, const std::vector<double>& R_grid, int n,
                                 double margin = 0.1, double tol = 1e-12);

// Riesz means -----------------------------------------------------------------

/// L^1 operator norm of S^delta_R for each R; slope over the top decade.
ExperimentReport riesz_growth_scan(double delta, const std::vector<double>& R_grid, int n);

enum class TestFunction { smooth, band_limited, rough };

TestFunction parse_test_function(const std::string& name);
std::string test_function_name(TestFunction f);

/// ||S^delta_R f - f||_p over the R grid.
ExperimentReport convergence_experiment(TestFunction f, double p, double delta, const std::vector<double>& R_grid,
                                        int n, std::uint64_t seed = 1);

struct RemainderNorm {
  double sup = 0.0;        // max of the remainder multiplier over the spectrum
  double reference = 0.0;  // 2^{-delta N}, N = dyadic_top(R)
  double ratio = 0.0;
};

/// L^2 operator norm of the remainder piece.
RemainderNorm remainder_norm_check(double delta, double R, int n);

// h-lemma --------------------------------------------------------------------

/// Length of {x >= 0 : h(x) != 0} measured on a fine grid.
double hfun_support_length(int nu, double r, double delta);
/// sup_x |h(x)| on a fine grid.
double hfun_sup(int nu, double r, double delta);

ExperimentReport hlemma_suite(const std::vector<int>& nus, const std::vector<double>& rs, double delta, int k);

}  // namespace crs::harness
