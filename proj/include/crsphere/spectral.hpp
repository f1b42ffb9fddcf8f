#pragma once

#include "crsphere/sphere.hpp"

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crs::spectral {

/// Joint eigen-data of H_{l,lp}.
struct SpectralIndex {
  int l = 0;
  int lp = 0;
  int n = 2;
  double lambda = 0.0;  // sublaplacian eigenvalue
  double mu = 0.0;      // Laplace-Beltrami eigenvalue
  int q = 0;            // min(l, lp)
  int Q = 0;            // max(l, lp)
  double d = 1.0;       // dim H_{l,lp}

  static SpectralIndex make(int l, int lp, int n);
};

double eigenvalue(int l, int lp, int n);
/// dim H_{l,lp} = (l+lp+n-1)/(n-1) C(l+n-2,n-2) C(lp+n-2,n-2), as a double.
double dimension(int l, int lp, int n);

enum class MultiplierKind { riesz, dyadic, dyadic0, remainder, heat, wave, hfun };

struct MultiplierSpec {
  MultiplierKind kind = MultiplierKind::riesz;
  double delta = 0.0;
  double R = 1.0;
  int nu = 0;
  double t = 0.0;
  double eps = 0.0;
  double r = 0.0;

  static MultiplierSpec riesz(double delta, double R);
  static MultiplierSpec dyadic(double delta, double R, int nu);
  static MultiplierSpec dyadic0(double delta, double R);
  static MultiplierSpec remainder(double delta, double R);
  static MultiplierSpec heat(double t);
  static MultiplierSpec wave(double t, double eps);
  static MultiplierSpec hfun(int nu, double r, double delta);

  /// Throws std::invalid_argument when a parameter is out of range.
  void validate() const;
  /// True when the multiplier vanishes for every lambda at or above support_end().
  bool compact() const;
  double support_end() const;
  std::string name() const;
  std::string describe() const;
};

MultiplierKind parse_kind(const std::string& name);

/// Largest N with 4^N <= R, i.e. floor(log2 sqrt R); 0 when R < 4.
int dyadic_top(double R);

/// h_{nu,r}(x) = (1 - x^2/r^2)_+^delta e^{x^2/r^2} phi(2^nu (1 - x^2/r^2)).
double hfun_value(int nu, double r, double delta, double x);

/// m(lambda) for the given spec. hfun acts through sqrt(L): the value is h_{nu,r}(sqrt(lambda)).
double multiplier_value(const MultiplierSpec& spec, double lambda);

/// All (l, lp) with R1 < lambda < R2, ordered by (lambda, lp).
std::vector<SpectralIndex> enumerate_band(double R1, double R2, int n);

/// Z_{l,lp}(xi, eta) as a function of <xi, eta> = cos(theta) e^{i phi}.
Complex zonal_eval(const SpectralIndex& idx, double cos_theta, double phi);
Complex zonal_eval_inner(const SpectralIndex& idx, Complex u);

/// One entry of a zonal series: coefficient multiplying Z_{l,lp}.
struct BlockTerm {
  int l = 0;
  int lp = 0;
  double coef = 0.0;
};

/// K(u) = sum coef_{l,lp} Z_{l,lp}(u). Blocks are grouped by signed degree difference m = l - lp;
/// each group is evaluated by one normalized Jacobi recurrence in q = min(l, lp).
class KernelSeries {
 public:
  KernelSeries(int n, std::span<const BlockTerm> terms);

  /// P_{l,lp}.
  static KernelSeries projection(int n, int l, int lp);
  /// All blocks with l + lp <= bandlimit and m(lambda) != 0. Terms whose size |m| d / omega falls
  /// below drop_tol times the largest included term are dropped from the tails of each group.
  static KernelSeries from_multiplier(const MultiplierSpec& spec, int n, int bandlimit, double drop_tol = 0.0);

  int n() const { return n_; }
  std::size_t block_count() const { return block_count_; }
  int max_degree() const { return max_degree_; }
  int max_beta() const { return max_beta_; }
  /// Largest q = min(l, lp) present.
  int max_q() const { return max_q_; }
  /// Coefficients of l - lp = m and -m agree, so the kernel is real and even in phi.
  bool real_symmetric() const { return symmetric_; }
  /// sum |coef| d / omega; bounds sup |K|.
  double abs_sum() const { return abs_sum_; }
  /// Largest |m| whose group can exceed rel_tol * abs_sum() at radius r.
  int active_beta(double r, double rel_tol) const;

  Complex evaluate(Complex u) const;
  /// K(r e^{2 pi i j / M}), j = 0..M-1. Groups below rel_tol * abs_sum() at this radius are skipped.
  std::vector<Complex> ring_values(double r, int M, double rel_tol = 1e-17) const;
  /// Real part only; valid for real symmetric series. `magnitude` receives the sum of the absolute
  /// Fourier coefficients on the ring, which bounds |K| there and scales its rounding error.
  std::vector<double> ring_values_real(double r, int M, double rel_tol = 1e-17, double* magnitude = nullptr) const;

 private:
  struct Group {
    int m = 0;
    int beta = 0;
    std::vector<double> w;  // coef * d / omega, indexed by q
    std::vector<double> a, b, c;
    double log_envelope = 0.0;
  };
  double group_value(const Group& g, double r) const;
  void finish();

  int n_;
  std::vector<Group> groups_;  // ascending m; only m >= 0 when symmetric
  std::size_t block_count_ = 0;
  int max_degree_ = 0;
  int max_beta_ = 0;
  int max_q_ = 0;
  bool symmetric_ = true;
  double abs_sum_ = 0.0;
};

/// Grid samples K(theta_i, phi_j) on the tensor zonal rule of exact degree 2 * bandlimit + 4.
struct KernelProfile {
  int n = 2;
  int bandlimit = 0;
  MultiplierSpec multiplier;
  ZonalQuadrature rule;
  std::vector<Complex> grid;  // row-major: radial index outer, angular index inner

  std::size_t radial_count() const { return rule.radial_count(); }
  int angular_count() const { return rule.angular_count; }
  const Complex& at(std::size_t i, int j) const { return grid[i * static_cast<std::size_t>(rule.angular_count) + j]; }
};

/// Smallest bandlimit whose omitted blocks satisfy |m| d / omega <= tail_tol * sum.
int auto_bandlimit(const MultiplierSpec& spec, int n, double tail_tol = 1e-14);

/// Sum over omitted blocks (l + lp > bandlimit) of |m(lambda)| d / omega, relative to the included sum.
double omitted_tail(const MultiplierSpec& spec, int n, int bandlimit);

/// Throws std::runtime_error when omitted blocks exceed 1e-14 of the included sum.
KernelProfile build_kernel(const MultiplierSpec& spec, int n, int bandlimit);

/// Grid built from an arbitrary series (used for projections).
KernelProfile build_kernel(const KernelSeries& series, const MultiplierSpec& label, int bandlimit);

/// sum_k weight_k K(<xi, eta_k>) f_k over the nodes of a full-sphere rule.
/// `degree_ok` (if given) reports whether the rule degree covers bandlimit + f_degree.
Complex apply_operator(const KernelSeries& kernel, const SphereQuadrature& rule, std::span<const Complex> f,
                       const SpherePoint& xi);
Complex apply_operator(const MultiplierSpec& spec, int bandlimit, const SphereQuadrature& rule,
                       std::span<const Complex> f, const SpherePoint& xi, int f_degree = 0,
                       bool* degree_ok = nullptr);

/// int_{|t| >= s} |h^(t)| dt with h^(t) = (2 pi)^{-1/2} int h(x) e^{-i x t} dx.
double hfun_fourier_tail(int nu, double r, double delta, double s);
/// Tail integrals for several thresholds from one transform.
std::vector<double> hfun_fourier_tails(int nu, double r, double delta, std::span<const double> s);
/// (2 pi)^{-1/2} int |h^|; an upper bound for sup |h|.
double hfun_fourier_l1(int nu, double r, double delta);

/// max over eigenvalues lambda <= R (1 + margin) of |riesz - dyadic0 - sum_{nu=1}^{N} dyadic - remainder|.
double partition_residual(double delta, double R, int n, int bandlimit, double margin = 0.1);

// Binary cache -------------------------------------------------------------

inline constexpr std::uint32_t kCacheVersion = 1;

/// Parameter vector stored in the cache header: kind, delta, R, nu, t, eps, r, exact_degree.
std::vector<double> cache_parameters(const KernelProfile& profile);
std::string cache_key(const KernelProfile& profile);
std::string cache_key(const MultiplierSpec& spec, int n, int bandlimit);

void write_profile(std::ostream& os, const KernelProfile& profile);
/// Returns std::nullopt on bad magic, version mismatch, or truncation.
std::optional<KernelProfile> read_profile(std::istream& is);

/// Writes to `path` through a temporary file and rename.
void store_profile(const std::filesystem::path& path, const KernelProfile& profile);
std::optional<KernelProfile> load_profile(const std::filesystem::path& path, std::string* warning = nullptr);

/// CSV columns: theta,phi,re_K,im_K
void write_profile_csv(std::ostream& os, const KernelProfile& profile);

}  // namespace crs::spectral
