#include "crsphere/spectral.hpp"

#include "crsphere/specfun.hpp"
#include "crsphere/summation.hpp"
#include "fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace crs::spectral {

using specfun::bump;

double eigenvalue(int l, int lp, int n) { return 2.0 * l * lp + (n - 1.0) * (l + lp); }

double dimension(int l, int lp, int n) {
  if (l < 0 || lp < 0 || n < 2) throw std::invalid_argument("dimension: bad arguments");
  if (n == 2) return l + lp + 1.0;
  const double ld = specfun::log_binomial(l + n - 2.0, n - 2.0) + specfun::log_binomial(lp + n - 2.0, n - 2.0);
  const double v = (l + lp + n - 1.0) / (n - 1.0) * std::exp(ld);
  return v < 9e15 ? std::round(v) : v;
}

SpectralIndex SpectralIndex::make(int l, int lp, int n) {
  if (l < 0 || lp < 0 || n < 2) throw std::invalid_argument("SpectralIndex: bad arguments");
  SpectralIndex s;
  s.l = l;
  s.lp = lp;
  s.n = n;
  s.lambda = eigenvalue(l, lp, n);
  s.mu = double(l + lp) * (l + lp + 2.0 * n - 2.0);
  s.q = std::min(l, lp);
  s.Q = std::max(l, lp);
  s.d = dimension(l, lp, n);
  return s;
}

// ---------------------------------------------------------------------------

MultiplierSpec MultiplierSpec::riesz(double delta, double R) {
  MultiplierSpec s;
  s.kind = MultiplierKind::riesz;
  s.delta = delta;
  s.R = R;
  s.validate();
  return s;
}

MultiplierSpec MultiplierSpec::dyadic(double delta, double R, int nu) {
  MultiplierSpec s;
  s.kind = MultiplierKind::dyadic;
  s.delta = delta;
  s.R = R;
  s.nu = nu;
  s.validate();
  return s;
}

MultiplierSpec MultiplierSpec::dyadic0(double delta, double R) {
  MultiplierSpec s = riesz(delta, R);
  s.kind = MultiplierKind::dyadic0;
  return s;
}

MultiplierSpec MultiplierSpec::remainder(double delta, double R) {
  MultiplierSpec s = riesz(delta, R);
  s.kind = MultiplierKind::remainder;
  return s;
}

MultiplierSpec MultiplierSpec::heat(double t) {
  MultiplierSpec s;
  s.kind = MultiplierKind::heat;
  s.t = t;
  s.validate();
  return s;
}

MultiplierSpec MultiplierSpec::wave(double t, double eps) {
  MultiplierSpec s;
  s.kind = MultiplierKind::wave;
  s.t = t;
  s.eps = eps;
  s.validate();
  return s;
}

MultiplierSpec MultiplierSpec::hfun(int nu, double r, double delta) {
  MultiplierSpec s;
  s.kind = MultiplierKind::hfun;
  s.nu = nu;
  s.r = r;
  s.delta = delta;
  s.validate();
  return s;
}

void MultiplierSpec::validate() const {
  auto bad = [](const char* what) { throw std::invalid_argument(std::string("MultiplierSpec: ") + what); };
  switch (kind) {
    case MultiplierKind::riesz:
    case MultiplierKind::dyadic0:
    case MultiplierKind::remainder:
      if (!(delta >= 0.0) || !std::isfinite(delta)) bad("delta must be >= 0");
      if (!(R > 0.0) || !std::isfinite(R)) bad("R must be > 0");
      break;
    case MultiplierKind::dyadic:
      if (!(delta >= 0.0) || !std::isfinite(delta)) bad("delta must be >= 0");
      if (!(R > 0.0) || !std::isfinite(R)) bad("R must be > 0");
      if (nu < 1) bad("dyadic requires nu >= 1");
      break;
    case MultiplierKind::heat:
      if (!(t > 0.0) || !std::isfinite(t)) bad("t must be > 0");
      break;
    case MultiplierKind::wave:
      if (!(t > 0.0) || !std::isfinite(t)) bad("t must be > 0");
      if (!(eps > 0.0) || !std::isfinite(eps)) bad("eps must be > 0");
      break;
    case MultiplierKind::hfun:
      if (nu < 0) bad("nu must be >= 0");
      if (!(r > 0.0) || !std::isfinite(r)) bad("r must be > 0");
      if (!(delta >= 0.0) || !std::isfinite(delta)) bad("delta must be >= 0");
      break;
  }
}

bool MultiplierSpec::compact() const { return kind != MultiplierKind::heat && kind != MultiplierKind::wave; }

double MultiplierSpec::support_end() const {
  switch (kind) {
    case MultiplierKind::hfun:
      return r * r;
    case MultiplierKind::heat:
    case MultiplierKind::wave:
      return std::numeric_limits<double>::infinity();
    default:
      return R;
  }
}

std::string MultiplierSpec::name() const {
  switch (kind) {
    case MultiplierKind::riesz: return "riesz";
    case MultiplierKind::dyadic: return "dyadic";
    case MultiplierKind::dyadic0: return "dyadic0";
    case MultiplierKind::remainder: return "remainder";
    case MultiplierKind::heat: return "heat";
    case MultiplierKind::wave: return "wave";
    case MultiplierKind::hfun: return "hfun";
  }
  return "unknown";
}

std::string MultiplierSpec::describe() const {
  std::ostringstream s;
  s.precision(17);
  s << name() << "(";
  switch (kind) {
    case MultiplierKind::riesz:
    case MultiplierKind::dyadic0:
    case MultiplierKind::remainder:
      s << "delta=" << delta << ",R=" << R;
      break;
    case MultiplierKind::dyadic:
      s << "delta=" << delta << ",R=" << R << ",nu=" << nu;
      break;
    case MultiplierKind::heat:
      s << "t=" << t;
      break;
    case MultiplierKind::wave:
      s << "t=" << t << ",eps=" << eps;
      break;
    case MultiplierKind::hfun:
      s << "nu=" << nu << ",r=" << r << ",delta=" << delta;
      break;
  }
  s << ")";
  return s.str();
}

MultiplierKind parse_kind(const std::string& name) {
  static const std::map<std::string, MultiplierKind> table{
      {"riesz", MultiplierKind::riesz}, {"dyadic", MultiplierKind::dyadic},
      {"dyadic0", MultiplierKind::dyadic0}, {"remainder", MultiplierKind::remainder},
      {"heat", MultiplierKind::heat}, {"wave", MultiplierKind::wave}, {"hfun", MultiplierKind::hfun}};
  auto it = table.find(name);
  if (it == table.end()) throw std::invalid_argument("unknown multiplier kind: " + name);
  return it->second;
}

int dyadic_top(double R) {
  int N = 0;
  while (std::ldexp(1.0, 2 * (N + 1)) <= R) ++N;
  return N;
}

namespace {

double power_plus(double s, double delta) {
  if (s <= 0.0) return 0.0;
  return delta == 0.0 ? 1.0 : std::pow(s, delta);
}

// sum_{nu >= first} phi(2^nu s) for s > 0, summing only non-zero terms.
double dyadic_tail(double s, int first) {
  CompensatedSum acc;
  for (int nu = first; std::ldexp(s, nu) < 2.0; ++nu) acc.add(bump().phi(std::ldexp(s, nu)));
  return acc.value();
}

}  // namespace

double hfun_value(int nu, double r, double delta, double x) {
  const double y = x * x / (r * r);
  const double s = 1.0 - y;
  if (s <= 0.0) return 0.0;
  const double p = bump().phi(std::ldexp(s, nu));
  if (p == 0.0) return 0.0;
  return power_plus(s, delta) * std::exp(y) * p;
}

double multiplier_value(const MultiplierSpec& spec, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("multiplier_value: lambda must be >= 0");
  switch (spec.kind) {
    case MultiplierKind::riesz:
      return power_plus(1.0 - lambda / spec.R, spec.delta);
    case MultiplierKind::dyadic: {
      const double s = 1.0 - lambda / spec.R;
      if (s <= 0.0) return 0.0;
      return power_plus(s, spec.delta) * bump().phi(std::ldexp(s, spec.nu));
    }
    case MultiplierKind::dyadic0: {
      const double s = 1.0 - lambda / spec.R;
      if (s <= 0.0) return 0.0;
      return bump().phi0(s) * power_plus(s, spec.delta);
    }
    case MultiplierKind::remainder: {
      const double s = 1.0 - lambda / spec.R;
      if (s <= 0.0) return 0.0;
      return power_plus(s, spec.delta) * dyadic_tail(s, dyadic_top(spec.R) + 1);
    }
    case MultiplierKind::heat:
      return std::exp(-spec.t * lambda);
    case MultiplierKind::wave:
      return std::cos(spec.t * std::sqrt(lambda)) * std::exp(-spec.eps * lambda);
    case MultiplierKind::hfun:
      return hfun_value(spec.nu, spec.r, spec.delta, std::sqrt(lambda));
  }
  return 0.0;
}

namespace {

// Upper bound for |m(lambda)|, non-increasing in lambda for the non-compact kinds.
double envelope(const MultiplierSpec& spec, double lambda) {
  switch (spec.kind) {
    case MultiplierKind::heat:
      return std::exp(-spec.t * lambda);
    case MultiplierKind::wave:
      return std::exp(-spec.eps * lambda);
    default:
      return lambda < spec.support_end() ? std::max(1.0, std::abs(multiplier_value(spec, lambda))) : 0.0;
  }
}

}  // namespace

std::vector<SpectralIndex> enumerate_band(double R1, double R2, int n) {
  if (!(R1 >= 0.0) || !(R2 > R1)) throw std::invalid_argument("enumerate_band: need 0 <= R1 < R2");
  if (n < 2) throw std::invalid_argument("enumerate_band: n must be >= 2");
  const double c = (n - 1.0) * (n - 1.0);
  const double lo = 2.0 * R1 + c;
  const double hi = 2.0 * R2 + c;
  std::vector<SpectralIndex> out;
  for (int l = 0; (2.0 * l + n - 1.0) * (n - 1.0) < hi; ++l) {
    const double a = 2.0 * l + n - 1.0;
    // (2 lp + n - 1) in (lo / a, hi / a)
    const int lp_lo = std::max(0, static_cast<int>(std::floor((lo / a - (n - 1.0)) / 2.0)) - 1);
    const int lp_hi = static_cast<int>(std::ceil((hi / a - (n - 1.0)) / 2.0)) + 1;
    for (int lp = lp_lo; lp <= lp_hi; ++lp) {
      const double prod = a * (2.0 * lp + n - 1.0);
      if (prod > lo && prod < hi) out.push_back(SpectralIndex::make(l, lp, n));
    }
  }
  std::sort(out.begin(), out.end(), [](const SpectralIndex& x, const SpectralIndex& y) {
    if (x.lambda != y.lambda) return x.lambda < y.lambda;
    if (x.lp != y.lp) return x.lp < y.lp;
    return x.l < y.l;
  });
  return out;
}

Complex zonal_eval_inner(const SpectralIndex& idx, Complex u) {
  const double r = std::min(std::abs(u), 1.0);
  const int beta = std::abs(idx.l - idx.lp);
  const double alpha = idx.n - 2.0;
  const double x = 2.0 * r * r - 1.0;
  const double jac = specfun::jacobi_eval({idx.q, alpha, double(beta)}, x) / specfun::jacobi_at_one(idx.q, alpha);
  const Complex phase = idx.l >= idx.lp ? std::pow(u, beta) : std::pow(std::conj(u), beta);
  return idx.d / sphere_area(idx.n) * phase * jac;
}

Complex zonal_eval(const SpectralIndex& idx, double cos_theta, double phi) {
  if (cos_theta < -1e-15 || cos_theta > 1.0 + 1e-15) throw std::domain_error("zonal_eval: cos(theta) outside [0, 1]");
  return zonal_eval_inner(idx, std::polar(std::clamp(cos_theta, 0.0, 1.0), phi));
}

// ---------------------------------------------------------------------------

namespace {

struct StepCoefficients {
  double a, b, c;
};

// Recurrence for p_k = P_k / P_k(1):  p_{k+1} = (a (x - 1) + b) p_k - c p_{k-1}.
StepCoefficients normalized_step(int k, double alpha, double beta) {
  const double p = alpha + beta;
  if (k == 0) return {(p + 2.0) / (2.0 * (alpha + 1.0)), 1.0, 0.0};
  const double kk = k;
  const double s = 2.0 * kk + p;
  const double den = (kk + 1.0 + alpha) * (kk + p + 1.0);
  const double a = (s + 1.0) * (s + 2.0) / (2.0 * den);
  const double b = (s + 1.0) * (4.0 * kk * kk + 4.0 * kk * (p + 1.0) + 2.0 * p * (alpha + 1.0)) / (2.0 * den * s);
  const double c = kk * (kk + beta) * (s + 2.0) / (den * s);
  return {a, b, c};
}

// ln( max |P_q| / P_q(1) ) bound: C(q + max(alpha, beta), q) / C(q + alpha, q).
double log_jacobi_ratio_bound(int q, double alpha, double beta) {
  if (beta <= alpha) return 0.0;
  return specfun::log_binomial(q + beta, q) - specfun::log_binomial(q + alpha, q);
}

}  // namespace

KernelSeries::KernelSeries(int n, std::span<const BlockTerm> terms) : n_(n) {
  if (n < 2) throw std::invalid_argument("KernelSeries: n must be >= 2");
  std::map<int, std::vector<double>> by_m;
  const double omega = sphere_area(n);
  for (const auto& t : terms) {
    if (t.l < 0 || t.lp < 0) throw std::invalid_argument("KernelSeries: negative degree");
    if (t.coef == 0.0) continue;
    auto& w = by_m[t.l - t.lp];
    const int q = std::min(t.l, t.lp);
    if (static_cast<int>(w.size()) <= q) w.resize(q + 1, 0.0);
    w[q] += t.coef * dimension(t.l, t.lp, n) / omega;
  }
  symmetric_ = true;
  for (const auto& [m, w] : by_m) {
    if (m == 0) continue;
    auto other = by_m.find(-m);
    if (other == by_m.end() || other->second != w) {
      symmetric_ = false;
      break;
    }
  }
  for (auto& [m, w] : by_m) {
    if (symmetric_ && m < 0) continue;
    Group g;
    g.m = m;
    g.beta = std::abs(m);
    g.w = std::move(w);
    groups_.push_back(std::move(g));
  }
  finish();
}

KernelSeries KernelSeries::projection(int n, int l, int lp) {
  const BlockTerm t{l, lp, 1.0};
  return KernelSeries(n, std::span<const BlockTerm>(&t, 1));
}

KernelSeries KernelSeries::from_multiplier(const MultiplierSpec& spec, int n, int bandlimit, double drop_tol) {
  spec.validate();
  if (bandlimit < 0) throw std::invalid_argument("from_multiplier: negative bandlimit");
  KernelSeries out(n, {});
  out.groups_.clear();
  const double omega = sphere_area(n);
  const double end = spec.support_end();
  double reference = 0.0;
  for (int beta = 0; beta <= bandlimit; ++beta) {
    if ((n - 1.0) * beta >= end) break;
    if (!spec.compact() && reference > 0.0 && drop_tol > 0.0 &&
        envelope(spec, (n - 1.0) * beta) * dimension(beta, 0, n) / omega < drop_tol * reference &&
        envelope(spec, (n - 1.0) * beta) < 1e-3)
      break;
    Group g;
    g.m = beta;
    g.beta = beta;
    for (int q = 0; 2 * q + beta <= bandlimit; ++q) {
      const double lambda = eigenvalue(q + beta, q, n);
      if (lambda >= end) break;
      const double size = dimension(q + beta, q, n) / omega;
      if (!spec.compact() && drop_tol > 0.0 && reference > 0.0 && envelope(spec, lambda) * size < drop_tol * reference &&
          envelope(spec, lambda) < 1e-3)
        break;
      const double w = multiplier_value(spec, lambda) * size;
      reference = std::max(reference, std::abs(w));
      g.w.push_back(w);
    }
    while (!g.w.empty() && g.w.back() == 0.0) g.w.pop_back();
    if (!g.w.empty()) out.groups_.push_back(std::move(g));
  }
  out.symmetric_ = true;
  out.finish();
  return out;
}

void KernelSeries::finish() {
  const double alpha = n_ - 2.0;
  block_count_ = 0;
  max_degree_ = 0;
  max_beta_ = 0;
  max_q_ = 0;
  CompensatedSum total;
  for (auto& g : groups_) {
    const int Q = static_cast<int>(g.w.size()) - 1;
    g.a.resize(std::max(Q, 0));
    g.b.resize(std::max(Q, 0));
    g.c.resize(std::max(Q, 0));
    for (int k = 0; k < Q; ++k) {
      const auto st = normalized_step(k, alpha, g.beta);
      g.a[k] = st.a;
      g.b[k] = st.b;
      g.c[k] = st.c;
    }
    double env = 0.0;
    for (int q = 0; q <= Q; ++q) {
      if (g.w[q] == 0.0) continue;
      ++block_count_;
      const double mult = (symmetric_ && g.m != 0) ? 2.0 : 1.0;
      total.add(mult * std::abs(g.w[q]));
      env += std::abs(g.w[q]) * std::exp(log_jacobi_ratio_bound(q, alpha, g.beta));
      max_degree_ = std::max(max_degree_, 2 * q + g.beta);
      max_q_ = std::max(max_q_, q);
    }
    if (symmetric_ && g.m != 0)
      for (double w : g.w) block_count_ += w != 0.0;
    g.log_envelope = env > 0.0 ? std::log(env) : -std::numeric_limits<double>::infinity();
    max_beta_ = std::max(max_beta_, g.beta);
  }
  abs_sum_ = total.value();
}

double KernelSeries::group_value(const Group& g, double r) const {
  double rb;
  if (g.beta == 0)
    rb = 1.0;
  else if (r <= 0.0)
    return 0.0;
  else
    rb = std::exp(g.beta * std::log(r));
  if (rb == 0.0) return 0.0;
  const double y = 2.0 * r * r - 2.0;
  const std::size_t Q = g.w.size();
  double prev = 0.0;
  double cur = rb;
  double sum = g.w[0] * cur;
  double carry = 0.0;
  for (std::size_t k = 0; k + 1 < Q; ++k) {
    const double next = (g.a[k] * y + g.b[k]) * cur - g.c[k] * prev;
    prev = cur;
    cur = next;
    const double term = g.w[k + 1] * cur;
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term))
      carry += (sum - t) + term;
    else
      carry += (term - t) + sum;
    sum = t;
  }
  return sum + carry;
}

int KernelSeries::active_beta(double r, double rel_tol) const {
  if (groups_.empty()) return 0;
  if (r >= 1.0 || rel_tol <= 0.0) return max_beta_;
  const double threshold = std::log(rel_tol * abs_sum_);
  const double lr = r > 0.0 ? std::log(r) : -std::numeric_limits<double>::infinity();
  int best = 0;
  for (const auto& g : groups_) {
    if (g.beta <= best) continue;
    if (g.log_envelope + g.beta * lr >= threshold) best = g.beta;
  }
  return best;
}

Complex KernelSeries::evaluate(Complex u) const {
  const double r = std::min(std::abs(u), 1.0);
  const double phi = std::arg(u);
  ComplexCompensatedSum acc;
  for (const auto& g : groups_) {
    const double v = group_value(g, r);
    if (v == 0.0) continue;
    if (symmetric_)
      acc.add(g.m == 0 ? v : 2.0 * v * std::cos(g.m * phi));
    else
      acc.add(v * std::polar(1.0, g.m * phi));
  }
  return acc.value();
}

std::vector<double> KernelSeries::ring_values_real(double r, int M, double rel_tol, double* magnitude) const {
  if (!symmetric_) throw std::logic_error("ring_values_real: series is not real symmetric");
  std::vector<double> out(static_cast<std::size_t>(M), 0.0);
  const double threshold = std::log(std::max(rel_tol, 0.0) * abs_sum_);
  const double lr = r > 0.0 ? std::log(std::min(r, 1.0)) : -std::numeric_limits<double>::infinity();
  std::vector<double> c;
  for (const auto& g : groups_) {
    if (g.beta > 0 && rel_tol > 0.0 && g.log_envelope + g.beta * lr < threshold) continue;
    const double v = group_value(g, r);
    if (v == 0.0) continue;
    if (static_cast<int>(c.size()) <= g.beta) c.resize(g.beta + 1, 0.0);
    c[g.beta] += g.beta == 0 ? v : 2.0 * v;
  }
  if (!c.empty()) detail::cosine_synthesis(c, M, out);
  if (magnitude) {
    double m = 0.0;
    for (double v : c) m += std::abs(v);
    *magnitude = m;
  }
  return out;
}

std::vector<Complex> KernelSeries::ring_values(double r, int M, double rel_tol) const {
  if (M < 1) throw std::invalid_argument("ring_values: M must be >= 1");
  std::vector<Complex> out(static_cast<std::size_t>(M));
  if (symmetric_) {
    const auto re = ring_values_real(r, M, rel_tol);
    for (int j = 0; j < M; ++j) out[j] = re[j];
    return out;
  }
  const double threshold = std::log(std::max(rel_tol, 0.0) * abs_sum_);
  const double lr = r > 0.0 ? std::log(std::min(r, 1.0)) : -std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, Complex>> terms;
  for (const auto& g : groups_) {
    if (g.beta > 0 && rel_tol > 0.0 && g.log_envelope + g.beta * lr < threshold) continue;
    const double v = group_value(g, r);
    if (v != 0.0) terms.emplace_back(g.m, v);
  }
  detail::fourier_synthesis(terms, M, out);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Sum of envelope * d / omega over blocks with l + lp > bandlimit (or all blocks when bandlimit < 0).
double envelope_mass(const MultiplierSpec& spec, int n, int bandlimit, bool above) {
  const double omega = sphere_area(n);
  const double end = spec.support_end();
  CompensatedSum acc;
  double group_peak = std::numeric_limits<double>::infinity();
  for (int beta = 0;; ++beta) {
    const double lam0 = (n - 1.0) * beta;
    if (lam0 >= end) break;
    if (!spec.compact() && beta > 0 && (!above || beta > bandlimit + 1) && group_peak < 1e-40 &&
        envelope(spec, lam0) < 1e-3)
      break;
    group_peak = 0.0;
    int q0 = 0;
    if (above && 2 * q0 + beta <= bandlimit) q0 = (bandlimit - beta) / 2 + 1;
    if (!above && beta > bandlimit) break;
    double prev = std::numeric_limits<double>::infinity();
    for (int q = q0;; ++q) {
      if (!above && 2 * q + beta > bandlimit) break;
      const double lambda = eigenvalue(q + beta, q, n);
      if (lambda >= end) break;
      const double v = envelope(spec, lambda) * dimension(q + beta, q, n) / omega;
      acc.add(beta == 0 ? v : 2.0 * v);
      group_peak = std::max(group_peak, v);
      if (!spec.compact() && v < 1e-40 && v <= prev && envelope(spec, lambda) < 1e-3) break;
      prev = v;
    }
  }
  return acc.value();
}

}  // namespace

double omitted_tail(const MultiplierSpec& spec, int n, int bandlimit) {
  const double inside = envelope_mass(spec, n, bandlimit, false);
  const double outside = envelope_mass(spec, n, bandlimit, true);
  if (outside == 0.0) return 0.0;
  return inside > 0.0 ? outside / inside : std::numeric_limits<double>::infinity();
}

int auto_bandlimit(const MultiplierSpec& spec, int n, double tail_tol) {
  spec.validate();
  if (spec.compact()) {
    int best = 0;
    const double end = spec.support_end();
    for (int beta = 0; (n - 1.0) * beta < end; ++beta)
      for (int q = 0; eigenvalue(q + beta, q, n) < end; ++q)
        if (multiplier_value(spec, eigenvalue(q + beta, q, n)) != 0.0) best = std::max(best, 2 * q + beta);
    return best;
  }
  int lo = 0;
  int hi = 16;
  while (omitted_tail(spec, n, hi) > tail_tol) {
    lo = hi;
    hi *= 2;
    if (hi > (1 << 28)) throw std::runtime_error("auto_bandlimit: tail does not decay");
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    if (omitted_tail(spec, n, mid) > tail_tol)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

KernelProfile build_kernel(const KernelSeries& series, const MultiplierSpec& label, int bandlimit) {
  KernelProfile p;
  p.n = series.n();
  p.bandlimit = bandlimit;
  p.multiplier = label;
  p.rule = zonal_quadrature(series.n(), 2 * bandlimit + 4);
  const int M = p.rule.angular_count;
  p.grid.resize(p.rule.size());
  const std::size_t rings = p.rule.radial_count();
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < rings; ++i) {
    const auto row = series.ring_values(p.rule.radius[i], M, 0.0);
    std::copy(row.begin(), row.end(), p.grid.begin() + static_cast<std::ptrdiff_t>(i * M));
  }
  return p;
}

KernelProfile build_kernel(const MultiplierSpec& spec, int n, int bandlimit) {
  spec.validate();
  if (bandlimit < 0) throw std::invalid_argument("build_kernel: negative bandlimit");
  const double tail = omitted_tail(spec, n, bandlimit);
  if (tail > 1e-14) {
    std::ostringstream msg;
    msg << "build_kernel: bandlimit " << bandlimit << " omits relative mass " << tail << " for " << spec.describe()
        << " (need <= 1e-14; try " << auto_bandlimit(spec, n) << ")";
    throw std::runtime_error(msg.str());
  }
  const KernelSeries series = KernelSeries::from_multiplier(spec, n, bandlimit);
  return build_kernel(series, spec, bandlimit);
}

Complex apply_operator(const KernelSeries& kernel, const SphereQuadrature& rule, std::span<const Complex> f,
                       const SpherePoint& xi) {
  if (f.size() != rule.nodes.size()) throw std::invalid_argument("apply_operator: sample count mismatch");
  ComplexCompensatedSum acc;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    if (f[k] == Complex(0.0)) continue;
    acc.add(rule.weights[k] * kernel.evaluate(inner(xi, rule.nodes[k])) * f[k]);
  }
  return acc.value();
}

Complex apply_operator(const MultiplierSpec& spec, int bandlimit, const SphereQuadrature& rule,
                       std::span<const Complex> f, const SpherePoint& xi, int f_degree, bool* degree_ok) {
  if (degree_ok) *degree_ok = rule.exact_degree >= bandlimit + f_degree;
  const KernelSeries series = KernelSeries::from_multiplier(spec, rule.n, bandlimit);
  return apply_operator(series, rule, f, xi);
}

// ---------------------------------------------------------------------------

namespace {

struct FourierSamples {
  std::vector<double> t;
  std::vector<double> value;  // h^(t_k), real since h is even
};

FourierSamples hfun_transform(int nu, double r, double delta) {
  const double s_hi = std::ldexp(1.0, 1 - nu);
  const double x_max = r * std::sqrt(std::max(0.0, 1.0 - std::ldexp(1.0, -1 - nu)));
  const double x_min = r * std::sqrt(std::max(0.0, 1.0 - std::min(1.0, s_hi)));
  const double width = x_max - x_min;
  const int per_support = 1 << 11;
  const double dx = width / per_support;
  const int J = static_cast<int>(std::ceil(x_max / dx)) + 1;
  int N = 1;
  while (N < 16 * J) N *= 2;
  std::vector<double> x(static_cast<std::size_t>(N) + 1, 0.0);
  for (int j = 0; j <= J && j <= N; ++j) x[j] = hfun_value(nu, r, delta, j * dx);
  std::vector<double> y(x.size());
  detail::dct1(x, y);
  FourierSamples out;
  const double scale = dx / std::sqrt(2.0 * std::numbers::pi);
  for (int k = 0; k <= N; ++k) {
    out.t.push_back(std::numbers::pi * k / (N * dx));
    out.value.push_back(scale * y[k]);
  }
  return out;
}

}  // namespace

std::vector<double> hfun_fourier_tails(int nu, double r, double delta, std::span<const double> s) {
  for (double v : s)
    if (!(v > 0.0)) throw std::invalid_argument("hfun_fourier_tail: s must be > 0");
  const auto ft = hfun_transform(nu, r, delta);
  const std::size_t K = ft.t.size();
  // suffix[k] = integral of |h^| over [t_k, t_max], accumulated from the top down.
  std::vector<double> suffix(K, 0.0);
  CompensatedSum acc;
  for (std::size_t k = K - 1; k-- > 0;) {
    acc.add(0.5 * (std::abs(ft.value[k]) + std::abs(ft.value[k + 1])) * (ft.t[k + 1] - ft.t[k]));
    suffix[k] = acc.value();
  }
  std::vector<double> out;
  for (double v : s) {
    if (!std::isfinite(v) || v >= ft.t.back()) {
      out.push_back(0.0);
      continue;
    }
    const auto it = std::upper_bound(ft.t.begin(), ft.t.end(), v);
    const std::size_t k1 = static_cast<std::size_t>(it - ft.t.begin());
    const std::size_t k0 = k1 - 1;
    const double f = (v - ft.t[k0]) / (ft.t[k1] - ft.t[k0]);
    const double a = std::abs(ft.value[k0]), b = std::abs(ft.value[k1]);
    const double as = a + f * (b - a);
    out.push_back(2.0 * (suffix[k1] + 0.5 * (as + b) * (ft.t[k1] - v)));
  }
  return out;
}

double hfun_fourier_tail(int nu, double r, double delta, double s) {
  if (!std::isfinite(s) && s > 0.0) return 0.0;
  return hfun_fourier_tails(nu, r, delta, std::span<const double>(&s, 1)).front();
}

double hfun_fourier_l1(int nu, double r, double delta) {
  const auto ft = hfun_transform(nu, r, delta);
  CompensatedSum acc;
  for (std::size_t k = 0; k + 1 < ft.t.size(); ++k)
    acc.add(0.5 * (std::abs(ft.value[k]) + std::abs(ft.value[k + 1])) * (ft.t[k + 1] - ft.t[k]));
  return 2.0 * acc.value() / std::sqrt(2.0 * std::numbers::pi);
}

double partition_residual(double delta, double R, int n, int bandlimit, double margin) {
  const auto riesz = MultiplierSpec::riesz(delta, R);
  const auto zero = MultiplierSpec::dyadic0(delta, R);
  const auto rem = MultiplierSpec::remainder(delta, R);
  const int N = dyadic_top(R);
  std::vector<MultiplierSpec> pieces;
  for (int nu = 1; nu <= N; ++nu) pieces.push_back(MultiplierSpec::dyadic(delta, R, nu));
  const double top = R * (1.0 + margin);
  double worst = 0.0;
  std::vector<double> seen;
  for (int beta = 0; beta <= bandlimit && (n - 1.0) * beta <= top; ++beta)
    for (int q = 0; 2 * q + beta <= bandlimit; ++q) {
      const double lambda = eigenvalue(q + beta, q, n);
      if (lambda > top) break;
      seen.push_back(lambda);
    }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  for (double lambda : seen) {
    CompensatedSum acc;
    acc.add(multiplier_value(riesz, lambda));
    acc.add(-multiplier_value(zero, lambda));
    for (const auto& p : pieces) acc.add(-multiplier_value(p, lambda));
    acc.add(-multiplier_value(rem, lambda));
    worst = std::max(worst, std::abs(acc.value()));
  }
  return worst;
}

}  // namespace crs::spectral
