#include "fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace crs::detail {

namespace {

enum class PlanKind { dct1, backward };

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(PlanKind kind, int size) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(kind, size);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    fftw_plan plan = nullptr;
    if (kind == PlanKind::dct1) {
      auto* in = fftw_alloc_real(size);
      auto* out = fftw_alloc_real(size);
      plan = fftw_plan_r2r_1d(size, in, out, FFTW_REDFT00, FFTW_ESTIMATE);
      fftw_free(in);
      fftw_free(out);
    } else {
      auto* in = fftw_alloc_complex(size);
      auto* out = fftw_alloc_complex(size);
      plan = fftw_plan_dft_1d(size, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
      fftw_free(in);
      fftw_free(out);
    }
    if (!plan) throw std::runtime_error("fftw planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<PlanKind, int>, fftw_plan> plans_;
};

template <class T>
struct FftwBuffer {
  T* data;
  explicit FftwBuffer(std::size_t n) : data(static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)))) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

}  // namespace

void dct1(std::span<const double> x, std::span<double> y) {
  const int n = static_cast<int>(x.size());
  if (n < 2 || y.size() != x.size()) throw std::invalid_argument("dct1: bad sizes");
  fftw_plan plan = PlanCache::instance().get(PlanKind::dct1, n);
  FftwBuffer<double> in(n), out(n);
  std::memcpy(in.data, x.data(), sizeof(double) * n);
  fftw_execute_r2r(plan, in.data, out.data);
  std::memcpy(y.data(), out.data, sizeof(double) * n);
}

void cosine_synthesis(std::span<const double> c, int M, std::span<double> out) {
  if (M < 1 || static_cast<int>(out.size()) != M) throw std::invalid_argument("cosine_synthesis: bad sizes");
  if (M % 2 != 0 || M < 4) {
    for (int j = 0; j < M; ++j) {
      double s = 0;
      for (std::size_t b = 0; b < c.size(); ++b) {
        const long long phase = (static_cast<long long>(b) * j) % M;
        s += c[b] * std::cos(2.0 * std::numbers::pi * phase / M);
      }
      out[j] = s;
    }
    return;
  }
  const int L = M / 2;
  std::vector<double> x(static_cast<std::size_t>(L) + 1, 0.0);
  for (std::size_t b = 0; b < c.size(); ++b) {
    int f = static_cast<int>(b % static_cast<std::size_t>(M));
    if (f > L) f = M - f;
    if (f == 0 || f == L)
      x[f] += c[b];
    else
      x[f] += 0.5 * c[b];
  }
  std::vector<double> y(x.size());
  dct1(x, y);
  for (int j = 0; j <= L; ++j) out[j] = y[j];
  for (int j = L + 1; j < M; ++j) out[j] = y[M - j];
}

void fourier_synthesis(std::span<const std::pair<int, std::complex<double>>> terms, int M,
                       std::span<std::complex<double>> out) {
  if (M < 1 || static_cast<int>(out.size()) != M) throw std::invalid_argument("fourier_synthesis: bad sizes");
  fftw_plan plan = PlanCache::instance().get(PlanKind::backward, M);
  FftwBuffer<fftw_complex> in(M), res(M);
  std::memset(in.data, 0, sizeof(fftw_complex) * M);
  for (const auto& [m, v] : terms) {
    int f = m % M;
    if (f < 0) f += M;
    in.data[f][0] += v.real();
    in.data[f][1] += v.imag();
  }
  fftw_execute_dft(plan, in.data, res.data);
  for (int j = 0; j < M; ++j) out[j] = {res.data[j][0], res.data[j][1]};
}

}  // namespace crs::detail
