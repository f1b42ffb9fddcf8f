#pragma once

#include <complex>
#include <span>
#include <utility>

namespace crs::detail {

/// out[j] = sum_b c[b] cos(2 pi b j / M), j = 0..M-1.
void cosine_synthesis(std::span<const double> c, int M, std::span<double> out);

/// out[j] = sum_k terms[k].second * exp(2 pi i terms[k].first j / M), j = 0..M-1.
void fourier_synthesis(std::span<const std::pair<int, std::complex<double>>> terms, int M,
                       std::span<std::complex<double>> out);

/// Y[k] = X[0] + (-1)^k X[N-1] + 2 sum_{j=1}^{N-2} X[j] cos(pi j k / (N-1)), N = x.size() >= 2.
void dct1(std::span<const double> x, std::span<double> y);

}  // namespace crs::detail
