#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace cmflow {

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

namespace detail {

inline constexpr int kMaxSpectrum = 64;

// e_0..e_k of lam, skipping index `skip` (-1 for none).
inline void elementary_symmetric(const double* lam, int m, int k, int skip, double* e) {
  e[0] = 1.0;
  for (int j = 1; j <= k; ++j) e[j] = 0.0;
  int seen = 0;
  for (int i = 0; i < m; ++i) {
    if (i == skip) continue;
    ++seen;
    for (int j = std::min(seen, k); j >= 1; --j) e[j] += lam[i] * e[j - 1];
  }
}

// Normalized sigma_k and its partials; partials may be null.
inline double sigma_k_raw(const double* lam, int m, int k, double* partials) {
  double e[kMaxSpectrum + 1];
  const double norm = binomial(m, k);
  elementary_symmetric(lam, m, k, -1, e);
  if (partials != nullptr) {
    double ex[kMaxSpectrum + 1];
    for (int i = 0; i < m; ++i) {
      elementary_symmetric(lam, m, k - 1, i, ex);
      partials[i] = ex[k - 1] / norm;
    }
  }
  return e[k] / norm;
}

}  // namespace detail

struct SigmaK {
  double value = 0.0;
  std::vector<double> partials;  // d sigma_k / d lambda_i
};

/// sigma_k(lambda) = e_k(lambda) / binom(n-1, k), so sigma_k(1, ..., 1) = 1.
inline SigmaK sigma_k_of_spectrum(std::span<const double> lambdas, int k, int n) {
  const int m = static_cast<int>(lambdas.size());
  if (m != n - 1) throw std::invalid_argument("sigma_k_of_spectrum: expected n-1 eigenvalues");
  if (k < 1 || k > m) throw std::invalid_argument("sigma_k_of_spectrum: need 1 <= k <= n-1");
  if (m > detail::kMaxSpectrum) throw std::invalid_argument("sigma_k_of_spectrum: spectrum too long");
  SigmaK out;
  out.partials.resize(m);
  out.value = detail::sigma_k_raw(lambdas.data(), m, k, out.partials.data());
  return out;
}

}  // namespace cmflow
