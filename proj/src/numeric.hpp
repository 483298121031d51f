#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace lfid::detail {

// Fixed 8-lane accumulation: the summation order depends only on the length,
// so every caller (serial, parallel, single-pair) gets bit-identical results.
inline double dot(std::span<const float> a, std::span<const float> b) noexcept {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  }
  for (std::size_t l = 0; i < n; ++i, ++l) acc[l] += a[i] * b[i];
  double s = 0.0;
  for (float v : acc) s += v;
  return s;
}

inline double norm(std::span<const float> a) noexcept { return std::sqrt(dot(a, a)); }

inline double cosine(std::span<const float> a, std::span<const float> b, double norm_a, double norm_b) noexcept {
  const double denom = norm_a * norm_b;
  return denom > 0.0 ? dot(a, b) / denom : 0.0;
}

}  // namespace lfid::detail
