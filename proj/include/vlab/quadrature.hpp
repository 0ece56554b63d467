#pragma once

#include <cstddef>

namespace vlab {

// 5-point Gauss-Legendre on [-1, 1].
inline constexpr double kGL5Nodes[5] = {
    -0.90617984593866396370, -0.53846931010568310771, 0.0,
    0.53846931010568310771, 0.90617984593866396370};
inline constexpr double kGL5Weights[5] = {
    0.23692688505618908751, 0.47862867049936646804, 0.56888888888888888889,
    0.47862867049936646804, 0.23692688505618908751};

// integral of f over [a, b], single 5-point panel
template <typename F>
double gl5(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += kGL5Weights[i] * f(mid + half * kGL5Nodes[i]);
  return s * half;
}

// composite rule with n equal panels
template <typename F>
double gl5_composite(F&& f, double a, double b, std::size_t n) {
  const double w = (b - a) / static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += gl5(f, a + w * i, a + w * (i + 1));
  return s;
}

}  // namespace vlab
