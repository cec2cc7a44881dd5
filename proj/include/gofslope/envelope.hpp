#pragma once

#include <algorithm>
#include <cmath>

namespace gofslope {

/// Growth bound |f(k)| <= scale * (1 + k)^degree, valid for integers k >= λ.
///
/// Sums and products of envelopes bound sums and products of the functions
/// they dominate, which is how moment integrands get their truncation bounds.
struct Envelope {
  double scale = 1.0;
  int degree = 0;

  static Envelope constant(double c) { return {std::abs(c), 0}; }
  /// |k - λ| <= 1 + k for k >= λ.
  static Envelope centered_count() { return {1.0, 1}; }

  double operator()(double k) const { return scale * std::pow(1.0 + k, degree); }

  friend Envelope operator+(const Envelope& a, const Envelope& b) {
    return {a.scale + b.scale, std::max(a.degree, b.degree)};
  }
  friend Envelope operator*(const Envelope& a, const Envelope& b) {
    return {a.scale * b.scale, a.degree + b.degree};
  }
  friend Envelope operator*(double c, const Envelope& e) { return {std::abs(c) * e.scale, e.degree}; }
};

}  // namespace gofslope
