#pragma once

#include "wulffflow/common.hpp"

#include <cmath>
#include <cstdlib>

namespace wulffflow {

// Real spherical harmonics with the orthonormal convention
//   Y_l^0      = sqrt((2l+1)/4pi) P_l(cos theta)
//   Y_l^m      = sqrt(2) sqrt((2l+1)/4pi (l-m)!/(l+m)!) P_l^m(cos theta) cos(m phi),  m > 0
//   Y_l^{-m}   = sqrt(2) sqrt(...) P_l^m(cos theta) sin(m phi),                       m > 0
// (no Condon-Shortley phase; std::sph_legendre supplies the normalized P part).
// With this convention integral of Y^2 over S^2 is 1, and
// Y_2^0(north pole) = sqrt(5/(4 pi)).
//
// For N=1 the analogue is the orthonormal Fourier basis on S^1:
//   degree k, order 0 -> cos(k theta)/sqrt(pi), order -1 -> sin(k theta)/sqrt(pi),
//   degree 0 -> 1/sqrt(2 pi).

struct HarmonicTerm {
  int degree = 0;
  int order = 0;
  double amplitude = 0.0;
};

inline double real_sph_harmonic(int l, int m, double theta, double phi) {
  const int am = std::abs(m);
  const double p = std::sph_legendre(static_cast<unsigned>(l), static_cast<unsigned>(am), theta);
  if (m == 0) return p;
  const double s = std::sqrt(2.0) * p;
  return m > 0 ? s * std::cos(am * phi) : s * std::sin(am * phi);
}

template <int N>
double eval_harmonic(const HarmonicTerm& t, const AmbientVec<N>& x_unit) {
  if constexpr (N == 1) {
    const double theta = std::atan2(x_unit[1], x_unit[0]);
    if (t.degree == 0) return 1.0 / std::sqrt(2.0 * M_PI);
    const double c = 1.0 / std::sqrt(M_PI);
    return t.order >= 0 ? c * std::cos(t.degree * theta) : c * std::sin(t.degree * theta);
  } else {
    const double theta = std::acos(std::clamp(x_unit[2], -1.0, 1.0));
    const double phi = std::atan2(x_unit[1], x_unit[0]);
    return real_sph_harmonic(t.degree, t.order, theta, phi);
  }
}

template <int N>
double eval_harmonics(const std::vector<HarmonicTerm>& terms, const AmbientVec<N>& x_unit) {
  double s = 0.0;
  for (const auto& t : terms) s += t.amplitude * eval_harmonic<N>(t, x_unit);
  return s;
}

}  // namespace wulffflow
