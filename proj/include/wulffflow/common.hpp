#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace wulffflow {

// N is the surface dimension: N=1 evolves curves in R^2, N=2 surfaces in R^3.
template <int N>
using AmbientVec = Eigen::Matrix<double, N + 1, 1>;
template <int N>
using AmbientMat = Eigen::Matrix<double, N + 1, N + 1>;
template <int N>
using TangentVec = Eigen::Matrix<double, N, 1>;
template <int N>
using TangentMat = Eigen::Matrix<double, N, N>;
// Columns are an orthonormal tangent frame at a point of S^N.
template <int N>
using FrameMat = Eigen::Matrix<double, N + 1, N>;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic pairwise (tree) reduction; bitwise independent of threading.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

/// Chunked parallel loop over [0, n). Each index must be independent; the
/// chunking never affects results, only wall time. threads == 0 means auto.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  unsigned t = threads > 0 ? static_cast<unsigned>(threads)
                           : std::max(1u, std::thread::hardware_concurrency());
  if (t <= 1 || n < 256) {
    body(0, n);
    return;
  }
  t = std::min<unsigned>(t, 64);
  std::vector<std::thread> pool;
  pool.reserve(t);
  const std::size_t chunk = (n + t - 1) / t;
  for (unsigned i = 0; i < t; ++i) {
    const std::size_t lo = std::min(n, i * chunk);
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

/// Orthonormal tangent frame at a unit direction x on S^N.
/// For N=2 the frame is (e_theta, e_phi) of spherical coordinates; within
/// ~1e-6 of the poles a fixed Cartesian-projection frame is used instead.
template <int N>
FrameMat<N> tangent_frame(const AmbientVec<N>& x) {
  FrameMat<N> T;
  if constexpr (N == 1) {
    T(0, 0) = -x[1];
    T(1, 0) = x[0];
  } else {
    const double s = std::hypot(x[0], x[1]);
    if (s < 1e-6) {
      // Pole frame: project e1, e2 onto x^perp and orthonormalize.
      AmbientVec<2> t1 = AmbientVec<2>::UnitX() - x[0] * x;
      t1.normalize();
      AmbientVec<2> t2 = x.cross(t1);
      T.col(0) = t1;
      T.col(1) = t2;
    } else {
      const double ct = x[2];  // cos(theta)
      T.col(0) = AmbientVec<2>(ct * x[0] / s, ct * x[1] / s, -s);
      T.col(1) = AmbientVec<2>(-x[1] / s, x[0] / s, 0.0);
    }
  }
  return T;
}

/// Quasi-uniform direction samples: Fibonacci points for N=2, equal angles
/// for N=1. The 2(N+1) coordinate axis directions are always included.
template <int N>
std::vector<AmbientVec<N>> direction_samples(std::size_t count) {
  std::vector<AmbientVec<N>> dirs;
  dirs.reserve(count + 2 * (N + 1));
  if constexpr (N == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      const double a = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(count);
      dirs.push_back(AmbientVec<1>(std::cos(a), std::sin(a)));
    }
  } else {
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < count; ++i) {
      const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * static_cast<double>(i);
      dirs.push_back(AmbientVec<2>(r * std::cos(a), r * std::sin(a), z));
    }
  }
  for (int k = 0; k <= N; ++k) {
    AmbientVec<N> e = AmbientVec<N>::Zero();
    e[k] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  return dirs;
}

/// Eigenvalues of a symmetric NxN matrix, ascending. Closed form; no
/// iteration, so the result is deterministic to the last bit.
template <int N>
TangentVec<N> sym_eigenvalues(const TangentMat<N>& m) {
  if constexpr (N == 1) {
    return TangentVec<1>(m(0, 0));
  } else {
    const double tr = m(0, 0) + m(1, 1);
    const double d = 0.5 * (m(0, 0) - m(1, 1));
    const double disc = std::sqrt(std::max(0.0, d * d + m(0, 1) * m(1, 0)));
    return TangentVec<2>(0.5 * tr - disc, 0.5 * tr + disc);
  }
}

/// Principal square root of a symmetric positive definite NxN matrix.
template <int N>
TangentMat<N> sym_sqrt(const TangentMat<N>& m) {
  if constexpr (N == 1) {
    TangentMat<1> r;
    r(0, 0) = std::sqrt(m(0, 0));
    return r;
  } else {
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    const double s = std::sqrt(std::max(det, 0.0));
    const double t = std::sqrt(m(0, 0) + m(1, 1) + 2.0 * s);
    return (m + s * TangentMat<2>::Identity()) / t;
  }
}

}  // namespace wulffflow
