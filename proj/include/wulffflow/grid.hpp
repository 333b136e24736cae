#pragma once

#include "wulffflow/common.hpp"

#include <cassert>
#include <cmath>
#include <vector>

namespace wulffflow {

/// One real value per grid node. For N=2 the layout is row-major over the
/// regular (latitude, longitude) nodes followed by the north and south pole
/// nodes; for N=1 it is the circle angles in order.
using ScalarField = std::vector<double>;

/// First and second tangential derivatives of a scalar field, expressed in
/// the orthonormal tangent frame of each regular node. hess includes the
/// Christoffel corrections of the round metric (covariant Hessian).
struct FieldDerivs {
  std::vector<double> g1, g2;         // grad components (g2 unused for N=1)
  std::vector<double> h11, h12, h22;  // covariant Hessian (h12,h22 unused for N=1)
};

template <int N>
class SphereGrid;

/// Discretization of S^1: n_nodes equally spaced angles, periodic 4th-order
/// centered differences, uniform weights 2*pi/n.
template <>
class SphereGrid<1> {
 public:
  explicit SphereGrid(int n_nodes) : n_(n_nodes), h_(2.0 * M_PI / n_nodes) {
    if (n_nodes < 8) throw ConfigError("circle grid needs at least 8 nodes");
    dirs_.reserve(n_);
    for (int i = 0; i < n_; ++i) {
      const double a = h_ * i;
      dirs_.push_back(AmbientVec<1>(std::cos(a), std::sin(a)));
    }
  }

  int node_count() const { return n_; }
  int regular_count() const { return n_; }
  double angular_spacing() const { return h_; }
  const AmbientVec<1>& direction(int i) const { return dirs_[i]; }
  FrameMat<1> frame(int i) const {
    FrameMat<1> f;
    f(0, 0) = -dirs_[i][1];
    f(1, 0) = dirs_[i][0];
    return f;
  }
  double weight(int) const { return h_; }
  double surface_measure() const { return 2.0 * M_PI; }

  void compute_derivs(const ScalarField& f, FieldDerivs& d) const {
    assert(static_cast<int>(f.size()) == n_);
    d.g1.resize(n_);
    d.h11.resize(n_);
    for (int i = 0; i < n_; ++i) {
      const double fm2 = f[(i - 2 + n_) % n_], fm1 = f[(i - 1 + n_) % n_];
      const double fp1 = f[(i + 1) % n_], fp2 = f[(i + 2) % n_];
      d.g1[i] = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h_);
      d.h11[i] = (-fp2 + 16.0 * fp1 - 30.0 * f[i] + 16.0 * fm1 - fm2) / (12.0 * h_ * h_);
    }
  }

  double integrate(const ScalarField& f) const {
    assert(static_cast<int>(f.size()) == n_);
    std::vector<double> w(f.begin(), f.end());
    for (double& x : w) x *= h_;
    return pairwise_sum(w);
  }

  void apply_pole_closure(ScalarField&) const {}
  void apply_longitude_filter(ScalarField&, int = 1) const {}
  double node_stiffness(int) const { return 16.0 / (3.0 * h_ * h_); }

 private:
  int n_;
  double h_;
  std::vector<AmbientVec<1>> dirs_;
};

/// Equiangular latitude-longitude discretization of S^2 with offset rows
/// theta_j = (j + 1/2) pi / n_theta, n_phi = 2 n_theta longitudes, and two
/// pole nodes. Stencils reach across the poles through mirror ghosts
/// (theta -> -theta, phi -> phi + pi), which is exact for smooth fields, so
/// the 4th-order accuracy holds on every regular node. Pole nodes carry the
/// mean of the adjacent row, have zero quadrature weight, and never enter
/// the stencils.
///
/// A longitude spectral filter caps the azimuthal wavenumber at each row to
/// what the local meridian spacing can resolve; without it an explicit
/// integrator would be limited by the clustered near-pole cells.
template <>
class SphereGrid<2> {
 public:
  explicit SphereGrid(int n_theta)
      : nt_(n_theta),
        np_(2 * n_theta),
        ht_(M_PI / n_theta),
        hp_(2.0 * M_PI / (2 * n_theta)) {
    if (n_theta < 16) throw ConfigError("sphere grid needs n_theta >= 16");
    sin_t_.resize(nt_);
    cos_t_.resize(nt_);
    row_weight_.resize(nt_);
    for (int j = 0; j < nt_; ++j) {
      const double th = (j + 0.5) * ht_;
      sin_t_[j] = std::sin(th);
      cos_t_[j] = std::cos(th);
      // cos(theta_j) are Chebyshev points of the first kind, so Fejer's
      // first rule integrates every polynomial in cos(theta) up to degree
      // n_theta - 1 exactly; for smooth fields the quadrature error decays
      // faster than any power of h.
      double s = 0.0;
      for (int m = 1; m <= nt_ / 2; ++m)
        s += std::cos(2.0 * m * th) / (4.0 * m * m - 1.0);
      row_weight_[j] = hp_ * (2.0 / nt_) * (1.0 - 2.0 * s);
    }
    sin_p_.resize(np_);
    cos_p_.resize(np_);
    for (int k = 0; k < np_; ++k) {
      sin_p_[k] = std::sin(k * hp_);
      cos_p_[k] = std::cos(k * hp_);
    }
    dirs_.resize(nt_ * np_);
    for (int j = 0; j < nt_; ++j)
      for (int k = 0; k < np_; ++k)
        dirs_[j * np_ + k] =
            AmbientVec<2>(sin_t_[j] * cos_p_[k], sin_t_[j] * sin_p_[k], cos_t_[j]);
    init_filter();
  }

  int n_theta() const { return nt_; }
  int n_phi() const { return np_; }
  int regular_count() const { return nt_ * np_; }
  int node_count() const { return nt_ * np_ + 2; }
  int north_index() const { return nt_ * np_; }
  int south_index() const { return nt_ * np_ + 1; }
  double angular_spacing() const { return ht_; }
  double surface_measure() const { return 4.0 * M_PI; }

  AmbientVec<2> direction(int i) const {
    if (i == north_index()) return AmbientVec<2>(0, 0, 1);
    if (i == south_index()) return AmbientVec<2>(0, 0, -1);
    return dirs_[i];
  }

  FrameMat<2> frame(int i) const {
    if (i >= regular_count()) return tangent_frame<2>(direction(i));
    const int j = i / np_, k = i % np_;
    FrameMat<2> f;
    f.col(0) = AmbientVec<2>(cos_t_[j] * cos_p_[k], cos_t_[j] * sin_p_[k], -sin_t_[j]);
    f.col(1) = AmbientVec<2>(-sin_p_[k], cos_p_[k], 0.0);
    return f;
  }

  double weight(int i) const { return i < regular_count() ? row_weight_[i / np_] : 0.0; }

  /// Value fetch with the mirror ghost rule in theta and periodicity in phi;
  /// j may range over [-2, nt_+1].
  double value_at(const ScalarField& f, int j, int k) const {
    if (j < 0) {
      j = -1 - j;
      k += np_ / 2;
    } else if (j >= nt_) {
      j = 2 * nt_ - 1 - j;
      k += np_ / 2;
    }
    k %= np_;
    if (k < 0) k += np_;
    return f[j * np_ + k];
  }

  void compute_derivs(const ScalarField& f, FieldDerivs& d, int threads = 1) const {
    assert(static_cast<int>(f.size()) == node_count());
    const int m = regular_count();
    d.g1.resize(m);
    d.g2.resize(m);
    d.h11.resize(m);
    d.h12.resize(m);
    d.h22.resize(m);
    // phi derivatives first; f_phi obeys the same mirror rule as f, so the
    // mixed derivative can reuse value_at on the f_phi field.
    std::vector<double>& fp = scratch_phi(m);
    parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const int j = static_cast<int>(i) / np_, k = static_cast<int>(i) % np_;
        const double fm2 = f[j * np_ + (k - 2 + np_) % np_];
        const double fm1 = f[j * np_ + (k - 1 + np_) % np_];
        const double fp1 = f[j * np_ + (k + 1) % np_];
        const double fp2 = f[j * np_ + (k + 2) % np_];
        fp[i] = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * hp_);
        d.h22[i] = (-fp2 + 16.0 * fp1 - 30.0 * f[i] + 16.0 * fm1 - fm2) / (12.0 * hp_ * hp_);
      }
    });
    parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const int j = static_cast<int>(i) / np_, k = static_cast<int>(i) % np_;
        const double fm2 = value_at(f, j - 2, k), fm1 = value_at(f, j - 1, k);
        const double fp1 = value_at(f, j + 1, k), fp2 = value_at(f, j + 2, k);
        const double ft = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * ht_);
        const double ftt =
            (-fp2 + 16.0 * fp1 - 30.0 * f[i] + 16.0 * fm1 - fm2) / (12.0 * ht_ * ht_);
        const double pm2 = value_at_v(fp, j - 2, k), pm1 = value_at_v(fp, j - 1, k);
        const double pp1 = value_at_v(fp, j + 1, k), pp2 = value_at_v(fp, j + 2, k);
        const double ftp = (-pp2 + 8.0 * pp1 - 8.0 * pm1 + pm2) / (12.0 * ht_);
        const double st = sin_t_[j], cot = cos_t_[j] / st;
        d.g1[i] = ft;
        d.g2[i] = fp[i] / st;
        d.h11[i] = ftt;
        d.h12[i] = (ftp - cot * fp[i]) / st;
        d.h22[i] = d.h22[i] / (st * st) + cot * ft;
      }
    });
  }

  double integrate(const ScalarField& f) const {
    assert(static_cast<int>(f.size()) == node_count());
    std::vector<double> w(regular_count());
    for (int i = 0; i < regular_count(); ++i) w[i] = f[i] * row_weight_[i / np_];
    return pairwise_sum(w);
  }

  /// Sets each pole node to the mean of its adjacent latitude row.
  void apply_pole_closure(ScalarField& f) const {
    double n = 0.0, s = 0.0;
    for (int k = 0; k < np_; ++k) {
      n += f[k];
      s += f[(nt_ - 1) * np_ + k];
    }
    f[north_index()] = n / np_;
    f[south_index()] = s / np_;
  }

  /// Projects each near-pole row onto the azimuthal wavenumbers the local
  /// resolution supports (m <= ~0.7 n_theta sin(theta)). Exact projection
  /// through the discrete Fourier sums; rows at mid-latitudes are untouched.
  void apply_longitude_filter(ScalarField& f, int threads = 1) const {
    parallel_for(filtered_rows_.size(), threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t r = lo; r < hi; ++r) {
        const int j = filtered_rows_[r];
        const int mmax = row_mmax_[j];
        double* row = f.data() + j * np_;
        filter_row(row, mmax);
      }
    });
  }

  bool row_filtered(int j) const { return row_mmax_[j] < np_ / 2; }
  int row_mmax(int j) const { return row_mmax_[j]; }

  /// Spectral radius bound of the discrete Laplacian-like operator at the
  /// node's row, after filtering. Units 1/angle^2.
  double node_stiffness(int i) const { return row_stiffness_[i / np_]; }

 private:
  void init_filter() {
    row_mmax_.resize(nt_);
    for (int j = 0; j < nt_; ++j) {
      const int cap = static_cast<int>(std::floor(0.7 * nt_ * sin_t_[j]));
      // Floor of 2: an m=2 mode with the theta^2 amplitude of a smooth field
      // contributes O(1) to the covariant Hessian, so it must never be cut.
      // Removed modes m >= 3 only contribute O(theta^{m-2}).
      row_mmax_[j] = std::max(2, cap);
      if (row_mmax_[j] < np_ / 2) filtered_rows_.push_back(j);
    }
    // Largest magnitude of the 4th-order second-difference symbol per row,
    // for the integrator's stability bound: theta direction plus the fastest
    // kept phi mode.
    row_stiffness_.resize(nt_);
    auto sym = [](double x) { return (30.0 - 32.0 * std::cos(x) + 2.0 * std::cos(2.0 * x)) / 12.0; };
    for (int j = 0; j < nt_; ++j) {
      const double mphi = std::min(row_mmax_[j], np_ / 2) * hp_;
      row_stiffness_[j] =
          16.0 / (3.0 * ht_ * ht_) + sym(std::min(mphi, M_PI)) / (hp_ * hp_ * sin_t_[j] * sin_t_[j]);
    }
    // Single-period trig table indexed by (k*m) mod n_phi.
    tab_cos_.resize(np_);
    tab_sin_.resize(np_);
    for (int k = 0; k < np_; ++k) {
      tab_cos_[k] = std::cos(2.0 * M_PI * k / np_);
      tab_sin_[k] = std::sin(2.0 * M_PI * k / np_);
    }
  }

  void filter_row(double* row, int mmax) const {
    thread_local std::vector<double> a, b, tmp;
    a.assign(mmax + 1, 0.0);
    b.assign(mmax + 1, 0.0);
    tmp.assign(np_, 0.0);
    for (int k = 0; k < np_; ++k) {
      a[0] += row[k];
      for (int m = 1; m <= mmax; ++m) {
        const int idx = (k * m) % np_;
        a[m] += row[k] * tab_cos_[idx];
        b[m] += row[k] * tab_sin_[idx];
      }
    }
    a[0] /= np_;
    for (int m = 1; m <= mmax; ++m) {
      a[m] *= 2.0 / np_;
      b[m] *= 2.0 / np_;
    }
    for (int k = 0; k < np_; ++k) {
      double v = a[0];
      for (int m = 1; m <= mmax; ++m) {
        const int idx = (k * m) % np_;
        v += a[m] * tab_cos_[idx] + b[m] * tab_sin_[idx];
      }
      tmp[k] = v;
    }
    std::copy(tmp.begin(), tmp.end(), row);
  }

  double value_at_v(const std::vector<double>& f, int j, int k) const {
    if (j < 0) {
      j = -1 - j;
      k += np_ / 2;
    } else if (j >= nt_) {
      j = 2 * nt_ - 1 - j;
      k += np_ / 2;
    }
    k %= np_;
    if (k < 0) k += np_;
    return f[j * np_ + k];
  }

  std::vector<double>& scratch_phi(int m) const {
    thread_local std::vector<double> buf;
    buf.resize(m);
    return buf;
  }

  int nt_, np_;
  double ht_, hp_;
  std::vector<double> sin_t_, cos_t_, row_weight_, sin_p_, cos_p_;
  std::vector<AmbientVec<2>> dirs_;
  std::vector<int> row_mmax_, filtered_rows_;
  std::vector<double> row_stiffness_;
  std::vector<double> tab_cos_, tab_sin_;
};

template <int N>
SphereGrid<N> build_grid(int resolution) {
  return SphereGrid<N>(resolution);
}

}  // namespace wulffflow
