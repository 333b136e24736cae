#pragma once

#include "wulffflow/common.hpp"
#include "wulffflow/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

namespace wulffflow {

enum class NormFamily { euclidean, ellipsoid, perturbed_sphere, blended_lp };
enum class DerivativeMode { analytic, finite_difference };

template <int N>
struct WulffSample {
  AmbientVec<N> direction;  // unit
  AmbientVec<N> point;      // phi(x) = F(x) x + grad^S F(x) = DF(x)
  TangentMat<N> a_f;        // A_F in the tangent frame at direction
};

struct NormValidityReport {
  double min_af_eigenvalue = 0.0;
  double max_af_eigenvalue = 0.0;
  double homogeneity_residual = 0.0;
  double gradient_check_residual = 0.0;
  bool valid = false;
};

template <int N>
struct DualResult {
  double value = 0.0;
  AmbientVec<N> maximizer = AmbientVec<N>::Zero();  // unit direction attaining the sup
};

/// A Minkowski norm F on R^{N+1}: the 1-homogeneous extension of the support
/// function of the Wulff shape. Immutable after construction; all member
/// functions are const and thread-safe.
template <int N>
class MinkowskiNorm {
 public:
  static MinkowskiNorm make_euclidean() { return MinkowskiNorm(NormFamily::euclidean); }

  /// q is the SPD quadratic form: F(x) = sqrt(x^T q x). For semiaxes
  /// (a_1,...,a_{N+1}) of the Wulff ellipsoid, q = diag(a_i^2).
  static MinkowskiNorm make_ellipsoid(const AmbientMat<N>& q) {
    MinkowskiNorm n(NormFamily::ellipsoid);
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw ConfigError("ellipsoid norm: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<AmbientMat<N>> es(q);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw ConfigError("ellipsoid norm: matrix is not positive definite");
    n.q_ = q;
    n.q_inv_ = q.inverse();
    return n;
  }

  static MinkowskiNorm make_ellipsoid_semiaxes(const AmbientVec<N>& a) {
    AmbientMat<N> q = AmbientMat<N>::Zero();
    for (int i = 0; i <= N; ++i) {
      if (a[i] <= 0.0) throw ConfigError("ellipsoid norm: semiaxes must be positive");
      q(i, i) = a[i] * a[i];
    }
    return make_ellipsoid(q);
  }

  /// F(x) = |x| (1 + sum amp_i Y_i(x/|x|)). Derivatives are computed by
  /// central finite differences; requesting analytic mode is an error.
  static MinkowskiNorm make_perturbed_sphere(std::vector<HarmonicTerm> terms,
                                             DerivativeMode mode = DerivativeMode::finite_difference,
                                             double fd_step = 1e-5) {
    if (mode == DerivativeMode::analytic)
      throw ConfigError(
          "perturbed_sphere norm supports only derivative_mode = finite_difference");
    MinkowskiNorm n(NormFamily::perturbed_sphere);
    n.mode_ = DerivativeMode::finite_difference;
    n.fd_step_ = fd_step;
    n.terms_ = std::move(terms);
    n.init_numeric_dual();
    return n;
  }

  /// F = sqrt((1-lambda)|x|^2 + lambda |x|_p^2). lambda < 1 keeps A_F
  /// uniformly positive for every p; lambda = 1 (pure l^p) is constructible
  /// so that validate() can demonstrate the degeneracy on the axes.
  static MinkowskiNorm make_blended_lp(double p, double lambda,
                                       DerivativeMode mode = DerivativeMode::analytic,
                                       double fd_step = 1e-5) {
    if (p <= 1.0) throw ConfigError("blended_lp norm: p must be > 1");
    if (lambda < 0.0 || lambda > 1.0)
      throw ConfigError("blended_lp norm: lambda must be in [0, 1]");
    if (mode == DerivativeMode::analytic && p < 2.0)
      throw ConfigError(
          "blended_lp norm: analytic derivatives need p >= 2; use finite_difference");
    MinkowskiNorm n(NormFamily::blended_lp);
    n.mode_ = mode;
    n.fd_step_ = fd_step;
    n.p_ = p;
    n.lambda_ = lambda;
    n.init_numeric_dual();
    return n;
  }

  NormFamily family() const { return family_; }
  DerivativeMode derivative_mode() const { return mode_; }

  double eval(const AmbientVec<N>& x) const {
    require_nonzero(x);
    switch (family_) {
      case NormFamily::euclidean:
        return x.norm();
      case NormFamily::ellipsoid:
        return std::sqrt(x.dot(q_ * x));
      case NormFamily::perturbed_sphere: {
        const double r = x.norm();
        return r * (1.0 + eval_harmonics<N>(terms_, AmbientVec<N>(x / r)));
      }
      case NormFamily::blended_lp: {
        const double s2 = x.squaredNorm();
        double h = 0.0;
        for (int i = 0; i <= N; ++i) h += std::pow(std::abs(x[i]), p_);
        const double lp2 = std::pow(h, 2.0 / p_);
        return std::sqrt((1.0 - lambda_) * s2 + lambda_ * lp2);
      }
    }
    return 0.0;
  }

  AmbientVec<N> gradient(const AmbientVec<N>& x) const {
    require_nonzero(x);
    if (mode_ == DerivativeMode::finite_difference) return fd_gradient(x, fd_step_ * x.norm());
    switch (family_) {
      case NormFamily::euclidean:
        return x.normalized();
      case NormFamily::ellipsoid:
        return q_ * x / eval(x);
      case NormFamily::blended_lp: {
        return blended_dw(x) / eval(x);
      }
      default:
        return fd_gradient(x, fd_step_ * x.norm());
    }
  }

  AmbientMat<N> hessian(const AmbientVec<N>& x) const {
    require_nonzero(x);
    if (mode_ == DerivativeMode::finite_difference)
      return fd_hessian(x, 10.0 * fd_step_ * x.norm());
    const double f = eval(x);
    switch (family_) {
      case NormFamily::euclidean: {
        const AmbientVec<N> u = x / f;
        return (AmbientMat<N>::Identity() - u * u.transpose()) / f;
      }
      case NormFamily::ellipsoid: {
        const AmbientVec<N> qx = q_ * x;
        return q_ / f - qx * qx.transpose() / (f * f * f);
      }
      case NormFamily::blended_lp: {
        const AmbientVec<N> dw = blended_dw(x);
        return blended_d2w(x) / f - dw * dw.transpose() / (f * f * f);
      }
      default:
        return fd_hessian(x, 10.0 * fd_step_ * x.norm());
    }
  }

  /// Estimated truncation error scale of the finite-difference derivatives
  /// (O(h^2) central differences); zero in analytic mode.
  double fd_truncation_estimate(const AmbientVec<N>& x) const {
    if (mode_ == DerivativeMode::analytic) return 0.0;
    const double h = fd_step_ * x.norm();
    return h * h;
  }

  /// Dual norm F^0(xi) = sup_x <x, xi>/F(x). Closed form for the euclidean
  /// and ellipsoid families, otherwise coarse grid search plus projected
  /// gradient ascent on the sphere.
  double dual_eval(const AmbientVec<N>& xi) const { return dual_full(xi).value; }

  DualResult<N> dual_full(const AmbientVec<N>& xi) const {
    require_nonzero(xi);
    switch (family_) {
      case NormFamily::euclidean:
        return {xi.norm(), xi.normalized()};
      case NormFamily::ellipsoid: {
        const double v = std::sqrt(xi.dot(q_inv_ * xi));
        return {v, AmbientVec<N>((q_inv_ * xi).normalized())};
      }
      default:
        return dual_numeric(xi, std::nullopt);
    }
  }

  /// Gradient of the dual norm. For numeric duals this uses the envelope
  /// identity DF^0(xi) = x*/F(x*) with x* the inner maximizer.
  AmbientVec<N> dual_gradient(const AmbientVec<N>& xi) const {
    require_nonzero(xi);
    switch (family_) {
      case NormFamily::euclidean:
        return xi.normalized();
      case NormFamily::ellipsoid:
        return q_inv_ * xi / dual_eval(xi);
      default: {
        const DualResult<N> r = dual_numeric(xi, std::nullopt);
        return r.maximizer / eval(r.maximizer);
      }
    }
  }

  /// Runs the generic sup optimizer regardless of family, so the closed-form
  /// duals can be cross-checked against it.
  DualResult<N> dual_by_optimization(const AmbientVec<N>& xi) const {
    require_nonzero(xi);
    if (!dual_dirs_.empty()) return dual_numeric(xi, std::nullopt);
    AmbientVec<N> best = xi.normalized();
    double best_val = best.dot(xi) / eval(best);
    for (const auto& d : direction_samples<N>(N == 1 ? 128 : 512)) {
      const double v = d.dot(xi) / eval(d);
      if (v > best_val) {
        best_val = v;
        best = d;
      }
    }
    return dual_numeric(xi, best);
  }

  WulffSample<N> wulff_point(const AmbientVec<N>& x) const {
    require_nonzero(x);
    const AmbientVec<N> u = x.normalized();
    WulffSample<N> s;
    s.direction = u;
    s.point = gradient(u);
    s.a_f = af_in_frame(u, tangent_frame<N>(u));
    return s;
  }

  /// A_F(x)(V, W) = D^2F(x)(V, W) for unit x and tangent V, W.
  TangentMat<N> af_in_frame(const AmbientVec<N>& x_unit, const FrameMat<N>& frame) const {
    const AmbientMat<N> h = hessian(x_unit);
    TangentMat<N> a = frame.transpose() * h * frame;
    return TangentMat<N>(0.5 * (a + a.transpose()));
  }

  NormValidityReport validate(std::size_t sample_count,
                              double eig_tol = 1e-8,
                              double homogeneity_tol = 1e-6,
                              double gradient_tol = 1e-4) const {
    if (sample_count < 16) throw ConfigError("validate_norm: sample_count must be >= 16");
    NormValidityReport rep;
    rep.min_af_eigenvalue = std::numeric_limits<double>::infinity();
    rep.max_af_eigenvalue = -std::numeric_limits<double>::infinity();
    const auto dirs = direction_samples<N>(sample_count);
    for (const auto& x : dirs) {
      const auto eigs = sym_eigenvalues<N>(af_in_frame(x, tangent_frame<N>(x)));
      rep.min_af_eigenvalue = std::min(rep.min_af_eigenvalue, eigs.minCoeff());
      rep.max_af_eigenvalue = std::max(rep.max_af_eigenvalue, eigs.maxCoeff());
      const double f = eval(x);
      const AmbientVec<N> g = gradient(x);
      for (double lam : {0.5, 2.0, 10.0}) {
        rep.homogeneity_residual =
            std::max(rep.homogeneity_residual, std::abs(eval(AmbientVec<N>(lam * x)) - lam * f) / (lam * f));
      }
      rep.homogeneity_residual = std::max(rep.homogeneity_residual, std::abs(x.dot(g) - f) / f);
      const double h = fd_step_ * 1.0;
      if (mode_ == DerivativeMode::analytic) {
        rep.gradient_check_residual =
            std::max(rep.gradient_check_residual, (g - fd_gradient(x, h)).norm());
      } else {
        rep.gradient_check_residual = std::max(
            rep.gradient_check_residual, (fd_gradient(x, h) - fd_gradient(x, 0.5 * h)).norm());
      }
    }
    rep.valid = rep.min_af_eigenvalue > eig_tol &&
                rep.homogeneity_residual < homogeneity_tol &&
                rep.gradient_check_residual < gradient_tol;
    return rep;
  }

  double max_af_eigenvalue(std::size_t sample_count = 512) const {
    double m = 0.0;
    for (const auto& x : direction_samples<N>(sample_count)) {
      m = std::max(m, sym_eigenvalues<N>(af_in_frame(x, tangent_frame<N>(x))).maxCoeff());
    }
    return m;
  }

 private:
  explicit MinkowskiNorm(NormFamily f) : family_(f) {}

  static void require_nonzero(const AmbientVec<N>& x) {
    if (!(x.squaredNorm() > 0.0) || !x.allFinite())
      throw std::domain_error("Minkowski norm evaluated at the zero vector");
  }

  AmbientVec<N> fd_gradient(const AmbientVec<N>& x, double h) const {
    AmbientVec<N> g;
    for (int i = 0; i <= N; ++i) {
      AmbientVec<N> xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      g[i] = (eval(xp) - eval(xm)) / (2.0 * h);
    }
    return g;
  }

  AmbientMat<N> fd_hessian(const AmbientVec<N>& x, double h) const {
    AmbientMat<N> m;
    const double f0 = eval(x);
    for (int i = 0; i <= N; ++i) {
      AmbientVec<N> xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      m(i, i) = (eval(xp) - 2.0 * f0 + eval(xm)) / (h * h);
      for (int j = i + 1; j <= N; ++j) {
        AmbientVec<N> xpp = x, xpm = x, xmp = x, xmm = x;
        xpp[i] += h; xpp[j] += h;
        xpm[i] += h; xpm[j] -= h;
        xmp[i] -= h; xmp[j] += h;
        xmm[i] -= h; xmm[j] -= h;
        m(i, j) = m(j, i) = (eval(xpp) - eval(xpm) - eval(xmp) + eval(xmm)) / (4.0 * h * h);
      }
    }
    return m;
  }

  // D(F^2/2) for the blended family; DF = DW/F, D2F = D2W/F - DW DW^T/F^3.
  AmbientVec<N> blended_dw(const AmbientVec<N>& x) const {
    double h = 0.0;
    for (int i = 0; i <= N; ++i) h += std::pow(std::abs(x[i]), p_);
    const double hc = std::pow(h, 2.0 / p_ - 1.0);
    AmbientVec<N> dw;
    for (int i = 0; i <= N; ++i) {
      const double si = x[i] >= 0.0 ? 1.0 : -1.0;
      dw[i] = (1.0 - lambda_) * x[i] +
              lambda_ * hc * si * std::pow(std::abs(x[i]), p_ - 1.0);
    }
    return dw;
  }

  AmbientMat<N> blended_d2w(const AmbientVec<N>& x) const {
    double h = 0.0;
    for (int i = 0; i <= N; ++i) h += std::pow(std::abs(x[i]), p_);
    const double hc1 = std::pow(h, 2.0 / p_ - 1.0);
    const double hc2 = std::pow(h, 2.0 / p_ - 2.0);
    AmbientMat<N> m = (1.0 - lambda_) * AmbientMat<N>::Identity();
    AmbientVec<N> dpow;  // d/dx_i of sum |x|^p over p
    for (int i = 0; i <= N; ++i) {
      const double si = x[i] >= 0.0 ? 1.0 : -1.0;
      dpow[i] = si * std::pow(std::abs(x[i]), p_ - 1.0);
    }
    for (int i = 0; i <= N; ++i) {
      m(i, i) += lambda_ * (p_ - 1.0) * hc1 * std::pow(std::abs(x[i]), p_ - 2.0);
      for (int j = 0; j <= N; ++j) {
        m(i, j) += lambda_ * (2.0 - p_) * hc2 * dpow[i] * dpow[j];
      }
    }
    return m;
  }

  void init_numeric_dual() {
    dual_dirs_ = direction_samples<N>(N == 1 ? 512 : 2048);
    dual_f_.reserve(dual_dirs_.size());
    for (const auto& d : dual_dirs_) dual_f_.push_back(eval(d));
  }

  DualResult<N> dual_numeric(const AmbientVec<N>& xi,
                             std::optional<AmbientVec<N>> warm_start) const {
    const double xin = xi.norm();
    AmbientVec<N> best = AmbientVec<N>::Zero();
    double best_val = -std::numeric_limits<double>::infinity();
    if (warm_start) {
      best = warm_start->normalized();
      best_val = best.dot(xi) / eval(best);
    } else {
      for (std::size_t i = 0; i < dual_dirs_.size(); ++i) {
        const double v = dual_dirs_[i].dot(xi) / dual_f_[i];
        if (v > best_val) {
          best_val = v;
          best = dual_dirs_[i];
        }
      }
    }
    // Projected ascent on the unit sphere with backtracking, then Newton
    // polish once the tangential gradient is small. Ascent alone stalls
    // around |g| ~ 1e-8 |xi| because objective improvements drop below
    // machine epsilon; Newton reaches the 1e-10 |xi| stopping tolerance.
    double step = 0.5;
    AmbientVec<N> x = best;
    double val = best_val;
    bool coarse_done = false;
    for (int iter = 0; iter < 2000 && !coarse_done; ++iter) {
      const AmbientVec<N> g = dual_obj_tangent_grad(xi, x);
      if (g.norm() < 1e-6 * xin) break;
      bool moved = false;
      for (int ls = 0; ls < 40; ++ls) {
        AmbientVec<N> y = (x + step * g).normalized();
        const double vy = y.dot(xi) / eval(y);
        if (vy > val) {
          x = y;
          val = vy;
          step *= 1.5;
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) coarse_done = true;
    }
    for (int iter = 0; iter < 12; ++iter) {
      const AmbientVec<N> g = dual_obj_tangent_grad(xi, x);
      if (g.norm() < 1e-10 * xin) return {x.dot(xi) / eval(x), x};
      const FrameMat<N> t = tangent_frame<N>(x);
      const double f = eval(x);
      const AmbientVec<N> df = gradient(x);
      const AmbientMat<N> d2f = hessian(x);
      const double a = x.dot(xi);
      AmbientMat<N> h = -(xi * df.transpose() + df * xi.transpose()) / (f * f) -
                        a * d2f / (f * f) + 2.0 * a * df * df.transpose() / (f * f * f);
      const AmbientVec<N> grad_amb = xi / f - a * df / (f * f);
      TangentMat<N> hess_t = t.transpose() * h * t -
                             x.dot(grad_amb) * TangentMat<N>::Identity();
      const TangentVec<N> gu = t.transpose() * g;
      const TangentVec<N> d = hess_t.fullPivLu().solve(TangentVec<N>(-gu));
      if (!d.allFinite()) break;
      const AmbientVec<N> y = (x + t * d).normalized();
      const double vy = y.dot(xi) / eval(y);
      if (!(std::isfinite(vy))) break;
      x = y;
      val = std::max(val, vy);
    }
    {
      const AmbientVec<N> g = dual_obj_tangent_grad(xi, x);
      if (g.norm() < 1e-8 * xin) return {x.dot(xi) / eval(x), x};
    }
    std::ostringstream os;
    os << "dual norm optimizer did not converge; best bound " << val;
    throw NumericError(os.str());
  }

  AmbientVec<N> dual_obj_tangent_grad(const AmbientVec<N>& xi, const AmbientVec<N>& x) const {
    const double f = eval(x);
    AmbientVec<N> g = xi / f - x.dot(xi) * gradient(x) / (f * f);
    g -= g.dot(x) * x;
    return g;
  }

  NormFamily family_;
  DerivativeMode mode_ = DerivativeMode::analytic;
  double fd_step_ = 1e-5;
  AmbientMat<N> q_ = AmbientMat<N>::Identity();
  AmbientMat<N> q_inv_ = AmbientMat<N>::Identity();
  std::vector<HarmonicTerm> terms_;
  double p_ = 2.0;
  double lambda_ = 0.0;
  std::vector<AmbientVec<N>> dual_dirs_;
  std::vector<double> dual_f_;
};

}  // namespace wulffflow
