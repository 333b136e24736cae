#pragma once

#include "wulffflow/common.hpp"
#include "wulffflow/geometry.hpp"
#include "wulffflow/grid.hpp"
#include "wulffflow/norm.hpp"

#include <cmath>
#include <vector>

namespace wulffflow {

struct InequalityReport {
  double v1 = 0.0;
  double v2 = 0.0;
  double vol_l = 0.0;
  double lhs = 0.0;                 // V2^n
  double rhs = 0.0;                 // V1^{n-1} Vol(L)
  double normalized_deficit = 0.0;  // (lhs - rhs)/rhs
  bool holds = false;
  bool near_equality = false;
  bool input_admissible = true;     // H_F >= 0 everywhere
};

struct VariationReport {
  double epsilon = 0.0;
  double d_area = 0.0;        // central difference of the anisotropic area
  double rhs_area = 0.0;      // integral of H_F psi d mu
  double residual_area = 0.0;
  double d_total_hf = 0.0;    // central difference of the total H_F functional
  double rhs_total_hf = 0.0;  // integral of 2 sigma_2 psi d mu
  double residual_total_hf = 0.0;
  bool perturbed_admissible = true;
};

namespace detail {

template <int N>
double weighted_sum(const std::vector<double>& f, const std::vector<double>& w) {
  std::vector<double> prod(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) prod[i] = f[i] * w[i];
  return pairwise_sum(prod);
}

}  // namespace detail

/// Anisotropic area: integral of F(nu) d mu.
template <int N>
double anisotropic_area(const GeometryFields<N>& fields) {
  return pairwise_sum(fields.area_weight_f);
}

/// Total anisotropic mean curvature: integral of H_F F(nu) d mu.
template <int N>
double total_hf(const GeometryFields<N>& fields) {
  return detail::weighted_sum<N>(fields.mean_curv_f, fields.area_weight_f);
}

/// Integral of 2 sigma_2(kappa^F) F(nu) d mu.
template <int N>
double sigma2_integral(const GeometryFields<N>& fields) {
  std::vector<double> f(fields.sigma2_f.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = 2.0 * fields.sigma2_f[i];
  return detail::weighted_sum<N>(f, fields.area_weight_f);
}

/// Vol(L) = 1/(n+1) integral over S^n of F det(A_F), with A_F taken in the
/// grid tangent frames (same code path as the geometry module).
template <int N>
double wulff_volume(const MinkowskiNorm<N>& norm, const SphereGrid<N>& grid) {
  std::vector<double> vals(grid.regular_count());
  for (int i = 0; i < grid.regular_count(); ++i) {
    const AmbientVec<N> x = grid.direction(i);
    const TangentMat<N> a = norm.af_in_frame(x, grid.frame(i));
    vals[i] = norm.eval(x) * a.determinant() * grid.weight(i);
  }
  return pairwise_sum(vals) / (N + 1);
}

/// Mixed volumes V_(1), V_(2) of (K, L) through the anisotropic curvature
/// integrals: V1 = area_F/(n+1), V2 = total_HF/((n+1) n).
template <int N>
std::pair<double, double> mixed_volumes(const GeometryFields<N>& fields) {
  return {anisotropic_area(fields) / (N + 1), total_hf(fields) / ((N + 1) * N)};
}

template <int N>
InequalityReport minkowski_check(const GeometryFields<N>& fields, const MinkowskiNorm<N>& norm,
                                 double tol_ineq = 1e-8, double tol_eq = 5e-3) {
  InequalityReport rep;
  for (double h : fields.mean_curv_f) {
    if (h < 0.0) rep.input_admissible = false;
  }
  const auto [v1, v2] = mixed_volumes(fields);
  rep.v1 = v1;
  rep.v2 = v2;
  rep.vol_l = wulff_volume(norm, *fields.grid);
  rep.lhs = std::pow(v2, N);
  rep.rhs = std::pow(v1, N - 1) * rep.vol_l;
  rep.normalized_deficit = (rep.lhs - rep.rhs) / rep.rhs;
  rep.holds = rep.normalized_deficit >= -tol_ineq;
  rep.near_equality = std::abs(rep.normalized_deficit) < tol_eq;
  return rep;
}

/// First-variation check of the area and total-H_F functionals: the surface
/// is moved by eps psi nu (as the radial perturbation
/// delta rho = eps psi sqrt(1+|grad gamma|^2), the same variation field up
/// to a tangential part), the functionals are central-differenced in eps,
/// and compared against integral of H_F psi d mu and of 2 sigma_2 psi d mu.
template <int N>
VariationReport first_variation_check(const RadialGraph<N>& graph, const MinkowskiNorm<N>& norm,
                                      const ScalarField& psi, double eps) {
  const SphereGrid<N>& g = *graph.grid;
  VariationReport rep;
  rep.epsilon = eps;

  FieldDerivs d;
  g.compute_derivs(graph.gamma, d);
  auto perturbed = [&](double sign) {
    RadialGraph<N> p(g, graph.gamma);
    for (int i = 0; i < g.regular_count(); ++i) {
      double v;
      if constexpr (N == 1) {
        v = d.g1[i] * d.g1[i];
      } else {
        v = d.g1[i] * d.g1[i] + d.g2[i] * d.g2[i];
      }
      const double rho = std::exp(graph.gamma[i]) + sign * eps * psi[i] * std::sqrt(1.0 + v);
      if (rho <= 0.0) rep.perturbed_admissible = false;
      p.gamma[i] = std::log(std::max(rho, 1e-300));
    }
    g.apply_pole_closure(p.gamma);
    return p;
  };

  const GeometryFields<N> base = compute_fields(graph, norm);
  const GeometryFields<N> plus = compute_fields(perturbed(1.0), norm);
  const GeometryFields<N> minus = compute_fields(perturbed(-1.0), norm);

  rep.d_area = (anisotropic_area(plus) - anisotropic_area(minus)) / (2.0 * eps);
  rep.d_total_hf = (total_hf(plus) - total_hf(minus)) / (2.0 * eps);

  std::vector<double> integ(g.regular_count());
  for (int i = 0; i < g.regular_count(); ++i)
    integ[i] = base.mean_curv_f[i] * psi[i] * base.area_weight[i];
  rep.rhs_area = pairwise_sum(integ);
  for (int i = 0; i < g.regular_count(); ++i)
    integ[i] = 2.0 * base.sigma2_f[i] * psi[i] * base.area_weight[i];
  rep.rhs_total_hf = pairwise_sum(integ);

  const double scale_a = std::max(std::abs(rep.rhs_area), 1e-3 * anisotropic_area(base));
  const double scale_b = std::max(std::abs(rep.rhs_total_hf), 1e-3 * std::abs(total_hf(base)));
  rep.residual_area = std::abs(rep.d_area - rep.rhs_area) / scale_a;
  rep.residual_total_hf = std::abs(rep.d_total_hf - rep.rhs_total_hf) / scale_b;
  return rep;
}

}  // namespace wulffflow
