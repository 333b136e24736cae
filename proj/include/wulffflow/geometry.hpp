#pragma once

#include "wulffflow/common.hpp"
#include "wulffflow/grid.hpp"
#include "wulffflow/norm.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <vector>

namespace wulffflow {

/// Star-shaped hypersurface as a radial graph X = rho(x) x over S^N,
/// stored as gamma = log rho.
template <int N>
struct RadialGraph {
  const SphereGrid<N>* grid = nullptr;
  ScalarField gamma;

  RadialGraph() = default;
  RadialGraph(const SphereGrid<N>& g, double radius)
      : grid(&g), gamma(g.node_count(), std::log(radius)) {}
  RadialGraph(const SphereGrid<N>& g, ScalarField values) : grid(&g), gamma(std::move(values)) {}

  double rho(int i) const { return std::exp(gamma[i]); }
};

/// Pointwise geometric data of a radial graph under a given norm, on the
/// regular grid nodes (poles carry no geometry; their quadrature weight is
/// zero and the stencils never read them).
template <int N>
struct GeometryFields {
  const SphereGrid<N>* grid = nullptr;
  std::vector<AmbientVec<N>> position;      // X
  std::vector<AmbientVec<N>> normal;        // nu (unit Euclidean)
  std::vector<AmbientVec<N>> normal_f;      // nu_F = DF(nu)
  std::vector<double> f_nu;                 // F(nu)
  std::vector<double> support;              // u = <X, nu>
  std::vector<double> support_f;            // u_hat = u / F(nu)
  std::vector<TangentMat<N>> shape;         // Weingarten map, orthonormal tangent frame
  std::vector<double> mean_curv_f;          // H_F
  std::vector<TangentVec<N>> principal_f;   // kappa^F, ascending
  std::vector<double> sigma2_f;             // sigma_2(kappa^F) (0 for N=1)
  std::vector<double> area_weight;          // induced-area quadrature weight (d mu)
  std::vector<double> area_weight_f;        // F(nu) * area_weight (d mu_F)

  void resize(const SphereGrid<N>& g) {
    grid = &g;
    const int m = g.regular_count();
    position.resize(m);
    normal.resize(m);
    normal_f.resize(m);
    f_nu.resize(m);
    support.resize(m);
    support_f.resize(m);
    shape.resize(m);
    mean_curv_f.resize(m);
    principal_f.resize(m);
    sigma2_f.resize(m);
    area_weight.resize(m);
    area_weight_f.resize(m);
  }
};

template <int N>
struct AdmissibilityReport {
  double min_support = 0.0;   // star-shapedness margin (u > 0)
  double min_mean_curv = 0.0; // strict F-mean convexity margin (H_F > 0)
  bool admissible = false;
};

namespace detail {

[[noreturn]] inline void degenerate_node(const char* what, int node) {
  std::ostringstream os;
  os << what << " at grid node " << node
     << "; the surface left the star-shaped strictly F-mean-convex class "
        "(refine the grid or shorten the run)";
  throw NumericError(os.str());
}

}  // namespace detail

/// All pointwise quantities of the graph: normal from
/// nu = (x - grad gamma)/sqrt(1+|grad gamma|^2), fundamental forms in the
/// orthonormal tangent frame, Weingarten map W, and the anisotropic
/// curvatures as eigenvalues of M^{1/2} W M^{1/2} with M = D^2F(nu)
/// restricted to nu-perp.
template <int N>
void compute_fields(const RadialGraph<N>& graph, const MinkowskiNorm<N>& norm,
                    GeometryFields<N>& out, int threads = 1) {
  const SphereGrid<N>& g = *graph.grid;
  out.resize(g);
  FieldDerivs d;
  if constexpr (N == 1) {
    g.compute_derivs(graph.gamma, d);
  } else {
    g.compute_derivs(graph.gamma, d, threads);
  }
  std::atomic<int> bad_node{-1};
  std::atomic<int> bad_kind{0};  // 1 = non-finite, 2 = M_F degenerate, 3 = H_F <= 0 handled by caller
  parallel_for(static_cast<std::size_t>(g.regular_count()), threads,
               [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ii = lo; ii < hi; ++ii) {
      const int i = static_cast<int>(ii);
      const AmbientVec<N> x = g.direction(i);
      const FrameMat<N> e = g.frame(i);
      TangentVec<N> gg;
      TangentMat<N> hh;
      if constexpr (N == 1) {
        gg[0] = d.g1[i];
        hh(0, 0) = d.h11[i];
      } else {
        gg[0] = d.g1[i];
        gg[1] = d.g2[i];
        hh(0, 0) = d.h11[i];
        hh(0, 1) = hh(1, 0) = d.h12[i];
        hh(1, 1) = d.h22[i];
      }
      const double v = gg.squaredNorm();
      const double w = std::sqrt(1.0 + v);
      const double rho = std::exp(graph.gamma[i]);
      if (!std::isfinite(rho) || !std::isfinite(w) || rho <= 0.0) {
        bad_node = i;
        bad_kind = 1;
        continue;
      }
      const AmbientVec<N> grad_vec = e * gg;
      const AmbientVec<N> nu = (x - grad_vec) / w;
      // Surface tangent basis b_a = rho (gamma_a x + e_a) and the
      // fundamental forms of the graph in the frame.
      FrameMat<N> b;
      for (int a = 0; a < N; ++a) b.col(a) = rho * (gg[a] * x + e.col(a));
      const TangentMat<N> second =
          rho / w * (TangentMat<N>::Identity() + gg * gg.transpose() - hh);
      // Orthonormalize b -> t; c = t^T b is upper triangular, and the shape
      // operator in the t frame is the symmetric W = c^{-T} h c^{-1}.
      FrameMat<N> t;
      TangentMat<N> c = TangentMat<N>::Zero();
      t.col(0) = b.col(0).normalized();
      c(0, 0) = t.col(0).dot(b.col(0));
      if constexpr (N == 2) {
        AmbientVec<2> t2 = b.col(1) - t.col(0).dot(b.col(1)) * t.col(0);
        t2.normalize();
        t.col(1) = t2;
        c(0, 1) = t.col(0).dot(b.col(1));
        c(1, 1) = t.col(1).dot(b.col(1));
      }
      const TangentMat<N> cinv = c.template triangularView<Eigen::Upper>().solve(
          TangentMat<N>::Identity());
      TangentMat<N> shape = cinv.transpose() * second * cinv;
      shape = TangentMat<N>(0.5 * (shape + shape.transpose().eval()));

      const double f_nu = norm.eval(nu);
      const AmbientVec<N> nu_f = norm.gradient(nu);
      TangentMat<N> m = t.transpose() * norm.hessian(nu) * t;
      m = TangentMat<N>(0.5 * (m + m.transpose().eval()));
      const auto m_eigs = sym_eigenvalues<N>(m);
      if (!(m_eigs.minCoeff() > 1e-8)) {
        bad_node = i;
        bad_kind = 2;
        continue;
      }
      const TangentMat<N> ms = sym_sqrt<N>(m);
      TangentMat<N> sym_prod = ms * shape * ms;
      sym_prod = TangentMat<N>(0.5 * (sym_prod + sym_prod.transpose().eval()));
      const TangentVec<N> kappa = sym_eigenvalues<N>(sym_prod);

      out.position[i] = rho * x;
      out.normal[i] = nu;
      out.normal_f[i] = nu_f;
      out.f_nu[i] = f_nu;
      out.support[i] = rho / w;
      out.support_f[i] = rho / (w * f_nu);
      out.shape[i] = shape;
      out.mean_curv_f[i] = (m * shape).trace();
      out.principal_f[i] = kappa;
      out.sigma2_f[i] = N == 2 ? kappa[0] * kappa[N - 1] : 0.0;
      out.area_weight[i] = std::pow(rho, N) * w * g.weight(i);
      out.area_weight_f[i] = f_nu * out.area_weight[i];
    }
  });
  if (bad_node >= 0) {
    if (bad_kind == 1) detail::degenerate_node("non-finite graph data", bad_node);
    detail::degenerate_node("degenerate anisotropy D^2F(nu)", bad_node);
  }
}

template <int N>
GeometryFields<N> compute_fields(const RadialGraph<N>& graph, const MinkowskiNorm<N>& norm,
                                 int threads = 1) {
  GeometryFields<N> out;
  compute_fields(graph, norm, out, threads);
  return out;
}

/// Direct evaluation of the scalar graph formula for H_F: the tensor
/// A_F(nu), expressed in the surface coordinate basis, contracted against
/// (identity - projected covariant Hessian of gamma). Serves as an
/// independent cross-check of the trace-route H_F in compute_fields.
template <int N>
ScalarField anisotropic_H_graph_formula(const RadialGraph<N>& graph,
                                        const MinkowskiNorm<N>& norm) {
  const SphereGrid<N>& g = *graph.grid;
  FieldDerivs d;
  g.compute_derivs(graph.gamma, d);
  ScalarField out(g.node_count(), 0.0);
  for (int i = 0; i < g.regular_count(); ++i) {
    const AmbientVec<N> x = g.direction(i);
    const FrameMat<N> e = g.frame(i);
    TangentVec<N> gg;
    TangentMat<N> hh;
    if constexpr (N == 1) {
      gg[0] = d.g1[i];
      hh(0, 0) = d.h11[i];
    } else {
      gg[0] = d.g1[i];
      gg[1] = d.g2[i];
      hh(0, 0) = d.h11[i];
      hh(0, 1) = hh(1, 0) = d.h12[i];
      hh(1, 1) = d.h22[i];
    }
    const double v = gg.squaredNorm();
    const double w = std::sqrt(1.0 + v);
    const double rho = std::exp(graph.gamma[i]);
    const AmbientVec<N> nu = (x - e * gg) / w;
    // bracket = delta - (sigma^{ik} - gamma^i gamma^k / (1+v)) gamma_{jk}
    const TangentMat<N> proj =
        TangentMat<N>::Identity() - gg * gg.transpose() / (1.0 + v);
    const TangentMat<N> bracket = TangentMat<N>::Identity() - proj * hh;
    // A_F(nu) in the surface coordinate basis b: c^{-1} (t^T D^2F(nu) t) c.
    FrameMat<N> b;
    for (int a = 0; a < N; ++a) b.col(a) = rho * (gg[a] * x + e.col(a));
    FrameMat<N> t;
    TangentMat<N> c = TangentMat<N>::Zero();
    t.col(0) = b.col(0).normalized();
    c(0, 0) = t.col(0).dot(b.col(0));
    if constexpr (N == 2) {
      AmbientVec<2> t2 = b.col(1) - t.col(0).dot(b.col(1)) * t.col(0);
      t2.normalize();
      t.col(1) = t2;
      c(0, 1) = t.col(0).dot(b.col(1));
      c(1, 1) = t.col(1).dot(b.col(1));
    }
    const TangentMat<N> cinv = c.template triangularView<Eigen::Upper>().solve(
        TangentMat<N>::Identity());
    const TangentMat<N> m = t.transpose() * norm.hessian(nu) * t;
    const TangentMat<N> a_coord = cinv * m * c;
    out[i] = (a_coord * bracket).trace() / (rho * w);
  }
  return out;
}

template <int N>
AdmissibilityReport<N> check_admissible(const GeometryFields<N>& fields,
                                        double support_margin = 0.0,
                                        double mean_curv_margin = 0.0) {
  AdmissibilityReport<N> rep;
  rep.min_support = std::numeric_limits<double>::infinity();
  rep.min_mean_curv = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fields.support.size(); ++i) {
    rep.min_support = std::min(rep.min_support, fields.support[i]);
    rep.min_mean_curv = std::min(rep.min_mean_curv, fields.mean_curv_f[i]);
  }
  rep.admissible = rep.min_support > support_margin && rep.min_mean_curv > mean_curv_margin;
  return rep;
}

}  // namespace wulffflow
