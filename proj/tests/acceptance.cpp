// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Heavier than the unit tests; expected total runtime is several
// minutes on one core.
#include "wulffflow/flow.hpp"
#include "wulffflow/functionals.hpp"
#include "wulffflow/harmonics.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace wulffflow;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

ScalarField wulff_gamma(const SphereGrid<2>& g, const MinkowskiNorm<2>& norm, double scale) {
  ScalarField gamma(g.node_count());
  for (int i = 0; i < g.node_count(); ++i)
    gamma[i] = std::log(scale / norm.dual_eval(g.direction(i)));
  return gamma;
}

ScalarField harmonic_gamma(const SphereGrid<2>& g, const std::vector<HarmonicTerm>& terms) {
  ScalarField gamma(g.node_count());
  for (int i = 0; i < g.node_count(); ++i)
    gamma[i] = std::log(1.0 + eval_harmonics<2>(terms, g.direction(i)));
  g.apply_pole_closure(gamma);
  return gamma;
}

/// Random low-degree harmonic graph, resampled with shrinking amplitude
/// until it is strictly mean-convex under the given norm.
ScalarField random_admissible_gamma(const SphereGrid<2>& g, const MinkowskiNorm<2>& norm,
                                    std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double scale = 0.12;; scale *= 0.7) {
    std::vector<HarmonicTerm> terms;
    for (int l = 1; l <= 3; ++l)
      for (int m = -l; m <= l; ++m) terms.push_back({l, m, scale * u(rng)});
    const ScalarField gamma = harmonic_gamma(g, terms);
    try {
      if (check_admissible(compute_fields(RadialGraph<2>(g, gamma), norm)).admissible)
        return gamma;
    } catch (const NumericError&) {
    }
  }
}

FlowParams run_params(double t_max) {
  FlowParams p;
  p.t_max = t_max;
  p.eps_stop = 0.0;
  p.threads = 1;
  return p;
}

/// Max relative rho error of the evolved scaled-Wulff graph against the
/// homothetic solution at t_max.
double homothetic_error(int res, const MinkowskiNorm<2>& norm, double lambda, double t_max) {
  SphereGrid<2> g(res);
  FlowSolver<2> solver(g, norm, run_params(t_max));
  const auto result = solver.run(wulff_gamma(g, norm, lambda));
  double err = 0.0;
  for (int i = 0; i < g.regular_count(); ++i) {
    const double exact = lambda * std::exp(t_max / 2.0) / norm.dual_eval(g.direction(i));
    err = std::max(err, std::abs(std::exp(result.final_gamma[i]) / exact - 1.0));
  }
  return err;
}

/// Central-difference derivative-vs-epsilon ratio |D(4e)-D(2e)|/|D(2e)-D(e)|
/// for both functionals; second order in epsilon means ratio ~ 4.
std::pair<double, double> epsilon_order_ratios(const RadialGraph<2>& graph,
                                               const MinkowskiNorm<2>& norm,
                                               const ScalarField& psi, double eps) {
  const auto r1 = first_variation_check(graph, norm, psi, eps);
  const auto r2 = first_variation_check(graph, norm, psi, 2.0 * eps);
  const auto r4 = first_variation_check(graph, norm, psi, 4.0 * eps);
  const double ra =
      std::abs(r4.d_area - r2.d_area) / std::abs(r2.d_area - r1.d_area);
  const double rb =
      std::abs(r4.d_total_hf - r2.d_total_hf) / std::abs(r2.d_total_hf - r1.d_total_hf);
  return {ra, rb};
}

void criterion_1_homothetic() {
  const auto t0 = std::chrono::steady_clock::now();
  auto euc = MinkowskiNorm<2>::make_euclidean();
  auto ell = MinkowskiNorm<2>::make_ellipsoid_semiaxes(AmbientVec<2>(1.0, 1.3, 1.7));
  const double e_euc = homothetic_error(64, euc, 0.9, 1.0);
  const double e_ell64 = homothetic_error(64, ell, 1.1, 1.0);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(1, e_euc <= 5e-4 && e_ell64 <= 5e-4 && seconds <= 60.0,
         "homothetic rho error euclidean " + fmt(e_euc) + ", ellipsoid " + fmt(e_ell64) +
             " (tol 5e-4), runtime " + fmt(seconds) + " s (limit 60)");
}

void criterion_8_convergence_orders() {
  auto ell = MinkowskiNorm<2>::make_ellipsoid_semiaxes(AmbientVec<2>(1.0, 1.3, 1.7));
  // Spatial part: the criterion-1 ellipsoid case at 32 and 128; the
  // euclidean case is spatially exact and carries no convergence signal.
  const double e_ell32 = homothetic_error(32, ell, 1.1, 1.0);
  const double e_ell128 = homothetic_error(128, ell, 1.1, 1.0);
  const double ratio = e_ell32 / e_ell128;
  const double order = std::log(ratio) / std::log(4.0);

  // Epsilon part: variation-derivative differences shrink at second order on
  // both the coarse and the fine grid.
  auto eps_part = [&](int res) {
    SphereGrid<2> g(res);
    RadialGraph<2> graph(g, harmonic_gamma(g, {{2, 0, 0.08}, {3, 1, 0.04}}));
    ScalarField psi(g.node_count());
    for (int i = 0; i < g.node_count(); ++i)
      psi[i] = eval_harmonic<2>({1, 0, 1.0}, g.direction(i)) +
               0.4 * eval_harmonic<2>({2, 2, 1.0}, g.direction(i));
    return epsilon_order_ratios(graph, ell, psi, 2e-3);
  };
  const auto [ra32, rb32] = eps_part(32);
  const auto [ra128, rb128] = eps_part(128);
  const bool eps_ok = ra32 > 3.0 && ra32 < 5.3 && rb32 > 3.0 && rb32 < 5.3 &&
                      ra128 > 3.0 && ra128 < 5.3 && rb128 > 3.0 && rb128 < 5.3;

  // Variation-identity mismatch in h: the curvature variation of the sphere
  // against a degree-2 test function isolates the spatial truncation error.
  auto var_mismatch = [&](int res) {
    SphereGrid<2> g(res);
    RadialGraph<2> sphere(g, 1.0);
    ScalarField psi(g.node_count());
    for (int i = 0; i < g.node_count(); ++i)
      psi[i] = eval_harmonic<2>({2, 0, 1.0}, g.direction(i));
    const auto rep = first_variation_check(sphere, MinkowskiNorm<2>::make_euclidean(), psi, 1e-4);
    return std::abs(rep.d_total_hf - rep.rhs_total_hf);
  };
  const double vratio = var_mismatch(32) / var_mismatch(128);
  const double vorder = std::log(vratio) / std::log(4.0);
  report(8, order >= 3.0 && vorder >= 3.0 && eps_ok,
         "flow error 32/128 ratio " + fmt(ratio) + " (order " + fmt(order) +
             "), variation mismatch ratio " + fmt(vratio) + " (order " + fmt(vorder) +
             ", need >= 3); epsilon ratios " + fmt(ra32) + "/" + fmt(rb32) + " at 32, " +
             fmt(ra128) + "/" + fmt(rb128) + " at 128 (need ~4)");
}

void criterion_2_area_law() {
  auto euc = MinkowskiNorm<2>::make_euclidean();
  auto ell = MinkowskiNorm<2>::make_ellipsoid_semiaxes(AmbientVec<2>(1.0, 1.3, 1.7));
  double worst = 0.0;
  auto area_law = [&](const SphereGrid<2>& g, const MinkowskiNorm<2>& norm,
                      const ScalarField& init) {
    FlowSolver<2> solver(g, norm, run_params(2.0));
    const auto res = solver.run(init);
    const double a0 = res.records.front().area_f;
    for (const auto& r : res.records)
      worst = std::max(worst, std::abs(r.area_f - std::exp(r.t) * a0) / (std::exp(r.t) * a0));
    return res.reached_t_max;
  };
  SphereGrid<2> g(64);
  bool complete = area_law(g, euc, wulff_gamma(g, euc, 0.9));
  complete = area_law(g, ell, wulff_gamma(g, ell, 1.1)) && complete;
  complete = area_law(g, euc, harmonic_gamma(g, {{2, 0, 0.2}})) && complete;
  report(2, complete && worst <= 1e-3,
         "worst relative area-law violation " + fmt(worst) + " over 3 runs to t=2 (tol 1e-3)");
}

void criterion_3_monotonicity() {
  SphereGrid<2> g(32);
  auto euc = MinkowskiNorm<2>::make_euclidean();
  std::mt19937 rng(2024);
  bool ok = true;
  std::string fail;
  for (int trial = 0; trial < 10 && ok; ++trial) {
    FlowSolver<2> solver(g, euc, run_params(1.0));
    const auto res = solver.run(random_admissible_gamma(g, euc, rng));
    const auto& first = res.records.front();
    for (std::size_t k = 1; k < res.records.size(); ++k) {
      const auto& a = res.records[k - 1];
      const auto& b = res.records[k];
      if (b.h_func > a.h_func * (1.0 + 1e-6)) { ok = false; fail = "H nonincreasing"; }
      if (b.u_hat_min < a.u_hat_min * (1.0 - 1e-6)) { ok = false; fail = "min u_hat"; }
      if (b.p_min < first.p_min - 1e-3 || b.p_max > first.p_max + 1e-3) {
        ok = false;
        fail = "P range";
      }
      if (std::abs(b.p_integral - first.p_integral) > 1e-3 * std::abs(first.p_integral)) {
        ok = false;
        fail = "P integral";
      }
    }
  }
  report(3, ok, ok ? "H, min u_hat, P range, and the P integral behave on 10 random surfaces"
                   : "violated: " + fail);
}

void criterion_4_convergence() {
  SphereGrid<2> g(64);
  auto ell = MinkowskiNorm<2>::make_ellipsoid_semiaxes(AmbientVec<2>(1.0, 1.3, 1.7));
  FlowSolver<2> solver(g, ell, run_params(6.0));
  const auto res = solver.run(harmonic_gamma(g, {{2, 0, 0.2}}));
  const double drop = res.records.front().umb_deficit / res.records.back().umb_deficit;
  const double alpha_gap = std::abs(res.fit.alpha_fitted - res.fit.alpha_predicted);
  const bool pass = res.reached_t_max && drop >= 1e4 && res.fit.sup_residual <= 1e-3 &&
                    alpha_gap <= 1e-3 && res.fit.decay_rate > 0.0;
  report(4, pass,
         "deficit drop " + fmt(drop) + "x (need 1e4), sup residual " +
             fmt(res.fit.sup_residual) + " (tol 1e-3), |alpha - predicted| " + fmt(alpha_gap) +
             " (tol 1e-3), rate " + fmt(res.fit.decay_rate));
}

void criterion_5_inequality() {
  SphereGrid<2> g(32);
  std::vector<MinkowskiNorm<2>> norms;
  norms.push_back(MinkowskiNorm<2>::make_euclidean());
  norms.push_back(MinkowskiNorm<2>::make_ellipsoid_semiaxes(AmbientVec<2>(1.0, 1.2, 1.5)));
  norms.push_back(MinkowskiNorm<2>::make_blended_lp(3.0, 0.5));
  std::mt19937 rng(77);
  double min_deficit = std::numeric_limits<double>::infinity();
  int surfaces = 0;
  for (const auto& norm : norms) {
    for (int trial = 0; trial < 17; ++trial) {
      const auto f =
          compute_fields(RadialGraph<2>(g, random_admissible_gamma(g, norm, rng)), norm);
      min_deficit = std::min(min_deficit, minkowski_check(f, norm).normalized_deficit);
      ++surfaces;
    }
  }
  double worst_eq = 0.0;
  for (const auto& norm : norms) {
    for (double lam : {0.7, 1.4}) {
      const auto f = compute_fields(RadialGraph<2>(g, wulff_gamma(g, norm, lam)), norm);
      worst_eq = std::max(worst_eq, std::abs(minkowski_check(f, norm).normalized_deficit));
    }
  }
  const auto sphere_fields = compute_fields(RadialGraph<2>(g, 1.0), norms[1]);
  const double sphere_deficit = minkowski_check(sphere_fields, norms[1]).normalized_deficit;
  const bool pass =
      surfaces == 51 && min_deficit >= -1e-8 && worst_eq < 5e-3 && sphere_deficit > 1e-3;
  report(5, pass,
         "min deficit " + fmt(min_deficit) + " over 51 random surfaces (need >= -1e-8), " +
             "worst scaled-Wulff |deficit| " + fmt(worst_eq) + " (tol 5e-3), sphere-vs-" +
             "ellipsoid deficit " + fmt(sphere_deficit) + " (need > 1e-3)");
}

void criterion_6_variation() {
  SphereGrid<2> g(64);
  auto euc = MinkowskiNorm<2>::make_euclidean();
  auto ell = MinkowskiNorm<2>::make_ellipsoid_semiaxes(AmbientVec<2>(1.0, 1.3, 1.7));
  auto lp = MinkowskiNorm<2>::make_blended_lp(4.0, 0.5);

  auto psi_field = [&](std::vector<HarmonicTerm> terms) {
    ScalarField psi(g.node_count(), 0.0);
    for (int i = 0; i < g.node_count(); ++i)
      psi[i] = terms.empty() ? 1.0 : eval_harmonics<2>(terms, g.direction(i));
    return psi;
  };
  struct Pair {
    RadialGraph<2> graph;
    const MinkowskiNorm<2>* norm;
    ScalarField psi;
  };
  std::vector<Pair> pairs;
  pairs.push_back({RadialGraph<2>(g, 1.0), &euc, psi_field({})});
  pairs.push_back({RadialGraph<2>(g, 1.0), &euc, psi_field({{2, 0, 1.0}})});
  pairs.push_back({RadialGraph<2>(g, wulff_gamma(g, ell, 1.0)), &ell,
                   psi_field({{1, 1, 1.0}, {3, -2, 0.5}})});
  pairs.push_back({RadialGraph<2>(g, harmonic_gamma(g, {{2, 0, 0.1}, {3, 1, 0.05}})), &ell,
                   psi_field({{2, -1, 1.0}})});
  pairs.push_back({RadialGraph<2>(g, harmonic_gamma(g, {{2, 2, 0.08}})), &lp,
                   psi_field({{1, 0, 1.0}, {4, 2, 0.3}})});

  double worst = 0.0;
  for (const auto& p : pairs) {
    const auto rep = first_variation_check(p.graph, *p.norm, p.psi, 1e-4);
    worst = std::max({worst, rep.residual_area, rep.residual_total_hf});
  }
  // The order-in-eps probe needs a pair with no reflection symmetry mapping
  // psi to -psi while fixing surface and norm, otherwise the central
  // difference is exact and the ratio degenerates to 0/0.
  const auto [ra, rb] = epsilon_order_ratios(pairs[4].graph, *pairs[4].norm, pairs[4].psi, 2e-3);
  const bool second_order = ra > 3.0 && ra < 5.3 && rb > 3.0 && rb < 5.3;
  report(6, worst <= 1e-3 && second_order,
         "worst residual " + fmt(worst) + " at eps=1e-4 over 5 pairs (tol 1e-3); " +
             "halving ratios " + fmt(ra) + ", " + fmt(rb) + " (need ~4)");
}

void criterion_7_duality() {
  std::vector<MinkowskiNorm<2>> norms;
  norms.push_back(MinkowskiNorm<2>::make_euclidean());
  norms.push_back(MinkowskiNorm<2>::make_ellipsoid_semiaxes(AmbientVec<2>(1.0, 1.3, 1.7)));
  norms.push_back(MinkowskiNorm<2>::make_ellipsoid_semiaxes(AmbientVec<2>(0.8, 1.0, 2.0)));
  norms.push_back(MinkowskiNorm<2>::make_blended_lp(4.0, 0.5));
  norms.push_back(MinkowskiNorm<2>::make_perturbed_sphere({{2, 0, 0.1}, {3, 2, 0.05}}));
  double worst = 0.0;
  for (const auto& n : norms) {
    for (const auto& x : direction_samples<2>(1000)) {
      const double f = n.eval(x);
      const AmbientVec<2> xi = n.gradient(x);
      worst = std::max(worst, std::abs(n.dual_eval(xi) - 1.0));
      worst = std::max(worst, (n.dual_gradient(xi) - x / f).norm());
      worst = std::max(worst, std::abs(x.dot(xi) / n.dual_eval(xi) - f) / f);
    }
  }
  double worst_num = 0.0;
  std::mt19937 rng(5);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 200; ++trial) {
    AmbientVec<2> xi(gauss(rng), gauss(rng), gauss(rng));
    if (xi.norm() < 0.1) continue;
    for (int k = 1; k <= 2; ++k) {
      const double exact = norms[k].dual_eval(xi);
      worst_num = std::max(
          worst_num, std::abs(norms[k].dual_by_optimization(xi).value - exact) / exact);
    }
  }
  report(7, worst <= 1e-8 && worst_num <= 1e-8,
         "worst duality-identity residual " + fmt(worst) + " over 1000 directions x 5 norms, " +
             "worst numeric-vs-analytic ellipsoid dual " + fmt(worst_num) + " (tol 1e-8)");
}

}  // namespace

int main() {
  criterion_1_homothetic();
  criterion_2_area_law();
  criterion_3_monotonicity();
  criterion_4_convergence();
  criterion_5_inequality();
  criterion_6_variation();
  criterion_7_duality();
  criterion_8_convergence_orders();
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
