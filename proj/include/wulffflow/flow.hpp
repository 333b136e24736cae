#pragma once

#include "wulffflow/functionals.hpp"
#include "wulffflow/geometry.hpp"
#include "wulffflow/grid.hpp"
#include "wulffflow/norm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

namespace wulffflow {

struct FlowParams {
  double t_max = 6.0;
  double c_cfl = 0.2;
  double dt_max = std::numeric_limits<double>::infinity();
  double record_interval = 0.01;  // time units between diagnostic records
  double eps_stop = 1e-8;    // stop when umb_deficit < eps_stop * area_F(0); 0 disables
  int threads = 1;
};

/// One diagnostics row; field order matches the CSV columns.
struct FlowRecord {
  double t = 0.0;
  double area_f = 0.0;      // anisotropic area, grows as e^t
  double h_func = 0.0;      // e^{(1-n)t/n} integral of H_F d mu_F, nonincreasing
  double p_min = 0.0;       // P = H_F u_hat, range shrinks under the max principle
  double p_max = 0.0;
  double p_integral = 0.0;  // integral of P over the rescaled surface, constant
  double u_hat_min = 0.0;   // rescaled, min u_hat e^{-t/n}, nondecreasing
  double gauge_min = 0.0;   // dual-gauge radius F0(X) of the rescaled surface
  double gauge_max = 0.0;
  double umb_deficit = 0.0; // scaled integral of sum (kappa_i - H_F/n)^2 d mu_F
  double dt = 0.0;          // step size chosen from this state
};

/// Rescaled support statistics per record, kept outside the CSV.
struct RescaledStats {
  double t = 0.0;
  double u_hat_min = 0.0;
  double u_hat_max = 0.0;
  double u_hat_mean = 0.0;  // d mu_F weighted
};

struct LimitFit {
  double alpha_fitted = 0.0;     // final d mu_F mean of e^{-t/n} u_hat
  double alpha_predicted = 0.0;  // (area_F(0) / ((n+1) Vol(L)))^{1/n}
  double decay_rate = 0.0;       // exponential rate of sup |rescaled u_hat - alpha|
  double sup_residual = 0.0;     // final sup deviation
};

template <int N>
struct RunResult {
  std::vector<FlowRecord> records;
  std::vector<RescaledStats> rescaled;
  LimitFit fit;
  ScalarField final_gamma;
  double t_end = 0.0;
  long steps = 0;
  bool reached_t_max = false;
  bool converged = false;  // eps_stop triggered
  bool retried = false;    // second attempt with halved step factor
};

/// Explicit RK4 integrator for the expanding curvature flow in radial-graph
/// form, d gamma / dt = sqrt(1+|grad gamma|^2) F(nu) / (rho H_F).
template <int N>
class FlowSolver {
 public:
  using SnapshotFn = std::function<void(double t, const ScalarField& gamma)>;

  FlowSolver(const SphereGrid<N>& grid, const MinkowskiNorm<N>& norm, FlowParams params = {})
      : grid_(&grid), norm_(&norm), params_(params) {
    lambda_a_ = norm.max_af_eigenvalue();
    dual0_.resize(grid.regular_count());
    for (int i = 0; i < grid.regular_count(); ++i) dual0_[i] = norm.dual_eval(grid.direction(i));
  }

  const FlowParams& params() const { return params_; }

  /// Speed field on all nodes (poles via closure), filtered. Throws when the
  /// surface leaves the strictly F-mean-convex class.
  ScalarField rhs(const ScalarField& gamma, GeometryFields<N>& scratch) const {
    RadialGraph<N> graph(*grid_, gamma);
    compute_fields(graph, *norm_, scratch, params_.threads);
    ScalarField out(grid_->node_count(), 0.0);
    for (int i = 0; i < grid_->regular_count(); ++i) {
      const double h = scratch.mean_curv_f[i];
      if (!(h > 0.0)) {
        std::ostringstream os;
        os << "anisotropic mean curvature " << h << " at grid node " << i
           << "; the expanding flow is only defined while H_F > 0";
        throw NumericError(os.str());
      }
      // 1 / (u_hat H_F): support u = rho / w, u_hat = u / F(nu).
      out[i] = 1.0 / (scratch.support_f[i] * h);
    }
    grid_->apply_pole_closure(out);
    grid_->apply_longitude_filter(out);
    return out;
  }

  /// Scale-invariant stability bound: the linearized diffusivity of the
  /// speed in the covariant Hessian is F(nu) Lambda_A / (rho H_F)^2 with
  /// Lambda_A the largest anisotropy eigenvalue, so an h^2 CFL condition on
  /// it is uniform along the flow.
  double choose_dt(const GeometryFields<N>& fields) const {
    // dt * diffusivity * stiffness <= 2.0, inside the RK4 real-axis limit
    // 2.785; c_cfl rescales linearly around its default.
    double dt = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid_->regular_count(); ++i) {
      const double rho_h = fields.mean_curv_f[i] * fields.position[i].norm();
      const double diffusivity = fields.f_nu[i] * lambda_a_ / (rho_h * rho_h);
      dt = std::min(dt, 2.0 / (diffusivity * grid_->node_stiffness(i)));
    }
    return params_.c_cfl / 0.2 * dt;
  }

  void step(ScalarField& gamma, double dt, GeometryFields<N>& scratch) const {
    const std::size_t m = gamma.size();
    const ScalarField k1 = rhs(gamma, scratch);
    ScalarField tmp(m);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = gamma[i] + 0.5 * dt * k1[i];
    const ScalarField k2 = rhs(tmp, scratch);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = gamma[i] + 0.5 * dt * k2[i];
    const ScalarField k3 = rhs(tmp, scratch);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = gamma[i] + dt * k3[i];
    const ScalarField k4 = rhs(tmp, scratch);
    for (std::size_t i = 0; i < m; ++i)
      gamma[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    grid_->apply_pole_closure(gamma);
    grid_->apply_longitude_filter(gamma);
  }

  RunResult<N> run(const ScalarField& initial_gamma, SnapshotFn snapshot = nullptr) const {
    try {
      return run_once(initial_gamma, params_.c_cfl, snapshot);
    } catch (const NumericError&) {
      RunResult<N> r = run_once(initial_gamma, 0.5 * params_.c_cfl, snapshot);
      r.retried = true;
      return r;
    }
  }

 private:
  RunResult<N> run_once(ScalarField gamma, double c_cfl, const SnapshotFn& snapshot) const {
    if (static_cast<int>(gamma.size()) != grid_->node_count())
      throw ConfigError("initial data size does not match the grid");
    grid_->apply_pole_closure(gamma);
    grid_->apply_longitude_filter(gamma);

    RunResult<N> result;
    GeometryFields<N> fields;
    double t = 0.0;
    double next_record = 0.0;
    long steps = 0;
    while (true) {
      RadialGraph<N> graph(*grid_, gamma);
      compute_fields(graph, *norm_, fields, params_.threads);
      const double dt_raw =
          std::min(c_cfl / params_.c_cfl * choose_dt(fields), params_.dt_max);
      const bool at_end = t >= params_.t_max - 1e-14;

      if (t >= next_record - 1e-12 || at_end) {
        const FlowRecord rec = make_record(t, fields, dt_raw);
        result.records.push_back(rec);
        result.rescaled.push_back(make_rescaled(t, fields));
        if (snapshot) snapshot(t, gamma);
        while (next_record <= t + 1e-12) next_record += params_.record_interval;
        // Convergence means the deficit dropped below the threshold, so data
        // that starts below it (spheres, Wulff shapes) still runs to t_max.
        const double thresh = params_.eps_stop * result.records.front().area_f;
        if (params_.eps_stop > 0.0 && t > 0.0 && rec.umb_deficit < thresh &&
            result.records.front().umb_deficit >= thresh) {
          result.converged = true;
          break;
        }
      }
      if (at_end) {
        result.reached_t_max = true;
        break;
      }
      const double dt = std::min(dt_raw, params_.t_max - t);
      step(gamma, dt, fields);
      t += dt;
      ++steps;
    }
    result.final_gamma = std::move(gamma);
    result.t_end = t;
    result.steps = steps;
    result.fit = fit_limit(result);
    return result;
  }

  FlowRecord make_record(double t, const GeometryFields<N>& f, double dt) const {
    FlowRecord r;
    r.t = t;
    r.dt = dt;
    r.area_f = anisotropic_area(f);
    r.h_func = std::exp((1.0 - N) * t / N) * total_hf(f);
    r.p_min = std::numeric_limits<double>::infinity();
    r.p_max = -std::numeric_limits<double>::infinity();
    r.u_hat_min = std::numeric_limits<double>::infinity();
    r.gauge_min = std::numeric_limits<double>::infinity();
    r.gauge_max = -std::numeric_limits<double>::infinity();
    const double shrink = std::exp(-t / N);
    std::vector<double> pint(grid_->regular_count());
    std::vector<double> umb(grid_->regular_count());
    for (int i = 0; i < grid_->regular_count(); ++i) {
      const double p = f.mean_curv_f[i] * f.support_f[i];
      r.p_min = std::min(r.p_min, p);
      r.p_max = std::max(r.p_max, p);
      r.u_hat_min = std::min(r.u_hat_min, shrink * f.support_f[i]);
      const double gauge = shrink * f.position[i].norm() * dual0_[i];
      r.gauge_min = std::min(r.gauge_min, gauge);
      r.gauge_max = std::max(r.gauge_max, gauge);
      pint[i] = p * f.area_weight_f[i];
      double dev = 0.0;
      const double mean = f.mean_curv_f[i] / N;
      for (int a = 0; a < N; ++a) {
        const double e = f.principal_f[i][a] - mean;
        dev += e * e;
      }
      umb[i] = dev * f.area_weight_f[i];
    }
    // Rescaling X -> e^{-t/n} X multiplies d mu_F by e^{-t} and leaves P
    // unchanged, and multiplies the squared curvature deviation by e^{2t/n}.
    r.p_integral = std::exp(-t) * pairwise_sum(pint);
    r.umb_deficit = std::exp((2.0 / N - 1.0) * t) * pairwise_sum(umb);
    return r;
  }

  RescaledStats make_rescaled(double t, const GeometryFields<N>& f) const {
    RescaledStats s;
    s.t = t;
    const double shrink = std::exp(-t / N);
    s.u_hat_min = std::numeric_limits<double>::infinity();
    s.u_hat_max = -std::numeric_limits<double>::infinity();
    std::vector<double> acc(grid_->regular_count());
    for (int i = 0; i < grid_->regular_count(); ++i) {
      const double v = shrink * f.support_f[i];
      s.u_hat_min = std::min(s.u_hat_min, v);
      s.u_hat_max = std::max(s.u_hat_max, v);
      acc[i] = v * f.area_weight_f[i];
    }
    s.u_hat_mean = pairwise_sum(acc) / anisotropic_area(f);
    return s;
  }

  LimitFit fit_limit(const RunResult<N>& result) const {
    LimitFit fit;
    if (result.records.empty()) return fit;
    fit.alpha_predicted = std::pow(
        result.records.front().area_f / ((N + 1) * wulff_volume(*norm_, *grid_)), 1.0 / N);
    const auto& rs = result.rescaled;
    fit.alpha_fitted = rs.back().u_hat_mean;
    const std::size_t lo = rs.size() - std::max<std::size_t>(rs.size() / 3, 2);
    // Least-squares slope of log sup-deviation over the final third.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = lo; i < rs.size(); ++i) {
      const double dev = std::max(fit.alpha_fitted - rs[i].u_hat_min,
                                  rs[i].u_hat_max - fit.alpha_fitted);
      if (i + 1 == rs.size()) fit.sup_residual = std::max(dev, 0.0);
      if (!(dev > 0.0)) continue;
      const double y = std::log(dev);
      sx += rs[i].t;
      sy += y;
      sxx += rs[i].t * rs[i].t;
      sxy += rs[i].t * y;
      ++n;
    }
    if (n >= 2 && sxx * n - sx * sx > 0.0)
      fit.decay_rate = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    return fit;
  }

  const SphereGrid<N>* grid_;
  const MinkowskiNorm<N>* norm_;
  FlowParams params_;
  double lambda_a_ = 1.0;
  std::vector<double> dual0_;
};

}  // namespace wulffflow
