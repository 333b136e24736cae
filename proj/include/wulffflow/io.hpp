#pragma once

#include "wulffflow/flow.hpp"
#include "wulffflow/functionals.hpp"
#include "wulffflow/geometry.hpp"
#include "wulffflow/norm.hpp"

#include <charconv>
#include <fstream>
#include <string>
#include <system_error>

namespace wulffflow {

/// Locale-independent shortest-roundtrip real formatting, 17 significant
/// digits; the CSV determinism guarantee rests on this.
inline std::string format_real(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline constexpr const char* kTimeseriesHeader =
    "t,area_F,H_func,P_min,P_max,P_integral,u_hat_min,gauge_min,gauge_max,umb_deficit,dt";

inline std::string timeseries_csv(const std::vector<FlowRecord>& records) {
  std::string out(kTimeseriesHeader);
  out += '\n';
  for (const auto& r : records) {
    out += format_real(r.t);
    for (double v : {r.area_f, r.h_func, r.p_min, r.p_max, r.p_integral, r.u_hat_min,
                     r.gauge_min, r.gauge_max, r.umb_deficit, r.dt}) {
      out += ',';
      out += format_real(v);
    }
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

template <int N>
std::string limit_report_text(const RunResult<N>& r) {
  std::string out;
  out += "t_end = " + format_real(r.t_end) + "\n";
  out += "steps = " + std::to_string(r.steps) + "\n";
  out += "converged = " + std::string(r.converged ? "true" : "false") + "\n";
  out += "retried = " + std::string(r.retried ? "true" : "false") + "\n";
  out += "alpha_fitted = " + format_real(r.fit.alpha_fitted) + "\n";
  out += "alpha_predicted = " + format_real(r.fit.alpha_predicted) + "\n";
  out += "decay_rate = " + format_real(r.fit.decay_rate) + "\n";
  out += "sup_residual = " + format_real(r.fit.sup_residual) + "\n";
  if (!r.records.empty()) {
    out += "umb_deficit_initial = " + format_real(r.records.front().umb_deficit) + "\n";
    out += "umb_deficit_final = " + format_real(r.records.back().umb_deficit) + "\n";
  }
  return out;
}

inline std::string inequality_report_text(const InequalityReport& rep) {
  std::string out;
  out += "V1 = " + format_real(rep.v1) + "\n";
  out += "V2 = " + format_real(rep.v2) + "\n";
  out += "vol_L = " + format_real(rep.vol_l) + "\n";
  out += "lhs = " + format_real(rep.lhs) + "\n";
  out += "rhs = " + format_real(rep.rhs) + "\n";
  out += "normalized_deficit = " + format_real(rep.normalized_deficit) + "\n";
  out += "holds = " + std::string(rep.holds ? "true" : "false") + "\n";
  out += "near_equality = " + std::string(rep.near_equality ? "true" : "false") + "\n";
  out += "input_admissible = " + std::string(rep.input_admissible ? "true" : "false") + "\n";
  return out;
}

inline std::string inequality_report_csv(const InequalityReport& rep) {
  std::string out = "V1,V2,vol_L,lhs,rhs,normalized_deficit,holds,near_equality\n";
  out += format_real(rep.v1) + "," + format_real(rep.v2) + "," + format_real(rep.vol_l) + "," +
         format_real(rep.lhs) + "," + format_real(rep.rhs) + "," +
         format_real(rep.normalized_deficit) + "," + (rep.holds ? "true" : "false") + "," +
         (rep.near_equality ? "true" : "false") + "\n";
  return out;
}

inline std::string validity_report_text(const NormValidityReport& rep) {
  std::string out;
  out += "min_AF_eigenvalue = " + format_real(rep.min_af_eigenvalue) + "\n";
  out += "max_AF_eigenvalue = " + format_real(rep.max_af_eigenvalue) + "\n";
  out += "homogeneity_residual = " + format_real(rep.homogeneity_residual) + "\n";
  out += "gradient_check_residual = " + format_real(rep.gradient_check_residual) + "\n";
  out += "valid = " + std::string(rep.valid ? "true" : "false") + "\n";
  return out;
}

inline std::string variation_table_csv(const std::vector<VariationReport>& rows) {
  std::string out = "epsilon,d_area,rhs_area,residual_area,d_total_HF,rhs_total_HF,residual_total_HF\n";
  for (const auto& r : rows) {
    out += format_real(r.epsilon) + "," + format_real(r.d_area) + "," + format_real(r.rhs_area) +
           "," + format_real(r.residual_area) + "," + format_real(r.d_total_hf) + "," +
           format_real(r.rhs_total_hf) + "," + format_real(r.residual_total_hf) + "\n";
  }
  return out;
}

/// Wavefront OBJ of the radial graph. For the sphere grid: one vertex per
/// regular node plus the two pole vertices, two triangles per interior cell,
/// and triangle fans closing each pole. For the circle: a closed polyline.
template <int N>
std::string export_obj(const RadialGraph<N>& graph) {
  const SphereGrid<N>& g = *graph.grid;
  std::string out;
  if constexpr (N == 1) {
    for (int i = 0; i < g.node_count(); ++i) {
      const AmbientVec<1> p = graph.rho(i) * g.direction(i);
      out += "v " + format_real(p[0]) + " " + format_real(p[1]) + " 0\n";
    }
    out += "l";
    for (int i = 0; i < g.node_count(); ++i) out += " " + std::to_string(i + 1);
    out += " 1\n";
  } else {
    for (int i = 0; i < g.node_count(); ++i) {
      const AmbientVec<2> p = graph.rho(i) * g.direction(i);
      out += "v " + format_real(p[0]) + " " + format_real(p[1]) + " " + format_real(p[2]) + "\n";
    }
    const int nt = g.n_theta(), np = g.n_phi();
    auto id = [&](int j, int k) { return j * np + (k % np) + 1; };
    for (int j = 0; j + 1 < nt; ++j) {
      for (int k = 0; k < np; ++k) {
        out += "f " + std::to_string(id(j, k)) + " " + std::to_string(id(j + 1, k)) + " " +
               std::to_string(id(j + 1, k + 1)) + "\n";
        out += "f " + std::to_string(id(j, k)) + " " + std::to_string(id(j + 1, k + 1)) + " " +
               std::to_string(id(j, k + 1)) + "\n";
      }
    }
    const int north = g.north_index() + 1, south = g.south_index() + 1;
    for (int k = 0; k < np; ++k) {
      out += "f " + std::to_string(north) + " " + std::to_string(id(0, k)) + " " +
             std::to_string(id(0, k + 1)) + "\n";
      out += "f " + std::to_string(south) + " " + std::to_string(id(nt - 1, k + 1)) + " " +
             std::to_string(id(nt - 1, k)) + "\n";
    }
  }
  return out;
}

}  // namespace wulffflow
