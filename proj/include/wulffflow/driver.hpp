#pragma once

#include "wulffflow/config.hpp"
#include "wulffflow/flow.hpp"
#include "wulffflow/functionals.hpp"
#include "wulffflow/io.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace wulffflow {

namespace detail {

/// Tracks files written by one subcommand and removes them if it fails.
class OutputSet {
 public:
  explicit OutputSet(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  }
  ~OutputSet() {
    if (!committed_) {
      for (const auto& p : written_) {
        std::error_code ec;
        std::filesystem::remove(p, ec);
      }
    }
  }
  std::string write(const std::string& name, const std::string& content) {
    const std::string path = (std::filesystem::path(dir_) / name).string();
    write_text_file(path, content);
    written_.push_back(path);
    return path;
  }
  void commit() { committed_ = true; }

 private:
  std::string dir_;
  std::vector<std::string> written_;
  bool committed_ = false;
};

inline std::string snapshot_name(double t) {
  std::ostringstream os;
  os << "snapshot_" << t << ".obj";
  return os.str();
}

}  // namespace detail

template <int N>
void run_simulate_dim(const RunConfig& cfg) {
  const SphereGrid<N> grid(cfg.resolution);
  const MinkowskiNorm<N> norm = make_norm<N>(cfg);
  const ScalarField gamma0 = make_initial_gamma<N>(cfg, grid, norm);
  FlowParams params = flow_params(cfg);
  params.threads = resolve_threads(cfg.threads);
  const FlowSolver<N> solver(grid, norm, params);

  detail::OutputSet out(cfg.directory);
  std::vector<double> wanted(cfg.snapshot_times);
  std::sort(wanted.begin(), wanted.end());
  std::size_t next_snap = 0;
  auto snapshot = [&](double t, const ScalarField& gamma) {
    while (next_snap < wanted.size() && t >= wanted[next_snap] - 1e-12) {
      out.write(detail::snapshot_name(wanted[next_snap]),
                export_obj(RadialGraph<N>(grid, gamma)));
      ++next_snap;
    }
  };
  const RunResult<N> result = solver.run(gamma0, snapshot);
  out.write("timeseries.csv", timeseries_csv(result.records));
  out.write("limit_report.txt", limit_report_text(result));
  out.commit();
}

template <int N>
InequalityReport run_inequality_dim(const RunConfig& cfg) {
  const SphereGrid<N> grid(cfg.resolution);
  const MinkowskiNorm<N> norm = make_norm<N>(cfg);
  const RadialGraph<N> graph(grid, make_initial_gamma<N>(cfg, grid, norm));
  const GeometryFields<N> fields =
      compute_fields(graph, norm, resolve_threads(cfg.threads));
  const InequalityReport rep = minkowski_check(fields, norm);

  detail::OutputSet out(cfg.directory);
  out.write("inequality_report.txt", inequality_report_text(rep));
  out.write("inequality_report.csv", inequality_report_csv(rep));
  out.commit();
  return rep;
}

template <int N>
NormValidityReport run_norm_check_dim(const RunConfig& cfg) {
  const MinkowskiNorm<N> norm = make_norm<N>(cfg);
  NormValidityReport rep =
      norm.validate(static_cast<std::size_t>(cfg.norm.validate_samples), cfg.norm.tol_eigen,
                    cfg.norm.tol_homogeneity, cfg.norm.tol_gradient);
  // Duality invariants on the same sample set: F0(DF(x)) = 1 and the bidual
  // recovers F. Folded into `valid` so the report is a single verdict.
  double worst = 0.0;
  for (const auto& x : direction_samples<N>(static_cast<std::size_t>(cfg.norm.validate_samples))) {
    const AmbientVec<N> phi = norm.gradient(x);
    worst = std::max(worst, std::abs(norm.dual_eval(phi) - 1.0));
  }
  std::string body = validity_report_text(rep);
  body += "duality_residual = " + format_real(worst) + "\n";
  if (worst > 1e-6) rep.valid = false;

  detail::OutputSet out(cfg.directory);
  out.write("norm_report.txt", body);
  out.commit();
  return rep;
}

template <int N>
std::vector<VariationReport> run_variation_check_dim(const RunConfig& cfg) {
  const SphereGrid<N> grid(cfg.resolution);
  const MinkowskiNorm<N> norm = make_norm<N>(cfg);
  const RadialGraph<N> graph(grid, make_initial_gamma<N>(cfg, grid, norm));
  const ScalarField psi = make_psi<N>(cfg, grid);
  std::vector<VariationReport> rows;
  for (double eps : cfg.epsilons)
    rows.push_back(first_variation_check(graph, norm, psi, eps));

  detail::OutputSet out(cfg.directory);
  out.write("variation_table.csv", variation_table_csv(rows));
  out.commit();
  return rows;
}

inline void run_simulate(const RunConfig& cfg) {
  cfg.dimension == 1 ? run_simulate_dim<1>(cfg) : run_simulate_dim<2>(cfg);
}
inline InequalityReport run_inequality(const RunConfig& cfg) {
  return cfg.dimension == 1 ? run_inequality_dim<1>(cfg) : run_inequality_dim<2>(cfg);
}
inline NormValidityReport run_norm_check(const RunConfig& cfg) {
  return cfg.dimension == 1 ? run_norm_check_dim<1>(cfg) : run_norm_check_dim<2>(cfg);
}
inline std::vector<VariationReport> run_variation_check(const RunConfig& cfg) {
  return cfg.dimension == 1 ? run_variation_check_dim<1>(cfg) : run_variation_check_dim<2>(cfg);
}

}  // namespace wulffflow
