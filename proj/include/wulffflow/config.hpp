#pragma once

#include "wulffflow/common.hpp"
#include "wulffflow/flow.hpp"
#include "wulffflow/geometry.hpp"
#include "wulffflow/grid.hpp"
#include "wulffflow/harmonics.hpp"
#include "wulffflow/norm.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace wulffflow {

struct NormSpec {
  std::string family = "euclidean";
  std::string derivative_mode = "analytic";
  std::vector<double> semiaxes;            // ellipsoid, diagonal form
  std::vector<double> matrix;              // ellipsoid, full Q row-major (overrides semiaxes)
  std::vector<HarmonicTerm> terms;         // perturbed_sphere
  double p = 4.0;                          // blended_lp
  double lambda = 0.5;                     // blended_lp
  int validate_samples = 512;
  double tol_eigen = 1e-8;
  double tol_homogeneity = 1e-6;
  double tol_gradient = 1e-4;
};

struct InitialSpec {
  std::string type = "sphere";             // sphere | wulff | harmonic_perturbation | table
  double radius = 1.0;                     // sphere radius, harmonic base radius
  double scale = 1.0;                      // wulff scale factor
  std::vector<HarmonicTerm> terms;         // harmonic_perturbation
  std::string table_file;                  // one rho per line, grid node order
};

struct RunConfig {
  int dimension = 2;
  int resolution = 64;
  NormSpec norm;
  InitialSpec initial;
  double c_cfl = 0.2;
  double dt_max = 0.0;                     // 0 = uncapped
  double t_max = 6.0;
  double eps_stop = 1e-8;                  // relative to area_F(0); 0 disables
  double record_interval = 0.01;  // time units between records
  int threads = 0;                         // 0 = hardware concurrency
  std::vector<HarmonicTerm> psi_terms;     // variation-check test function
  std::vector<double> epsilons{1e-3, 5e-4, 2.5e-4, 1.25e-4};
  std::string directory = ".";
  std::vector<double> snapshot_times;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] inline void key_error(const std::string& section, const std::string& key,
                                   const std::string& what) {
  throw ConfigError("config key [" + section + "] " + key + ": " + what);
}

inline double parse_real(const std::string& section, const std::string& key,
                         const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  key_error(section, key, "expected a real number, got '" + v + "'");
}

inline int parse_int(const std::string& section, const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (trim(v.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  key_error(section, key, "expected an integer, got '" + v + "'");
}

inline std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<double> parse_reals(const std::string& section, const std::string& key,
                                       const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split(v, ',')) out.push_back(parse_real(section, key, s));
  return out;
}

/// Comma-separated list of "degree order amplitude" triples.
inline std::vector<HarmonicTerm> parse_terms(const std::string& section, const std::string& key,
                                             const std::string& v) {
  std::vector<HarmonicTerm> out;
  for (const auto& triple : split(v, ',')) {
    std::istringstream ss(triple);
    HarmonicTerm t;
    if (!(ss >> t.degree >> t.order >> t.amplitude))
      key_error(section, key, "expected 'degree order amplitude' triples, got '" + triple + "'");
    std::string rest;
    if (ss >> rest) key_error(section, key, "trailing data in term '" + triple + "'");
    out.push_back(t);
  }
  return out;
}

inline std::string format_terms(const std::vector<HarmonicTerm>& terms) {
  std::ostringstream os;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) os << ", ";
    os << terms[i].degree << " " << terms[i].order << " " << terms[i].amplitude;
  }
  return os.str();
}

inline std::string format_reals(const std::vector<double>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i];
  }
  return os.str();
}

inline void apply_key(RunConfig& c, const std::string& section, const std::string& key,
                      const std::string& value) {
  auto real = [&] { return parse_real(section, key, value); };
  auto integer = [&] { return parse_int(section, key, value); };
  if (section == "norm") {
    if (key == "family") c.norm.family = value;
    else if (key == "derivative_mode") c.norm.derivative_mode = value;
    else if (key == "semiaxes") c.norm.semiaxes = parse_reals(section, key, value);
    else if (key == "matrix") c.norm.matrix = parse_reals(section, key, value);
    else if (key == "terms") c.norm.terms = parse_terms(section, key, value);
    else if (key == "p") c.norm.p = real();
    else if (key == "lambda") c.norm.lambda = real();
    else if (key == "validate_samples") c.norm.validate_samples = integer();
    else if (key == "tol_eigen") c.norm.tol_eigen = real();
    else if (key == "tol_homogeneity") c.norm.tol_homogeneity = real();
    else if (key == "tol_gradient") c.norm.tol_gradient = real();
    else key_error(section, key, "unknown key");
  } else if (section == "initial") {
    if (key == "type") c.initial.type = value;
    else if (key == "radius") c.initial.radius = real();
    else if (key == "scale") c.initial.scale = real();
    else if (key == "terms") c.initial.terms = parse_terms(section, key, value);
    else if (key == "table_file") c.initial.table_file = value;
    else key_error(section, key, "unknown key");
  } else if (section == "grid") {
    if (key == "dimension") c.dimension = integer();
    else if (key == "resolution") c.resolution = integer();
    else key_error(section, key, "unknown key");
  } else if (section == "flow") {
    if (key == "c_cfl") c.c_cfl = real();
    else if (key == "dt_max") c.dt_max = real();
    else if (key == "t_max") c.t_max = real();
    else if (key == "eps_stop") c.eps_stop = real();
    else if (key == "record_interval") c.record_interval = real();
    else if (key == "threads") c.threads = integer();
    else if (key == "psi_terms") c.psi_terms = parse_terms(section, key, value);
    else if (key == "epsilons") c.epsilons = parse_reals(section, key, value);
    else key_error(section, key, "unknown key");
  } else if (section == "output") {
    if (key == "directory") c.directory = value;
    else if (key == "snapshot_times") c.snapshot_times = parse_reals(section, key, value);
    else key_error(section, key, "unknown key");
  } else {
    throw ConfigError("config: unknown section [" + section + "]");
  }
}

inline void validate_config(const RunConfig& c) {
  if (c.dimension != 1 && c.dimension != 2)
    throw ConfigError("config key [grid] dimension: must be 1 or 2");
  if (c.resolution < (c.dimension == 1 ? 8 : 16))
    throw ConfigError("config key [grid] resolution: too small for the stencils");
  if (!(c.c_cfl > 0.0)) throw ConfigError("config key [flow] c_cfl: must be positive");
  if (c.dt_max < 0.0) throw ConfigError("config key [flow] dt_max: must be nonnegative");
  if (!(c.t_max > 0.0)) throw ConfigError("config key [flow] t_max: must be positive");
  if (c.eps_stop < 0.0) throw ConfigError("config key [flow] eps_stop: must be nonnegative");
  if (!(c.record_interval > 0.0))
    throw ConfigError("config key [flow] record_interval: must be positive");
  if (c.threads < 0) throw ConfigError("config key [flow] threads: must be >= 0");
  for (double e : c.epsilons)
    if (!(e > 0.0)) throw ConfigError("config key [flow] epsilons: must be positive");
  const std::string& f = c.norm.family;
  if (f != "euclidean" && f != "ellipsoid" && f != "perturbed_sphere" && f != "blended_lp")
    throw ConfigError("config key [norm] family: unknown family '" + f + "'");
  const std::string& m = c.norm.derivative_mode;
  if (m != "analytic" && m != "finite_difference")
    throw ConfigError("config key [norm] derivative_mode: must be analytic or finite_difference");
  const std::string& t = c.initial.type;
  if (t != "sphere" && t != "wulff" && t != "harmonic_perturbation" && t != "table")
    throw ConfigError("config key [initial] type: unknown type '" + t + "'");
  if (t == "table" && c.initial.table_file.empty())
    throw ConfigError("config key [initial] table_file: required for table initial data");
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config parse error at line " + std::to_string(lineno) +
                          ": unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config parse error at line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    if (section.empty())
      throw ConfigError("config parse error at line " + std::to_string(lineno) +
                        ": key before any [section]");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    detail::apply_key(c, section, key, value);
  }
  detail::validate_config(c);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

/// Overrides of the form "section.key=value".
inline void apply_override(RunConfig& c, const std::string& spec) {
  const auto dot = spec.find('.');
  const auto eq = spec.find('=');
  if (dot == std::string::npos || eq == std::string::npos || dot > eq)
    throw ConfigError("override '" + spec + "': expected section.key=value");
  detail::apply_key(c, detail::trim(spec.substr(0, dot)),
                    detail::trim(spec.substr(dot + 1, eq - dot - 1)),
                    detail::trim(spec.substr(eq + 1)));
  detail::validate_config(c);
}

inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  os << "[norm]\n";
  os << "family = " << c.norm.family << "\n";
  os << "derivative_mode = " << c.norm.derivative_mode << "\n";
  if (!c.norm.semiaxes.empty()) os << "semiaxes = " << detail::format_reals(c.norm.semiaxes) << "\n";
  if (!c.norm.matrix.empty()) os << "matrix = " << detail::format_reals(c.norm.matrix) << "\n";
  if (!c.norm.terms.empty()) os << "terms = " << detail::format_terms(c.norm.terms) << "\n";
  if (c.norm.family == "blended_lp") {
    os << "p = " << c.norm.p << "\n";
    os << "lambda = " << c.norm.lambda << "\n";
  }
  os << "validate_samples = " << c.norm.validate_samples << "\n";
  os << "tol_eigen = " << c.norm.tol_eigen << "\n";
  os << "tol_homogeneity = " << c.norm.tol_homogeneity << "\n";
  os << "tol_gradient = " << c.norm.tol_gradient << "\n";
  os << "\n[initial]\n";
  os << "type = " << c.initial.type << "\n";
  os << "radius = " << c.initial.radius << "\n";
  os << "scale = " << c.initial.scale << "\n";
  if (!c.initial.terms.empty()) os << "terms = " << detail::format_terms(c.initial.terms) << "\n";
  if (!c.initial.table_file.empty()) os << "table_file = " << c.initial.table_file << "\n";
  os << "\n[grid]\n";
  os << "dimension = " << c.dimension << "\n";
  os << "resolution = " << c.resolution << "\n";
  os << "\n[flow]\n";
  os << "c_cfl = " << c.c_cfl << "\n";
  os << "dt_max = " << c.dt_max << "\n";
  os << "t_max = " << c.t_max << "\n";
  os << "eps_stop = " << c.eps_stop << "\n";
  os << "record_interval = " << c.record_interval << "\n";
  os << "threads = " << c.threads << "\n";
  if (!c.psi_terms.empty()) os << "psi_terms = " << detail::format_terms(c.psi_terms) << "\n";
  os << "epsilons = " << detail::format_reals(c.epsilons) << "\n";
  os << "\n[output]\n";
  os << "directory = " << c.directory << "\n";
  if (!c.snapshot_times.empty())
    os << "snapshot_times = " << detail::format_reals(c.snapshot_times) << "\n";
  return os.str();
}

template <int N>
MinkowskiNorm<N> make_norm(const RunConfig& c) {
  const DerivativeMode mode = c.norm.derivative_mode == "analytic"
                                  ? DerivativeMode::analytic
                                  : DerivativeMode::finite_difference;
  if (c.norm.family == "euclidean") return MinkowskiNorm<N>::make_euclidean();
  if (c.norm.family == "ellipsoid") {
    if (!c.norm.matrix.empty()) {
      if (static_cast<int>(c.norm.matrix.size()) != (N + 1) * (N + 1))
        throw ConfigError("config key [norm] matrix: needs " + std::to_string((N + 1) * (N + 1)) +
                          " entries for dimension " + std::to_string(N));
      AmbientMat<N> q;
      for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j) q(i, j) = c.norm.matrix[i * (N + 1) + j];
      return MinkowskiNorm<N>::make_ellipsoid(q);
    }
    if (static_cast<int>(c.norm.semiaxes.size()) != N + 1)
      throw ConfigError("config key [norm] semiaxes: needs " + std::to_string(N + 1) +
                        " entries for dimension " + std::to_string(N));
    AmbientVec<N> a;
    for (int i = 0; i <= N; ++i) a[i] = c.norm.semiaxes[i];
    return MinkowskiNorm<N>::make_ellipsoid_semiaxes(a);
  }
  if (c.norm.family == "perturbed_sphere")
    return MinkowskiNorm<N>::make_perturbed_sphere(c.norm.terms, mode);
  return MinkowskiNorm<N>::make_blended_lp(c.norm.p, c.norm.lambda, mode);
}

/// Initial gamma = log rho on all grid nodes, pole nodes closed.
template <int N>
ScalarField make_initial_gamma(const RunConfig& c, const SphereGrid<N>& grid,
                               const MinkowskiNorm<N>& norm) {
  ScalarField gamma(grid.node_count(), 0.0);
  auto rho_at = [&](const AmbientVec<N>& x) -> double {
    if (c.initial.type == "sphere") return c.initial.radius;
    if (c.initial.type == "wulff") return c.initial.scale / norm.dual_eval(x);
    // harmonic_perturbation
    return c.initial.radius + eval_harmonics<N>(c.initial.terms, x);
  };
  if (c.initial.type == "table") {
    std::ifstream in(c.initial.table_file);
    if (!in) throw IoError("cannot open initial table '" + c.initial.table_file + "'");
    for (int i = 0; i < grid.node_count(); ++i) {
      double rho;
      if (!(in >> rho))
        throw ConfigError("initial table '" + c.initial.table_file + "': expected " +
                          std::to_string(grid.node_count()) + " values, got " + std::to_string(i));
      if (!(rho > 0.0))
        throw ConfigError("initial table '" + c.initial.table_file +
                          "': radius must be positive at node " + std::to_string(i));
      gamma[i] = std::log(rho);
    }
  } else {
    for (int i = 0; i < grid.node_count(); ++i) {
      const double rho = rho_at(grid.direction(i));
      if (!(rho > 0.0))
        throw ConfigError("initial surface: radius must stay positive (node " +
                          std::to_string(i) + ")");
      gamma[i] = std::log(rho);
    }
  }
  grid.apply_pole_closure(gamma);
  return gamma;
}

template <int N>
ScalarField make_psi(const RunConfig& c, const SphereGrid<N>& grid) {
  ScalarField psi(grid.node_count(), 0.0);
  for (int i = 0; i < grid.node_count(); ++i)
    psi[i] = c.psi_terms.empty() ? 1.0 : eval_harmonics<N>(c.psi_terms, grid.direction(i));
  return psi;
}

inline FlowParams flow_params(const RunConfig& c) {
  FlowParams p;
  p.t_max = c.t_max;
  p.c_cfl = c.c_cfl;
  if (c.dt_max > 0.0) p.dt_max = c.dt_max;
  p.eps_stop = c.eps_stop;
  p.record_interval = c.record_interval;
  p.threads = c.threads;
  return p;
}

inline int resolve_threads(int configured) {
  if (const char* env = std::getenv("WULFFFLOW_THREADS")) {
    try {
      configured = std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError("WULFFFLOW_THREADS: expected an integer");
    }
  }
  if (configured < 0) throw ConfigError("thread count must be >= 0");
  return configured;
}

}  // namespace wulffflow
