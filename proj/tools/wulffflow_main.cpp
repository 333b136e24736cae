#include "wulffflow/driver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

int dispatch(const std::string& cmd, const wulffflow::RunConfig& cfg) {
  using namespace wulffflow;
  if (cmd == "simulate") {
    run_simulate(cfg);
  } else if (cmd == "inequality") {
    const InequalityReport rep = run_inequality(cfg);
    std::printf("normalized_deficit = %s\nholds = %s\nnear_equality = %s\n",
                format_real(rep.normalized_deficit).c_str(), rep.holds ? "true" : "false",
                rep.near_equality ? "true" : "false");
  } else if (cmd == "norm-check") {
    const NormValidityReport rep = run_norm_check(cfg);
    std::printf("valid = %s\n", rep.valid ? "true" : "false");
  } else {
    const auto rows = run_variation_check(cfg);
    for (const auto& r : rows)
      std::printf("epsilon = %s  residual_area = %s  residual_total_HF = %s\n",
                  format_real(r.epsilon).c_str(), format_real(r.residual_area).c_str(),
                  format_real(r.residual_total_hf).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anisotropic expanding curvature flow toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  for (const char* name : {"simulate", "inequality", "norm-check", "variation-check"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "path to the run configuration")->required();
    sub->add_option("--override", overrides, "section.key=value config overrides");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    wulffflow::RunConfig cfg = wulffflow::load_config(config_path);
    for (const auto& o : overrides) wulffflow::apply_override(cfg, o);
    return dispatch(cmd, cfg);
  } catch (const wulffflow::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const wulffflow::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const wulffflow::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
}
