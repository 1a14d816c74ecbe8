#include "wccopf/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#ifndef WCCOPF_DATA_DIR
#define WCCOPF_DATA_DIR "data"
#endif

namespace wccopf {
namespace {

// Flag values land here first so an options file can sit between the
// built-in defaults and explicit flags.
struct Flags {
  std::string case_path = std::string(WCCOPF_DATA_DIR) + "/ieee118.m";
  std::string wind_path = std::string(WCCOPF_DATA_DIR) + "/wind25.json";
  double penetration = 75.0;
  double epsilon = 0.1;
  double load_factor = 1.25;
  double limit_factor = 0.75;
  std::string caps;
  bool no_wind_reserves = false;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  std::string out;
  double tol = 1e-4;
  int max_iters = 500;
  std::string options;
  bool timing = false;
};

struct Bound {
  CLI::Option* penetration = nullptr;
  CLI::Option* epsilon = nullptr;
  CLI::Option* load_factor = nullptr;
  CLI::Option* limit_factor = nullptr;
  CLI::Option* samples = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* tol = nullptr;
  CLI::Option* max_iters = nullptr;
};

Bound add_common(CLI::App* app, Flags& f) {
  Bound b;
  app->add_option("--case", f.case_path, "MATPOWER case file")->envname("WCCOPF_CASE")->capture_default_str();
  app->add_option("--wind", f.wind_path, "wind fleet JSON")->envname("WCCOPF_WIND")->capture_default_str();
  b.penetration = app->add_option("--penetration", f.penetration, "forecast wind as % of load")
                      ->envname("WCCOPF_PENETRATION")
                      ->capture_default_str();
  b.epsilon = app->add_option("--epsilon", f.epsilon, "default risk limit [MW]")
                  ->envname("WCCOPF_EPSILON")
                  ->capture_default_str();
  b.load_factor = app->add_option("--load-factor", f.load_factor, "load scaling")
                      ->envname("WCCOPF_LOAD_FACTOR")
                      ->capture_default_str();
  b.limit_factor = app->add_option("--limit-factor", f.limit_factor, "line limit scaling")
                       ->envname("WCCOPF_LIMIT_FACTOR")
                       ->capture_default_str();
  app->add_option("--caps", f.caps, "output caps, bus=MW[,bus=MW...]")->envname("WCCOPF_CAPS");
  app->add_flag("--no-wind-reserves", f.no_wind_reserves, "wind plants do not provide reserves")
      ->envname("WCCOPF_NO_WIND_RESERVES");
  b.samples = app->add_option("--samples", f.samples, "Monte-Carlo samples for validation")
                  ->envname("WCCOPF_SAMPLES")
                  ->capture_default_str();
  b.seed = app->add_option("--seed", f.seed, "sampling seed")->envname("WCCOPF_SEED")->capture_default_str();
  app->add_option("--out", f.out, "output file (default stdout)")->envname("WCCOPF_OUT");
  b.tol = app->add_option("--tol", f.tol, "feasibility tolerance [MW]")->envname("WCCOPF_TOL")->capture_default_str();
  b.max_iters = app->add_option("--max-iters", f.max_iters, "cutting-plane iteration limit")
                    ->envname("WCCOPF_MAX_ITERS")
                    ->capture_default_str();
  app->add_option("--options", f.options, "solver options JSON file")->envname("WCCOPF_OPTIONS");
  app->add_flag("--timing", f.timing, "include wall time in the report");
  return b;
}

RunConfig to_config(const Flags& f, const Bound& b) {
  RunConfig cfg;
  cfg.case_path = f.case_path;
  cfg.wind_path = f.wind_path;
  if (!f.options.empty()) apply_options_json(cfg, read_text_file(f.options));
  auto given = [](CLI::Option* o) { return o->count() > 0 || !o->empty(); };
  if (given(b.penetration) || cfg.penetration == 75.0) cfg.penetration = f.penetration;
  if (given(b.epsilon)) cfg.eps.default_mw = f.epsilon;
  if (given(b.load_factor) || cfg.load_factor == 1.25) cfg.load_factor = f.load_factor;
  if (given(b.limit_factor) || cfg.limit_factor == 0.75) cfg.limit_factor = f.limit_factor;
  if (given(b.samples)) cfg.samples = f.samples;
  if (given(b.seed)) cfg.seed = f.seed;
  if (given(b.tol)) cfg.solver.tol_feas = f.tol;
  if (given(b.max_iters)) cfg.solver.max_iterations = f.max_iters;
  cfg.caps = parse_cap_list(f.caps);
  cfg.wind_reserves = !f.no_wind_reserves;
  cfg.out_path = f.out;
  cfg.report_timing = f.timing;
  return cfg;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weighted chance-constrained DC optimal power flow with wind reserves and output caps"};
  app.require_subcommand(1);

  Flags solve_f, pen_f, caps_f, val_f;
  auto* solve = app.add_subcommand("solve", "solve one instance and write the report JSON");
  const Bound solve_b = add_common(solve, solve_f);

  auto* pen = app.add_subcommand("sweep-penetration", "one solve per penetration level, CSV out");
  const Bound pen_b = add_common(pen, pen_f);
  std::string levels = "25,50,75,100,125";
  pen->add_option("--levels", levels, "levels in %, list or start:stop:step")->capture_default_str();

  auto* caps = app.add_subcommand("sweep-caps", "one solve per grid point of two caps, CSV out");
  const Bound caps_b = add_common(caps, caps_f);
  std::string grid = "-75:75:15";
  std::vector<int> buses = {85, 117};
  caps->add_option("--grid", grid, "cap values in MW, list or start:stop:step")->capture_default_str();
  caps->add_option("--buses", buses, "the two capped buses")->expected(2)->delimiter(',')->capture_default_str();

  auto* val = app.add_subcommand("validate", "Monte-Carlo check of a dispatch");
  const Bound val_b = add_common(val, val_f);
  std::string dispatch;
  val->add_option("--dispatch", dispatch, "report or dispatch JSON from solve")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 1;
  }

  try {
    if (*solve) return cmd_solve(to_config(solve_f, solve_b), out, err);
    if (*pen) return cmd_sweep_penetration(to_config(pen_f, pen_b), parse_number_list(levels), out, err);
    if (*caps) {
      return cmd_sweep_caps(to_config(caps_f, caps_b), {buses.at(0), buses.at(1)}, parse_number_list(grid), out, err);
    }
    if (*val) return cmd_validate(to_config(val_f, val_b), dispatch, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace wccopf
