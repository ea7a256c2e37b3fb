#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "lobfluid/csv.hpp"
#include "lobfluid/ctmc.hpp"
#include "lobfluid/error.hpp"
#include "lobfluid/experiments.hpp"
#include "lobfluid/fixed_point.hpp"
#include "lobfluid/fluid_ode.hpp"
#include "lobfluid/model.hpp"

#ifndef LOBFLUID_VERSION
#define LOBFLUID_VERSION "unknown"
#endif

namespace lobfluid::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Raised for configuration problems detected after parsing.
class ConfigError : public Error {
public:
  using Error::Error;
};

struct CommonConfig {
  std::string out_dir{"out"};
  std::uint64_t seed{1};
  ModelParams params;
  std::vector<double> price_labels;
};

struct SimulateConfig {
  std::uint64_t scale{100};
  double tau_max{1.0};
  double sample_dt{0.01};
  std::vector<double> x0, y0;
  std::uint64_t max_events{200'000'000};
};

struct IntegrateConfig {
  double tau_max{10.0};
  double tol{1e-9};
  double sample_dt{0.0};
  std::vector<double> x0, y0;
};

struct SolveConfig {
  std::string method{"both"};
  double tol{1e-12};
  std::size_t max_iter{1'000'000};
};

struct ConvergeConfig {
  std::vector<std::uint64_t> levels{10, 100, 1000};
  double horizon{5.0};
  std::size_t replicas{50};
  double grid_step{0.0};
  std::vector<double> x0, y0;
  std::size_t workers{0};
};

struct EquilibriumConfig {
  std::vector<std::uint64_t> levels{100, 1000};
  double burn_in{20.0};
  std::size_t samples{200};
  double gap{0.5};
  std::size_t workers{0};
};

struct SweepConfig {
  std::vector<double> lambda_s_values;
  double tol{1e-12};
};

// CLI flag for each ModelParams field, used in error messages.
std::string flag_for_field(const std::string& field) {
  if (field == "n_levels") return "--n";
  if (field == "lambda_b") return "--lambda-b";
  if (field == "lambda_s") return "--lambda-s";
  if (field == "price_labels") return "--price-labels";
  if (field == "alpha" || field == "beta" || field == "gamma") return "--" + field;
  return field;
}

std::string fmt10(double v) {
  std::ostringstream ss;
  ss << std::setprecision(10) << v;
  return ss.str();
}

std::string vec10(const std::vector<double>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt10(v[i]);
  return s + ")";
}

FluidState initial_state(const std::vector<double>& x0, const std::vector<double>& y0, const ModelParams& p) {
  FluidState s = FluidState::zeros(p.n_levels);
  if (!x0.empty()) {
    if (x0.size() != p.n_levels) throw ConfigError("--x0: expected " + std::to_string(p.n_levels) + " values");
    s.x = x0;
  }
  if (!y0.empty()) {
    if (y0.size() != p.n_levels) throw ConfigError("--y0: expected " + std::to_string(p.n_levels) + " values");
    s.y = y0;
  }
  check_state(s, p);
  return s;
}

json params_json(const ModelParams& p) {
  json j;
  j["n"] = p.n_levels;
  j["lambda_b"] = p.lambda_b;
  j["lambda_s"] = p.lambda_s;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  j["gamma"] = p.gamma;
  if (p.price_labels) j["price_labels"] = *p.price_labels;
  return j;
}

class OutputDir {
public:
  explicit OutputDir(const std::string& dir) : root_(dir) { fs::create_directories(root_); }

  // Names are plain file names; nothing is written outside the root.
  std::ofstream open(const std::string& name) {
    files_.push_back(name);
    std::ofstream os(root_ / name, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + (root_ / name).string() + " for writing");
    return os;
  }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& root() const { return root_; }

private:
  fs::path root_;
  std::vector<std::string> files_;
};

void write_manifest(OutputDir& out, const std::string& subcommand, const CommonConfig& common, json settings,
                    const std::string& effective_config) {
  json m;
  m["tool"] = "lobfluid";
  m["version"] = LOBFLUID_VERSION;
  m["subcommand"] = subcommand;
  m["seed"] = common.seed;
  m["params"] = params_json(common.params);
  m["settings"] = std::move(settings);
  m["outputs"] = out.files();
  m["effective_config"] = effective_config;
  std::ofstream os(out.root() / "manifest.json", std::ios::binary | std::ios::trunc);
  os << m.dump(2) << '\n';
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Order book CTMC, fluid limit and fixed-point toolkit", "lobfluid"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "TOML configuration file; command-line flags take precedence");

  CommonConfig common;
  app.add_option("--out-dir", common.out_dir, "Directory for all output files")->capture_default_str();
  app.add_option("--seed", common.seed, "Master random seed")->capture_default_str();
  app.add_option("--n", common.params.n_levels, "Number of price levels N")->required();
  app.add_option("--lambda-b", common.params.lambda_b, "Buyer arrival rate")->required();
  app.add_option("--lambda-s", common.params.lambda_s, "Seller arrival rate")->required();
  app.add_option("--alpha", common.params.alpha, "Move-rate constant")->required();
  app.add_option("--beta", common.params.beta, "Quit-rate constant (>= 0)")->required();
  app.add_option("--gamma", common.params.gamma, "Trade-rate constant")->required();
  app.add_option("--price-labels", common.price_labels, "Optional strictly increasing price labels c_1..c_N");

  SimulateConfig sim;
  auto* cmd_sim = app.add_subcommand("simulate", "Exact CTMC run of the scaled process V^(L)");
  cmd_sim->add_option("--scale", sim.scale, "Scaling level L")->capture_default_str();
  cmd_sim->add_option("--tau-max", sim.tau_max, "Scaled-time horizon")->capture_default_str();
  cmd_sim->add_option("--sample-dt", sim.sample_dt, "Scaled sampling step")->capture_default_str();
  cmd_sim->add_option("--x0", sim.x0, "Initial scaled buyers (N values, default 0)");
  cmd_sim->add_option("--y0", sim.y0, "Initial scaled sellers (N values, default 0)");
  cmd_sim->add_option("--max-events", sim.max_events, "Event budget")->capture_default_str();

  IntegrateConfig integ;
  auto* cmd_int = app.add_subcommand("integrate", "Integrate the fluid-limit ODE");
  cmd_int->add_option("--tau-max", integ.tau_max, "Horizon")->capture_default_str();
  cmd_int->add_option("--tol", integ.tol, "Absolute and relative tolerance")->capture_default_str();
  cmd_int->add_option("--sample-dt", integ.sample_dt, "Output grid step (0 = every accepted step)")->capture_default_str();
  cmd_int->add_option("--x0", integ.x0, "Initial x (N values, default 0)");
  cmd_int->add_option("--y0", integ.y0, "Initial y (N values, default 0)");

  SolveConfig solve;
  auto* cmd_solve = app.add_subcommand("solve", "Fixed point of the fluid limit");
  cmd_solve->add_option("--method", solve.method, "recursive | shooting | both")
      ->check(CLI::IsMember({"recursive", "shooting", "both"}))
      ->capture_default_str();
  cmd_solve->add_option("--tol", solve.tol, "Solver tolerance")->capture_default_str();
  cmd_solve->add_option("--max-iter", solve.max_iter, "Recursion sweep limit")->capture_default_str();

  ConvergeConfig conv;
  auto* cmd_conv = app.add_subcommand("converge", "Monte Carlo study of V^(L) against the ODE solution");
  cmd_conv->add_option("--levels", conv.levels, "Scaling levels L (strictly increasing)")->capture_default_str();
  cmd_conv->add_option("--horizon", conv.horizon, "Horizon T")->capture_default_str();
  cmd_conv->add_option("--replicas", conv.replicas, "Replicas per level")->capture_default_str();
  cmd_conv->add_option("--grid-step", conv.grid_step, "Comparison grid step (0 = T/100)")->capture_default_str();
  cmd_conv->add_option("--x0", conv.x0, "Initial x (N values, default 0)");
  cmd_conv->add_option("--y0", conv.y0, "Initial y (N values, default 0)");
  cmd_conv->add_option("--workers", conv.workers, "Worker threads (0 = all cores)")->capture_default_str();

  EquilibriumConfig eq;
  auto* cmd_eq = app.add_subcommand("equilibrium", "Distance of long-run samples of V^(L) to the fixed point");
  cmd_eq->add_option("--levels", eq.levels, "Scaling levels L (strictly increasing)")->capture_default_str();
  cmd_eq->add_option("--burn-in", eq.burn_in, "Scaled burn-in time")->capture_default_str();
  cmd_eq->add_option("--samples", eq.samples, "Samples per level")->capture_default_str();
  cmd_eq->add_option("--gap", eq.gap, "Scaled time between samples")->capture_default_str();
  cmd_eq->add_option("--workers", eq.workers, "Worker threads (0 = all cores)")->capture_default_str();

  SweepConfig sweep;
  auto* cmd_sweep = app.add_subcommand("sweep", "Fixed-point regime and trade volume across seller arrival rates");
  cmd_sweep->add_option("--lambda-s-values", sweep.lambda_s_values, "Strictly increasing lambda_s grid")->required();
  cmd_sweep->add_option("--tol", sweep.tol, "Solver tolerance")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (!common.price_labels.empty()) common.params.price_labels = common.price_labels;
    try {
      common.params = validate_params(common.params);
    } catch (const ParamError& e) {
      throw ConfigError(flag_for_field(e.field()) + ": " + std::string(e.what()).substr(e.field().size() + 2));
    }
    const ModelParams& p = common.params;
    const std::string effective = app.config_to_str(true, false);
    OutputDir dir(common.out_dir);

    if (*cmd_sim) {
      const FluidState x0 = initial_state(sim.x0, sim.y0, p);
      SimulationOptions so;
      so.max_events = sim.max_events;
      const Trajectory tr = simulate(p, ScalingLevel(sim.scale), x0, sim.tau_max, sim.sample_dt, common.seed, so);
      {
        auto os = dir.open("trajectory.csv");
        csv::write_trajectory(os, tr);
      }
      {
        auto os = dir.open("counters.csv");
        csv::write_counters(os, tr.counters);
      }
      out << "simulate: L=" << sim.scale << " tau_max=" << sim.tau_max << " events=" << tr.n_events
          << " seed=" << common.seed << '\n';
      const FluidState last = tr.states.back();
      out << "  final x = " << vec10(last.x) << "\n  final y = " << vec10(last.y) << '\n';
      out << "  conservation " << (conservation_holds(tr.initial, tr.final_state, tr.counters) ? "ok" : "VIOLATED")
          << '\n';
      write_manifest(dir, "simulate", common,
                     {{"scale", sim.scale}, {"tau_max", sim.tau_max}, {"sample_dt", sim.sample_dt},
                      {"x0", x0.x}, {"y0", x0.y}, {"max_events", sim.max_events}, {"events", tr.n_events}},
                     effective);
    } else if (*cmd_int) {
      const FluidState x0 = initial_state(integ.x0, integ.y0, p);
      IntegratorOptions io;
      io.abs_tol = io.rel_tol = integ.tol;
      if (integ.sample_dt > 0.0) io.output_dt = integ.sample_dt;
      const OdeSolution sol = integrate(x0, p, integ.tau_max, io);
      {
        auto os = dir.open("solution.csv");
        csv::write_solution(os, sol);
      }
      out << "integrate: tau_max=" << integ.tau_max << " steps=" << sol.accepted_steps
          << " rejected=" << sol.rejected_steps << " error_estimate=" << fmt10(sol.error_estimate) << '\n';
      out << "  final x = " << vec10(sol.back().x) << "\n  final y = " << vec10(sol.back().y) << '\n';
      write_manifest(dir, "integrate", common,
                     {{"tau_max", integ.tau_max}, {"tol", integ.tol}, {"sample_dt", integ.sample_dt},
                      {"x0", x0.x}, {"y0", x0.y}},
                     effective);
    } else if (*cmd_solve) {
      std::vector<FixedPoint> fps;
      if (solve.method != "recursive") fps.push_back(solve_shooting(p, solve.tol));
      if (solve.method != "shooting") {
        RecursiveOptions ro;
        ro.tol = solve.tol;
        ro.max_iter = solve.max_iter;
        fps.push_back(solve_recursive(p, ro));
      }
      for (const auto& fp : fps) {
        auto os = dir.open("fixed_point_" + std::string(to_string(fp.solver)) + ".csv");
        csv::write_fixed_point(os, fp, p);
      }
      {
        auto os = dir.open("summary.csv");
        csv::write_fixed_point_summary_header(os);
        for (const auto& fp : fps) csv::write_fixed_point_summary_row(os, fp);
      }
      json solvers = json::array();
      for (const auto& fp : fps) {
        out << '[' << to_string(fp.solver) << "] x* = " << vec10(fp.x_star) << "  y* = " << vec10(fp.y_star) << '\n';
        out << "  ell=" << fp.crossing << " regime=" << regime_label(fp.regime) << " residual=" << fmt10(fp.residual)
            << " trade_volume=" << fmt10(fp.trade_volume) << " iterations=" << fp.iterations << '\n';
        if (fp.ties > 0) err << "warning: " << fp.ties << " level(s) with x* == y*; counted on neither side\n";
        solvers.push_back({{"solver", to_string(fp.solver)},
                           {"ell", fp.crossing},
                           {"regime", regime_label(fp.regime)},
                           {"residual", fp.residual},
                           {"iterations", fp.iterations}});
      }
      if (fps.size() == 2) out << "  solver gap (sup) = " << fmt10(sup_distance(fps[0].as_state(), fps[1].as_state())) << '\n';
      write_manifest(dir, "solve", common,
                     {{"method", solve.method}, {"tol", solve.tol}, {"max_iter", solve.max_iter}, {"solvers", solvers}},
                     effective);
    } else if (*cmd_conv) {
      const FluidState x0 = initial_state(conv.x0, conv.y0, p);
      ExperimentOptions eo;
      eo.workers = conv.workers;
      std::optional<double> grid;
      if (conv.grid_step > 0.0) grid = conv.grid_step;
      const ConvergenceReport rep = fluid_convergence(p, x0, conv.levels, conv.horizon, conv.replicas, common.seed, grid, eo);
      {
        auto os = dir.open("convergence.csv");
        csv::write_convergence(os, rep);
      }
      out << "converge: T=" << conv.horizon << " replicas=" << conv.replicas << " seed=" << common.seed << '\n';
      for (const auto& lvl : rep.levels)
        out << "  L=" << lvl.scale << "  median sup-dist=" << fmt10(lvl.summary.median) << "  [q25 "
            << fmt10(lvl.summary.q25) << ", q75 " << fmt10(lvl.summary.q75) << "]\n";
      write_manifest(dir, "converge", common,
                     {{"levels", conv.levels}, {"horizon", conv.horizon}, {"replicas", conv.replicas},
                      {"grid_step", rep.grid_step}, {"x0", x0.x}, {"y0", x0.y}},
                     effective);
    } else if (*cmd_eq) {
      ExperimentOptions eo;
      eo.workers = eq.workers;
      const ConvergenceReport rep = equilibrium_concentration(p, eq.levels, eq.burn_in, eq.samples, eq.gap, common.seed, eo);
      {
        auto os = dir.open("equilibrium.csv");
        csv::write_equilibrium(os, rep);
      }
      out << "equilibrium: burn_in=" << eq.burn_in << " samples=" << eq.samples << " gap=" << eq.gap
          << " seed=" << common.seed << '\n';
      for (const auto& lvl : rep.levels)
        out << "  L=" << lvl.scale << "  median dist=" << fmt10(lvl.summary.median) << '\n';
      write_manifest(dir, "equilibrium", common,
                     {{"levels", eq.levels}, {"burn_in", eq.burn_in}, {"samples", eq.samples}, {"gap", eq.gap}},
                     effective);
    } else if (*cmd_sweep) {
      const SweepReport rep = overproduction_sweep(p, sweep.lambda_s_values, sweep.tol);
      {
        auto os = dir.open("sweep.csv");
        csv::write_sweep(os, rep);
      }
      out << "sweep: " << rep.points.size() << " points\n";
      for (const auto& pt : rep.points)
        out << "  lambda_s=" << fmt10(pt.lambda_s) << " ell=" << pt.crossing << " regime=" << regime_label(pt.regime)
            << " trade_volume=" << fmt10(pt.trade_volume) << '\n';
      if (rep.saturation_onset)
        out << "  saturation onset at lambda_s=" << fmt10(*rep.saturation_onset) << '\n';
      else
        out << "  no saturated (regime ii) point in the grid\n";
      json settings{{"lambda_s_values", sweep.lambda_s_values}, {"tol", sweep.tol}};
      settings["saturation_onset"] = rep.saturation_onset ? json(*rep.saturation_onset) : json(nullptr);
      write_manifest(dir, "sweep", common, settings, effective);
    }
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParamError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const BudgetExceeded& e) {
    err << "budget exhausted: " << e.what() << '\n';
    return kBudgetError;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return kSolverError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}

} // namespace lobfluid::cli
