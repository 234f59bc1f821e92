// gif-lab: command-line front end for the flow, bounds and experiment modules.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gif/bounds.hpp"
#include "gif/config.hpp"
#include "gif/csv.hpp"
#include "gif/error.hpp"
#include "gif/experiments.hpp"
#include "gif/flow.hpp"
#include "gif/metrics.hpp"
#include "gif/schedules.hpp"
#include "gif/targets.hpp"

namespace {

using namespace gif;

struct Globals {
  std::uint64_t seed = 1;
  int steps = 0;  // 0: subcommand default
  std::string out = "out";
  int threads = 1;
  bool no_timestamp = false;
  std::string config;
};

// Keys set on the command line; they override the config file.
struct Overrides {
  std::map<std::string, std::string> kv;
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(flag, [this, key](const std::string& v) { kv[key] = v; }, help);
  }
};

Config merged_config(const Globals& g, const Overrides& ov) {
  Config cfg = g.config.empty() ? Config() : Config::load(g.config);
  for (const auto& [k, v] : ov.kv) cfg.set(k, v);
  return cfg;
}

void add_schedule_flags(CLI::App* app, Overrides& ov) {
  ov.add(app, "--schedule", "schedule", "linear|follmer|trig|ve|vp|shifted-linear");
  ov.add(app, "--sigma-max", "sigma_max", "VE noise scale");
  ov.add(app, "--alpha0", "alpha0", "VP a(0)");
  ov.add(app, "--p", "p", "VP exponent");
  ov.add(app, "--zeta", "zeta", "shifted-linear offset");
}

void add_target_flags(CLI::App* app, Overrides& ov) {
  ov.add(app, "--target", "target", "gaussian|gmm|paper_gmm8|square_gmm4|box|points");
  ov.add(app, "--mean", "mean", "gaussian mean, e.g. 1,0");
  ov.add(app, "--sigma", "sigma", "component standard deviation");
  ov.add(app, "--means", "means", "mixture means, e.g. [(2,0),(-2,0)]");
  ov.add(app, "--weights", "weights", "mixture weights");
  ov.add(app, "--radius", "radius", "square_gmm4 mode radius");
  ov.add(app, "--lower", "lower", "box lower corner");
  ov.add(app, "--upper", "upper", "box upper corner");
  ov.add(app, "--points-file", "points_file", "CSV of target points");
  ov.add(app, "--early-stop", "early_stop", "distance to t=1 not crossed by integration");
}

std::optional<double> early_stop_of(const Config& cfg) {
  if (!cfg.has("early_stop")) return std::nullopt;
  return cfg.get_double("early_stop");
}

std::vector<double> vec_arg(const std::string& s) { return parse_number_list(s); }

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), Eigen::Index(v.size()));
}

int steps_or(const Globals& g, const Config& cfg, int dflt) {
  if (g.steps > 0) return g.steps;
  return static_cast<int>(cfg.get_int("steps", dflt));
}

std::uint64_t seed_of(const Globals& g, const Config& cfg, bool seed_given) {
  return seed_given ? g.seed : cfg.get_u64("seed", g.seed);
}

// ---- sample ----------------------------------------------------------------

int cmd_sample(const Globals& g, const Config& cfg, bool seed_given, const std::string& kind,
               std::size_t n, double t) {
  const Target tg = target_from_config(cfg);
  const std::uint64_t seed = seed_of(g, cfg, seed_given);
  ParticleCloud c;
  if (kind == "target") {
    c = sample_target(tg, n, seed, g.threads);
  } else if (kind == "source") {
    c = sample_source(tg, schedule_from_config(cfg), n, seed, g.threads);
  } else if (kind == "interpolant") {
    c = sample_interpolant(tg, schedule_from_config(cfg), t, n, seed, g.threads);
  } else {
    throw Error(ErrorKind::InvalidParam, "unknown sample kind '" + kind + "'");
  }
  write_cloud_csv(std::cout, c.points);
  return 0;
}

// ---- flow ------------------------------------------------------------------

int cmd_flow(const Globals& g, const Config& cfg, double from, double to, const std::string& x,
             const std::string& dir, bool jac, bool logdens) {
  const Target tg = target_from_config(cfg);
  const FlowContext ctx(schedule_from_config(cfg), tg, early_stop_of(cfg));
  const Vec x0 = to_vec(vec_arg(x));
  if (x0.size() != tg.dim())
    throw Error(ErrorKind::SizeMismatch, "--x has dimension " + std::to_string(x0.size()) +
                                             ", target has " + std::to_string(tg.dim()));
  Direction d;
  if (dir == "forward") d = Direction::Forward;
  else if (dir == "reverse") d = Direction::Reverse;
  else throw Error(ErrorKind::InvalidParam, "direction must be forward or reverse");
  double init = 0.0;
  if (logdens) {
    const double tt = d == Direction::Forward ? from : 1.0 - from;
    init = marginal_log_density(tg, ctx.sched(), tt, x0);
  }
  const Trajectory tr = integrate_augmented(ctx, x0, from, to, steps_or(g, cfg, 512), d, jac, logdens, init);
  tr.write_csv(std::cout);
  return 0;
}

// ---- bounds ----------------------------------------------------------------

int cmd_bounds(const Config& cfg, const std::string& case_name, int points) {
  const Schedule sched = schedule_from_config(cfg);
  RegularityProfile prof;
  if (cfg.has("target")) prof = RegularityProfile::from_target(target_from_config(cfg));
  auto take = [&](const char* key, double& field) {
    if (cfg.has(key)) field = cfg.get_double(key);
  };
  take("kappa", prof.kappa);
  take("beta", prof.beta);
  take("D", prof.D);
  take("R", prof.R);
  take("sigma", prof.sigma);
  take("L", prof.L);
  if (cfg.has("t2")) prof.t2 = cfg.get_double("t2");
  const ThetaProfile th = theta_profile(prof, sched, parse_bound_case(case_name));
  if (points < 2) throw Error(ErrorKind::InvalidParam, "--points must be >= 2");

  CsvWriter w(std::cout);
  w.header({"t", "theta_t", "piece_id", "cumulative_integral", "lipschitz_bound"});
  const double lo = th.lo(), hi = th.hi();
  for (int i = 0; i < points; ++i) {
    const double t = (i + 1 == points) ? hi : lo + (hi - lo) * double(i) / double(points - 1);
    const double I = th.integral(lo, t);
    const LipschitzBound lb = lipschitz_flow_map(th, lo, t);
    w.cells({format_double(t), format_double(th.theta(t)), piece_name(th.piece_at(t)),
             format_double(I), format_double(lb.value)});
  }
  if (th.t0) std::cerr << "t0 = " << format_double(*th.t0) << "\n";
  if (th.t1) std::cerr << "t1 = " << format_double(*th.t1) << "\n";
  if (th.t2) std::cerr << "t2 = " << format_double(*th.t2) << "\n";
  return 0;
}

// ---- validate-schedule -----------------------------------------------------

int cmd_validate(const Config& cfg, int grid) {
  const Schedule s = schedule_from_config(cfg);
  const ValidationReport rep = validate(s, grid);
  CsvWriter w(std::cout);
  w.header({"condition", "t"});
  for (const auto& v : rep.violations) w.cells({v.condition, format_double(v.t)});
  std::cerr << s.name() << ": " << rep.points_checked << " points checked, "
            << rep.violations.size() << " violations\n";
  return rep.ok() ? 0 : 1;
}

// ---- experiments -----------------------------------------------------------

struct ExpFlags {
  std::size_t n = 0;
  std::string grid, noise, delta, x0;
  double t_end = std::nan("");
  int t_points = 0, x_points = 0;
  bool svg = false;
  std::string bound_case;
};

ExperimentConfig experiment_config(const Globals& g, const Config& cfg, bool seed_given,
                                   const ExpFlags& f, int default_steps) {
  ExperimentConfig ec;
  if (cfg.has("target")) ec.target = target_from_config(cfg);
  if (cfg.has("target2.target")) ec.target2 = target_from_config(cfg, "target2.");
  ec.sched = schedule_from_config(cfg);
  ec.n = f.n > 0 ? f.n : static_cast<std::size_t>(cfg.get_int("n", 2048));
  ec.steps = steps_or(g, cfg, default_steps);
  ec.seed = seed_of(g, cfg, seed_given);
  ec.threads = g.threads;
  ec.early_stop = early_stop_of(cfg);
  if (!f.grid.empty()) ec.grid = vec_arg(f.grid);
  else if (cfg.has("grid")) ec.grid = cfg.get_list("grid");
  const std::string noise = f.noise.empty() ? cfg.get_string("noise", "frozen") : f.noise;
  ec.noise = parse_noise_model(noise);
  ec.t_points = f.t_points > 0 ? f.t_points : static_cast<int>(cfg.get_int("t_points", 20));
  ec.x_points = f.x_points > 0 ? f.x_points : static_cast<int>(cfg.get_int("x_points", 200));
  const std::string bc = f.bound_case.empty() ? cfg.get_string("case", "") : f.bound_case;
  if (!bc.empty()) ec.bound_case = parse_bound_case(bc);
  const std::string delta = f.delta.empty() ? (cfg.has("delta") ? cfg.get_string("delta") : "") : f.delta;
  if (!delta.empty()) ec.delta = to_vec(vec_arg(delta));
  const std::string x0 = f.x0.empty() ? (cfg.has("x0") ? cfg.get_string("x0") : "") : f.x0;
  if (!x0.empty()) ec.x0 = to_vec(vec_arg(x0));
  if (!std::isnan(f.t_end)) ec.t_end = f.t_end;
  else if (cfg.has("t_end")) ec.t_end = cfg.get_double("t_end");
  return ec;
}

void report(const ExperimentResult& r, const Globals& g, bool svg) {
  write_result(r, g.out, svg, !g.no_timestamp);
  std::cerr << r.name << ": " << r.rows.size() << " rows -> "
            << (std::filesystem::path(g.out) / (r.name + ".csv")).string() << "\n";
  if (r.fit)
    std::cerr << "  fit " << r.fit_y << " ~ " << r.fit_x << ": slope " << format_double(r.fit->slope)
              << ", intercept " << format_double(r.fit->intercept) << ", r2 "
              << format_double(r.fit->r_squared) << "\n";
  for (const auto& [k, v] : r.meta) std::cerr << "  " << k << " = " << v << "\n";
  std::cerr << "  runtime " << format_double(r.runtime_s) << " s\n";
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::NonFinite:
    case ErrorKind::NonFiniteState:
    case ErrorKind::NoRoot:
    case ErrorKind::DegenerateInput: return 2;
    default: return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gif-lab: Gaussian interpolation flows, stability bounds and experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "random seed");
  app.add_option("--steps", g.steps, "RK4 step count")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory for experiment files");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--no-timestamp", g.no_timestamp, "omit the '# generated' header line");
  app.add_option("--config", g.config, "key = value config file");

  Overrides ov;

  // sample
  auto* sample = app.add_subcommand("sample", "write a particle cloud to stdout");
  std::string sample_kind = "target";
  std::size_t sample_n = 1000;
  double sample_t = 0.5;
  sample->add_option("--kind", sample_kind, "target|source|interpolant");
  sample->add_option("-n,--n", sample_n, "number of particles")->check(CLI::PositiveNumber);
  sample->add_option("--t", sample_t, "interpolant time");
  add_target_flags(sample, ov);
  add_schedule_flags(sample, ov);

  // flow
  auto* flow = app.add_subcommand("flow", "integrate one trajectory and write it to stdout");
  double from = 0.0, to = 1.0;
  std::string x_arg, dir = "forward";
  bool with_jac = false, with_logdens = false;
  flow->add_option("--from", from, "start time");
  flow->add_option("--to", to, "end time");
  flow->add_option("--x", x_arg, "initial point, e.g. 1.0,0.0")->required();
  flow->add_option("--direction", dir, "forward|reverse");
  flow->add_flag("--jacobian", with_jac, "also integrate the variational equation");
  flow->add_flag("--logdens", with_logdens, "also integrate the log-density");
  add_target_flags(flow, ov);
  add_schedule_flags(flow, ov);

  // bounds
  auto* bounds = app.add_subcommand("bounds", "tabulate the theta_t profile");
  std::string case_name = "gaussian";
  int bound_points = 101;
  bounds->add_option("--case", case_name, "gaussian|bounded|mixture|loglip");
  bounds->add_option("--points", bound_points, "grid points");
  ov.add(bounds, "--kappa", "kappa", "semi-log-concavity constant");
  ov.add(bounds, "--beta", "beta", "semi-log-convexity constant");
  ov.add(bounds, "--D", "D", "diameter constant");
  ov.add(bounds, "--R", "R", "mean-ball radius");
  ov.add(bounds, "--L", "L", "log-Lipschitz constant");
  ov.add(bounds, "--t2", "t2", "switch time of the log-Lipschitz profile");
  add_target_flags(bounds, ov);
  add_schedule_flags(bounds, ov);

  // validate-schedule
  auto* vsched = app.add_subcommand("validate-schedule", "check the interpolant conditions");
  int vgrid = 256;
  vsched->add_option("--grid", vgrid, "interior grid points");
  add_schedule_flags(vsched, ov);

  // experiments
  ExpFlags ef;
  struct Exp {
    const char* name;
    const char* help;
    int steps;
    ExperimentResult (*run)(const ExperimentConfig&);
    CLI::App* cmd = nullptr;
  };
  std::vector<Exp> exps = {
      {"stability-source", "W2 against the source offset b0", 256, run_source_perturbation},
      {"stability-velocity", "W2^2 against a +-eps velocity perturbation", 256, run_velocity_perturbation},
      {"autoencode", "reverse then forward round trip", 2048, run_autoencode},
      {"cycle", "two-target cycle consistency", 2048, run_cycle},
      {"jacobian-envelope", "velocity Jacobian eigenvalues against theta_t", 256, run_jacobian_envelope},
      {"ag-check", "Alekseev-Groebner residual", 1024, run_ag_check},
  };
  for (auto& e : exps) {
    e.cmd = app.add_subcommand(e.name, e.help);
    e.cmd->add_option("-n,--n", ef.n, "particle count");
    e.cmd->add_option("--grid", ef.grid, "zeta / eps / step-count grid, comma-separated");
    e.cmd->add_flag("--svg", ef.svg, "also write an SVG plot");
    add_target_flags(e.cmd, ov);
    add_schedule_flags(e.cmd, ov);
  }
  exps[1].cmd->add_option("--noise", ef.noise, "frozen|per-stage");
  exps[4].cmd->add_option("--t-points", ef.t_points, "time grid size");
  exps[4].cmd->add_option("--x-points", ef.x_points, "points per time");
  exps[4].cmd->add_option("--case", ef.bound_case, "gaussian|bounded|mixture|loglip");
  exps[5].cmd->add_option("--delta", ef.delta, "constant velocity perturbation");
  exps[5].cmd->add_option("--x0", ef.x0, "starting point");
  exps[5].cmd->add_option("--t-end", ef.t_end, "final time");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  const bool seed_given = seed_opt->count() > 0;
  try {
    const Config cfg = merged_config(g, ov);
    if (*sample) return cmd_sample(g, cfg, seed_given, sample_kind, sample_n, sample_t);
    if (*flow) return cmd_flow(g, cfg, from, to, x_arg, dir, with_jac, with_logdens);
    if (*bounds) return cmd_bounds(cfg, case_name, bound_points);
    if (*vsched) return cmd_validate(cfg, vgrid);
    for (const auto& e : exps) {
      if (!*e.cmd) continue;
      ExperimentConfig ec = experiment_config(g, cfg, seed_given, ef, e.steps);
      ec.name = e.name;
      report(e.run(ec), g, ef.svg);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
