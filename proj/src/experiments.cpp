#include "gif/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gif/csv.hpp"
#include "gif/error.hpp"
#include "gif/parallel.hpp"
#include "gif/rng.hpp"
#include "gif/svg.hpp"

namespace gif {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const Target& need_target(const ExperimentConfig& cfg) {
  if (!cfg.target) throw Error(ErrorKind::MissingField, "experiment needs a target");
  return *cfg.target;
}

void check_cloud_size(const ExperimentConfig& cfg) {
  if (cfg.n < 100) throw Error(ErrorKind::InvalidParam, "W2-based experiments need n >= 100");
}

void check_grid(const std::vector<double>& g, const char* what) {
  if (g.empty()) throw Error(ErrorKind::InvalidParam, std::string(what) + " grid is empty");
  if (!std::is_sorted(g.begin(), g.end()))
    throw Error(ErrorKind::InvalidParam, std::string(what) + " grid must be sorted");
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * double(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

std::string num(double v) { return format_double(v); }

double spectral_norm_sym(const Mat& J) {
  Eigen::SelfAdjointEigenSolver<Mat> es;
  if (J.rows() == 2 || J.rows() == 3)
    es.computeDirect(J, Eigen::EigenvaluesOnly);
  else
    es.compute(J, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Round trip inputs live at the last reachable time 1 - t_stop.
Mat endpoint_samples(const FlowContext& ctx, const Target& tg, std::size_t n, std::uint64_t seed,
                     int threads) {
  if (ctx.early_stop() == 0.0) return sample_target(tg, n, seed, threads).points;
  return sample_interpolant(tg, ctx.sched(), ctx.t_max(), n, seed, threads).points;
}

Mat encode(const FlowContext& ctx, const Mat& x, int steps, int threads) {
  return flow_batch(ctx, x, ctx.early_stop(), 1.0, steps, Direction::Reverse, threads);
}

Mat decode(const FlowContext& ctx, const Mat& z, int steps, int threads) {
  return flow_batch(ctx, z, 0.0, ctx.t_max(), steps, Direction::Forward, threads);
}

void put_summary(ExperimentResult& r, const std::vector<double>& err) {
  r.meta.emplace_back("median", num(quantile(err, 0.5)));
  r.meta.emplace_back("p90", num(quantile(err, 0.9)));
  r.meta.emplace_back("max", num(*std::max_element(err.begin(), err.end())));
}

}  // namespace

NoiseModel parse_noise_model(const std::string& s) {
  if (s == "frozen") return NoiseModel::Frozen;
  if (s == "per-stage" || s == "stage") return NoiseModel::PerStage;
  throw Error(ErrorKind::InvalidParam, "unknown noise model '" + s + "'");
}

std::string noise_model_name(NoiseModel m) {
  return m == NoiseModel::Frozen ? "frozen" : "per-stage";
}

std::vector<double> ExperimentResult::column(const std::string& col) const {
  const auto it = std::find(columns.begin(), columns.end(), col);
  if (it == columns.end()) throw Error(ErrorKind::MissingField, "no column '" + col + "'");
  const auto k = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[k]);
  return out;
}

std::string ExperimentResult::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw Error(ErrorKind::MissingField, "no metadata '" + key + "'");
}

double ExperimentResult::meta_number(const std::string& key) const {
  return std::stod(meta_value(key));
}

Target paper_gmm8() {
  Mat mu(8, 2);
  for (int j = 0; j < 8; ++j) {
    const double ang = 2.0 * j * std::numbers::pi / 8.0;
    mu(j, 0) = 12.0 * std::sin(ang);
    mu(j, 1) = 12.0 * std::cos(ang);
  }
  return Target::mixture(Vec::Constant(8, 1.0 / 8.0), mu, 0.03);
}

Target square_gmm4(double r, double sigma) {
  Mat mu(4, 2);
  mu << r, 0.0, -r, 0.0, 0.0, r, 0.0, -r;
  return Target::mixture(Vec::Constant(4, 0.25), mu, sigma);
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) return {};
  if (n == 1) return {lo};
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = (i + 1 == n) ? hi : lo + (hi - lo) * double(i) / double(n - 1);
  return g;
}

ExperimentResult run_source_perturbation(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  const Target& tg = need_target(cfg);
  check_cloud_size(cfg);
  const std::vector<double> grid = cfg.grid.empty() ? linspace(0.0, 0.3, 16) : cfg.grid;
  check_grid(grid, "zeta");
  for (double z : grid)
    if (z < 0.0) throw Error(ErrorKind::InvalidParam, "zeta must be >= 0");

  const Mat Z = sample_gaussian(tg.dim(), cfg.n, cfg.seed, 1.0, cfg.threads).points;
  // matched reference: the zeta = 0 flow of the same draws is exactly nu-distributed
  const FlowContext ref_ctx(Schedule::shifted_linear(0.0), tg, cfg.early_stop);
  const Mat ref = flow_batch(ref_ctx, Z, 0.0, ref_ctx.t_max(), cfg.steps, Direction::Forward, cfg.threads);
  Mat fresh;
  if (cfg.fresh_reference) fresh = sample_target(tg, cfg.n, cfg.seed, cfg.threads).points;

  const bool gaussian = tg.kind() == TargetKind::Gaussian;
  const RegularityProfile prof = RegularityProfile::from_target(tg);

  ExperimentResult res;
  res.name = cfg.name.empty() ? "stability-source" : cfg.name;
  res.columns = {"zeta", "b0", "w2", "w2_fresh", "bound"};
  std::vector<double> xs, ys;
  for (double zeta : grid) {
    const Schedule sc = Schedule::shifted_linear(zeta);
    const SchedulePoint p0 = sc.eval(0.0);
    const FlowContext ctx(sc, tg, cfg.early_stop);
    const Mat X = flow_batch(ctx, Mat(p0.a * Z), 0.0, ctx.t_max(), cfg.steps, Direction::Forward,
                             cfg.threads);
    const double w = w2(X, ref);
    const double wf = cfg.fresh_reference ? w2(X, fresh) : std::nan("");
    double bound = std::nan("");
    if (gaussian) {
      // C1 is the forward endpoint constant, C2 = sup_t |theta_t| on a fine grid
      const double c1 = endpoint_lipschitz(prof, sc, Direction::Forward, BoundCase::GaussianKappa);
      const ThetaProfile th = theta_profile(prof, sc, BoundCase::GaussianKappa);
      double c2 = 0.0;
      for (int k = 0; k <= 4096; ++k) c2 = std::max(c2, std::abs(th.theta(k / 4096.0)));
      bound = c1 * p0.b * std::sqrt(tg.second_moment()) * std::exp(c2 * tg.dim());
    }
    res.rows.push_back({zeta, p0.b, w, wf, bound});
    xs.push_back(p0.b);
    ys.push_back(w);
  }
  if (xs.size() >= 2) res.fit = linear_fit(xs, ys);
  res.fit_x = "b0";
  res.fit_y = "w2";
  res.meta.emplace_back("target", tg.describe());
  res.meta.emplace_back("n", std::to_string(cfg.n));
  res.meta.emplace_back("steps", std::to_string(cfg.steps));
  res.meta.emplace_back("seed", std::to_string(cfg.seed));
  res.meta.emplace_back("reference", "zeta=0 flow of the same gaussian draws");
  res.runtime_s = seconds_since(t0);
  return res;
}

ExperimentResult run_velocity_perturbation(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  const Target& tg = need_target(cfg);
  check_cloud_size(cfg);
  const std::vector<double> grid = cfg.grid.empty() ? linspace(0.5, 5.5, 16) : cfg.grid;
  check_grid(grid, "eps");
  const int d = tg.dim();
  const FlowContext ctx(cfg.sched, tg, cfg.early_stop);
  const double T = ctx.t_max();
  const Mat Z = sample_source(tg, cfg.sched, cfg.n, cfg.seed, cfg.threads).points;
  const Mat X0 = flow_batch(ctx, Z, 0.0, T, cfg.steps, Direction::Forward, cfg.threads);

  // one sign pattern shared across the eps grid
  Vec signs(d);
  {
    RandomStream rs(cfg.seed, 0, Purpose::Perturbation);
    for (int k = 0; k < d; ++k) signs(k) = rs.sign();
  }

  ExperimentResult res;
  res.name = cfg.name.empty() ? "stability-velocity" : cfg.name;
  res.columns = {"eps", "delta_v", "w2_sq", "c3", "bound"};
  std::vector<double> xs, ys;
  for (double eps : grid) {
    if (eps < 0.0) throw Error(ErrorKind::InvalidParam, "eps must be >= 0");
    Mat Y(Z.rows(), d);
    std::vector<double> c3_part(Z.rows(), 0.0);
    const Vec delta = eps * signs;
    parallel_for(static_cast<std::size_t>(Z.rows()), cfg.threads, [&](std::size_t i) {
      RandomStream rs(cfg.seed, i, Purpose::Perturbation);
      double c3 = 0.0;
      Vec y = Z.row(static_cast<Eigen::Index>(i)).transpose();
      for (int k = 0; k < cfg.steps; ++k) {
        const double t = T * double(k) / double(cfg.steps);
        c3 = std::max(c3, spectral_norm_sym(velocity_jacobian(ctx, t, y)));
        auto field = [&](double s, const Vec& x) -> Vec {
          Vec v = velocity(ctx, s, x);
          if (cfg.noise == NoiseModel::Frozen) return v + delta;
          for (int q = 0; q < d; ++q) v(q) += eps * rs.sign();
          return v;
        };
        const double next = (k + 1 == cfg.steps) ? T : T * double(k + 1) / double(cfg.steps);
        y = rk4(field, y, t, next, 1);
      }
      c3 = std::max(c3, spectral_norm_sym(velocity_jacobian(ctx, T, y)));
      Y.row(static_cast<Eigen::Index>(i)) = y.transpose();
      c3_part[i] = c3;
    });
    const double w = w2(X0, Y);
    const double c3 = *std::max_element(c3_part.begin(), c3_part.end());
    const double dv = double(d) * eps * eps;  // ||v - v~||^2 at every (t, x)
    const double factor = c3 > 0.0 ? std::expm1(2.0 * c3) / (2.0 * c3) : 1.0;
    res.rows.push_back({eps, dv, w * w, c3, factor * dv * T});
    xs.push_back(dv);
    ys.push_back(w * w);
  }
  if (xs.size() >= 2) res.fit = linear_fit(xs, ys);
  res.fit_x = "delta_v";
  res.fit_y = "w2_sq";
  res.meta.emplace_back("target", tg.describe());
  res.meta.emplace_back("schedule", cfg.sched.name());
  res.meta.emplace_back("noise", noise_model_name(cfg.noise));
  res.meta.emplace_back("n", std::to_string(cfg.n));
  res.meta.emplace_back("steps", std::to_string(cfg.steps));
  res.meta.emplace_back("seed", std::to_string(cfg.seed));
  res.runtime_s = seconds_since(t0);
  return res;
}

ExperimentResult run_autoencode(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  const Target& tg = need_target(cfg);
  const FlowContext ctx(cfg.sched, tg, cfg.early_stop);
  const Mat x = endpoint_samples(ctx, tg, cfg.n, cfg.seed, cfg.threads);
  const Mat back = decode(ctx, encode(ctx, x, cfg.steps, cfg.threads), cfg.steps, cfg.threads);
  ExperimentResult res;
  res.name = cfg.name.empty() ? "autoencode" : cfg.name;
  res.columns = {"index", "error"};
  std::vector<double> err(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    err[i] = (back.row(i) - x.row(i)).norm();
    res.rows.push_back({double(i), err[i]});
  }
  put_summary(res, err);
  res.meta.emplace_back("target", tg.describe());
  res.meta.emplace_back("schedule", ctx.sched().name());
  res.meta.emplace_back("steps", std::to_string(cfg.steps));
  res.meta.emplace_back("early_stop", num(ctx.early_stop()));
  res.runtime_s = seconds_since(t0);
  return res;
}

ExperimentResult run_cycle(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  const Target& t1 = need_target(cfg);
  if (!cfg.target2) throw Error(ErrorKind::MissingField, "cycle experiment needs a second target");
  const Target& t2 = *cfg.target2;
  if (t1.dim() != t2.dim()) throw Error(ErrorKind::SizeMismatch, "cycle targets differ in dimension");
  const FlowContext c1(cfg.sched, t1, cfg.early_stop), c2(cfg.sched, t2, cfg.early_stop);
  const Mat x = endpoint_samples(c1, t1, cfg.n, cfg.seed, cfg.threads);
  const int s = cfg.steps, th = cfg.threads;
  // X_{1,1} o X*_{2,1} o X_{2,1} o X*_{1,1}
  const Mat y = decode(c1, encode(c2, decode(c2, encode(c1, x, s, th), s, th), s, th), s, th);
  ExperimentResult res;
  res.name = cfg.name.empty() ? "cycle" : cfg.name;
  res.columns = {"index", "error"};
  std::vector<double> err(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    err[i] = (y.row(i) - x.row(i)).norm();
    res.rows.push_back({double(i), err[i]});
  }
  put_summary(res, err);
  res.meta.emplace_back("target", t1.describe());
  res.meta.emplace_back("target2", t2.describe());
  res.meta.emplace_back("steps", std::to_string(cfg.steps));
  res.runtime_s = seconds_since(t0);
  return res;
}

ExperimentResult run_jacobian_envelope(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  const Target& tg = need_target(cfg);
  const FlowContext ctx(cfg.sched, tg, cfg.early_stop);
  const RegularityProfile prof = cfg.profile ? *cfg.profile : RegularityProfile::from_target(tg);
  BoundCase bc;
  if (cfg.bound_case) {
    bc = *cfg.bound_case;
  } else if (tg.kind() == TargetKind::Gaussian) {
    bc = BoundCase::GaussianKappa;
  } else if (tg.kind() == TargetKind::Mixture && tg.sigma() > 0.0) {
    bc = BoundCase::MixtureSigmaR;
  } else {
    bc = BoundCase::BoundedD;
  }
  const ThetaProfile theta = theta_profile(prof, cfg.sched, bc);
  auto lower = [&](double t) {
    switch (bc) {
      case BoundCase::GaussianKappa:
        return std::isnan(prof.beta) ? -std::numeric_limits<double>::infinity()
                                     : lower_semi_log_convex(prof.beta, cfg.sched, t);
      case BoundCase::MixtureSigmaR: return lower_mixture(prof.sigma, cfg.sched, t);
      case BoundCase::BoundedD: return lower_bounded_support(cfg.sched, t);
      case BoundCase::LogLip: return lower_log_lipschitz(prof.L, cfg.sched, t);
    }
    return -std::numeric_limits<double>::infinity();
  };

  const double lo = std::max(theta.lo(), 0.0), hi = std::min(theta.hi(), ctx.t_max());
  ExperimentResult res;
  res.name = cfg.name.empty() ? "jacobian-envelope" : cfg.name;
  res.columns = {"t", "theta", "lower", "lambda_min", "lambda_max", "max_violation"};
  int violations = 0;
  double worst = 0.0, worst_rel = 0.0, tight = 0.0;
  for (int i = 0; i < cfg.t_points; ++i) {
    const double t = lo + (hi - lo) * double(i + 1) / double(cfg.t_points + 1);
    const double up = theta.theta(t), low = lower(t);
    const Mat xs = sample_interpolant(tg, cfg.sched, t, cfg.x_points, cfg.seed + 7919ull * (i + 1)).points;
    double lmin = std::numeric_limits<double>::infinity(), lmax = -lmin, vmax = 0.0;
    for (Eigen::Index k = 0; k < xs.rows(); ++k) {
      const Mat J = velocity_jacobian(ctx, t, xs.row(k).transpose());
      Eigen::SelfAdjointEigenSolver<Mat> es(J, Eigen::EigenvaluesOnly);
      const double e0 = es.eigenvalues().minCoeff(), e1 = es.eigenvalues().maxCoeff();
      lmin = std::min(lmin, e0);
      lmax = std::max(lmax, e1);
      const double v = std::max({e1 - up, low - e0, 0.0});
      const double scale = 1.0 + std::max(std::abs(up), std::isfinite(low) ? std::abs(low) : 0.0);
      vmax = std::max(vmax, v);
      worst_rel = std::max(worst_rel, v / scale);
      if (v > 1e-8 * scale) ++violations;
      if (tg.kind() == TargetKind::Gaussian) {
        const double form = lower_semi_log_convex(prof.beta, cfg.sched, t);
        tight = std::max(tight, (J - form * Mat::Identity(J.rows(), J.cols())).cwiseAbs().maxCoeff());
      }
    }
    worst = std::max(worst, vmax);
    res.rows.push_back({t, up, low, lmin, lmax, vmax});
  }
  res.meta.emplace_back("case", piece_name(theta.pieces().front().id));
  res.meta.emplace_back("violations", std::to_string(violations));
  res.meta.emplace_back("max_violation", num(worst));
  res.meta.emplace_back("max_relative_violation", num(worst_rel));
  if (tg.kind() == TargetKind::Gaussian) res.meta.emplace_back("gaussian_tightness", num(tight));
  if (theta.t1) res.meta.emplace_back("t1", num(*theta.t1));
  res.runtime_s = seconds_since(t0);
  return res;
}

ExperimentResult run_ag_check(const ExperimentConfig& cfg) {
  const auto t0 = Clock::now();
  const Target& tg = need_target(cfg);
  const FlowContext ctx(cfg.sched, tg, cfg.early_stop);
  const int d = tg.dim();
  if (cfg.delta.size() != d) throw Error(ErrorKind::MissingField, "ag-check needs a perturbation delta of the target dimension");
  const Vec x0 = cfg.x0.size() == d ? cfg.x0 : Vec(Vec::Zero(d));
  const double T = cfg.t_end ? *cfg.t_end : ctx.t_max();
  std::vector<double> grid = cfg.grid;
  if (grid.empty()) grid = {double(cfg.steps)};

  ExperimentResult res;
  res.name = cfg.name.empty() ? "ag-check" : cfg.name;
  res.columns = {"steps", "residual", "relative_residual", "gap"};
  const double dn = cfg.delta.norm();
  for (double gs : grid) {
    const int N = static_cast<int>(gs);
    if (N < 2 || N % 2) throw Error(ErrorKind::InvalidParam, "ag-check step counts must be even and >= 2");
    auto node = [&](int k) { return k == N ? T : T * double(k) / double(N); };
    const Vec XT = flow_map(ctx, x0, 0.0, T, N);
    // perturbed path, kept at every node
    std::vector<Vec> Y(N + 1);
    Y[0] = x0;
    auto pert = [&](double s, const Vec& x) -> Vec { return velocity(ctx, s, x) + cfg.delta; };
    for (int k = 0; k < N; ++k) Y[k + 1] = rk4(pert, Y[k], node(k), node(k + 1), 1);
    // integrand J_{s,T}(Y_s) delta at each node, J from the variational equation
    std::vector<Vec> g(N + 1);
    parallel_for(static_cast<std::size_t>(N + 1), cfg.threads, [&](std::size_t kk) {
      const int k = static_cast<int>(kk);
      if (k == N) {
        g[k] = cfg.delta;
        return;
      }
      const Trajectory tr =
          integrate_augmented(ctx, Y[k], node(k), T, N - k, Direction::Forward, true, false);
      g[k] = tr.jac.back() * cfg.delta;
    });
    Vec I = Vec::Zero(d);
    for (int k = 0; k <= N; ++k) {
      const double w = (k == 0 || k == N) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      I += w * g[k];
    }
    I *= (T / N) / 3.0;
    // X - Y = int J (v - v~) ds with v - v~ = -delta
    const double resid = ((XT - Y[N]) + I).norm();
    res.rows.push_back({double(N), resid, dn > 0 ? resid / dn : 0.0, (XT - Y[N]).norm()});
  }
  res.meta.emplace_back("delta_norm", num(dn));
  res.meta.emplace_back("t_end", num(T));
  res.runtime_s = seconds_since(t0);
  return res;
}

void write_result(const ExperimentResult& res, const std::string& dir, bool svg, bool timestamp) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base = std::filesystem::path(dir) / res.name;
  auto stamp = [&](std::ostream& os) {
    if (!timestamp) return;
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os << "# generated " << buf << "\n";
  };
  {
    std::ofstream os(base.string() + ".csv", std::ios::binary);
    if (!os) throw Error(ErrorKind::Config, "cannot write " + base.string() + ".csv");
    stamp(os);
    CsvWriter w(os);
    w.header(res.columns);
    for (const auto& r : res.rows) w.row(r);
  }
  if (res.fit) {
    std::ofstream os(base.string() + ".fit.csv", std::ios::binary);
    stamp(os);
    CsvWriter w(os);
    w.header({"slope", "intercept", "r2", "n"});
    w.row({res.fit->slope, res.fit->intercept, res.fit->r_squared, double(res.fit->n)});
  }
  if (svg && !res.rows.empty()) {
    const std::string xc = res.fit_x.empty() ? res.columns[0] : res.fit_x;
    const std::string yc = res.fit_y.empty() ? res.columns[1] : res.fit_y;
    std::ofstream os(base.string() + ".svg", std::ios::binary);
    write_scatter_svg(os, res.name, xc, yc, res.column(xc), res.column(yc),
                      res.fit ? std::optional<FitReport>(*res.fit) : std::nullopt);
  }
}

}  // namespace gif
