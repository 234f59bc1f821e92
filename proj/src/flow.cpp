#include "gif/flow.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "gif/csv.hpp"
#include "gif/mixture_kernel.hpp"
#include "gif/parallel.hpp"

namespace gif {

namespace {

constexpr double kTimeSlack = 1e-12;

bool is_mixture_like(const Target& tg) { return tg.kind() != TargetKind::Box; }

// Responsibility-weighted mean of the component means at (t, x).
struct MixState {
  SchedulePoint p;
  double c2;
  Vec mubar;
  Vec resp;
};

MixState mix_state(const FlowContext& ctx, double t, const Vec& x) {
  const Target& tg = ctx.target();
  if (x.size() != tg.dim()) throw Error(ErrorKind::SizeMismatch, "state dimension mismatch");
  if (!x.allFinite()) throw Error(ErrorKind::NonFinite, "query point has non-finite entries");
  MixState s;
  s.p = ctx.sched().eval(t);
  const double sg = tg.sigma();
  s.c2 = s.p.a * s.p.a + sg * sg * s.p.b * s.p.b;
  if (!(s.c2 > 0.0)) throw Error(ErrorKind::DegenerateTime, "velocity undefined at t=1 without smoothing");
  s.mubar.resize(tg.dim());
  s.resp.resize(tg.components());
  detail::mixture_responsibilities(tg, s.p.b, s.c2, x.data(), s.resp.data(), s.mubar.data());
  return s;
}

// Scalar gain on (x - b mubar): (a da + sigma^2 b db) / c^2.
double affine_gain(const MixState& s, double sigma) {
  return (s.p.a_da + sigma * sigma * s.p.b * s.p.db) / s.c2;
}

void require_positive_a(const SchedulePoint& p, const char* what) {
  if (!(p.a > 0.0) || p.da_infinite)
    throw Error(ErrorKind::DegenerateTime, std::string(what) + " needs a_t > 0");
}

}  // namespace

FlowContext::FlowContext(Schedule sched, Target target, std::optional<double> early_stop)
    : sched_(std::move(sched)), target_(std::move(target)) {
  if (early_stop) {
    early_stop_ = *early_stop;
  } else {
    early_stop_ = smoothed() ? 0.0 : 1e-3;
  }
  if (!(early_stop_ >= 0.0 && early_stop_ < 0.5))
    throw Error(ErrorKind::InvalidParam, "early stop must lie in [0, 0.5)");
  if (!smoothed() && early_stop_ == 0.0)
    throw Error(ErrorKind::InvalidParam, "targets without Gaussian smoothing need early stop > 0");
}

bool FlowContext::smoothed() const {
  return target_.kind() != TargetKind::Box && target_.sigma() > 0.0;
}

void FlowContext::check_time(double t) const {
  if (!(t >= -kTimeSlack && t <= 1.0 + kTimeSlack))
    throw Error(ErrorKind::OutOfRange, "time outside [0,1]");
  if (t > t_max() + kTimeSlack)
    throw Error(ErrorKind::DegenerateTime, "time beyond the early-stopping horizon 1 - t_stop");
}

Vec velocity_denoiser_form(const FlowContext& ctx, double t, const Vec& x) {
  ctx.check_time(t);
  const SchedulePoint p = ctx.sched().eval(std::clamp(t, 0.0, 1.0));
  require_positive_a(p, "denoiser-form velocity");
  const Vec m1 = denoiser(ctx.target(), ctx.sched(), std::clamp(t, 0.0, 1.0), x);
  const double r = p.da / p.a;
  return r * x + (p.db - r * p.b) * m1;
}

Vec velocity_score_form(const FlowContext& ctx, double t, const Vec& x) {
  ctx.check_time(t);
  const double tc = std::clamp(t, 0.0, 1.0);
  const SchedulePoint p = ctx.sched().eval(tc);
  if (!(p.b > 0.0)) throw Error(ErrorKind::DegenerateTime, "score-form velocity needs b_t > 0");
  const Vec s = score(ctx.target(), ctx.sched(), tc, x);
  const double g = p.db / p.b;
  return g * x + (g * p.a * p.a - p.a_da) * s;
}

Vec velocity(const FlowContext& ctx, double t, const Vec& x) {
  ctx.check_time(t);
  const double tc = std::clamp(t, 0.0, 1.0);
  if (is_mixture_like(ctx.target())) {
    const MixState s = mix_state(ctx, tc, x);
    const double k = affine_gain(s, ctx.target().sigma());
    return s.p.db * s.mubar + k * (x - s.p.b * s.mubar);
  }
  const SchedulePoint p = ctx.sched().eval(tc);
  if (p.a > 0.0 && p.b * p.b <= p.a * p.a) return velocity_denoiser_form(ctx, tc, x);
  return velocity_score_form(ctx, tc, x);
}

Mat velocity_jacobian(const FlowContext& ctx, double t, const Vec& x) {
  ctx.check_time(t);
  const double tc = std::clamp(t, 0.0, 1.0);
  const Target& tg = ctx.target();
  const int d = tg.dim();
  if (is_mixture_like(tg)) {
    const MixState s = mix_state(ctx, tc, x);
    const double k = affine_gain(s, tg.sigma());
    // a b (a db - da b) / c^4, written with the product a*da
    const double g = s.p.b * (s.p.a * s.p.a * s.p.db - s.p.a_da * s.p.b) / (s.c2 * s.c2);
    Mat J = Mat::Zero(d, d);
    for (int j = 0; j < tg.components(); ++j) {
      const Vec dev = tg.means().row(j).transpose() - s.mubar;
      J.noalias() += s.resp(j) * dev * dev.transpose();
    }
    J *= g;
    J.diagonal().array() += k;
    return J;
  }
  const SchedulePoint p = ctx.sched().eval(tc);
  require_positive_a(p, "velocity Jacobian");
  const Mat cov = cond_cov(tg, ctx.sched(), tc, x);
  Mat J = (p.b * (p.a * p.db - p.da * p.b) / (p.a * p.a * p.a)) * cov;
  J.diagonal().array() += p.da / p.a;
  return J;
}

Vec velocity_dt(const FlowContext& ctx, double t, const Vec& x) {
  ctx.check_time(t);
  const double tc = std::clamp(t, 0.0, 1.0);
  const SchedulePoint p = ctx.sched().eval(tc);
  require_positive_a(p, "velocity time derivative");
  const PosteriorMoments mo = posterior_moments(ctx.target(), ctx.sched(), tc, x);
  const double a = p.a, b = p.b, da = p.da, db = p.db;
  const double ra = da / a;
  const double br = db - ra * b;  // b (db/b - da/a)
  const double c_x = p.dda / a - ra * ra;
  const double c_m1 = p.ddb - (p.dda * b + da * db) / a + ra * ra * b;
  const double c_cov = br * (db - 2.0 * ra * b) / (a * a);
  const double c_m3 = b * br * br / (a * a);
  return c_x * x + c_m1 * mo.mean + c_cov * (mo.cov * x) - c_m3 * (mo.m3 - mo.m2 * mo.mean);
}

namespace {

void check_span(const FlowContext& ctx, double from, double to, int steps, Direction dir) {
  if (steps < 1) throw Error(ErrorKind::InvalidParam, "steps must be >= 1");
  if (!(from >= 0.0 && to <= 1.0 && from <= to))
    throw Error(ErrorKind::OutOfRange, "integration interval must satisfy 0 <= from <= to <= 1");
  // field times actually visited
  const double lo = dir == Direction::Forward ? from : 1.0 - to;
  const double hi = dir == Direction::Forward ? to : 1.0 - from;
  ctx.check_time(lo);
  ctx.check_time(hi);
}

struct Field {
  const FlowContext& ctx;
  Direction dir;
  Vec operator()(double tau, const Vec& x) const {
    if (dir == Direction::Forward) return velocity(ctx, tau, x);
    return -velocity(ctx, 1.0 - tau, x);
  }
};

}  // namespace

Vec flow_map(const FlowContext& ctx, const Vec& x0, double from, double to, int steps,
             Direction dir) {
  check_span(ctx, from, to, steps, dir);
  return rk4(Field{ctx, dir}, x0, from, to, steps);
}

Trajectory integrate(const FlowContext& ctx, const Vec& x0, double from, double to, int steps,
                     Direction dir) {
  return integrate_augmented(ctx, x0, from, to, steps, dir, false, false, 0.0);
}

Trajectory integrate_augmented(const FlowContext& ctx, const Vec& x0, double from, double to,
                               int steps, Direction dir, bool with_jacobian,
                               bool with_logdensity, double init_logdens) {
  check_span(ctx, from, to, steps, dir);
  if (x0.size() != ctx.target().dim())
    throw Error(ErrorKind::SizeMismatch, "initial state dimension mismatch");
  const int d = ctx.target().dim();
  const double sgn = dir == Direction::Forward ? 1.0 : -1.0;
  auto field_time = [&](double tau) { return dir == Direction::Forward ? tau : 1.0 - tau; };

  struct State {
    Vec x;
    Mat J;
    double l;
  };
  // derivative of the augmented state
  auto deriv = [&](double tau, const State& s) {
    const double t = field_time(tau);
    State k;
    k.x = sgn * velocity(ctx, t, s.x);
    if (with_jacobian || with_logdensity) {
      const Mat G = sgn * velocity_jacobian(ctx, t, s.x);
      if (with_jacobian) k.J = G * s.J;
      k.l = with_logdensity ? -G.trace() : 0.0;
    } else {
      k.l = 0.0;
    }
    return k;
  };
  auto axpy = [&](const State& s, double h, const State& k) {
    State r;
    r.x = s.x + h * k.x;
    if (with_jacobian) r.J = s.J + h * k.J;
    r.l = s.l + h * k.l;
    return r;
  };

  Trajectory tr;
  tr.direction = dir;
  tr.times.reserve(steps + 1);
  tr.states.reserve(steps + 1);
  State s{x0, with_jacobian ? Mat(Mat::Identity(d, d)) : Mat(), init_logdens};
  auto record = [&](double tau) {
    tr.times.push_back(tau);
    tr.states.push_back(s.x);
    if (with_jacobian) tr.jac.push_back(s.J);
    if (with_logdensity) tr.logdens.push_back(s.l);
  };
  record(from);
  const double span = to - from;
  for (int k = 0; k < steps; ++k) {
    const double tau = from + span * double(k) / double(steps);
    const double next = (k + 1 == steps) ? to : from + span * double(k + 1) / double(steps);
    const double h = next - tau;
    const State k1 = deriv(tau, s);
    const State k2 = deriv(tau + 0.5 * h, axpy(s, 0.5 * h, k1));
    const State k3 = deriv(tau + 0.5 * h, axpy(s, 0.5 * h, k2));
    const State k4 = deriv(next, axpy(s, h, k3));
    s.x += (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    if (with_jacobian) s.J += (h / 6.0) * (k1.J + 2.0 * k2.J + 2.0 * k3.J + k4.J);
    s.l += (h / 6.0) * (k1.l + 2.0 * k2.l + 2.0 * k3.l + k4.l);
    if (!s.x.allFinite() || !std::isfinite(s.l) || (with_jacobian && !s.J.allFinite()))
      throw Error(ErrorKind::NonFiniteState,
                  "state became non-finite at step " + std::to_string(k + 1));
    record(next);
  }
  return tr;
}

Mat flow_batch(const FlowContext& ctx, const Mat& points, double from, double to, int steps,
               Direction dir, int threads) {
  check_span(ctx, from, to, steps, dir);
  if (points.cols() != ctx.target().dim())
    throw Error(ErrorKind::SizeMismatch, "cloud dimension mismatch");
  Mat out(points.rows(), points.cols());
  const Field f{ctx, dir};
  parallel_for(static_cast<std::size_t>(points.rows()), threads, [&](std::size_t i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.row(r) = rk4(f, Vec(points.row(r).transpose()), from, to, steps).transpose();
  });
  return out;
}

void Trajectory::write_csv(std::ostream& os) const {
  const int d = states.empty() ? 0 : static_cast<int>(states.front().size());
  CsvWriter w(os);
  std::vector<std::string> head{"t"};
  for (int i = 0; i < d; ++i) head.push_back("x" + std::to_string(i + 1));
  if (!logdens.empty()) head.push_back("logdens");
  if (!jac.empty())
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        head.push_back("j" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
  w.header(head);
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> row{times[k]};
    for (int i = 0; i < d; ++i) row.push_back(states[k](i));
    if (!logdens.empty()) row.push_back(logdens[k]);
    if (!jac.empty())
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) row.push_back(jac[k](i, j));
    w.row(row);
  }
}

}  // namespace gif
