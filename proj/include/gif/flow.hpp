#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "gif/error.hpp"
#include "gif/schedules.hpp"
#include "gif/targets.hpp"

namespace gif {

/// Schedule + target. `early_stop` is the distance to t=1 that integration
/// may not cross; it defaults to 1e-3 for targets without Gaussian
/// smoothing (sigma = 0 point clouds, boxes) and 0 otherwise.
class FlowContext {
 public:
  FlowContext(Schedule sched, Target target, std::optional<double> early_stop = std::nullopt);

  const Schedule& sched() const { return sched_; }
  const Target& target() const { return target_; }
  double early_stop() const { return early_stop_; }
  double t_max() const { return 1.0 - early_stop_; }
  bool smoothed() const;  // sigma > 0 mixture or Gaussian

  // Throws DegenerateTime when t lies beyond 1 - early_stop.
  void check_time(double t) const;

 private:
  Schedule sched_;
  Target target_;
  double early_stop_;
};

enum class Direction { Forward, Reverse };

/// Velocity field. Mixture and Gaussian targets use the per-component form
///   v = db*mubar + k (x - b*mubar),  k = (a da + sigma^2 b db) / c^2,
/// which is finite on all of [0,1] when sigma > 0. Box targets pick the
/// denoiser form for snr <= 1 and the score form above it.
Vec velocity(const FlowContext& ctx, double t, const Vec& x);
// (da/a) x + (db - (da/a) b) E[X1 | X_t = x]; needs a > 0
Vec velocity_denoiser_form(const FlowContext& ctx, double t, const Vec& x);
// (db/b) x + ((db/b) a^2 - a da) s(t,x); needs b > 0
Vec velocity_score_form(const FlowContext& ctx, double t, const Vec& x);

Mat velocity_jacobian(const FlowContext& ctx, double t, const Vec& x);
// d/dt v(t,x) from the first three posterior moments.
Vec velocity_dt(const FlowContext& ctx, double t, const Vec& x);

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Mat> jac;          // d X_{from,t} / d x0, when requested
  std::vector<double> logdens;   // when requested
  Direction direction = Direction::Forward;

  const Vec& final_state() const { return states.back(); }
  void write_csv(std::ostream& os) const;
};

Trajectory integrate(const FlowContext& ctx, const Vec& x0, double from, double to, int steps,
                     Direction dir = Direction::Forward);

Trajectory integrate_augmented(const FlowContext& ctx, const Vec& x0, double from, double to,
                               int steps, Direction dir, bool with_jacobian,
                               bool with_logdensity, double init_logdens = 0.0);

/// Final state only; no trajectory storage.
Vec flow_map(const FlowContext& ctx, const Vec& x0, double from, double to, int steps,
             Direction dir = Direction::Forward);

/// Maps every row of `points`; bitwise identical for any thread count.
Mat flow_batch(const FlowContext& ctx, const Mat& points, double from, double to, int steps,
               Direction dir = Direction::Forward, int threads = 1);

/// Fixed-step classical RK4 on an arbitrary field f(t, x) -> dx/dt.
template <class F>
Vec rk4(F&& field, Vec x, double from, double to, int steps) {
  if (steps < 1) throw Error(ErrorKind::InvalidParam, "steps must be >= 1");
  const double span = to - from;
  for (int k = 0; k < steps; ++k) {
    const double t = from + span * double(k) / double(steps);
    const double h = (k + 1 == steps ? to : from + span * double(k + 1) / double(steps)) - t;
    const Vec k1 = field(t, x);
    const Vec k2 = field(t + 0.5 * h, Vec(x + 0.5 * h * k1));
    const Vec k3 = field(t + 0.5 * h, Vec(x + 0.5 * h * k2));
    const Vec k4 = field(t + h, Vec(x + h * k3));
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite())
      throw Error(ErrorKind::NonFiniteState,
                  "state became non-finite at step " + std::to_string(k + 1));
  }
  return x;
}

}  // namespace gif
