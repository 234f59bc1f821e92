#pragma once

#include <functional>
#include <string>
#include <vector>

namespace gif {

enum class Family { Linear, Follmer, Trigonometric, VE, VP, ShiftedLinear, Custom };

/// Schedule values at one time. `a_da` is the product a*da, kept separately
/// because it stays finite where da alone does not (Follmer at t=1).
struct SchedulePoint {
  double t = 0.0;
  double a = 0.0, b = 0.0;
  double da = 0.0, db = 0.0;
  double dda = 0.0, ddb = 0.0;
  double a_da = 0.0;
  bool da_infinite = false;  // da diverges (one-sided limit is -inf)
};

class Schedule {
 public:
  using Fn = std::function<SchedulePoint(double)>;

  static Schedule linear();
  static Schedule follmer();
  static Schedule trigonometric();
  static Schedule ve(double sigma_max);
  static Schedule vp(double alpha0, double p = 1.0);
  // a = (1-t)/(1+zeta), b = (t+zeta)/(1+zeta)
  static Schedule shifted_linear(double zeta);
  // Caller-supplied closed form; no admissibility is assumed (see validate).
  static Schedule custom(Fn fn, std::string label = "custom");

  Family family() const { return family_; }
  const std::vector<double>& params() const { return params_; }
  std::string name() const;

  SchedulePoint eval(double t) const;
  double snr(double t) const;  // b^2/a^2, +inf where a = 0

 private:
  Schedule(Family f, std::vector<double> p) : family_(f), params_(std::move(p)) {}
  SchedulePoint eval_unchecked(double t) const;

  Family family_;
  std::vector<double> params_;
  Fn custom_;
  std::string label_;
};

Schedule make_schedule(Family family, const std::vector<double>& params = {});
Family parse_family(const std::string& name);
std::string family_name(Family f);

struct Violation {
  std::string condition;
  double t;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::size_t points_checked = 0;
  bool ok() const { return violations.empty(); }
  bool flags(const std::string& condition) const;
};

/// Checks the interpolant conditions on grid_n interior points plus both ends.
ValidationReport validate(const Schedule& sched, int grid_n = 256);

}  // namespace gif
