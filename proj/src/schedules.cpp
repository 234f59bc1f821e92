#include "gif/schedules.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "gif/error.hpp"

namespace gif {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

// cos/sin of pi*t/2 with the endpoints pinned so that a(1) = 0 holds exactly.
void quarter_turn(double t, double& c, double& s) {
  if (t == 1.0) {
    c = 0.0;
    s = 1.0;
  } else if (t == 0.0) {
    c = 1.0;
    s = 0.0;
  } else {
    c = std::cos(kHalfPi * t);
    s = std::sin(kHalfPi * t);
  }
}

}  // namespace

Schedule Schedule::linear() { return Schedule(Family::Linear, {}); }
Schedule Schedule::follmer() { return Schedule(Family::Follmer, {}); }
Schedule Schedule::trigonometric() { return Schedule(Family::Trigonometric, {}); }

Schedule Schedule::ve(double sigma_max) {
  if (!(sigma_max > 0.0) || !std::isfinite(sigma_max))
    throw Error(ErrorKind::InvalidParam, "VE schedule needs sigma_max > 0");
  return Schedule(Family::VE, {sigma_max});
}

Schedule Schedule::vp(double alpha0, double p) {
  if (!(alpha0 > 0.0 && alpha0 < 1.0))
    throw Error(ErrorKind::InvalidParam, "VP schedule needs alpha0 in (0,1)");
  if (!(p >= 1.0) || !std::isfinite(p))
    throw Error(ErrorKind::InvalidParam, "VP schedule needs p >= 1");
  return Schedule(Family::VP, {alpha0, p});
}

Schedule Schedule::shifted_linear(double zeta) {
  if (!(zeta >= 0.0) || !std::isfinite(zeta))
    throw Error(ErrorKind::InvalidParam, "shifted-linear schedule needs zeta >= 0");
  return Schedule(Family::ShiftedLinear, {zeta});
}

Schedule Schedule::custom(Fn fn, std::string label) {
  if (!fn) throw Error(ErrorKind::InvalidParam, "custom schedule needs a function");
  Schedule s(Family::Custom, {});
  s.custom_ = std::move(fn);
  s.label_ = std::move(label);
  return s;
}

std::string Schedule::name() const {
  if (family_ == Family::Custom) return label_;
  std::ostringstream os;
  os << family_name(family_);
  for (double p : params_) os << ":" << p;
  return os.str();
}

SchedulePoint Schedule::eval(double t) const {
  if (!(t >= 0.0 && t <= 1.0))
    throw Error(ErrorKind::OutOfRange, "schedule time outside [0,1]");
  return eval_unchecked(t);
}

SchedulePoint Schedule::eval_unchecked(double t) const {
  SchedulePoint p;
  p.t = t;
  switch (family_) {
    case Family::Linear:
      p.a = 1.0 - t;
      p.b = t;
      p.da = -1.0;
      p.db = 1.0;
      break;
    case Family::Follmer:
      p.b = t;
      p.db = 1.0;
      p.ddb = 0.0;
      if (t == 1.0) {
        p.a = 0.0;
        p.da = -kInf;
        p.dda = -kInf;
        p.da_infinite = true;
      } else {
        p.a = std::sqrt((1.0 - t) * (1.0 + t));
        p.da = -t / p.a;
        p.dda = -1.0 / (p.a * p.a * p.a);
      }
      p.a_da = -t;
      return p;
    case Family::Trigonometric: {
      double c, s;
      quarter_turn(t, c, s);
      p.a = c;
      p.b = s;
      p.da = -kHalfPi * s;
      p.db = kHalfPi * c;
      p.dda = -kHalfPi * kHalfPi * c;
      p.ddb = -kHalfPi * kHalfPi * s;
      break;
    }
    case Family::VE: {
      const double sm = params_[0];
      p.a = sm * (1.0 - t);
      p.b = 1.0;
      p.da = -sm;
      p.db = 0.0;
      break;
    }
    case Family::VP: {
      const double al = params_[0], pw = params_[1];
      double c, s;
      quarter_turn(t, c, s);
      const double cp = std::pow(c, pw);
      const double cp1 = (pw == 1.0) ? 1.0 : std::pow(c, pw - 1.0);
      p.a = al * cp;
      p.b = std::sqrt(1.0 - p.a * p.a);
      p.da = -al * pw * kHalfPi * cp1 * s;
      double curv = cp;
      if (pw != 1.0) curv -= (pw - 1.0) * std::pow(c, pw - 2.0) * s * s;
      p.dda = -al * pw * kHalfPi * kHalfPi * curv;
      p.a_da = p.a * p.da;
      p.db = -p.a_da / p.b;
      p.ddb = -(p.da * p.da + p.a * p.dda) / p.b - p.a_da * p.a_da / (p.b * p.b * p.b);
      return p;
    }
    case Family::ShiftedLinear: {
      const double z = params_[0];
      p.a = (1.0 - t) / (1.0 + z);
      p.b = (t + z) / (1.0 + z);
      p.da = -1.0 / (1.0 + z);
      p.db = 1.0 / (1.0 + z);
      break;
    }
    case Family::Custom: {
      p = custom_(t);
      p.t = t;
      // an infinite da keeps whatever finite a*da the caller supplied
      if (std::isinf(p.da))
        p.da_infinite = true;
      else
        p.a_da = p.a * p.da;
      return p;
    }
  }
  p.a_da = p.a * p.da;
  return p;
}

double Schedule::snr(double t) const {
  const SchedulePoint p = eval(t);
  if (p.a == 0.0) return p.b > 0.0 ? kInf : 0.0;
  return (p.b * p.b) / (p.a * p.a);
}

Schedule make_schedule(Family family, const std::vector<double>& params) {
  auto need = [&](std::size_t n) {
    if (params.size() < n)
      throw Error(ErrorKind::InvalidParam, family_name(family) + " schedule needs " +
                                               std::to_string(n) + " parameter(s)");
  };
  switch (family) {
    case Family::Linear: return Schedule::linear();
    case Family::Follmer: return Schedule::follmer();
    case Family::Trigonometric: return Schedule::trigonometric();
    case Family::VE: need(1); return Schedule::ve(params[0]);
    case Family::VP:
      need(1);
      return Schedule::vp(params[0], params.size() > 1 ? params[1] : 1.0);
    case Family::ShiftedLinear: need(1); return Schedule::shifted_linear(params[0]);
    case Family::Custom: break;
  }
  throw Error(ErrorKind::InvalidParam, "custom schedules are built with Schedule::custom");
}

Family parse_family(const std::string& name) {
  if (name == "linear") return Family::Linear;
  if (name == "follmer" || name == "foellmer") return Family::Follmer;
  if (name == "trig" || name == "trigonometric") return Family::Trigonometric;
  if (name == "ve") return Family::VE;
  if (name == "vp") return Family::VP;
  if (name == "shifted-linear" || name == "shifted_linear") return Family::ShiftedLinear;
  throw Error(ErrorKind::InvalidParam, "unknown schedule family '" + name + "'");
}

std::string family_name(Family f) {
  switch (f) {
    case Family::Linear: return "linear";
    case Family::Follmer: return "follmer";
    case Family::Trigonometric: return "trigonometric";
    case Family::VE: return "ve";
    case Family::VP: return "vp";
    case Family::ShiftedLinear: return "shifted-linear";
    case Family::Custom: return "custom";
  }
  return "unknown";
}

bool ValidationReport::flags(const std::string& condition) const {
  for (const auto& v : violations)
    if (v.condition == condition) return true;
  return false;
}

ValidationReport validate(const Schedule& sched, int grid_n) {
  if (grid_n < 16) throw Error(ErrorKind::InvalidParam, "validate needs grid_n >= 16");
  ValidationReport rep;
  // Each condition is reported once, at its first offending time.
  auto flag = [&](const std::string& cond, double t) {
    if (!rep.flags(cond)) rep.violations.push_back({cond, t});
  };
  constexpr double slack = 1e-14;

  const SchedulePoint end = sched.eval(1.0);
  if (std::abs(end.a) > slack) flag("a(1) = 0", 1.0);
  if (std::abs(end.b - 1.0) > slack) flag("b(1) = 1", 1.0);

  std::vector<double> ts;
  ts.reserve(grid_n + 2);
  ts.push_back(0.0);
  for (int i = 1; i <= grid_n; ++i) ts.push_back(double(i) / double(grid_n + 1));
  ts.push_back(1.0);

  double prev_snr = -1.0;
  for (double t : ts) {
    const SchedulePoint p = sched.eval(t);
    ++rep.points_checked;
    const bool interior = t > 0.0 && t < 1.0;
    if (interior && !(p.a > 0.0)) flag("a > 0", t);
    if (interior && !(p.b > 0.0)) flag("b > 0", t);
    if (p.a < -slack) flag("a >= 0", t);
    if (p.b < -slack) flag("b >= 0", t);
    if (!p.da_infinite && std::isfinite(p.da) && p.da > slack) flag("da <= 0", t);
    if (std::isfinite(p.db) && p.db < -slack) flag("db >= 0", t);
    if (interior && p.a > 0.0) {
      const double s = (p.b * p.b) / (p.a * p.a);
      if (prev_snr >= 0.0 && !(s > prev_snr)) flag("snr increasing", t);
      prev_snr = s;
    }
  }
  return rep;
}

}  // namespace gif
