#include "gif/bounds.hpp"

#include <algorithm>
#include <cmath>

#include "gif/error.hpp"

namespace gif {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kT0Clamp = 1e-6;
constexpr double kSimpsonTol = 1e-10;

bool is_set(double v) { return !std::isnan(v); }

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::MissingField, what);
}

// Bisection for the unique crossing of an increasing g on [0,1].
double bisect_increasing(const std::function<double(double)>& g) {
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// 5 L (a^2+b^2)^{-3/2} (L + log(sqrt(a^2+b^2)/b)^{-1/2}), i.e. B_t / b_t.
double bt_over_b(double L, const SchedulePoint& p) {
  const double n2 = p.a * p.a + p.b * p.b;
  const double lg = 0.5 * std::log(n2) - std::log(p.b);
  const double inv = lg > 0.0 ? 1.0 / std::sqrt(lg) : kInf;
  return 5.0 * L * std::pow(n2, -1.5) * (L + inv);
}

}  // namespace

RegularityProfile RegularityProfile::from_target(const Target& tg) {
  RegularityProfile rp;
  switch (tg.kind()) {
    case TargetKind::Gaussian:
      rp.kappa = rp.beta = 1.0 / (tg.sigma() * tg.sigma());
      rp.sigma = tg.sigma();
      rp.R = 0.0;
      break;
    case TargetKind::Mixture:
      rp.sigma = tg.sigma();
      rp.R = tg.radius();
      if (tg.sigma() > 0.0)
        rp.beta = 1.0 / (tg.sigma() * tg.sigma());
      else
        rp.D = tg.diameter_d();
      break;
    case TargetKind::Box:
      rp.kappa = 0.0;
      rp.D = tg.diameter_d();
      rp.R = tg.radius();
      break;
  }
  return rp;
}

std::string piece_name(PieceId id) {
  switch (id) {
    case PieceId::Kappa: return "kappa";
    case PieceId::Diameter: return "diameter";
    case PieceId::Mixture: return "mixture";
    case PieceId::LogLip: return "loglip";
  }
  return "unknown";
}

BoundCase parse_bound_case(const std::string& s) {
  if (s == "gaussian" || s == "kappa") return BoundCase::GaussianKappa;
  if (s == "bounded" || s == "diameter") return BoundCase::BoundedD;
  if (s == "mixture" || s == "gmm") return BoundCase::MixtureSigmaR;
  if (s == "loglip") return BoundCase::LogLip;
  throw Error(ErrorKind::InvalidParam, "unknown bound case '" + s + "'");
}

ThetaProfile::ThetaProfile(Schedule sched, RegularityProfile prof, BoundCase c,
                           std::vector<ThetaPiece> pieces)
    : sched_(std::move(sched)), prof_(std::move(prof)), case_(c), pieces_(std::move(pieces)) {}

PieceId ThetaProfile::piece_at(double t) const {
  if (!(t >= lo() && t <= hi())) throw Error(ErrorKind::OutOfRange, "time outside profile coverage");
  for (const auto& p : pieces_)
    if (t < p.hi) return p.id;
  return pieces_.back().id;
}

double ThetaProfile::theta(double t) const { return theta_piece(piece_at(t), t); }

double ThetaProfile::theta_piece(PieceId id, double t) const {
  const SchedulePoint p = sched_.eval(t);
  const double a2 = p.a * p.a;
  switch (id) {
    case PieceId::Kappa: {
      const double k = prof_.kappa;
      return (k * p.a_da + p.b * p.db) / (k * a2 + p.b * p.b);
    }
    case PieceId::Diameter: {
      if (p.a == 0.0) return kInf;
      const double D2 = prof_.D * prof_.D;
      return p.b * (a2 * p.db - p.a_da * p.b) * D2 / (a2 * a2) + p.a_da / a2;
    }
    case PieceId::Mixture: {
      const double s2 = prof_.sigma * prof_.sigma;
      const double c2 = a2 + s2 * p.b * p.b;
      return (p.a_da + s2 * p.b * p.db) / c2 +
             p.b * (a2 * p.db - p.a_da * p.b) * prof_.R * prof_.R / (c2 * c2);
    }
    case PieceId::LogLip: {
      const double n2 = a2 + p.b * p.b;
      return (p.db * a2 - p.a_da * p.b) * bt_over_b(prof_.L, p) + (p.a_da + p.b * p.db) / n2;
    }
  }
  return kInf;
}

double ThetaProfile::antiderivative(PieceId id, double t) const {
  const SchedulePoint p = sched_.eval(t);
  const double a2 = p.a * p.a, b2 = p.b * p.b;
  switch (id) {
    case PieceId::Kappa: return 0.5 * std::log(prof_.kappa * a2 + b2);
    case PieceId::Diameter:
      if (p.a == 0.0) return kInf;
      return 0.5 * prof_.D * prof_.D * b2 / a2 + std::log(p.a);
    case PieceId::Mixture: {
      const double c2 = a2 + prof_.sigma * prof_.sigma * b2;
      return 0.5 * std::log(c2) + 0.5 * prof_.R * prof_.R * b2 / c2;
    }
    case PieceId::LogLip: break;
  }
  return kInf;
}

double ThetaProfile::piece_integral(PieceId id, double s, double t) const {
  if (t <= s) return 0.0;
  if (id == PieceId::LogLip)
    return adaptive_simpson([this](double u) { return theta_piece(PieceId::LogLip, u); }, s, t,
                            kSimpsonTol);
  const double fs = antiderivative(id, s), ft = antiderivative(id, t);
  if (std::isinf(ft) && ft > 0) return kInf;
  if (std::isinf(fs) && fs < 0) return kInf;
  if (std::isinf(ft) && ft < 0) return -kInf;
  return ft - fs;
}

double ThetaProfile::integral(double s, double t) const {
  if (!(s >= lo() - 1e-15 && t <= hi() + 1e-15 && s <= t))
    throw Error(ErrorKind::OutOfRange, "integration range outside profile coverage");
  double total = 0.0;
  for (const auto& p : pieces_) {
    const double a = std::max(s, p.lo), b = std::min(t, p.hi);
    if (b > a) total += piece_integral(p.id, a, b);
  }
  return total;
}

double kappa_root_time(double kappa, const Schedule& sched) {
  if (!(kappa < 0.0)) return 0.0;
  if (sched.snr(0.0) + kappa >= 0.0) return 0.0;
  return bisect_increasing([&](double t) { return (t == 1.0 ? kInf : sched.snr(t)) + kappa; });
}

double critical_time(const RegularityProfile& prof, const Schedule& sched) {
  require(is_set(prof.kappa), "critical time needs kappa");
  if (!(prof.D < kInf)) throw Error(ErrorKind::MissingField, "critical time needs finite D");
  if (!(prof.kappa * prof.D * prof.D < 1.0) || prof.D == 0.0)
    throw Error(ErrorKind::NoRoot, "kappa D^2 >= 1: the kappa-based bound holds everywhere");
  const double target = 1.0 / (prof.D * prof.D) - prof.kappa;
  if (sched.snr(0.0) >= target)
    throw Error(ErrorKind::NoRoot, "snr already exceeds D^-2 - kappa at t = 0");
  return bisect_increasing([&](double t) { return (t == 1.0 ? kInf : sched.snr(t)) - target; });
}

ThetaProfile theta_profile(const RegularityProfile& prof, const Schedule& sched, BoundCase c) {
  std::vector<ThetaPiece> pieces;
  std::optional<double> t0, t1, t2;
  switch (c) {
    case BoundCase::GaussianKappa: {
      require(is_set(prof.kappa), "GaussianKappa profile needs kappa");
      const double r = kappa_root_time(prof.kappa, sched);
      t0 = r;
      const double lo = prof.kappa < 0.0 ? r + kT0Clamp : 0.0;
      pieces.push_back({lo, 1.0, PieceId::Kappa});
      break;
    }
    case BoundCase::BoundedD: {
      if (!(prof.D < kInf)) throw Error(ErrorKind::MissingField, "BoundedD profile needs finite D");
      if (!is_set(prof.kappa)) {
        // support diameter alone
        pieces.push_back({0.0, 1.0, PieceId::Diameter});
        break;
      }
      t0 = kappa_root_time(prof.kappa, sched);
      if (prof.kappa * prof.D * prof.D >= 1.0) {
        pieces.push_back({0.0, 1.0, PieceId::Kappa});
        break;
      }
      if (prof.D > 0.0 && sched.snr(0.0) >= 1.0 / (prof.D * prof.D) - prof.kappa) {
        pieces.push_back({0.0, 1.0, PieceId::Kappa});
        break;
      }
      t1 = critical_time(prof, sched);
      pieces.push_back({0.0, *t1, PieceId::Diameter});
      pieces.push_back({*t1, 1.0, PieceId::Kappa});
      break;
    }
    case BoundCase::MixtureSigmaR:
      require(is_set(prof.sigma) && prof.sigma > 0.0, "MixtureSigmaR profile needs sigma > 0");
      require(is_set(prof.R), "MixtureSigmaR profile needs R");
      pieces.push_back({0.0, 1.0, PieceId::Mixture});
      break;
    case BoundCase::LogLip: {
      require(is_set(prof.L), "LogLip profile needs L");
      require(is_set(prof.kappa) && prof.kappa <= 0.0, "LogLip profile needs kappa <= 0");
      t0 = kappa_root_time(prof.kappa, sched);
      t2 = prof.t2 ? *prof.t2 : 0.5 * (*t0 + 1.0);
      if (!(*t2 > *t0 && *t2 < 1.0)) throw Error(ErrorKind::InvalidParam, "t2 must lie in (t0, 1)");
      pieces.push_back({0.0, *t2, PieceId::LogLip});
      pieces.push_back({*t2, 1.0, PieceId::Kappa});
      break;
    }
  }
  ThetaProfile tp(sched, prof, c, std::move(pieces));
  tp.t0 = t0;
  tp.t1 = t1;
  tp.t2 = t2;
  return tp;
}

LipschitzBound lipschitz_flow_map(const ThetaProfile& theta, double s, double t) {
  const double I = theta.integral(s, t);
  LipschitzBound lb{std::exp(I), I, std::isinf(I) && I > 0};
  return lb;
}

double endpoint_lipschitz(const RegularityProfile& prof, const Schedule& sched, Direction dir,
                          BoundCase c) {
  const SchedulePoint p = sched.eval(0.0);
  const double a2 = p.a * p.a, b2 = p.b * p.b;
  if (c == BoundCase::GaussianKappa) {
    if (dir == Direction::Forward) {
      require(is_set(prof.kappa) && prof.kappa > 0.0, "forward endpoint constant needs kappa > 0");
      return 1.0 / std::sqrt(prof.kappa * a2 + b2);
    }
    require(is_set(prof.beta) && prof.beta > 0.0, "reverse endpoint constant needs beta > 0");
    return std::sqrt(prof.beta * a2 + b2);
  }
  if (c == BoundCase::MixtureSigmaR) {
    require(is_set(prof.sigma) && prof.sigma > 0.0, "mixture endpoint constant needs sigma > 0");
    const double s2 = prof.sigma * prof.sigma;
    if (dir == Direction::Reverse) return std::sqrt(a2 / s2 + b2);
    require(is_set(prof.R), "mixture endpoint constant needs R");
    const double c2 = a2 + s2 * b2;
    return prof.sigma / std::sqrt(c2) * std::exp(a2 / c2 * prof.R * prof.R / (2.0 * s2));
  }
  throw Error(ErrorKind::InvalidParam, "closed-form endpoint constants exist for the Gaussian and mixture cases only");
}

double functional_constant(double c_nu, const Schedule& sched, double t, FunctionalKind) {
  if (!(c_nu >= 0.0)) throw Error(ErrorKind::InvalidParam, "functional constant must be >= 0");
  const SchedulePoint p = sched.eval(t);
  return p.a * p.a + p.b * p.b * c_nu;
}

BtValue log_lipschitz_bt(double L, const Schedule& sched, double t) {
  if (!(L >= 0.0)) throw Error(ErrorKind::InvalidParam, "L must be >= 0");
  const SchedulePoint p = sched.eval(t);
  const double n2 = p.a * p.a + p.b * p.b;
  const double lg = 0.5 * std::log(n2) - std::log(p.b);
  if (!(lg > 0.0)) return {kInf, true};
  const double v = 5.0 * L * p.b * std::pow(n2, -1.5) * (L + 1.0 / std::sqrt(lg));
  return {v, !std::isfinite(v)};
}

double lower_semi_log_convex(double beta, const Schedule& sched, double t) {
  const SchedulePoint p = sched.eval(t);
  return (beta * p.a_da + p.b * p.db) / (beta * p.a * p.a + p.b * p.b);
}

double lower_mixture(double sigma, const Schedule& sched, double t) {
  const SchedulePoint p = sched.eval(t);
  const double s2 = sigma * sigma;
  return (p.a_da + s2 * p.b * p.db) / (p.a * p.a + s2 * p.b * p.b);
}

double lower_bounded_support(const Schedule& sched, double t) {
  const SchedulePoint p = sched.eval(t);
  if (p.a == 0.0) return -kInf;
  return p.a_da / (p.a * p.a);
}

double lower_log_lipschitz(double L, const Schedule& sched, double t) {
  const SchedulePoint p = sched.eval(t);
  const double a2 = p.a * p.a, n2 = a2 + p.b * p.b;
  const double q = p.b / n2;
  const double bt = log_lipschitz_bt(L, sched, t).value;
  return (p.db * a2 / p.b - p.a_da) * (-bt - L * L * q * q) + (p.a_da + p.b * p.db) / n2;
}

}  // namespace gif
