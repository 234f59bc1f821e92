#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gif/flow.hpp"
#include "gif/schedules.hpp"

namespace gif {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

/// Regularity constants of a target. Unset fields are NaN; D may be +inf.
struct RegularityProfile {
  double kappa = kUnset;  // semi-log-concavity
  double beta = kUnset;   // semi-log-convexity
  double D = std::numeric_limits<double>::infinity();
  double R = kUnset;
  double sigma = kUnset;
  double L = kUnset;  // log-Lipschitz constant of d nu / d gamma
  std::optional<double> t2;  // switch time for the log-Lipschitz profile

  static RegularityProfile from_target(const Target& tg);
};

enum class BoundCase { GaussianKappa, BoundedD, MixtureSigmaR, LogLip };
enum class PieceId { Kappa, Diameter, Mixture, LogLip };

std::string piece_name(PieceId id);
BoundCase parse_bound_case(const std::string& s);

struct ThetaPiece {
  double lo, hi;
  PieceId id;
};

struct LipschitzBound {
  double value;      // exp(log_value), may be +inf
  double log_value;  // integral of theta
  bool diverges;
};

/// Piecewise upper bound t -> theta_t on lambda_max of the velocity Jacobian.
class ThetaProfile {
 public:
  ThetaProfile(Schedule sched, RegularityProfile prof, BoundCase c, std::vector<ThetaPiece> pieces);

  double theta(double t) const;
  PieceId piece_at(double t) const;
  double theta_piece(PieceId id, double t) const;
  // integral of theta over [s,t]; +inf when it diverges
  double integral(double s, double t) const;

  double lo() const { return pieces_.front().lo; }
  double hi() const { return pieces_.back().hi; }
  const std::vector<ThetaPiece>& pieces() const { return pieces_; }
  const Schedule& sched() const { return sched_; }
  const RegularityProfile& profile() const { return prof_; }
  BoundCase bound_case() const { return case_; }

  std::optional<double> t0, t1, t2;

 private:
  double piece_integral(PieceId id, double s, double t) const;
  double antiderivative(PieceId id, double t) const;

  Schedule sched_;
  RegularityProfile prof_;
  BoundCase case_;
  std::vector<ThetaPiece> pieces_;
};

ThetaProfile theta_profile(const RegularityProfile& prof, const Schedule& sched, BoundCase c);

/// t1 with snr(t1) = D^-2 - kappa, by bisection to |dt| <= 1e-12.
double critical_time(const RegularityProfile& prof, const Schedule& sched);
/// Root of kappa + snr(t) = 0 for kappa < 0, else 0.
double kappa_root_time(double kappa, const Schedule& sched);

LipschitzBound lipschitz_flow_map(const ThetaProfile& theta, double s, double t);

double endpoint_lipschitz(const RegularityProfile& prof, const Schedule& sched, Direction dir,
                          BoundCase c);

enum class FunctionalKind { LogSobolev, Poincare };
double functional_constant(double c_nu, const Schedule& sched, double t, FunctionalKind kind);

struct BtValue {
  double value;
  bool blowup;  // log(sqrt(a^2+b^2)/b) <= 0: the formula is unbounded here
};
BtValue log_lipschitz_bt(double L, const Schedule& sched, double t);

// Lower bounds on lambda_min of the velocity Jacobian.
double lower_semi_log_convex(double beta, const Schedule& sched, double t);
double lower_mixture(double sigma, const Schedule& sched, double t);
double lower_bounded_support(const Schedule& sched, double t);
double lower_log_lipschitz(double L, const Schedule& sched, double t);

/// Adaptive Simpson quadrature of f on [a,b] to absolute tolerance tol.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 50);

}  // namespace gif

#include "gif/detail/simpson.hpp"
