#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "gif/schedules.hpp"

namespace gif {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class TargetKind { Gaussian, Mixture, Box };

/// Analytic target measure. Gaussian and Mixture share one representation:
/// rho = sum_j w_j delta(mu_j) smoothed by N(0, sigma^2 I). A mixture with
/// sigma = 0 is a bare point cloud and only usable with early stopping.
/// Box is the uniform law on an axis-aligned box (kappa = 0, bounded support).
class Target {
 public:
  static Target gaussian(const Vec& mean, double sigma);
  static Target mixture(const Vec& weights, const Mat& means, double sigma);
  static Target point_cloud(const Mat& points, double sigma);
  static Target box(const Vec& lower, const Vec& upper);

  TargetKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int components() const { return static_cast<int>(weights_.size()); }
  const Vec& weights() const { return weights_; }
  const Vec& log_weights() const { return log_weights_; }
  const Mat& means() const { return means_; }  // one mean per row
  double sigma() const { return sigma_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  // Radius of a ball holding the mixing measure (or the box) and its centre.
  double radius() const { return radius_; }
  const Vec& ball_center() const { return center_; }
  // (1/sqrt 2) * diameter of the mean set (or of the box).
  double diameter_d() const { return diam_d_; }
  // Semi-log-concavity / convexity; only known in closed form for some kinds.
  std::optional<double> kappa() const;
  std::optional<double> beta() const;

  Vec mean() const;
  double second_moment() const;  // E||X1||^2

  std::string describe() const;

 private:
  Target() = default;
  void finish();

  TargetKind kind_ = TargetKind::Mixture;
  int dim_ = 0;
  Vec weights_;
  Mat means_;
  Vec log_weights_;
  double sigma_ = 0.0;
  Vec lower_, upper_;
  double radius_ = 0.0, diam_d_ = 0.0;
  Vec center_;
};

/// Conditional law of X1 given X_t = x for a mixture target: a mixture of
/// N(m_j, post_var I) with weights resp.
struct Posterior {
  double t = 0.0;
  Vec x;
  Vec resp;
  Mat comp_means;
  double post_var = 0.0;
  double c2 = 0.0;      // a^2 + sigma^2 b^2
  double log_norm = 0.0; // log sum_j w_j N(x; b mu_j, c2 I)
  Vec weighted_mu;       // sum_j resp_j mu_j
};

/// First three moments of X1 | X_t = x.
struct PosteriorMoments {
  Vec mean;      // M1
  Mat cov;       // central second moment
  double m2 = 0; // E ||Y||^2
  Vec m3;        // E ||Y||^2 Y
};

Posterior posterior(const Target& target, const Schedule& sched, double t, const Vec& x);
PosteriorMoments posterior_moments(const Target& target, const Schedule& sched, double t,
                                   const Vec& x);
double marginal_log_density(const Target& target, const Schedule& sched, double t,
                            const Vec& x);
Vec denoiser(const Target& target, const Schedule& sched, double t, const Vec& x);
Vec score(const Target& target, const Schedule& sched, double t, const Vec& x);
Mat cond_cov(const Target& target, const Schedule& sched, double t, const Vec& x);

/// resp-weighted covariance of the component means, sum_j pi_j (mu_j - mubar)(.)^T
Mat responsibility_cov(const Target& target, const Posterior& post);

/// Smallest enclosing ball of the rows of `points` (exact for d <= 3,
/// centroid-based upper bound otherwise). Returns the radius; centre in `center`.
double enclosing_ball(const Mat& points, Vec& center);

}  // namespace gif
