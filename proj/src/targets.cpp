#include "gif/targets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "gif/error.hpp"
#include "gif/mixture_kernel.hpp"

namespace gif {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_finite(const Vec& x) {
  if (!x.allFinite()) throw Error(ErrorKind::NonFinite, "query point has non-finite entries");
}

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorKind::OutOfRange, "time outside [0,1]");
}

double pairwise_diameter(const Mat& pts) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    for (Eigen::Index j = i + 1; j < pts.rows(); ++j)
      best = std::max(best, (pts.row(i) - pts.row(j)).squaredNorm());
  return std::sqrt(best);
}

// Ball whose boundary passes through all of `bnd` with centre in their affine hull.
void circumball(const std::vector<Vec>& bnd, Vec& c, double& r2) {
  if (bnd.empty()) {
    r2 = -1.0;
    return;
  }
  const Vec& p0 = bnd[0];
  const int k = static_cast<int>(bnd.size()) - 1;
  if (k == 0) {
    c = p0;
    r2 = 0.0;
    return;
  }
  Mat A(k, k);
  Vec rhs(k);
  std::vector<Vec> q(k);
  for (int i = 0; i < k; ++i) q[i] = bnd[i + 1] - p0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) A(i, j) = 2.0 * q[i].dot(q[j]);
    rhs(i) = q[i].squaredNorm();
  }
  const Vec lam = A.completeOrthogonalDecomposition().solve(rhs);
  c = p0;
  for (int i = 0; i < k; ++i) c += lam(i) * q[i];
  r2 = 0.0;
  for (const auto& p : bnd) r2 = std::max(r2, (p - c).squaredNorm());
}

// Welzl's recursion over prefixes; depth is bounded by the boundary size d+1.
void welzl(const std::vector<Vec>& pts, std::size_t n, std::vector<Vec>& bnd, int dim, Vec& c,
           double& r2) {
  circumball(bnd, c, r2);
  if (static_cast<int>(bnd.size()) == dim + 1) return;
  for (std::size_t i = 0; i < n; ++i) {
    const double tol = 1e-12 * (1.0 + r2);
    if (r2 >= 0.0 && (pts[i] - c).squaredNorm() <= r2 + tol) continue;
    bnd.push_back(pts[i]);
    welzl(pts, i, bnd, dim, c, r2);
    bnd.pop_back();
  }
}

// Gauss-Legendre nodes on [-1,1] by Newton iteration on P_n.
struct GaussLegendre {
  static constexpr int n = 16;
  std::array<double, n> x{}, w{};
  GaussLegendre() {
    for (int i = 0; i < n; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      x[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

const GaussLegendre& gl() {
  static const GaussLegendre rule;
  return rule;
}

// Moments of the density proportional to exp(-(y-m)^2/(2 s^2)) on [lo, hi].
struct Truncated {
  double log_mass;  // log of the integral of exp(-(y-m)^2/(2s^2)) over [lo,hi]
  double mean, var, raw3;
};

Truncated truncated_moments(double m, double s, double lo, double hi) {
  const double ystar = std::clamp(m, lo, hi);
  const double qstar = (ystar - m) * (ystar - m) / (2.0 * s * s);
  const double r = std::sqrt((ystar - m) * (ystar - m) + 80.0 * s * s);
  const double L = std::max(lo, m - r), H = std::min(hi, m + r);
  Truncated out{};
  if (!(H > L)) {
    out.log_mass = -qstar + std::log(std::max(hi - lo, 0.0));
    out.mean = ystar;
    return out;
  }
  constexpr int panels = 8;
  const auto& rule = gl();
  const double pw = (H - L) / panels;
  std::array<double, panels * GaussLegendre::n> ys{}, fs{};
  int k = 0;
  double mass = 0.0, first = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = L + (p + 0.5) * pw;
    for (int i = 0; i < GaussLegendre::n; ++i, ++k) {
      const double y = mid + 0.5 * pw * rule.x[i];
      const double f = 0.5 * pw * rule.w[i] * std::exp(-(y - m) * (y - m) / (2.0 * s * s) + qstar);
      ys[k] = y;
      fs[k] = f;
      mass += f;
      first += f * (y - ystar);
    }
  }
  const double mean = ystar + first / mass;
  double c2 = 0.0, c3 = 0.0;
  for (int i = 0; i < k; ++i) {
    const double d = ys[i] - mean;
    c2 += fs[i] * d * d;
    c3 += fs[i] * d * d * d;
  }
  c2 /= mass;
  c3 /= mass;
  out.log_mass = std::log(mass) - qstar;
  out.mean = mean;
  out.var = c2;
  out.raw3 = c3 + 3.0 * mean * c2 + mean * mean * mean;
  return out;
}

struct BoxPosterior {
  Vec mean, var, raw3;
  double log_density = 0.0;
};

BoxPosterior box_posterior(const Target& tg, const SchedulePoint& p, const Vec& x) {
  const int d = tg.dim();
  BoxPosterior bp;
  bp.mean.resize(d);
  bp.var.resize(d);
  bp.raw3.resize(d);
  if (p.a == 0.0)
    throw Error(ErrorKind::DegenerateTime, "box target has no density at t=1 (use early stopping)");
  double logp = 0.0;
  for (int i = 0; i < d; ++i) {
    const double lo = tg.lower()(i), hi = tg.upper()(i), w = hi - lo;
    if (p.b == 0.0) {
      // posterior equals the prior
      bp.mean(i) = 0.5 * (lo + hi);
      bp.var(i) = w * w / 12.0;
      bp.raw3(i) = (hi * hi * hi * hi - lo * lo * lo * lo) / (4.0 * w);
      logp += -0.5 * kLog2Pi - std::log(p.a) - x(i) * x(i) / (2.0 * p.a * p.a);
      continue;
    }
    const double m = x(i) / p.b, s = p.a / p.b;
    const Truncated tr = truncated_moments(m, s, lo, hi);
    bp.mean(i) = tr.mean;
    bp.var(i) = tr.var;
    bp.raw3(i) = tr.raw3;
    logp += tr.log_mass - std::log(w) - 0.5 * kLog2Pi - std::log(p.a);
  }
  bp.log_density = logp;
  return bp;
}

double mixture_c2(const Target& tg, const SchedulePoint& p) {
  const double c2 = p.a * p.a + tg.sigma() * tg.sigma() * p.b * p.b;
  if (!(c2 > 0.0))
    throw Error(ErrorKind::DegenerateTime,
                "posterior undefined at t=1 for an unsmoothed target (use early stopping)");
  return c2;
}

}  // namespace

Target Target::gaussian(const Vec& mean, double sigma) {
  if (mean.size() < 1) throw Error(ErrorKind::InvalidParam, "target dimension must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error(ErrorKind::InvalidParam, "Gaussian target needs sigma > 0");
  if (!mean.allFinite()) throw Error(ErrorKind::InvalidParam, "Gaussian mean is not finite");
  Target t;
  t.kind_ = TargetKind::Gaussian;
  t.dim_ = static_cast<int>(mean.size());
  t.weights_ = Vec::Ones(1);
  t.means_ = mean.transpose();
  t.sigma_ = sigma;
  t.finish();
  return t;
}

Target Target::mixture(const Vec& weights, const Mat& means, double sigma) {
  if (means.rows() < 1 || means.cols() < 1)
    throw Error(ErrorKind::InvalidParam, "mixture needs at least one mean of dimension >= 1");
  if (weights.size() != means.rows())
    throw Error(ErrorKind::SizeMismatch, "mixture weights and means disagree in count");
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw Error(ErrorKind::InvalidParam, "mixture sigma must be >= 0");
  if (!means.allFinite() || !weights.allFinite())
    throw Error(ErrorKind::InvalidParam, "mixture parameters are not finite");
  if ((weights.array() <= 0.0).any())
    throw Error(ErrorKind::InvalidParam, "mixture weights must be positive");
  const double total = weights.sum();
  if (std::abs(total - 1.0) > 1e-9)
    throw Error(ErrorKind::InvalidParam, "mixture weights must sum to 1");
  Target t;
  t.kind_ = TargetKind::Mixture;
  t.dim_ = static_cast<int>(means.cols());
  t.weights_ = weights / total;
  t.means_ = means;
  t.sigma_ = sigma;
  t.finish();
  return t;
}

Target Target::point_cloud(const Mat& points, double sigma) {
  if (points.rows() < 1) throw Error(ErrorKind::InvalidParam, "point cloud is empty");
  const Vec w = Vec::Constant(points.rows(), 1.0 / double(points.rows()));
  return mixture(w, points, sigma);
}

Target Target::box(const Vec& lower, const Vec& upper) {
  if (lower.size() < 1 || lower.size() != upper.size())
    throw Error(ErrorKind::SizeMismatch, "box bounds must share a dimension >= 1");
  if (!lower.allFinite() || !upper.allFinite() || ((upper - lower).array() <= 0.0).any())
    throw Error(ErrorKind::InvalidParam, "box needs finite bounds with lower < upper");
  Target t;
  t.kind_ = TargetKind::Box;
  t.dim_ = static_cast<int>(lower.size());
  t.weights_ = Vec::Ones(1);
  t.means_ = (0.5 * (lower + upper)).transpose();
  t.lower_ = lower;
  t.upper_ = upper;
  t.finish();
  return t;
}

void Target::finish() {
  log_weights_ = weights_.array().log();
  if (kind_ == TargetKind::Box) {
    center_ = 0.5 * (lower_ + upper_);
    radius_ = 0.5 * (upper_ - lower_).norm();
    diam_d_ = (upper_ - lower_).norm() / std::sqrt(2.0);
    return;
  }
  radius_ = enclosing_ball(means_, center_);
  diam_d_ = pairwise_diameter(means_) / std::sqrt(2.0);
}

std::optional<double> Target::kappa() const {
  if (kind_ == TargetKind::Gaussian) return 1.0 / (sigma_ * sigma_);
  if (kind_ == TargetKind::Box) return 0.0;
  return std::nullopt;
}

std::optional<double> Target::beta() const {
  if (kind_ == TargetKind::Gaussian) return 1.0 / (sigma_ * sigma_);
  if (kind_ == TargetKind::Mixture && sigma_ > 0.0) return 1.0 / (sigma_ * sigma_);
  return std::nullopt;
}

Vec Target::mean() const {
  if (kind_ == TargetKind::Box) return center_;
  return means_.transpose() * weights_;
}

double Target::second_moment() const {
  if (kind_ == TargetKind::Box) {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
      const double l = lower_(i), u = upper_(i);
      s += (l * l + l * u + u * u) / 3.0;
    }
    return s;
  }
  double s = dim_ * sigma_ * sigma_;
  for (int j = 0; j < components(); ++j) s += weights_(j) * means_.row(j).squaredNorm();
  return s;
}

std::string Target::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case TargetKind::Gaussian: os << "gaussian(d=" << dim_ << ", sigma=" << sigma_ << ")"; break;
    case TargetKind::Mixture:
      os << "mixture(K=" << components() << ", d=" << dim_ << ", sigma=" << sigma_ << ")";
      break;
    case TargetKind::Box: os << "box(d=" << dim_ << ")"; break;
  }
  return os.str();
}

double enclosing_ball(const Mat& points, Vec& center) {
  const int d = static_cast<int>(points.cols());
  const auto n = static_cast<std::size_t>(points.rows());
  if (d <= 3) {
    std::vector<Vec> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = points.row(static_cast<Eigen::Index>(i)).transpose();
    // fixed shuffle: expected linear time without giving up determinism
    std::mt19937_64 eng(0x5eed);
    std::shuffle(pts.begin(), pts.end(), eng);
    std::vector<Vec> bnd;
    double r2 = -1.0;
    welzl(pts, n, bnd, d, center, r2);
  } else {
    center = points.colwise().mean().transpose();
  }
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    r = std::max(r, (points.row(static_cast<Eigen::Index>(i)).transpose() - center).norm());
  return r;
}

Posterior posterior(const Target& tg, const Schedule& sched, double t, const Vec& x) {
  check_time(t);
  check_finite(x);
  if (tg.kind() == TargetKind::Box)
    throw Error(ErrorKind::InvalidParam, "box posterior is not a Gaussian mixture; use posterior_moments");
  if (x.size() != tg.dim()) throw Error(ErrorKind::SizeMismatch, "query dimension mismatch");
  const SchedulePoint p = sched.eval(t);
  Posterior post;
  post.t = t;
  post.x = x;
  post.c2 = mixture_c2(tg, p);
  const double s2 = tg.sigma() * tg.sigma();
  post.post_var = s2 * p.a * p.a / post.c2;
  post.resp.resize(tg.components());
  post.weighted_mu.resize(tg.dim());
  post.log_norm = detail::mixture_responsibilities(tg, p.b, post.c2, x.data(), post.resp.data(),
                                                   post.weighted_mu.data());
  post.comp_means.resize(tg.components(), tg.dim());
  for (int j = 0; j < tg.components(); ++j)
    post.comp_means.row(j) =
        (p.a * p.a * tg.means().row(j) + s2 * p.b * x.transpose()) / post.c2;
  return post;
}

Mat responsibility_cov(const Target& tg, const Posterior& post) {
  const int d = tg.dim();
  Mat cov = Mat::Zero(d, d);
  for (int j = 0; j < tg.components(); ++j) {
    const Vec dev = tg.means().row(j).transpose() - post.weighted_mu;
    cov.noalias() += post.resp(j) * dev * dev.transpose();
  }
  // vectorised outer products can differ in the last bit across the diagonal
  return 0.5 * (cov + cov.transpose());
}

PosteriorMoments posterior_moments(const Target& tg, const Schedule& sched, double t,
                                   const Vec& x) {
  check_time(t);
  check_finite(x);
  if (x.size() != tg.dim()) throw Error(ErrorKind::SizeMismatch, "query dimension mismatch");
  const int d = tg.dim();
  PosteriorMoments mo;
  if (tg.kind() == TargetKind::Box) {
    const BoxPosterior bp = box_posterior(tg, sched.eval(t), x);
    mo.mean = bp.mean;
    mo.cov = bp.var.asDiagonal();
    const Vec sq = bp.var.array() + bp.mean.array().square();
    mo.m2 = sq.sum();
    mo.m3.resize(d);
    for (int k = 0; k < d; ++k) mo.m3(k) = bp.raw3(k) + bp.mean(k) * (mo.m2 - sq(k));
    return mo;
  }
  const Posterior post = posterior(tg, sched, t, x);
  const SchedulePoint p = sched.eval(t);
  const double s2 = post.post_var;
  const double ratio = p.a * p.a / post.c2;
  mo.mean = (p.a * p.a * post.weighted_mu + tg.sigma() * tg.sigma() * p.b * x) / post.c2;
  mo.cov = ratio * ratio * responsibility_cov(tg, post);
  mo.cov.diagonal().array() += s2;
  mo.m2 = 0.0;
  mo.m3 = Vec::Zero(d);
  for (int j = 0; j < tg.components(); ++j) {
    const Vec m = post.comp_means.row(j).transpose();
    const double nm = m.squaredNorm();
    mo.m2 += post.resp(j) * (nm + d * s2);
    mo.m3 += post.resp(j) * (nm + (d + 2) * s2) * m;
  }
  return mo;
}

double marginal_log_density(const Target& tg, const Schedule& sched, double t, const Vec& x) {
  check_time(t);
  check_finite(x);
  if (x.size() != tg.dim()) throw Error(ErrorKind::SizeMismatch, "query dimension mismatch");
  if (tg.kind() == TargetKind::Box) return box_posterior(tg, sched.eval(t), x).log_density;
  return posterior(tg, sched, t, x).log_norm;
}

Vec denoiser(const Target& tg, const Schedule& sched, double t, const Vec& x) {
  if (tg.kind() == TargetKind::Box) return posterior_moments(tg, sched, t, x).mean;
  const Posterior post = posterior(tg, sched, t, x);
  const SchedulePoint p = sched.eval(t);
  return (p.a * p.a * post.weighted_mu + tg.sigma() * tg.sigma() * p.b * x) / post.c2;
}

Vec score(const Target& tg, const Schedule& sched, double t, const Vec& x) {
  if (tg.kind() == TargetKind::Box) {
    const SchedulePoint p = sched.eval(t);
    const Vec m1 = posterior_moments(tg, sched, t, x).mean;
    return (p.b * m1 - x) / (p.a * p.a);
  }
  const Posterior post = posterior(tg, sched, t, x);
  const SchedulePoint p = sched.eval(t);
  return -(x - p.b * post.weighted_mu) / post.c2;
}

Mat cond_cov(const Target& tg, const Schedule& sched, double t, const Vec& x) {
  return posterior_moments(tg, sched, t, x).cov;
}

}  // namespace gif
