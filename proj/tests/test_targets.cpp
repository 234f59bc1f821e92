#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "gif/error.hpp"
#include "gif/experiments.hpp"
#include "gif/targets.hpp"

using namespace gif;

namespace {

// composite Simpson on [lo, hi] with n (even) panels
double simpson(const std::function<double(double)>& f, double lo, double hi, int n = 20000) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

double normal_pdf(double x, double m, double s) {
  return std::exp(-0.5 * (x - m) * (x - m) / (s * s)) / (s * std::sqrt(2 * std::numbers::pi));
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Target two_mode_1d(double mu, double sigma) {
  Mat m(2, 1);
  m << -mu, mu;
  return Target::mixture(Vec::Constant(2, 0.5), m, sigma);
}

double min_eig(const Mat& m) { return Eigen::SelfAdjointEigenSolver<Mat>(m).eigenvalues().minCoeff(); }
double max_eig(const Mat& m) { return Eigen::SelfAdjointEigenSolver<Mat>(m).eigenvalues().maxCoeff(); }

}  // namespace

TEST_CASE("score of the standard Gaussian under Follmer is -x") {
  const Target g = Target::gaussian(Vec::Zero(3), 1.0);
  const Schedule f = Schedule::follmer();
  Vec x(3);
  x << 0.4, -1.2, 2.0;
  for (double t : {0.0, 0.3, 0.8, 1.0}) {
    const Vec s = score(g, f, t, x);
    CHECK((s + x).norm() == doctest::Approx(0.0).epsilon(1e-14).scale(1));
  }
}

TEST_CASE("single Gaussian score and covariance") {
  const Vec m = v2(1.5, -0.5);
  const double sig = 0.7;
  const Target g = Target::gaussian(m, sig);
  const Schedule s = Schedule::trigonometric();
  const Vec x = v2(0.3, 0.9);
  for (double t : {0.1, 0.5, 0.9}) {
    const SchedulePoint p = s.eval(t);
    const double c2 = p.a * p.a + sig * sig * p.b * p.b;
    const Vec expect = -(x - p.b * m) / c2;
    CHECK((score(g, s, t, x) - expect).norm() < 1e-13);
    const Mat C = cond_cov(g, s, t, x);
    const double v = sig * sig * p.a * p.a / c2;
    CHECK((C - v * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("score matches finite differences of the log density on GMM-8") {
  const Target g = paper_gmm8();
  const Schedule s = Schedule::linear();
  std::mt19937_64 eng(3);
  std::normal_distribution<double> nd(0.0, 6.0);
  for (int k = 0; k < 20; ++k) {
    const Vec x = v2(nd(eng), nd(eng));
    const Vec sc = score(g, s, 0.5, x);
    const double h = 1e-5;
    for (int i = 0; i < 2; ++i) {
      Vec xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fd = (marginal_log_density(g, s, 0.5, xp) - marginal_log_density(g, s, 0.5, xm)) / (2 * h);
      CHECK(std::abs(fd - sc(i)) < 1e-6 * (1 + std::abs(sc(i))));
    }
  }
}

TEST_CASE("Tweedie consistency between score and denoiser") {
  const Target g = square_gmm4(2.0, 0.5);
  const Schedule s = Schedule::vp(0.9, 2.0);
  std::mt19937_64 eng(5);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (double t : {0.05, 0.3, 0.6, 0.9}) {
    const SchedulePoint p = s.eval(t);
    for (int k = 0; k < 25; ++k) {
      const Vec x = v2(nd(eng), nd(eng));
      const Vec tw = (p.b / (p.a * p.a)) * denoiser(g, s, t, x) - x / (p.a * p.a);
      CHECK((score(g, s, t, x) - tw).norm() <= 1e-10 * (1 + x.norm()));
    }
  }
}

TEST_CASE("conditional covariance is PSD and inside the mixture envelope") {
  const Target g = paper_gmm8();
  const double R = g.radius(), sig = g.sigma();
  CHECK(R == doctest::Approx(12.0).epsilon(1e-12));
  for (const Schedule& s : {Schedule::linear(), Schedule::follmer(), Schedule::trigonometric()}) {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> ut(0.02, 0.98);
    std::normal_distribution<double> nd(0.0, 8.0);
    for (int k = 0; k < 200; ++k) {
      const double t = ut(eng);
      const Vec x = v2(nd(eng), nd(eng));
      const SchedulePoint p = s.eval(t);
      const double c2 = p.a * p.a + sig * sig * p.b * p.b;
      const double s2 = sig * sig * p.a * p.a / c2, ratio = p.a * p.a / c2;
      const Mat C = cond_cov(g, s, t, x);
      CHECK((C - C.transpose()).norm() == 0.0);
      const double lo = min_eig(C), hi = max_eig(C);
      CHECK(lo >= -1e-10);
      CHECK(lo >= s2 - 1e-12 * (1 + s2));
      CHECK(hi <= ratio * ratio * R * R + s2 + 1e-10 * (1 + R * R));
    }
  }
}

TEST_CASE("two-point mixture covariance against 1D quadrature") {
  const double mu = 1.5, sig = 0.05;
  const Target g = two_mode_1d(mu, sig);
  const Schedule s = Schedule::linear();
  const double t = 0.5, x = 0.0;
  const SchedulePoint p = s.eval(t);
  auto prior = [&](double y) { return 0.5 * normal_pdf(y, -mu, sig) + 0.5 * normal_pdf(y, mu, sig); };
  auto lik = [&](double y) { return normal_pdf(x, p.b * y, p.a); };
  auto w = [&](double y) { return prior(y) * lik(y); };
  const double Z = simpson(w, -3, 3, 200000);
  const double m1 = simpson([&](double y) { return y * w(y); }, -3, 3, 200000) / Z;
  const double m2 = simpson([&](double y) { return y * y * w(y); }, -3, 3, 200000) / Z;
  Vec xv(1);
  xv << x;
  const Mat C = cond_cov(g, s, t, xv);
  CHECK(std::abs(C(0, 0) - (m2 - m1 * m1)) < 1e-6);
  // off-centre query, checks the mean as well
  xv << 0.4;
  auto lik2 = [&](double y) { return normal_pdf(0.4, p.b * y, p.a); };
  auto w2f = [&](double y) { return prior(y) * lik2(y); };
  const double Z2 = simpson(w2f, -3, 3, 200000);
  const double mean2 = simpson([&](double y) { return y * w2f(y); }, -3, 3, 200000) / Z2;
  CHECK(std::abs(denoiser(g, s, t, xv)(0) - mean2) < 1e-8);
  CHECK(std::abs(marginal_log_density(g, s, t, xv) - std::log(Z2)) < 1e-8);
}

TEST_CASE("posterior moments: third moment of a Gaussian mixture") {
  const Target g = two_mode_1d(1.0, 0.4);
  const Schedule s = Schedule::trigonometric();
  const double t = 0.4;
  const SchedulePoint p = s.eval(t);
  Vec x(1);
  x << 0.3;
  auto prior = [&](double y) { return 0.5 * normal_pdf(y, -1.0, 0.4) + 0.5 * normal_pdf(y, 1.0, 0.4); };
  auto w = [&](double y) { return prior(y) * normal_pdf(0.3, p.b * y, p.a); };
  const double Z = simpson(w, -6, 6);
  const double m3 = simpson([&](double y) { return y * y * y * w(y); }, -6, 6) / Z;
  const double m2 = simpson([&](double y) { return y * y * w(y); }, -6, 6) / Z;
  const PosteriorMoments pm = posterior_moments(g, s, t, x);
  CHECK(std::abs(pm.m3(0) - m3) < 1e-8);
  CHECK(std::abs(pm.m2 - m2) < 1e-8);
}

TEST_CASE("box posterior against quadrature") {
  Vec lo(2), hi(2);
  lo << -1.0, 0.0;
  hi << 0.5, 2.0;
  const Target box = Target::box(lo, hi);
  const Schedule s = Schedule::linear();
  for (double t : {0.2, 0.5, 0.8, 0.99}) {
    const SchedulePoint p = s.eval(t);
    const Vec x = v2(0.1, 1.9 * t);
    const PosteriorMoments pm = posterior_moments(box, s, t, x);
    double logp = 0.0;
    for (int i = 0; i < 2; ++i) {
      auto w = [&](double y) { return normal_pdf(x(i), p.b * y, p.a) / (hi(i) - lo(i)); };
      const double Z = simpson(w, lo(i), hi(i));
      const double m1 = simpson([&](double y) { return y * w(y); }, lo(i), hi(i)) / Z;
      const double m2 = simpson([&](double y) { return y * y * w(y); }, lo(i), hi(i)) / Z;
      CAPTURE(t);
      CHECK(std::abs(pm.mean(i) - m1) < 1e-9);
      CHECK(std::abs(pm.cov(i, i) - (m2 - m1 * m1)) < 1e-9);
      logp += std::log(Z);
    }
    CHECK(pm.cov(0, 1) == 0.0);
    CHECK(std::abs(marginal_log_density(box, s, t, x) - logp) < 1e-8);
  }
  const Vec x0 = v2(0.3, -0.2);
  CHECK((denoiser(box, s, 0.0, x0) - v2(-0.25, 1.0)).norm() < 1e-15);
  CHECK_THROWS_AS(posterior(box, s, 0.5, x0), Error);
  try {
    denoiser(box, s, 1.0, x0);
    FAIL("expected DegenerateTime");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateTime);
  }
}

TEST_CASE("1D marginal densities integrate to one") {
  const Target g = two_mode_1d(2.0, 0.3);
  Vec l(1), u(1);
  l << -1.0;
  u << 3.0;
  const Target box = Target::box(l, u);
  for (const Schedule& s : {Schedule::linear(), Schedule::ve(1.5)}) {
    for (double t : {0.0, 0.4, 0.9}) {
      for (const Target* tg : {&g, &box}) {
        auto f = [&](double x) {
          Vec v(1);
          v << x;
          return std::exp(marginal_log_density(*tg, s, t, v));
        };
        CAPTURE(t);
        CHECK(std::abs(simpson(f, -20, 20, 40000) - 1.0) < 1e-6);
      }
    }
  }
}

TEST_CASE("posterior weights survive far-apart modes") {
  const Target g = paper_gmm8();
  const Schedule s = Schedule::linear();
  const Posterior post = posterior(g, s, 0.999, v2(0.0, 11.98));
  CHECK(post.resp.allFinite());
  CHECK(post.resp.sum() == doctest::Approx(1.0));
  CHECK(post.resp(0) == doctest::Approx(1.0));
  CHECK(std::isfinite(post.log_norm));
}

TEST_CASE("target construction and constants") {
  const Target g = paper_gmm8();
  CHECK(g.components() == 8);
  CHECK(g.sigma() == 0.03);
  for (int j = 0; j < 8; ++j) {
    CHECK(g.means().row(j).norm() == doctest::Approx(12.0));
    CHECK(g.weights()(j) == doctest::Approx(0.125));
  }
  CHECK(g.diameter_d() == doctest::Approx(24.0 / std::sqrt(2.0)));
  CHECK(g.beta().value() == doctest::Approx(1.0 / 0.0009));
  CHECK_FALSE(g.kappa().has_value());
  const Target sq = square_gmm4(2.0, 0.5);
  CHECK(sq.second_moment() == doctest::Approx(4.0 + 2 * 0.25));
  CHECK(sq.mean().norm() < 1e-15);
  CHECK(Target::gaussian(v2(1, 2), 0.5).kappa().value() == doctest::Approx(4.0));

  CHECK_THROWS_AS(Target::mixture(v2(0.5, 0.6), Mat::Zero(2, 2), 0.1), Error);
  CHECK_THROWS_AS(Target::mixture(v2(1.0, 0.0), Mat::Zero(2, 2), 0.1), Error);
  CHECK_THROWS_AS(Target::mixture(v2(0.5, 0.5), Mat::Zero(2, 2), -0.1), Error);
  CHECK_THROWS_AS(Target::mixture(v2(0.5, 0.5), Mat::Zero(3, 2), 0.1), Error);
  CHECK_THROWS_AS(Target::gaussian(v2(0, 0), 0.0), Error);
  CHECK_THROWS_AS(Target::box(v2(0, 1), v2(1, 1)), Error);
  const Target cloud = Target::point_cloud(Mat::Identity(4, 2), 0.0);
  CHECK(cloud.weights()(3) == doctest::Approx(0.25));
  CHECK_THROWS_AS(posterior(cloud, Schedule::linear(), 1.0, v2(0, 0)), Error);
}

TEST_CASE("enclosing ball is minimal in 2D and a valid cover in higher dimension") {
  std::mt19937_64 eng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Mat P(9, 2);
    for (int i = 0; i < 9; ++i) P.row(i) << nd(eng), nd(eng);
    Vec c;
    const double R = enclosing_ball(P, c);
    for (int i = 0; i < 9; ++i) CHECK((P.row(i).transpose() - c).norm() <= R + 1e-12);
    // brute force: the minimal circle is defined by 2 or 3 of the points
    double best = INFINITY;
    auto try_center = [&](const Vec& cc) {
      double r = 0;
      for (int i = 0; i < 9; ++i) r = std::max(r, (P.row(i).transpose() - cc).norm());
      best = std::min(best, r);
    };
    for (int i = 0; i < 9; ++i)
      for (int j = i + 1; j < 9; ++j) {
        try_center(0.5 * (P.row(i) + P.row(j)).transpose());
        for (int k = j + 1; k < 9; ++k) {
          const Vec A = P.row(i).transpose(), B = P.row(j).transpose(), C = P.row(k).transpose();
          const double d = 2 * (A(0) * (B(1) - C(1)) + B(0) * (C(1) - A(1)) + C(0) * (A(1) - B(1)));
          if (std::abs(d) < 1e-12) continue;
          Vec cc(2);
          cc(0) = (A.squaredNorm() * (B(1) - C(1)) + B.squaredNorm() * (C(1) - A(1)) + C.squaredNorm() * (A(1) - B(1))) / d;
          cc(1) = (A.squaredNorm() * (C(0) - B(0)) + B.squaredNorm() * (A(0) - C(0)) + C.squaredNorm() * (B(0) - A(0))) / d;
          try_center(cc);
        }
      }
    CHECK(R == doctest::Approx(best).epsilon(1e-10));
  }
  Mat Q = Mat::Identity(5, 5);
  Vec c;
  const double R = enclosing_ball(Q, c);
  for (int i = 0; i < 5; ++i) CHECK((Q.row(i).transpose() - c).norm() <= R + 1e-12);
}
