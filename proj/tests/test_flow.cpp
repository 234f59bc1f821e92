#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <random>
#include <sstream>

#include "gif/error.hpp"
#include "gif/experiments.hpp"
#include "gif/flow.hpp"

using namespace gif;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

std::vector<Schedule> five_families() {
  return {Schedule::linear(), Schedule::follmer(), Schedule::trigonometric(), Schedule::ve(2.0),
          Schedule::vp(0.9)};
}

Target unit_box() {
  return Target::box(v2(-1.0, 0.0), v2(1.0, 1.5));
}

// x_t for N(m, sig^2 I) started at x0 at time s: b_t m + (c_t/c_s)(x0 - b_s m)
Vec gaussian_oracle(const Schedule& sc, const Vec& m, double sig, const Vec& x0, double s, double t) {
  auto c = [&](double u) {
    const SchedulePoint p = sc.eval(u);
    return std::sqrt(p.a * p.a + sig * sig * p.b * p.b);
  };
  const double bs = sc.eval(s).b, bt = sc.eval(t).b;
  return bt * m + (c(t) / c(s)) * (x0 - bs * m);
}

double rel(const Mat& a, const Mat& b) { return (a - b).norm() / (1.0 + b.norm()); }

Mat fd_jacobian(const FlowContext& ctx, double t, const Vec& x, double h) {
  const int d = static_cast<int>(x.size());
  Mat J(d, d);
  for (int j = 0; j < d; ++j) {
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (velocity(ctx, t, xp) - velocity(ctx, t, xm)) / (2 * h);
  }
  return J;
}

}  // namespace

TEST_CASE("Follmer flow of the standard Gaussian is at rest") {
  const FlowContext ctx(Schedule::follmer(), Target::gaussian(Vec::Zero(3), 1.0));
  Vec x(3);
  x << 1.0, -2.0, 0.5;
  for (double t : {0.0, 0.5, 1.0}) {
    CHECK(velocity(ctx, t, x).norm() < 1e-15);
    CHECK(velocity_jacobian(ctx, t, x).norm() < 1e-15);
  }
  for (double t : {0.1, 0.5, 0.9}) CHECK(velocity_dt(ctx, t, x).norm() < 1e-12);  // cancellation of O(1) moment terms
  const Trajectory tr = integrate_augmented(ctx, x, 0.0, 1.0, 64, Direction::Forward, true, true, -1.5);
  CHECK((tr.final_state() - x).norm() < 1e-14);
  CHECK((tr.jac.back() - Mat::Identity(3, 3)).norm() < 1e-14);
  CHECK(tr.logdens.back() == doctest::Approx(-1.5));
}

TEST_CASE("Gaussian velocity closed form") {
  const Vec m = v2(2.0, -1.0);
  const double sig = 0.6;
  for (const Schedule& sc : five_families()) {
    CAPTURE(sc.name());
    const FlowContext ctx(sc, Target::gaussian(m, sig));
    for (double t : {0.0, 0.25, 0.5, 0.9, 1.0}) {
      const SchedulePoint p = sc.eval(t);
      const double c2 = p.a * p.a + sig * sig * p.b * p.b;
      const double dc_over_c = (p.a_da + sig * sig * p.b * p.db) / c2;
      const Vec x = v2(0.3, 1.1);
      const Vec expect = p.db * m + dc_over_c * (x - p.b * m);
      CHECK((velocity(ctx, t, x) - expect).norm() < 1e-12 * (1 + expect.norm()));
      // Jacobian equals the semi-log-convex form with beta = 1/sig^2
      const double beta = 1.0 / (sig * sig);
      const double form = (beta * p.a_da + p.b * p.db) / (beta * p.a * p.a + p.b * p.b);
      CHECK((velocity_jacobian(ctx, t, x) - form * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("three velocity forms agree on GMM-8 at t = 0.5") {
  const FlowContext ctx(Schedule::linear(), paper_gmm8());
  std::mt19937_64 eng(1);
  std::normal_distribution<double> nd(0, 5);
  for (int k = 0; k < 50; ++k) {
    const Vec x = v2(nd(eng), nd(eng));
    const Vec v = velocity(ctx, 0.5, x);
    CHECK((velocity_score_form(ctx, 0.5, x) - v).norm() <= 1e-12 * (1 + v.norm()));
    CHECK((velocity_denoiser_form(ctx, 0.5, x) - v).norm() <= 1e-12 * (1 + v.norm()));
  }
}

TEST_CASE("box velocity is continuous where the form switches") {
  const FlowContext ctx(Schedule::linear(), unit_box());
  const Vec x = v2(0.2, 0.4);
  // snr = 1 at t = 0.5
  const Vec lo = velocity(ctx, 0.5 - 1e-12, x), hi = velocity(ctx, 0.5 + 1e-12, x);
  CHECK((lo - hi).norm() < 1e-9);
  CHECK((velocity_denoiser_form(ctx, 0.5, x) - velocity_score_form(ctx, 0.5, x)).norm() < 1e-12);
}

TEST_CASE("Jacobian and time derivative match finite differences") {
  Mat mu2(2, 1);
  mu2 << -1.0, 1.5;
  const Target gmm1d = Target::mixture(v2(0.3, 0.7), mu2, 0.4);
  const std::vector<Target> targets = {Target::gaussian(v2(1.0, -0.5), 0.8), square_gmm4(2.0, 0.5),
                                       unit_box(), gmm1d};
  for (const Target& tg : targets) {
    for (const Schedule& sc : five_families()) {
      CAPTURE(tg.describe());
      CAPTURE(sc.name());
      const FlowContext ctx(sc, tg);
      std::mt19937_64 eng(42);
      std::uniform_real_distribution<double> ut(0.05, ctx.t_max() - 0.05);
      std::normal_distribution<double> nd(0, 1.5);
      for (int k = 0; k < 20; ++k) {
        const double t = ut(eng);
        Vec x(tg.dim());
        for (int i = 0; i < tg.dim(); ++i) x(i) = nd(eng);
        CAPTURE(t);
        const Mat J = velocity_jacobian(ctx, t, x);
        CHECK(rel(fd_jacobian(ctx, t, x, 1e-5), J) < 1e-5);
        const double h = 1e-5;
        const Vec fd_t = (velocity(ctx, t + h, x) - velocity(ctx, t - h, x)) / (2 * h);
        CHECK(rel(fd_t, velocity_dt(ctx, t, x)) < 1e-5);
      }
    }
  }
}

TEST_CASE("two-component 1D mixture time derivative at (0.5, 0.3)") {
  Mat mu(2, 1);
  mu << -1.0, 2.0;
  const FlowContext ctx(Schedule::linear(), Target::mixture(v2(0.5, 0.5), mu, 0.5));
  Vec x(1);
  x << 0.3;
  const double h = 1e-5;
  const double fd = (velocity(ctx, 0.5 + h, x)(0) - velocity(ctx, 0.5 - h, x)(0)) / (2 * h);
  CHECK(std::abs(fd - velocity_dt(ctx, 0.5, x)(0)) < 1e-5 * (1 + std::abs(fd)));
}

TEST_CASE("RK4 reproduces the affine Gaussian flow") {
  const Vec m = v2(1.0, 2.0);
  const double sig = 0.5;
  for (const Schedule& sc : five_families()) {
    CAPTURE(sc.name());
    const FlowContext ctx(sc, Target::gaussian(m, sig));
    const Vec x0 = v2(-0.7, 0.4);
    for (double t : {0.5, 1.0}) {
      const Vec expect = gaussian_oracle(sc, m, sig, x0, 0.0, t);
      CHECK((flow_map(ctx, x0, 0.0, t, 1024) - expect).norm() <= 1e-8 * expect.norm());
    }
    // Jacobian r I and log-density change -d log r
    const Trajectory tr = integrate_augmented(ctx, x0, 0.0, 0.8, 1024, Direction::Forward, true, true);
    auto c = [&](double u) {
      const SchedulePoint p = sc.eval(u);
      return std::sqrt(p.a * p.a + sig * sig * p.b * p.b);
    };
    const double r = c(0.8) / c(0.0);
    CHECK((tr.jac.back() - r * Mat::Identity(2, 2)).norm() < 1e-8);
    CHECK(std::abs(tr.logdens.back() + 2 * std::log(r)) < 1e-6);
    CHECK(tr.jac.front() == Mat::Identity(2, 2));
  }
}

TEST_CASE("reverse flow inverts the forward flow") {
  const FlowContext ctx(Schedule::trigonometric(), square_gmm4(2.0, 0.5));
  std::mt19937_64 eng(9);
  std::normal_distribution<double> nd(0, 1);
  for (int k = 0; k < 10; ++k) {
    const Vec x = v2(nd(eng), nd(eng));
    const Vec y = flow_map(ctx, x, 0.0, 1.0, 2048);
    const Vec back = flow_map(ctx, y, 0.0, 1.0, 2048, Direction::Reverse);
    CHECK((back - x).norm() <= 1e-4 * (1 + x.norm()));
  }
  // reverse on [s, t] runs the field at 1 - tau
  const Vec z = v2(0.3, -0.2);
  const Vec fwd = flow_map(ctx, z, 0.4, 0.7, 512);
  const Vec rev = flow_map(ctx, fwd, 0.3, 0.6, 512, Direction::Reverse);
  CHECK((rev - z).norm() < 1e-10);
}

TEST_CASE("round trip error drops at fourth order or faster") {
  const FlowContext ctx(Schedule::linear(), square_gmm4(2.0, 0.5));
  const Vec x = v2(0.8, -1.3);
  auto err = [&](int n) {
    return (flow_map(ctx, flow_map(ctx, x, 0.0, 1.0, n, Direction::Reverse), 0.0, 1.0, n) - x).norm();
  };
  const double e1 = err(16), e2 = err(32);
  CHECK(std::log2(e1 / e2) > 3.5);
}

TEST_CASE("variational Jacobian matches finite differences of the flow map") {
  const FlowContext ctx(Schedule::vp(0.95, 2.0), square_gmm4(1.5, 0.6));
  const Vec x = v2(0.4, 0.9);
  const Trajectory tr = integrate_augmented(ctx, x, 0.0, 1.0, 400, Direction::Forward, true, false);
  Mat fd(2, 2);
  const double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    fd.col(j) = (flow_map(ctx, xp, 0.0, 1.0, 400) - flow_map(ctx, xm, 0.0, 1.0, 400)) / (2 * h);
  }
  CHECK(rel(tr.jac.back(), fd) < 1e-4);
  CHECK((tr.final_state() - flow_map(ctx, x, 0.0, 1.0, 400)).norm() < 1e-14);
}

TEST_CASE("push-forward log density on GMM-8") {
  const Target g = paper_gmm8();
  const FlowContext ctx(Schedule::linear(), g);
  std::mt19937_64 eng(2);
  std::normal_distribution<double> nd(0, 1);
  for (int k = 0; k < 5; ++k) {
    const Vec x0 = v2(nd(eng), nd(eng));
    const double l0 = marginal_log_density(g, ctx.sched(), 0.0, x0);
    CHECK(l0 == doctest::Approx(-std::log(2 * M_PI) - 0.5 * x0.squaredNorm()));
    const Trajectory tr = integrate_augmented(ctx, x0, 0.0, 1.0, 2048, Direction::Forward, false, true, l0);
    const double l1 = marginal_log_density(g, ctx.sched(), 1.0, tr.final_state());
    CHECK(std::abs(tr.logdens.back() - l1) < 1e-3);
  }
}

TEST_CASE("batch integration is independent of thread count") {
  const FlowContext ctx(Schedule::linear(), square_gmm4());
  Mat P(37, 2);
  std::mt19937_64 eng(4);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 37; ++i) P.row(i) << nd(eng), nd(eng);
  const Mat a = flow_batch(ctx, P, 0.0, 1.0, 64, Direction::Forward, 1);
  const Mat b = flow_batch(ctx, P, 0.0, 1.0, 64, Direction::Forward, 4);
  CHECK(a == b);
  for (int i = 0; i < 37; i += 9)
    CHECK(a.row(i).transpose() == flow_map(ctx, P.row(i).transpose(), 0.0, 1.0, 64));
}

TEST_CASE("early stopping and time checks") {
  const Target cloud = Target::point_cloud(Mat::Identity(3, 2), 0.0);
  const FlowContext ctx(Schedule::linear(), cloud);
  CHECK(ctx.early_stop() == doctest::Approx(1e-3));
  CHECK_FALSE(ctx.smoothed());
  try {
    velocity(ctx, 0.9995, v2(0, 0));
    FAIL("expected DegenerateTime");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateTime);
  }
  CHECK_THROWS_AS(integrate(ctx, v2(0, 0), 0.0, 1.0, 10), Error);
  CHECK_NOTHROW(integrate(ctx, v2(0, 0), 0.0, ctx.t_max(), 10));
  CHECK_THROWS_AS(FlowContext(Schedule::linear(), cloud, 0.0), Error);
  CHECK_THROWS_AS(FlowContext(Schedule::linear(), cloud, 0.6), Error);
  const FlowContext smooth(Schedule::linear(), square_gmm4());
  CHECK(smooth.early_stop() == 0.0);
  CHECK_NOTHROW(velocity(smooth, 1.0, v2(0.1, 0.2)));
  CHECK_THROWS_AS(integrate(smooth, v2(0, 0), 0.0, 1.0, 0), Error);
}

TEST_CASE("non-finite states report the step") {
  auto blowup = [](double, const Vec& x) -> Vec { return Vec(x.array().square() * 1e3); };
  try {
    rk4(blowup, v2(10.0, 10.0), 0.0, 1.0, 50);
    FAIL("expected NonFiniteState");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFiniteState);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("trajectory CSV layout") {
  const FlowContext ctx(Schedule::linear(), Target::gaussian(v2(0, 0), 1.0));
  const Trajectory tr = integrate_augmented(ctx, v2(1, 0), 0.0, 0.5, 2, Direction::Forward, true, true);
  std::ostringstream os;
  tr.write_csv(os);
  const std::string s = os.str();
  CHECK(s.rfind("t,x1,x2,logdens,j1_1,j1_2,j2_1,j2_2\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);
  CHECK(tr.times.size() == 3);
  CHECK(tr.times.back() == 0.5);
}
