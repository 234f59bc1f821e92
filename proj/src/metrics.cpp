#include "gif/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "gif/assignment.hpp"
#include "gif/csv.hpp"
#include "gif/error.hpp"
#include "gif/parallel.hpp"
#include "gif/rng.hpp"

namespace gif {

namespace {

void draw_target(const Target& tg, std::uint64_t seed, std::uint64_t i, double* out) {
  const int d = tg.dim();
  if (tg.kind() == TargetKind::Box) {
    RandomStream rs(seed, i, Purpose::TargetOffset);
    for (int k = 0; k < d; ++k)
      out[k] = tg.lower()(k) + (tg.upper()(k) - tg.lower()(k)) * rs.uniform();
    return;
  }
  int comp = 0;
  if (tg.components() > 1) {
    RandomStream pick(seed, i, Purpose::TargetComponent);
    const double u = pick.uniform();
    double acc = 0.0;
    comp = tg.components() - 1;
    for (int j = 0; j < tg.components(); ++j) {
      acc += tg.weights()(j);
      if (u < acc) {
        comp = j;
        break;
      }
    }
  }
  RandomStream rs(seed, i, Purpose::TargetOffset);
  for (int k = 0; k < d; ++k) out[k] = tg.means()(comp, k) + tg.sigma() * rs.normal();
}

void draw_normal(int d, std::uint64_t seed, std::uint64_t i, double* out) {
  RandomStream rs(seed, i, Purpose::SourceNoise);
  for (int k = 0; k < d; ++k) out[k] = rs.normal();
}

void check_n(std::size_t n) {
  if (n < 1) throw Error(ErrorKind::InvalidParam, "cloud size must be >= 1");
}

// Exact W2^2 between two 1D empirical measures with uniform weights.
double w2sq_1d(std::vector<double>& x, std::vector<double>& y) {
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = double(x.size()), ny = double(y.size());
  if (x.size() == y.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return s / nx;
  }
  // walk the merged quantile breakpoints
  std::size_t i = 0, j = 0;
  double fx = 1.0 / nx, fy = 1.0 / ny, s = 0.0;
  while (i < x.size() && j < y.size()) {
    const double m = std::min(fx, fy);
    s += m * (x[i] - y[j]) * (x[i] - y[j]);
    fx -= m;
    fy -= m;
    if (fx <= 1e-15) {
      ++i;
      fx = 1.0 / nx;
    }
    if (fy <= 1e-15) {
      ++j;
      fy = 1.0 / ny;
    }
  }
  return s;
}

}  // namespace

ParticleCloud sample_target(const Target& tg, std::size_t n, std::uint64_t seed, int threads) {
  check_n(n);
  ParticleCloud c;
  c.seed = seed;
  c.label = "target";
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pts(n, tg.dim());
  parallel_for(n, threads, [&](std::size_t i) { draw_target(tg, seed, i, pts.row(i).data()); });
  c.points = pts;
  return c;
}

ParticleCloud sample_gaussian(int dim, std::size_t n, std::uint64_t seed, double scale, int threads) {
  check_n(n);
  if (dim < 1) throw Error(ErrorKind::InvalidParam, "dimension must be >= 1");
  ParticleCloud c;
  c.seed = seed;
  c.label = "gaussian";
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pts(n, dim);
  parallel_for(n, threads, [&](std::size_t i) { draw_normal(dim, seed, i, pts.row(i).data()); });
  c.points = scale * pts;
  return c;
}

ParticleCloud sample_interpolant(const Target& tg, const Schedule& sched, double t, std::size_t n,
                                 std::uint64_t seed, int threads) {
  check_n(n);
  const SchedulePoint p = sched.eval(t);
  const int d = tg.dim();
  ParticleCloud c;
  c.seed = seed;
  c.label = "interpolant";
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pts(n, d);
  parallel_for(n, threads, [&](std::size_t i) {
    std::vector<double> z(d), x1(d);
    draw_normal(d, seed, i, z.data());
    draw_target(tg, seed, i, x1.data());
    for (int k = 0; k < d; ++k) pts(i, k) = p.a * z[k] + p.b * x1[k];
  });
  c.points = pts;
  return c;
}

ParticleCloud sample_source(const Target& tg, const Schedule& sched, std::size_t n,
                            std::uint64_t seed, int threads) {
  ParticleCloud c = sample_interpolant(tg, sched, 0.0, n, seed, threads);
  c.label = "source";
  return c;
}

double w2_exact_matched(const Mat& a, const Mat& b, std::vector<int>& match) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorKind::SizeMismatch, "exact W2 needs clouds of equal size and dimension");
  if (a.rows() > kExactW2Cap)
    throw Error(ErrorKind::TooLarge, "exact W2 is capped at 4096 points");
  if (a.rows() < 1) throw Error(ErrorKind::InvalidParam, "empty cloud");
  const Eigen::Index n = a.rows();
  Mat C(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) C(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  match = solve_assignment(C);
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) s += C(i, match[i]);
  return std::sqrt(s / double(n));
}

double w2(const Mat& a, const Mat& b, W2Method m) {
  if (m.kind == W2Kind::Exact) {
    std::vector<int> match;
    return w2_exact_matched(a, b, match);
  }
  if (a.cols() != b.cols()) throw Error(ErrorKind::SizeMismatch, "clouds differ in dimension");
  if (m.projections < 1) throw Error(ErrorKind::InvalidParam, "sliced W2 needs K >= 1");
  if (a.rows() < 1 || b.rows() < 1) throw Error(ErrorKind::InvalidParam, "empty cloud");
  const int d = static_cast<int>(a.cols());
  double acc = 0.0;
  for (int k = 0; k < m.projections; ++k) {
    RandomStream rs(m.seed, static_cast<std::uint64_t>(k), Purpose::Projection);
    Vec dir(d);
    do {
      for (int i = 0; i < d; ++i) dir(i) = rs.normal();
    } while (dir.norm() == 0.0);
    dir.normalize();
    const Vec pa = a * dir, pb = b * dir;
    std::vector<double> xa(pa.data(), pa.data() + pa.size()), xb(pb.data(), pb.data() + pb.size());
    acc += w2sq_1d(xa, xb);
  }
  return std::sqrt(acc / m.projections);
}

FitReport linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw Error(ErrorKind::SizeMismatch, "fit inputs differ in length");
  const std::size_t n = xs.size();
  if (n < 2) throw Error(ErrorKind::DegenerateInput, "fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::DegenerateInput, "fit abscissae are all equal");
  FitReport f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy > 0.0) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ys[i] - (f.intercept + f.slope * xs[i]);
      ssr += r * r;
    }
    f.r_squared = std::clamp(1.0 - ssr / syy, 0.0, 1.0);
  } else {
    f.slope = 0.0;
    f.r_squared = 0.0;
  }
  return f;
}

void write_cloud_csv(std::ostream& os, const Mat& pts) {
  CsvWriter w(os);
  std::vector<std::string> head;
  for (Eigen::Index k = 0; k < pts.cols(); ++k) head.push_back("x" + std::to_string(k + 1));
  w.header(head);
  std::vector<double> row(pts.cols());
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (Eigen::Index k = 0; k < pts.cols(); ++k) row[k] = pts(i, k);
    w.row(row);
  }
}

namespace {
Mat table_to_cloud(const CsvTable& t) {
  if (t.rows.empty()) throw Error(ErrorKind::Config, "cloud CSV has no rows");
  Mat m(t.rows.size(), t.header.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t k = 0; k < t.header.size(); ++k) m(i, k) = t.rows[i][k];
  if (!m.allFinite()) throw Error(ErrorKind::Config, "cloud CSV has non-finite entries");
  return m;
}
}  // namespace

Mat read_cloud_csv(std::istream& is) { return table_to_cloud(read_csv(is)); }
Mat read_cloud_file(const std::string& path) { return table_to_cloud(read_csv_file(path)); }

}  // namespace gif
