#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gif/schedules.hpp"
#include "gif/targets.hpp"

namespace gif {

struct ParticleCloud {
  Mat points;  // one particle per row
  std::uint64_t seed = 0;
  std::string label;

  Eigen::Index size() const { return points.rows(); }
  int dim() const { return static_cast<int>(points.cols()); }
};

struct FitReport {
  double slope = 0.0, intercept = 0.0, r_squared = 0.0;
  std::size_t n = 0;
};

/// X1 ~ nu. Particle i uses its own stream, so clouds do not depend on
/// iteration order or thread count.
ParticleCloud sample_target(const Target& target, std::size_t n, std::uint64_t seed, int threads = 1);
/// Standard normal cloud scaled by `scale`.
ParticleCloud sample_gaussian(int dim, std::size_t n, std::uint64_t seed, double scale = 1.0, int threads = 1);
/// X0 = a0 Z + b0 X1 with Z independent of X1.
ParticleCloud sample_source(const Target& target, const Schedule& sched, std::size_t n,
                            std::uint64_t seed, int threads = 1);
/// a_t Z + b_t X1 for the same (Z, X1) pairs that sample_source uses.
ParticleCloud sample_interpolant(const Target& target, const Schedule& sched, double t,
                                 std::size_t n, std::uint64_t seed, int threads = 1);

enum class W2Kind { Exact, Sliced };
struct W2Method {
  W2Kind kind = W2Kind::Exact;
  int projections = 128;
  std::uint64_t seed = 0;
  static W2Method exact() { return {}; }
  static W2Method sliced(int k, std::uint64_t seed = 0) { return {W2Kind::Sliced, k, seed}; }
};

constexpr Eigen::Index kExactW2Cap = 4096;

double w2(const Mat& a, const Mat& b, W2Method method = W2Method::exact());
/// Exact W2 together with the optimal matching (row i of a -> row match[i] of b).
double w2_exact_matched(const Mat& a, const Mat& b, std::vector<int>& match);

FitReport linear_fit(const std::vector<double>& xs, const std::vector<double>& ys);

void write_cloud_csv(std::ostream& os, const Mat& pts);
Mat read_cloud_csv(std::istream& is);
Mat read_cloud_file(const std::string& path);

}  // namespace gif
