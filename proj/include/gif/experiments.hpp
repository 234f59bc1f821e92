#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gif/bounds.hpp"
#include "gif/flow.hpp"
#include "gif/metrics.hpp"

namespace gif {

/// How the Bernoulli +-eps velocity noise varies along a run.
///  Frozen   - one sign vector per run, so v~ = v + delta is a C^1 field
///  PerStage - fresh signs per particle at every RK4 stage evaluation
enum class NoiseModel { Frozen, PerStage };
NoiseModel parse_noise_model(const std::string& s);
std::string noise_model_name(NoiseModel m);

struct ExperimentConfig {
  std::string name;
  std::optional<Target> target;
  std::optional<Target> target2;  // second target for the cycle experiment
  Schedule sched = Schedule::linear();
  std::size_t n = 2048;
  int steps = 256;
  std::uint64_t seed = 1;
  int threads = 1;
  std::optional<double> early_stop;
  std::vector<double> grid;  // zeta, eps or step-count grid depending on the run

  NoiseModel noise = NoiseModel::Frozen;
  bool fresh_reference = true;  // also report W2 against fresh target samples

  // jacobian envelope
  int t_points = 20;
  int x_points = 200;
  std::optional<RegularityProfile> profile;
  std::optional<BoundCase> bound_case;

  // Alekseev-Groebner check
  Vec delta;
  Vec x0;
  std::optional<double> t_end;
};

struct ExperimentResult {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::optional<FitReport> fit;
  std::string fit_x, fit_y;
  std::vector<std::pair<std::string, std::string>> meta;
  double runtime_s = 0.0;

  std::vector<double> column(const std::string& col) const;
  std::string meta_value(const std::string& key) const;
  double meta_number(const std::string& key) const;
};

/// Eight equal-weight modes on the circle of radius 12 with sigma = 0.03.
Target paper_gmm8();
/// Four modes at (+-r,0), (0,+-r) with shared sigma; cheap reversible test case.
Target square_gmm4(double r = 2.0, double sigma = 0.5);

std::vector<double> linspace(double lo, double hi, int n);

ExperimentResult run_source_perturbation(const ExperimentConfig& cfg);
ExperimentResult run_velocity_perturbation(const ExperimentConfig& cfg);
ExperimentResult run_autoencode(const ExperimentConfig& cfg);
ExperimentResult run_cycle(const ExperimentConfig& cfg);
ExperimentResult run_jacobian_envelope(const ExperimentConfig& cfg);
ExperimentResult run_ag_check(const ExperimentConfig& cfg);

/// Writes <dir>/<name>.csv, <name>.fit.csv when a fit exists, and an
/// optional <name>.svg scatter plot.
void write_result(const ExperimentResult& res, const std::string& dir, bool svg,
                  bool timestamp);

}  // namespace gif
