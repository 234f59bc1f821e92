#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gif/schedules.hpp"
#include "gif/targets.hpp"

namespace gif {

/// Flat key = value configuration. Several pairs may share a line when
/// separated by top-level commas; lists use brackets, e.g.
///   target = "gmm", sigma = 0.5
///   means = [(2,0), (-2,0)]
/// '#' starts a comment outside of quotes.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  void set(const std::string& key, const std::string& raw) { kv_[key] = raw; }
  const std::map<std::string, std::string>& entries() const { return kv_; }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double dflt) const;
  long long get_int(const std::string& key, long long dflt) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;
  std::vector<double> get_list(const std::string& key) const;        // [1, 2, 3]
  Mat get_points(const std::string& key) const;                      // [(1,2), (3,4)]

 private:
  const std::string& raw(const std::string& key) const;
  std::map<std::string, std::string> kv_;
};

/// Numbers in a list or tuple literal; parentheses are ignored.
std::vector<double> parse_number_list(const std::string& text);
/// Tuples "(a,b),(c,d)" as matrix rows.
Mat parse_point_list(const std::string& text);

/// Builds a schedule from `<prefix>schedule` and its parameter keys.
Schedule schedule_from_config(const Config& cfg, const std::string& prefix = "");
/// Builds a target from `<prefix>target` ("gaussian", "gmm", "paper_gmm8",
/// "square_gmm4", "box", "points").
Target target_from_config(const Config& cfg, const std::string& prefix = "");

}  // namespace gif
