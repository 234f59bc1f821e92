#include "gif/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gif/error.hpp"
#include "gif/experiments.hpp"
#include "gif/metrics.hpp"

namespace gif {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Splits on commas that are not inside brackets, parentheses or quotes.
std::vector<std::string> split_top(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  bool quoted = false;
  for (char c : s) {
    if (c == '"') quoted = !quoted;
    if (!quoted) {
      if (c == '[' || c == '(') ++depth;
      if (c == ']' || c == ')') --depth;
      if (c == ',' && depth == 0) {
        out.push_back(cur);
        cur.clear();
        continue;
      }
    }
    cur += c;
  }
  if (depth != 0 || quoted) throw Error(ErrorKind::Config, "unbalanced brackets or quotes in '" + s + "'");
  out.push_back(cur);
  return out;
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

double to_number(const std::string& s, const std::string& ctx) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw Error(ErrorKind::Config, "expected a number for '" + ctx + "', got '" + t + "'");
  return v;
}

std::string unquote(const std::string& s) {
  const std::string t = trim(s);
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return t.substr(1, t.size() - 2);
  return t;
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, pending;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    pending += strip_comment(line);
    // a list may continue on the next line while brackets are open
    int depth = 0;
    for (char c : pending) depth += (c == '[' || c == '(') - (c == ']' || c == ')');
    if (depth > 0) {
      pending += ' ';
      continue;
    }
    const std::string body = trim(pending);
    pending.clear();
    if (body.empty()) continue;
    for (const auto& part : split_top(body)) {
      const auto eq = part.find('=');
      if (eq == std::string::npos)
        throw Error(ErrorKind::Config, "line " + std::to_string(no) + ": expected key = value");
      const std::string key = trim(part.substr(0, eq));
      if (key.empty()) throw Error(ErrorKind::Config, "line " + std::to_string(no) + ": empty key");
      cfg.kv_[key] = trim(part.substr(eq + 1));
    }
  }
  if (!trim(pending).empty()) throw Error(ErrorKind::Config, "unterminated list at end of config");
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const std::string& Config::raw(const std::string& key) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) throw Error(ErrorKind::MissingField, "config key '" + key + "' is required");
  return it->second;
}

std::string Config::get_string(const std::string& key) const { return unquote(raw(key)); }
std::string Config::get_string(const std::string& key, const std::string& dflt) const {
  return has(key) ? get_string(key) : dflt;
}
double Config::get_double(const std::string& key) const { return to_number(unquote(raw(key)), key); }
double Config::get_double(const std::string& key, double dflt) const {
  return has(key) ? get_double(key) : dflt;
}
long long Config::get_int(const std::string& key, long long dflt) const {
  if (!has(key)) return dflt;
  const std::string t = unquote(raw(key));
  long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw Error(ErrorKind::Config, "expected an integer for '" + key + "'");
  return v;
}
std::uint64_t Config::get_u64(const std::string& key, std::uint64_t dflt) const {
  if (!has(key)) return dflt;
  const std::string t = unquote(raw(key));
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw Error(ErrorKind::Config, "expected an unsigned integer for '" + key + "'");
  return v;
}
bool Config::get_bool(const std::string& key, bool dflt) const {
  if (!has(key)) return dflt;
  const std::string t = unquote(raw(key));
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw Error(ErrorKind::Config, "expected true/false for '" + key + "'");
}
std::vector<double> Config::get_list(const std::string& key) const {
  return parse_number_list(raw(key));
}
Mat Config::get_points(const std::string& key) const { return parse_point_list(raw(key)); }

std::vector<double> parse_number_list(const std::string& text) {
  std::string t = trim(text);
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') throw Error(ErrorKind::Config, "unterminated list '" + t + "'");
    t = t.substr(1, t.size() - 2);
  }
  std::string flat;
  for (char c : t)
    if (c != '(' && c != ')') flat += c;
  std::vector<double> out;
  if (trim(flat).empty()) return out;
  std::stringstream ss(flat);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_number(item, text));
  return out;
}

Mat parse_point_list(const std::string& text) {
  std::string t = trim(text);
  if (t.empty() || t.front() != '[' || t.back() != ']')
    throw Error(ErrorKind::Config, "expected a bracketed list of tuples, got '" + t + "'");
  const auto items = split_top(t.substr(1, t.size() - 2));
  std::vector<std::vector<double>> pts;
  for (const auto& it : items) {
    const std::string s = trim(it);
    if (s.empty()) continue;
    pts.push_back(parse_number_list(s));
  }
  if (pts.empty()) throw Error(ErrorKind::Config, "empty point list");
  const std::size_t d = pts[0].size();
  Mat m(pts.size(), d);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].size() != d) throw Error(ErrorKind::Config, "points in a list must share a dimension");
    for (std::size_t k = 0; k < d; ++k) m(i, k) = pts[i][k];
  }
  return m;
}

Schedule schedule_from_config(const Config& cfg, const std::string& prefix) {
  const std::string fam = cfg.get_string(prefix + "schedule", "linear");
  const Family f = parse_family(fam);
  switch (f) {
    case Family::VE: return Schedule::ve(cfg.get_double(prefix + "sigma_max", 1.0));
    case Family::VP:
      return Schedule::vp(cfg.get_double(prefix + "alpha0", 0.999), cfg.get_double(prefix + "p", 1.0));
    case Family::ShiftedLinear: return Schedule::shifted_linear(cfg.get_double(prefix + "zeta", 0.0));
    default: return make_schedule(f);
  }
}

Target target_from_config(const Config& cfg, const std::string& prefix) {
  const std::string kind = cfg.get_string(prefix + "target");
  if (kind == "paper_gmm8") return paper_gmm8();
  if (kind == "square_gmm4")
    return square_gmm4(cfg.get_double(prefix + "radius", 2.0), cfg.get_double(prefix + "sigma", 0.5));
  if (kind == "gaussian") {
    const auto m = cfg.get_list(prefix + "mean");
    return Target::gaussian(Eigen::Map<const Vec>(m.data(), Eigen::Index(m.size())),
                            cfg.get_double(prefix + "sigma"));
  }
  if (kind == "gmm" || kind == "mixture") {
    const Mat mu = cfg.get_points(prefix + "means");
    Vec w;
    if (cfg.has(prefix + "weights")) {
      const auto wl = cfg.get_list(prefix + "weights");
      w = Eigen::Map<const Vec>(wl.data(), Eigen::Index(wl.size()));
    } else {
      w = Vec::Constant(mu.rows(), 1.0 / double(mu.rows()));
    }
    return Target::mixture(w, mu, cfg.get_double(prefix + "sigma"));
  }
  if (kind == "box") {
    const auto lo = cfg.get_list(prefix + "lower"), hi = cfg.get_list(prefix + "upper");
    return Target::box(Eigen::Map<const Vec>(lo.data(), Eigen::Index(lo.size())),
                       Eigen::Map<const Vec>(hi.data(), Eigen::Index(hi.size())));
  }
  if (kind == "points") {
    return Target::point_cloud(read_cloud_file(cfg.get_string(prefix + "points_file")),
                               cfg.get_double(prefix + "sigma", 0.0));
  }
  throw Error(ErrorKind::Config, "unknown target kind '" + kind + "'");
}

}  // namespace gif
