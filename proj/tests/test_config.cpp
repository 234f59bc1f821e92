#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gif/config.hpp"
#include "gif/csv.hpp"
#include "gif/error.hpp"

using namespace gif;

TEST_CASE("flat key = value with several pairs per line") {
  const Config c = Config::parse(
      "# mixture used in the smoke tests\n"
      "target = \"gmm\", sigma = 0.03\n"
      "weights = [0.25, 0.75]   # trailing comment\n"
      "means = [(1, 2), (-1.5, 0)]\n"
      "steps = 128, seed = 42, fresh = true\n");
  CHECK(c.get_string("target") == "gmm");
  CHECK(c.get_double("sigma") == 0.03);
  CHECK(c.get_list("weights") == std::vector<double>{0.25, 0.75});
  const Mat m = c.get_points("means");
  CHECK(m.rows() == 2);
  CHECK(m(1, 0) == -1.5);
  CHECK(c.get_int("steps", 0) == 128);
  CHECK(c.get_u64("seed", 0) == 42);
  CHECK(c.get_bool("fresh", false));
  CHECK(c.get_double("missing", 7.0) == 7.0);
  CHECK(c.get_string("missing", "x") == "x");
}

TEST_CASE("lists may span lines and quotes protect '#' and ','") {
  const Config c = Config::parse("means = [(0, 0),\n  (1, 1),\n  (2, 2)]\nlabel = \"a, b # c\"\n");
  CHECK(c.get_points("means").rows() == 3);
  CHECK(c.get_string("label") == "a, b # c");
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(Config::parse("just words\n"), Error);
  CHECK_THROWS_AS(Config::parse("= 3\n"), Error);
  CHECK_THROWS_AS(Config::parse("means = [(1,2)\n"), Error);
  const Config c = Config::parse("a = abc, n = 1.5\n");
  try {
    c.get_double("a");
    FAIL("expected Config");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  try {
    c.get_double("zzz");
    FAIL("expected MissingField");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingField);
  }
  CHECK_THROWS_AS(c.get_int("n", 0), Error);
  CHECK_THROWS_AS(parse_point_list("[(1,2),(3)]"), Error);
  CHECK_THROWS_AS(Config::load("/nonexistent/x.cfg"), Error);
}

TEST_CASE("targets from config") {
  const Target g = target_from_config(Config::parse("target = gaussian, mean = [1, 2], sigma = 0.5"));
  CHECK(g.kind() == TargetKind::Gaussian);
  CHECK(g.means()(0, 1) == 2.0);
  const Target m = target_from_config(Config::parse("target = gmm, means = [(1,0),(-1,0)], sigma = 0.2"));
  CHECK(m.components() == 2);
  CHECK(m.weights()(0) == 0.5);
  const Target p8 = target_from_config(Config::parse("target = paper_gmm8"));
  CHECK(p8.components() == 8);
  const Target sq = target_from_config(Config::parse("target = square_gmm4, radius = 3, sigma = 0.4"));
  CHECK(sq.means()(0, 0) == 3.0);
  const Target b = target_from_config(Config::parse("target = box, lower = [0, 0], upper = [1, 2]"));
  CHECK(b.kind() == TargetKind::Box);
  const Target t2 = target_from_config(Config::parse("target2.target = gaussian, target2.mean = [0], target2.sigma = 1"),
                                       "target2.");
  CHECK(t2.dim() == 1);

  const auto path = std::filesystem::temp_directory_path() / "gif_points_test.csv";
  {
    std::ofstream os(path);
    os << "x1,x2\n0,0\n1,0\n0,1\n";
  }
  const Target pc = target_from_config(Config::parse("target = points, points_file = \"" + path.string() + "\""));
  CHECK(pc.components() == 3);
  CHECK(pc.sigma() == 0.0);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(target_from_config(Config::parse("target = banana")), Error);
  CHECK_THROWS_AS(target_from_config(Config::parse("sigma = 1")), Error);
}

TEST_CASE("schedules from config") {
  CHECK(schedule_from_config(Config()).family() == Family::Linear);
  CHECK(schedule_from_config(Config::parse("schedule = ve, sigma_max = 3")).eval(0).a == 3.0);
  CHECK(schedule_from_config(Config::parse("schedule = vp, alpha0 = 0.6")).eval(0).b == doctest::Approx(0.8));
  CHECK(schedule_from_config(Config::parse("schedule = shifted-linear, zeta = 0.25")).eval(0).b == doctest::Approx(0.2));
  CHECK_THROWS_AS(schedule_from_config(Config::parse("schedule = cosine")), Error);
}

TEST_CASE("CSV formatting and reading") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e300) == "1e+300");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  std::ostringstream os;
  CsvWriter w(os);
  w.header({"a", "b"});
  w.row({1.5, -2});
  w.cells({"x", "3"});
  CHECK(os.str() == "a,b\n1.5,-2\nx,3\n");
  std::istringstream is("# generated now\na,b\n\n1,2\n3,4\n");
  const CsvTable t = read_csv(is);
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  CHECK(t.rows.size() == 2);
  CHECK(t.rows[1][0] == 3.0);
}
