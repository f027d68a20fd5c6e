#include "support.hpp"

#include "dlda/checkpoint.hpp"
#include "dlda/error.hpp"
#include "dlda/trajectory_io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace dlda;
namespace fs = std::filesystem;

TEST_CASE("trajectory CSV round trip is exact") {
  Trajectory t;
  t.h = 0.1;
  Rng rng(3);
  t.q = Eigen::MatrixXd::NullaryExpr(3, 7, [&] { return dt::uniform(1, rng, -10, 10)(0); });
  t.q(1, 2) = 1e-300;
  t.q(2, 5) = -0.1;
  const std::string csv = trajectory_to_csv(t);
  CHECK(csv.rfind("t,q0,q1,q2\n", 0) == 0);
  const Trajectory back = trajectory_from_csv(csv);
  CHECK(back.q == t.q);
  CHECK(back.h == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(trajectory_to_csv(back) == csv);
}

TEST_CASE("17 significant digits") {
  Trajectory t;
  t.h = 0.5;
  t.q = Eigen::MatrixXd::Constant(1, 2, 1.0 / 3.0);
  CHECK(trajectory_to_csv(t) == "t,q0\n0,0.33333333333333331\n0.5,0.33333333333333331\n");
}

TEST_CASE("NaN predictions only where allowed") {
  Trajectory t;
  t.h = 0.1;
  t.q = Eigen::MatrixXd::Zero(1, 3);
  t.q(0, 2) = std::numeric_limits<double>::quiet_NaN();
  const std::string csv = trajectory_to_csv(t);
  CHECK_THROWS_AS(trajectory_from_csv(csv), ConfigError);
  CHECK(std::isnan(trajectory_from_csv(csv, true).q(0, 2)));
}

TEST_CASE("malformed CSV") {
  CHECK_THROWS_AS(trajectory_from_csv(""), ConfigError);
  CHECK_THROWS_AS(trajectory_from_csv("t,q0\n0,1,2\n"), ConfigError);
  CHECK_THROWS_AS(trajectory_from_csv("t,q0\n0,abc\n"), ConfigError);
  CHECK_THROWS_AS(trajectory_from_csv("x,y\n0,1\n"), ConfigError);
}

TEST_CASE("frame CSV round trip") {
  const Eigen::MatrixXd f = Eigen::MatrixXd::Random(12, 4).cwiseAbs();
  CHECK(frames_from_csv(frames_to_csv(f)) == f);
}

TEST_CASE("checkpoint round trip") {
  ParameterStore st;
  st.add("a.W", 3, 2);
  st.add("a.b", 3, 1);
  Rng rng(1);
  st.flat() = dt::uniform(9, rng);
  st.flat()(4) = 1.0 / 3.0;
  const nlohmann::json header = {{"model", "x"}, {"hash", "0123"}};
  const fs::path dir = fs::temp_directory_path() / "dlda_ckpt_test";
  fs::remove_all(dir);
  write_checkpoint(dir / "sub" / "c.json", header, st);
  const Checkpoint c = read_checkpoint(dir / "sub" / "c.json");
  CHECK(c.params == st);
  CHECK(c.header == header);
  CHECK(checkpoint_to_string(header, st) == read_text(dir / "sub" / "c.json"));
  fs::remove_all(dir);
  CHECK_THROWS(checkpoint_from_string("{\"header\": {}}"));
}

TEST_CASE("content hash") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
