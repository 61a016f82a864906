#include "vtwins/dataset.hpp"
#include "vtwins/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

using namespace vtwins;

namespace {

std::string temp_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("vtwins_" + name);
  std::ofstream(path) << text;
  return path.string();
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("datamodel") {

TEST_CASE("two-row file loads in order") {
  const auto path = temp_file("two.csv", "x1,trt,y\n0.5,1,2.0\n1.5,0,1.0\n");
  const Dataset d = load_csv(path, infer_schema(path, "trt", "y"));
  CHECK(d.rows() == 2);
  CHECK(d.cols() == 1);
  CHECK(d.X(0, 0) == 0.5);
  CHECK(d.X(1, 0) == 1.5);
  CHECK(d.T == std::vector<int>{1, 0});
  CHECK(d.Y(0) == 2.0);
}

TEST_CASE("ingestion errors") {
  const auto bad_t = temp_file("badt.csv", "x1,trt,y\n0.5,2,2.0\n1.5,0,1.0\n");
  CHECK(error_of([&] { load_csv(bad_t, infer_schema(bad_t, "trt", "y")); }).find("treatment not binary") !=
        std::string::npos);

  const auto text = temp_file("text.csv", "x1,trt,y\nabc,1,2.0\n1.5,0,1.0\n");
  CHECK(error_of([&] { load_csv(text, infer_schema(text, "trt", "y")); }).find("non-numeric") != std::string::npos);

  const auto ok = temp_file("ok.csv", "x1,trt,y\n0.5,1,2.0\n1.5,0,1.0\n");
  CsvSchema schema = infer_schema(ok, "trt", "y");
  schema.covariates.push_back({"x9", ColumnKind::Continuous, 1});
  CHECK(error_of([&] { load_csv(ok, schema); }).find("missing column") != std::string::npos);

  const auto bin = temp_file("bin.csv", "c,trt,y\n0,1,2.0\n3,0,1.0\n");
  CsvSchema bschema{{{"c", ColumnKind::Binary, 0}}, "trt", "y"};
  CHECK_THROWS_AS(load_csv(bin, bschema), Error);
}

TEST_CASE("trial-shaped file with 46 covariates") {
  Rng rng(5);
  std::string text;
  for (int j = 0; j < 46; ++j) text += "v" + std::to_string(j + 1) + ",";
  text += "arm,cpd\n";
  int treated = 0;
  for (int i = 0; i < 538; ++i) {
    for (int j = 0; j < 46; ++j) text += (j % 5 == 0 ? std::to_string(rng.below(2)) : std::to_string(rng.normal())) + ",";
    const int t = i < 340 ? 1 : 0;
    treated += t;
    text += std::to_string(t) + "," + std::to_string(rng.normal(10, 3)) + "\n";
  }
  const auto path = temp_file("trial.csv", text);
  const Dataset d = load_csv(path, infer_schema(path, "arm", "cpd"));
  CHECK(d.rows() == 538);
  CHECK(d.cols() == 46);
  const auto [c, t] = arm_rows(d.T);
  CHECK(c.size() == 198);
  CHECK(t.size() == 340);
  CHECK(d.columns[0].kind == ColumnKind::Binary);
  CHECK(d.columns[1].kind == ColumnKind::Continuous);
}

TEST_CASE("split_by_arm partitions rows") {
  Dataset d;
  d.columns = default_columns(1);
  d.X = Matrix(3, 1);
  d.X << 10, 11, 12;
  d.T = {0, 1, 0};
  d.Y = Vector::Zero(3);
  const auto [control, treated] = split_by_arm(d);
  CHECK(control.rows() == 2);
  CHECK(control.X(0, 0) == 10);
  CHECK(control.X(1, 0) == 12);
  CHECK(treated.rows() == 1);
  CHECK(treated.X(0, 0) == 11);

  d.T = {1, 1, 1};
  CHECK(error_of([&] { split_by_arm(d); }).find("control arm is empty") != std::string::npos);
}

TEST_CASE("split_by_arm on a seeded draw keeps every row") {
  Rng rng(11);
  Dataset d;
  d.columns = default_columns(2);
  d.X = Matrix(1000, 2);
  d.Y = Vector(1000);
  for (int i = 0; i < 1000; ++i) {
    d.X(i, 0) = i;
    d.X(i, 1) = rng.normal();
    d.Y(i) = rng.normal();
    d.T.push_back(rng.bernoulli(0.5) ? 1 : 0);
  }
  const auto [control, treated] = split_by_arm(d);
  CHECK(control.rows() + treated.rows() == 1000);
  // Interleaved reassembly recovers the original rows.
  std::vector<double> ids;
  for (Index i = 0; i < control.rows(); ++i) ids.push_back(control.X(i, 0));
  for (Index i = 0; i < treated.rows(); ++i) ids.push_back(treated.X(i, 0));
  std::sort(ids.begin(), ids.end());
  for (int i = 0; i < 1000; ++i) CHECK(ids[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("standardization uses the population SD") {
  Matrix X(3, 2);
  X << 1, 5, 2, 5, 3, 5;
  const auto params = standardize_fit(X);
  const Matrix Z = standardize_apply(params, X);
  // Hand values: SD = sqrt(2/3), so (x - 2) / SD.
  const double sd = std::sqrt(2.0 / 3.0);
  CHECK(Z(0, 0) == doctest::Approx(-1.0 / sd).epsilon(1e-14));
  CHECK(Z(0, 0) == doctest::Approx(-1.224744871391589).epsilon(1e-12));
  CHECK(Z(1, 0) == 0.0);
  CHECK(Z(2, 0) == doctest::Approx(1.224744871391589).epsilon(1e-12));
  CHECK(params.constant[1]);
  CHECK(!params.constant[0]);
  CHECK(Z(0, 1) == 5.0);
  CHECK(Z(1, 1) == 5.0);

  Matrix held(1, 2);
  held << 7, 1;
  const Matrix H = standardize_apply(params, held);
  CHECK(H(0, 0) == doctest::Approx((7 - params.means(0)) / params.scales(0)));
}

TEST_CASE("binary columns pass through standardization") {
  Matrix X(4, 1);
  X << 0, 1, 1, 0;
  const auto params = standardize_fit(X, {ColumnKind::Binary});
  CHECK(params.means(0) == 0.0);
  CHECK(params.scales(0) == 1.0);
  CHECK(standardize_apply(params, X) == X);
}

TEST_CASE("standardized continuous columns have zero mean") {
  Rng rng(3);
  Matrix X(57, 6);
  for (Index i = 0; i < X.rows(); ++i)
    for (Index j = 0; j < X.cols(); ++j) X(i, j) = rng.normal(3.0 * j, 1.0 + j);
  const Matrix Z = standardize_apply(standardize_fit(X), X);
  for (Index j = 0; j < Z.cols(); ++j) CHECK(std::abs(Z.col(j).mean()) < 1e-12);
}

TEST_CASE("CSV round trip is bit exact") {
  Rng rng(9);
  Dataset d;
  d.columns = default_columns(4, 3);
  d.X = Matrix(25, 4);
  d.Y = Vector(25);
  for (Index i = 0; i < 25; ++i) {
    for (Index j = 0; j < 3; ++j) d.X(i, j) = rng.normal() * std::pow(10.0, static_cast<double>(j * 3 - 4));
    d.X(i, 3) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    d.Y(i) = rng.normal(0, 1e6);
    d.T.push_back(static_cast<int>(i % 2));
  }
  const auto path = (std::filesystem::temp_directory_path() / "vtwins_roundtrip.csv").string();
  write_csv(d, path);
  const Dataset back = load_csv(path, infer_schema(path, "trt", "y"));
  CHECK(back.X == d.X);
  CHECK(back.Y == d.Y);
  CHECK(back.T == d.T);
  CHECK(back.columns[3].kind == ColumnKind::Binary);
}

}
