#include <doctest.h>

#include <cmath>
#include <fstream>

#include "incad/data_io.hpp"
#include "incad/errors.hpp"
#include "support/tempdir.hpp"

using namespace incad;
using testing::TempDir;

namespace {

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("timestamped csv becomes a two-dimensional dataset") {
  TempDir dir;
  const auto path = dir.write("ts.csv",
                              "timestamp,value,label\n"
                              "2024-01-01 00:00:00,1.5,0\n"
                              "2024-01-01 00:00:10,2.5,0\n"
                              "2024-01-01 00:01:00,9.0,1\n");
  CsvSchema schema;
  schema.timestamp = "timestamp";
  schema.standardize = false;
  const LabeledDataset ds = load_csv(path, schema);
  REQUIRE(ds.size() == 3);
  CHECK(ds.dim() == 2);
  CHECK(ds.feature_names == std::vector<std::string>{"timestamp", "value"});
  CHECK(ds.points[1](0) == 10.0);
  CHECK(ds.points[2](0) == 60.0);
  CHECK(ds.points[2](1) == 9.0);
  REQUIRE(ds.labels.has_value());
  CHECK(*ds.labels == std::vector<std::uint8_t>{0, 0, 1});
  CHECK_FALSE(ds.cluster_ids.has_value());
}

TEST_CASE("numeric timestamps are offsets from the first row") {
  TempDir dir;
  const auto path = dir.write("ts.csv", "t,x\n100,1\n105.5,2\n");
  CsvSchema schema;
  schema.timestamp = "t";
  schema.standardize = false;
  const LabeledDataset ds = load_csv(path, schema);
  CHECK(ds.points[0](0) == 0.0);
  CHECK(ds.points[1](0) == 5.5);
}

TEST_CASE("z-scoring and its inverse") {
  TempDir dir;
  std::string text = "a,b,c\n";
  RandomSource rng(3);
  std::vector<std::array<double, 3>> raw;
  for (int i = 0; i < 200; ++i) {
    raw.push_back({10.0 + 3.0 * rng.normal(), -2.0 + 0.01 * rng.normal(), 7.0});
    text += std::to_string(raw.back()[0]) + "," + std::to_string(raw.back()[1]) + ",7\n";
  }
  const LabeledDataset ds = load_csv(dir.write("z.csv", text), CsvSchema{});
  REQUIRE(ds.dim() == 3);
  for (int j = 0; j < 2; ++j) {
    double mean = 0.0, var = 0.0;
    for (const auto& x : ds.points) mean += x(j);
    mean /= ds.size();
    for (const auto& x : ds.points) var += (x(j) - mean) * (x(j) - mean);
    var /= ds.size();
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-9);
  }
  CHECK(ds.column_scale(2) == 1.0);
  for (const auto& x : ds.points) CHECK(x(2) == 0.0);
  const Observation back = ds.unstandardize(ds.points[17]);
  CHECK(std::abs(back(0) - std::stod(std::to_string(raw[17][0]))) < 1e-9);
  CHECK(std::abs(back(1) - std::stod(std::to_string(raw[17][1]))) < 1e-9);
}

TEST_CASE("feature selection and quoted cells") {
  TempDir dir;
  const auto path = dir.write("q.csv", "\"x\", y ,z,cluster\n1,\"2\",3,4\n4,5,6,1\n");
  CsvSchema schema;
  schema.features = {"z", "x"};
  schema.standardize = false;
  const LabeledDataset ds = load_csv(path, schema);
  CHECK(ds.feature_names == std::vector<std::string>{"z", "x"});
  CHECK(ds.points[0](0) == 3.0);
  CHECK(ds.points[0](1) == 1.0);
  REQUIRE(ds.cluster_ids.has_value());
  CHECK(*ds.cluster_ids == std::vector<int>{4, 1});
}

TEST_CASE("malformed input names the row") {
  TempDir dir;
  auto message = [&](const std::string& text) {
    try {
      load_csv(dir.write("bad.csv", text), CsvSchema{});
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("x,y\n1,2\n3,oops\n").find("row 3") != std::string::npos);
  CHECK(message("x,y\n1,2\n3\n").find("row 3") != std::string::npos);
  CHECK(message("x,label\n1,2\n").find("row 2") != std::string::npos);
  CHECK(message("x,y\n").find("no data rows") != std::string::npos);
  CHECK(message("").find("empty") != std::string::npos);
  CHECK_THROWS_AS(load_csv(dir / "missing.csv", CsvSchema{}), DataError);
  CsvSchema schema;
  schema.features = {"nope"};
  CHECK_THROWS_AS(load_csv(dir.write("ok.csv", "x\n1\n"), schema), DataError);
}

TEST_CASE("synthetic generator") {
  RandomSource rng(42);
  const LabeledDataset ds = generate_synthetic(SyntheticConfig{}, rng);
  REQUIRE(ds.size() == 400);
  CHECK(ds.dim() == 2);
  REQUIRE(ds.labels.has_value());
  REQUIRE(ds.cluster_ids.has_value());
  std::size_t anomalies = 0;
  Vector centre = Vector::Zero(2);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if ((*ds.labels)[i]) {
      ++anomalies;
      centre += ds.points[i];
      CHECK((*ds.cluster_ids)[i] == 0);
    }
  }
  CHECK(anomalies == 23);
  centre /= 23.0;
  // Anomaly sd is 5 per axis, so the mean of 23 has sd about 1.04.
  CHECK(centre.norm() < 4.0);
  // Anomalies arrive between the third and the last cluster.
  for (std::size_t i = 300; i < 323; ++i) CHECK((*ds.labels)[i] == 1);
  for (std::size_t i = 323; i < 400; ++i) CHECK((*ds.cluster_ids)[i] == 4);

  RandomSource again(42);
  const LabeledDataset ds2 = generate_synthetic(SyntheticConfig{}, again);
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(ds.points[i] == ds2.points[i]);
}

TEST_CASE("results jsonl round trip") {
  TempDir dir;
  std::vector<ResultRecord> recs;
  RandomSource rng(9);
  for (std::size_t i = 0; i < 400; ++i) {
    ResultRecord r;
    r.index = i;
    r.point = Vector::NullaryExpr(2, [&](Eigen::Index) { return rng.normal() * 1e3; });
    r.cluster = static_cast<int>(i % 5) + 1;
    r.anomaly_flag = i % 7 == 0;
    r.p = rng.uniform() * 0.999;
    r.phase = i < 80 ? "batch" : "stream";
    recs.push_back(r);
  }
  write_results(recs, dir / "r.jsonl");
  CHECK(count_lines(dir / "r.jsonl") == 400);
  CHECK(read_results(dir / "r.jsonl") == recs);

  write_results({}, dir / "empty.jsonl");
  CHECK(std::filesystem::file_size(dir / "empty.jsonl") == 0);
  CHECK(read_results(dir / "empty.jsonl").empty());

  dir.write("broken.jsonl", "{\"index\": 0}\n");
  CHECK_THROWS_AS(read_results(dir / "broken.jsonl"), DataError);
}

TEST_CASE("metrics json round trip") {
  TempDir dir;
  Metrics m = compute_metrics(std::vector<std::uint8_t>{1, 0, 1, 0}, std::vector<std::uint8_t>{1, 0, 0, 0});
  m.runtime_seconds = 1.25;
  m.batch_fraction = 0.2;
  write_metrics(m, dir / "m.json");
  const Metrics r = read_metrics(dir / "m.json");
  CHECK(r.precision == m.precision);
  CHECK(r.f_measure == m.f_measure);
  CHECK(r.tp == m.tp);
  CHECK(r.tn == m.tn);
  CHECK(r.runtime_seconds == 1.25);
  CHECK(r.batch_fraction == 0.2);
}

TEST_CASE("dataset csv round trips losslessly") {
  TempDir dir;
  RandomSource rng(5);
  const LabeledDataset ds = generate_synthetic(SyntheticConfig{}, rng);
  write_dataset_csv(ds, dir / "d.csv");
  CsvSchema schema;
  schema.standardize = false;
  const LabeledDataset back = load_csv(dir / "d.csv", schema);
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(back.points[i] == ds.points[i]);
  CHECK(*back.labels == *ds.labels);
  CHECK(*back.cluster_ids == *ds.cluster_ids);
}
