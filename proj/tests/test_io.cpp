#include <doctest.h>

#include "tcoupler/io.hpp"

using namespace tcoupler;

TEST_CASE("number formatting") {
  CHECK(format_number(1.0) == "1.00000000e+00");
  CHECK(format_number(-0.0) == "0.00000000e+00");
  CHECK(format_number(-1.234567891e-7) == "-1.23456789e-07");
  CHECK(format_number(6.02214076e23) == "6.02214076e+23");
}

TEST_CASE("sha256") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("experiment table is row-major with the last axis fastest") {
  ExperimentResult r;
  r.name = "t";
  r.axes = {{"x", {1.0, 2.0}}, {"y", {10.0, 20.0, 30.0}}};
  for (int k = 0; k < 6; ++k) r.points.push_back(Probabilities(1.0, 0.0, 0.0, 0.0));
  r.points[4] = Probabilities(0.25, 0.25, 0.25, 0.25);
  const CsvTable t = experiment_table(r);
  CHECK(t.columns == std::vector<std::string>{"x", "y", "p00", "p01", "p10", "p11"});
  REQUIRE(t.rows.size() == 6);
  CHECK(t.rows[4][0] == 2.0);
  CHECK(t.rows[4][1] == 20.0);
  CHECK(t.rows[4][3] == 0.25);

  r.points.pop_back();
  CHECK_THROWS_AS(experiment_table(r), std::logic_error);
}

TEST_CASE("csv text") {
  CsvTable t;
  t.columns = {"cycle", "residual_error"};
  t.integer_columns = {true, false};
  t.add_row({1.0, 0.746});
  t.add_row({2.0, 0.556516});
  CHECK(to_csv(t) == "cycle,residual_error\n1,7.46000000e-01\n2,5.56516000e-01\n");
  CHECK_THROWS_AS(t.add_row({1.0}), std::logic_error);
}

TEST_CASE("canonical json") {
  nlohmann::json doc;
  doc["zeta"] = 1;
  doc["alpha"] = {{"b", 2}, {"a", 1}};
  CHECK(canonical_dump(doc) == "{\n  \"alpha\": {\n    \"a\": 1,\n    \"b\": 2\n  },\n  \"zeta\": 1\n}\n");
}

TEST_CASE("sequence serialization") {
  PulseSequence seq;
  seq.total_duration = 20e-9;
  seq.measurement_time = 20e-9;
  seq.channel(ChannelId::uw_a).add(pi_pulse(ChannelId::uw_a, 10e-9));
  const nlohmann::json j = to_json(seq);
  CHECK(j["total_duration_ns"].get<double>() == doctest::Approx(20.0));
  REQUIRE(j["channels"]["uw_a"]["segments"].size() == 1);
  CHECK(j["channels"]["uw_a"]["segments"][0]["shape"] == "gaussian_pulse");
  CHECK(j["channels"]["coupler"]["segments"].empty());
}
