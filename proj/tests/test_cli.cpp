#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tcoupler/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = fs::path(TCOUPLER_TEST_SCRATCH);

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kScratch);
  const fs::path path = kScratch / name;
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

// Runs the CLI and returns its exit status; stderr is kept out of the test log.
int run(const std::string& args) {
  const std::string cmd = std::string(TCOUPLER_CLI) + " " + args + " 2>" + (kScratch / "stderr.txt").string();
  fs::create_directories(kScratch);
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<double> split(const std::string& line) {
  std::vector<double> out;
  std::istringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) out.push_back(std::stod(cell));
  return out;
}

nlohmann::json sidecar(const fs::path& dir, const std::string& command) {
  return nlohmann::json::parse(slurp(dir / (command + ".json")));
}

const char* kSmallChevron = R"({
  "device": {"l_offset_pH": 19},
  "experiments": {"chevron": {"coupling_MHz": 27, "delta_min_MHz": -40, "delta_max_MHz": 40, "delta_points": 3,
                              "t_swap_max_ns": 100, "t_swap_points": 41}}
})";

}  // namespace

TEST_CASE("reset-sim reports the residual after 30 cycles") {
  const fs::path out = kScratch / "reset";
  REQUIRE(run("reset-sim --out " + out.string()) == 0);
  const auto doc = sidecar(out, "reset-sim");
  const double residual = doc["residual_error"].get<double>();
  CHECK(residual >= 1.5e-4 / 1.05);
  CHECK(residual <= 1.5e-4 * 1.05);
  const auto rows = lines(slurp(out / "reset-sim.csv"));
  REQUIRE(rows.size() == 31);
  CHECK(rows[0] == "cycle,residual_error");
  CHECK(rows[30].rfind("30,", 0) == 0);
}

TEST_CASE("coupler-curve with defaults") {
  const fs::path out = kScratch / "curve";
  REQUIRE(run("coupler-curve --out " + out.string()) == 0);
  const auto rows = lines(slurp(out / "coupler-curve.csv"));
  REQUIRE(rows.size() == 42);
  CHECK(rows[0] == "bias_uA,omega_c_theory_MHz,omega_c_fitted_MHz");
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto v = split(rows[k]);
    REQUIRE(v.size() == 3);
    CHECK(v[2] == doctest::Approx(v[1]).epsilon(0.02));
  }
}

TEST_CASE("sidecar embeds the resolved config and its hash") {
  const fs::path out = kScratch / "sidecar";
  REQUIRE(run("branch-map --seed 17 --out " + out.string()) == 0);
  const auto doc = sidecar(out, "branch-map");
  CHECK(doc["command"] == "branch-map");
  CHECK(doc["seed"] == 17);
  CHECK(doc["config"]["simulation"]["seed"] == 17);
  CHECK(doc["config"]["device"]["i_c0_uA"] == 1.58);
  CHECK(doc["config_sha256"] == tcoupler::sha256_hex(doc["config"].dump()));
  CHECK(doc["fits"]["stable_at_zero_bias"] == 3);
  CHECK(doc["fits"]["stable_branch_ids"] == nlohmann::json::array({-2, -1, 0, 1, 2}));
  const auto rows = lines(slurp(out / "branch-map.csv"));
  CHECK(rows[0] == "bias_uA,delta_rad,flux_Phi0,stable,branch_id");
  CHECK(doc["csv"]["rows"] == rows.size() - 1);
}

TEST_CASE("identical inputs give byte-identical outputs") {
  const fs::path cfg = write_config("small_chevron.json", kSmallChevron);
  const fs::path a = kScratch / "det_a", b = kScratch / "det_b", c = kScratch / "det_c";
  REQUIRE(run("chevron --config " + cfg.string() + " --shots 200 --seed 3 --out " + a.string()) == 0);
  REQUIRE(run("chevron --config " + cfg.string() + " --shots 200 --seed 3 --out " + b.string()) == 0);
  REQUIRE(run("chevron --config " + cfg.string() + " --shots 200 --seed 4 --out " + c.string()) == 0);
  CHECK(slurp(a / "chevron.csv") == slurp(b / "chevron.csv"));
  CHECK(slurp(a / "chevron.json") == slurp(b / "chevron.json"));
  CHECK(slurp(a / "chevron.csv") != slurp(c / "chevron.csv"));

  const auto rows = lines(slurp(a / "chevron.csv"));
  REQUIRE(rows.size() == 3 * 41 + 1);
  CHECK(rows[0] == "delta_MHz,t_swap_ns,p00,p01,p10,p11");
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto v = split(rows[k]);
    for (std::size_t j = 2; j < v.size(); ++j) {
      CHECK(v[j] * 200.0 == doctest::Approx(std::round(v[j] * 200.0)).epsilon(1e-9));
    }
  }
}

TEST_CASE("chevron at the zero-coupling bias stays off") {
  const fs::path out = kScratch / "off";
  REQUIRE(run("chevron --config " + std::string(TCOUPLER_CONFIGS) + "/off_state.json --out " + out.string()) == 0);
  const auto rows = lines(slurp(out / "chevron.csv"));
  REQUIRE(rows.size() == 21 * 101 + 1);
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(split(rows[k])[3] < 0.03);
}

TEST_CASE("dump-sequence writes waveforms and the sequence") {
  const fs::path out = kScratch / "dump";
  REQUIRE(run("dump-sequence --out " + out.string()) == 0);
  const auto doc = sidecar(out, "dump-sequence");
  CHECK(doc["sequence"]["channels"]["uw_a"]["segments"].size() == 1);
  CHECK(doc["sequence"]["total_duration_ns"].get<double>() > 50.0);
  const auto rows = lines(slurp(out / "dump-sequence.csv"));
  CHECK(rows[0] == "t_ns,z_a_Hz,z_b_Hz,uw_a_rad_per_s,uw_b_rad_per_s,coupler_uA,f_a_GHz,f_b_GHz");
}

TEST_CASE("exit codes") {
  const fs::path out = kScratch / "errors";
  CHECK(run("reset-sim --config " + write_config("neg.json", R"({"device": {"i_c0_uA": -1}})").string() +
            " --out " + out.string()) == 1);
  CHECK(run("reset-sim --config " + write_config("foo.json", R"({"foo": 1})").string() + " --out " + out.string()) ==
        1);
  CHECK(run("reset-sim --config " + write_config("broken.json", "{\"device\": ").string() + " --out " +
            out.string()) == 1);
  CHECK(run("reset-sim --config " + (kScratch / "missing.json").string() + " --out " + out.string()) == 1);
  CHECK(run("reset-sim --dt-ns -1 --out " + out.string()) == 1);
  CHECK(run("no-such-command") == 1);
  CHECK(run("") == 1);
  CHECK(run("--help") == 0);

  const fs::path beyond = write_config(
      "beyond.json", R"({"experiments": {"coupler_curve": {"bias_min_uA": 0, "bias_max_uA": 2, "bias_points": 3}}})");
  CHECK(run("coupler-curve --config " + beyond.string() + " --out " + out.string()) == 2);
  const fs::path zero = write_config("zero.json", R"({"experiments": {"chevron": {"coupling_MHz": 0}}})");
  CHECK(run("chevron --config " + zero.string() + " --out " + out.string()) == 2);
}
