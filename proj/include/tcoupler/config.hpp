#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcoupler/device.hpp"
#include "tcoupler/experiments.hpp"
#include "tcoupler/hysteresis.hpp"

namespace tcoupler {

/// Inclusive evenly spaced grid.
struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  int points = 1;

  std::vector<double> values(double unit = 1.0) const;
};

/// Working point of the coupler: an explicit bias, or the bias that gives a
/// target |Omega_c| (0 selects the zero-coupling bias).
struct BiasSpec {
  bool explicit_bias = false;
  double i_cb_uA = 0.0;
  double coupling_MHz = 0.0;

  double resolve(const DeviceParams& params) const;
};

struct SimulationConfig {
  double dt_ns = 0.05;
  bool rwa = true;
  bool zz = true;
  std::string mode = "ensemble";  // or "shots"
  std::int64_t shots = 1000;
  std::uint64_t seed = 0;
  double readout_e0_a = 0.0, readout_e1_a = 0.0, readout_e0_b = 0.0, readout_e1_b = 0.0;

  SimSettings settings() const;
};

struct ResetBlock {
  double i_cb_minus_uA = 0.0;
  double i_cb_plus_uA = 0.0;
  int n_cycles = 30;
  double q = 0.746;
  std::vector<int> initial_branches{-2, -1, 1, 2};

  ResetConfig reset() const;
  BranchDistribution initial() const;
};

struct CouplerCurveBlock {
  GridSpec bias_uA{-1.5, 1.5, 41};
  int trace_points = 121;
  double resolution_floor_MHz = 0.1;
};

struct SpectroscopyBlock {
  BiasSpec bias{false, 0.0, 17.0};
  GridSpec delta_MHz{-100.0, 100.0, 81};
  GridSpec probe_MHz{-120.0, 120.0, 81};
  double probe_amp_MHz = 1.5;
  double probe_duration_ns = 2000.0;
  double probe_phase_b_rad = 1.5707963267948966;
};

struct CrosstalkBlock {
  GridSpec bias_uA{-1.5, 1.5, 31};
  GridSpec t_rabi_ns{0.0, 200.0, 101};
  double rabi_MHz = 20.0;
  double idle_detuning_MHz = 200.0;
};

struct ChevronBlock {
  BiasSpec bias{false, 0.0, 40.0};
  GridSpec delta_MHz{-100.0, 100.0, 61};
  GridSpec t_swap_ns{0.0, 300.0, 121};
  double pi_duration_ns = 10.0;
  double rise_fall_ns = 2.0;
  double settle_ns = 2.0;
  double idle_detuning_MHz = 200.0;

  SwapTiming timing() const;
};

struct MinCouplingBlock {
  std::vector<double> coupling_MHz{0.1, 0.3, 0.5};
  double t1_ns = 350.0;
  GridSpec t_ns{0.0, 500.0, 101};
  std::int64_t shots = 1000;
  double f_threshold = 4.0;
};

struct BranchMapBlock {
  GridSpec bias_uA;  // defaults to +-0.6 i_c0
};

struct DumpSequenceBlock {
  std::string kind = "swap";  // swap | spectroscopy | crosstalk
  BiasSpec bias{false, 0.0, 40.0};
  double delta_MHz = 0.0;
  double t_ns = 50.0;
  double probe_MHz = 0.0;
  std::string driven = "A";
  double sample_dt_ns = 0.5;
};

struct RunConfig {
  DeviceParams device = default_device();
  SimulationConfig simulation;
  ResetBlock reset;
  CouplerCurveBlock coupler_curve;
  SpectroscopyBlock spectroscopy;
  CrosstalkBlock crosstalk;
  ChevronBlock chevron;
  MinCouplingBlock min_coupling;
  BranchMapBlock branch_map;
  DumpSequenceBlock dump_sequence;
};

/// Parses and validates a JSON config. Empty text resolves every default.
/// Throws ParseError (with line and column) on malformed JSON and
/// ValidationError naming the key on unknown keys, wrong types or bad values.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Re-checks cross-field constraints after command-line overrides.
void validate(const RunConfig& config);

/// Fully resolved config, every key present, in the input units.
nlohmann::json to_json(const RunConfig& config);

}  // namespace tcoupler
