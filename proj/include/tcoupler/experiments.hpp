#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcoupler/device.hpp"
#include "tcoupler/dynamics.hpp"
#include "tcoupler/sequences.hpp"

namespace tcoupler {

struct Axis {
  std::string name;  // CSV column, unit suffixed (e.g. "delta_MHz")
  std::vector<double> values;
};

/// Probabilities on the cartesian grid of `axes`, row-major with the last
/// axis fastest.
struct ExperimentResult {
  std::string name;
  std::vector<Axis> axes;
  std::vector<Probabilities> points;
  nlohmann::json fits = nlohmann::json::object();
  std::string config_fingerprint;
  std::uint64_t seed = 0;

  std::size_t expected_size() const;
  /// Throws std::logic_error unless the grid matches the axes and every point
  /// is a distribution within 1e-6.
  void check() const;
};

inline double p_ix(const Probabilities& p) { return p(basis_index(1, 0)) + p(basis_index(1, 1)); }
inline double p_xi(const Probabilities& p) { return p(basis_index(0, 1)) + p(basis_index(1, 1)); }

/// P_01 over the surviving excitation P_01 + P_10 + 2 P_11. Under equal T1 the
/// exchange oscillation in this ratio carries no decaying offset.
double normalized_p01(const Probabilities& p);

struct SimSettings {
  double dt = kDefaultDt;
  DynamicsOptions dynamics;
  MeasurementModel measurement;
  /// When set, each grid point is replaced by the frequencies of this many
  /// shots drawn with seed + point index.
  std::optional<std::int64_t> shots;
  std::uint64_t seed = 0;
};

/// Runs a sequence from |00> and returns the state at total_duration. Static
/// sequences (every layer a single full-length constant level) are evolved
/// as one constant step.
TwoQubitState run_sequence(const PulseSequence& seq, const DeviceParams& params, const SimSettings& settings);

/// Coupler bias giving |Omega_c|/2pi = coupling_hz on the side of positive
/// bias; 0 maps to zero_coupling_bias and throws NotReachable when that is
/// unreachable.
double bias_for_target(const DeviceParams& params, double coupling_hz);

// ---------------------------------------------------------------------------

struct SpectroscopyOptions {
  double probe_amp = kTwoPi * 1.5e6;
  SpectroscopyTiming timing;
};

/// Axes (delta_MHz, probe_MHz). fits: per-row peaks and the avoided-crossing
/// fit of P_Ix + P_xI.
ExperimentResult run_spectroscopy(double i_cb, const std::vector<double>& delta_grid,
                                  const std::vector<double>& probe_grid, const DeviceParams& params,
                                  const SimSettings& settings, const SpectroscopyOptions& options = {});

/// Axes (bias_uA, driven, t_rabi_ns) with driven 0 = A, 1 = B. fits: one
/// crosstalk ratio per bias and driven qubit.
ExperimentResult run_crosstalk_scan(const std::vector<double>& i_cb_grid, const std::vector<double>& t_rabi_grid,
                                    const DeviceParams& params, const SimSettings& settings,
                                    const CrosstalkTiming& timing = {});

/// Axes (delta_MHz, t_swap_ns). fits: damped-sine fit of normalized P_01 per
/// detuning next to the expected sqrt(delta^2 + Omega_c^2).
ExperimentResult run_swap_chevron(double i_cb_on, const std::vector<double>& delta_grid,
                                  const std::vector<double>& t_swap_grid, const DeviceParams& params,
                                  const SimSettings& settings, const SwapTiming& timing = {});

struct CouplingPoint {
  double bias = 0.0;
  double theory = 0.0;  // |Omega_c| / 2pi, Hz
  double fitted = 0.0;  // Hz
  bool sub_period = false;     // fit had less than one period; small-angle estimate used
  bool below_floor = false;    // fitted < resolution floor
  bool decay_limited = false;  // t1 * |Omega_c| < 2 pi
};

struct CouplingCurveOptions {
  int trace_points = 121;
  double periods = 3.0;
  double min_window = 50e-9;
  double max_window = 1000e-9;
  double resolution_floor = 0.1e6;
  SwapTiming timing;
};

/// Theory from coupling_strength against the frequency fitted to a resonant
/// swap trace at each bias.
std::vector<CouplingPoint> run_coupling_curve(const std::vector<double>& i_cb_grid, const DeviceParams& params,
                                              const SimSettings& settings, const CouplingCurveOptions& options = {});

// ---------------------------------------------------------------------------

struct Resolvability {
  double f_ratio = 0.0;           // from the (possibly sampled) trace
  double expected_f_ratio = 0.0;  // noise-free signal over binomial variance, plus one
  bool resolvable = false;
};

/// Nested F-test of c + A exp(-t/t1) against c + exp(-t/t1)(a cos + b sin)(2 pi f t).
/// `noise_free` and `shots` set the expected ratio; `observed` gives the sampled one.
Resolvability f_test(const std::vector<double>& t, const std::vector<double>& observed,
                     const std::vector<double>& noise_free, double frequency, double t1, std::int64_t shots,
                     double threshold);

struct MinCouplingOptions {
  std::int64_t shots = 1000;
  double threshold = 4.0;
};

struct MinCouplingStudy {
  ExperimentResult traces;  // axes (omega_c_MHz, t_ns)
  std::vector<Resolvability> verdicts;
};

/// Resonant exchange from |10> at each constant coupling (Hz) with T1 = t1 on
/// both qubits; P_01 traces are shot-sampled and tested for an oscillation at
/// the coupling frequency.
MinCouplingStudy run_min_coupling_study(const std::vector<double>& omega_c_list, double t1,
                                        const std::vector<double>& t_grid, const DeviceParams& params,
                                        const SimSettings& settings, const MinCouplingOptions& options = {});

}  // namespace tcoupler
