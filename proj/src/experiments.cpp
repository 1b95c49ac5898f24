#include "tcoupler/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tcoupler/fitting.hpp"

namespace tcoupler {

namespace {

using nlohmann::json;

constexpr double kMHz = 1e6;

bool static_layer(const std::vector<Segment>& layer, double total) {
  if (layer.empty()) return true;
  if (layer.size() != 1) return false;
  const Segment& s = layer.front();
  const bool flat = s.shape == Shape::constant || (s.shape == Shape::flat_with_rise_fall && s.rise_fall == 0.0);
  return flat && s.t_start <= 0.0 && s.end() >= total;
}

bool is_static(const PulseSequence& seq) {
  return std::all_of(seq.channels.begin(), seq.channels.end(), [&](const Channel& c) {
    return static_layer(c.segments, seq.total_duration) && static_layer(c.offsets, seq.total_duration);
  });
}

// The single control snapshot of a static sequence.
ControlSnapshot static_snapshot(const PulseSequence& seq, const DeviceParams& params) {
  return sample(seq, seq.total_duration, params).steps.front();
}

Probabilities observe(const TwoQubitState& state, const SimSettings& settings, std::size_t index) {
  Probabilities p = measure_probabilities(state, settings.measurement);
  if (!settings.shots) return p;
  const std::int64_t n = *settings.shots;
  const auto counts = sample_shots(p, n, settings.seed + index);
  for (int k = 0; k < 4; ++k) p(k) = static_cast<double>(counts[static_cast<std::size_t>(k)]) / static_cast<double>(n);
  return p;
}

std::vector<double> scaled(const std::vector<double>& v, double factor) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [&](double x) { return x * factor; });
  return out;
}

void require_nonempty(const std::vector<double>& grid, const char* what) {
  if (grid.empty()) throw std::invalid_argument(std::string(what) + " grid must not be empty");
}

json decay_json(double decay_time) {
  if (!std::isfinite(decay_time)) return nullptr;
  return decay_time / 1e-9;
}

}  // namespace

std::size_t ExperimentResult::expected_size() const {
  std::size_t n = 1;
  for (const Axis& a : axes) n *= a.values.size();
  return n;
}

void ExperimentResult::check() const {
  if (points.size() != expected_size()) throw std::logic_error(name + ": grid size does not match the axes");
  for (const Probabilities& p : points) {
    if ((p.array() < -1e-12).any() || (p.array() > 1.0 + 1e-12).any() || std::abs(p.sum() - 1.0) > 1e-6) {
      throw std::logic_error(name + ": grid point is not a probability distribution");
    }
  }
}

double normalized_p01(const Probabilities& p) {
  const double total = p(basis_index(0, 1)) + p(basis_index(1, 0)) + 2.0 * p(basis_index(1, 1));
  return total > 0.0 ? p(basis_index(0, 1)) / total : 0.0;
}

TwoQubitState run_sequence(const PulseSequence& seq, const DeviceParams& params, const SimSettings& settings) {
  seq.check();
  const TwoQubitState ground;
  if (seq.total_duration <= 0.0) return ground;
  if (is_static(seq)) {
    return propagate_constant_trace(ground, static_snapshot(seq, params), {seq.total_duration}, settings.dt, params,
                                    settings.dynamics)
        .front();
  }
  return propagate(ground, sample(seq, settings.dt, params), params, settings.dynamics);
}

double bias_for_target(const DeviceParams& params, double coupling_hz) {
  if (coupling_hz < 0.0) throw ValidationError("coupling_MHz", "target coupling must be >= 0");
  if (coupling_hz == 0.0) {
    const ZeroCouplingBias z = zero_coupling_bias(params);
    if (!z.reachable) {
      throw NotReachable("zero coupling is not reachable: Omega_c/2pi(0) = " +
                         std::to_string(z.residual / kTwoPi / kMHz) + " MHz");
    }
    return z.bias;
  }
  return bias_for_coupling(params, -kTwoPi * coupling_hz);
}

// ---------------------------------------------------------------------------

ExperimentResult run_spectroscopy(double i_cb, const std::vector<double>& delta_grid,
                                  const std::vector<double>& probe_grid, const DeviceParams& params,
                                  const SimSettings& settings, const SpectroscopyOptions& options) {
  require_nonempty(delta_grid, "delta");
  require_nonempty(probe_grid, "probe");
  ExperimentResult result;
  result.name = "spectroscopy";
  result.seed = settings.seed;
  result.axes = {{"delta_MHz", scaled(delta_grid, 1.0 / kMHz)}, {"probe_MHz", scaled(probe_grid, 1.0 / kMHz)}};
  result.points.reserve(delta_grid.size() * probe_grid.size());

  std::vector<CrossingRow> rows;
  json row_fits = json::array();
  for (double delta : delta_grid) {
    std::vector<double> line;
    for (double probe : probe_grid) {
      const PulseSequence seq = build_spectroscopy_sequence(delta, probe, options.probe_amp, i_cb, params,
                                                            options.timing);
      const Probabilities p = observe(run_sequence(seq, params, settings), settings, result.points.size());
      result.points.push_back(p);
      line.push_back(p_ix(p) + p_xi(p));
    }
    json entry{{"delta_MHz", delta / kMHz}};
    try {
      const std::vector<Peak> peaks = extract_peaks(probe_grid, line);
      CrossingRow row{delta, {}};
      json peak_list = json::array();
      for (const Peak& pk : peaks) {
        row.peaks.push_back(pk.frequency);
        peak_list.push_back({{"frequency_MHz", pk.frequency / kMHz},
                             {"width_MHz", pk.width / kMHz},
                             {"height", pk.height}});
      }
      rows.push_back(row);
      entry["peaks"] = peak_list;
    } catch (const NoPeak&) {
      entry["peaks"] = json::array();
    }
    row_fits.push_back(entry);
  }
  result.fits["rows"] = row_fits;
  result.fits["omega_c_theory_MHz"] = std::abs(coupling_strength(params, i_cb)) / kTwoPi / kMHz;
  try {
    const CrossingFit fit = fit_avoided_crossing(rows);
    result.fits["crossing"] = {{"omega_c_MHz", fit.omega_c / kMHz},
                               {"f_center_MHz", fit.f_center / kMHz},
                               {"slope", fit.slope},
                               {"residual_rms_MHz", fit.residual_rms / kMHz}};
  } catch (const DegenerateFit& e) {
    result.fits["crossing"] = {{"error", e.what()}};
  } catch (const std::invalid_argument& e) {
    result.fits["crossing"] = {{"error", e.what()}};
  }
  result.check();
  return result;
}

ExperimentResult run_crosstalk_scan(const std::vector<double>& i_cb_grid, const std::vector<double>& t_rabi_grid,
                                    const DeviceParams& params, const SimSettings& settings,
                                    const CrosstalkTiming& timing) {
  require_nonempty(i_cb_grid, "bias");
  require_nonempty(t_rabi_grid, "t_rabi");
  if (!std::is_sorted(t_rabi_grid.begin(), t_rabi_grid.end()) || t_rabi_grid.front() < 0.0) {
    throw std::invalid_argument("t_rabi grid must be sorted and non-negative");
  }
  ExperimentResult result;
  result.name = "crosstalk";
  result.seed = settings.seed;
  result.axes = {{"bias_uA", scaled(i_cb_grid, 1e6)}, {"driven", {0.0, 1.0}}, {"t_rabi_ns", scaled(t_rabi_grid, 1e9)}};

  json ratios = json::array();
  for (double bias : i_cb_grid) {
    for (Qubit driven : {Qubit::a, Qubit::b}) {
      // The sequence is static, so every duration shares one snapshot.
      const PulseSequence seq = build_crosstalk_sequence(driven, t_rabi_grid.back(), bias, params, timing);
      std::vector<TwoQubitState> states;
      if (seq.total_duration > 0.0) {
        if (!is_static(seq)) throw std::logic_error("crosstalk sequence is expected to be static");
        states = propagate_constant_trace(TwoQubitState{}, static_snapshot(seq, params), t_rabi_grid, settings.dt,
                                          params, settings.dynamics);
      } else {
        states.assign(t_rabi_grid.size(), TwoQubitState{});
      }
      std::vector<double> on, off;
      for (const TwoQubitState& s : states) {
        const Probabilities p = observe(s, settings, result.points.size());
        result.points.push_back(p);
        on.push_back(driven == Qubit::a ? p_ix(p) : p_xi(p));
        off.push_back(driven == Qubit::a ? p_xi(p) : p_ix(p));
      }
      const CrosstalkRatio r = crosstalk_ratio(t_rabi_grid, on, off);
      ratios.push_back({{"bias_uA", bias * 1e6},
                        {"omega_c_MHz", std::abs(coupling_strength(params, bias)) / kTwoPi / kMHz},
                        {"driven", driven == Qubit::a ? "A" : "B"},
                        {"ratio", r.ratio},
                        {"frequency_MHz", r.frequency / kMHz},
                        {"driven_amplitude", r.driven_amplitude},
                        {"undriven_amplitude", r.undriven_amplitude},
                        {"undriven_below_noise", r.undriven_below_noise}});
    }
  }
  result.fits["ratios"] = ratios;
  result.check();
  return result;
}

ExperimentResult run_swap_chevron(double i_cb_on, const std::vector<double>& delta_grid,
                                  const std::vector<double>& t_swap_grid, const DeviceParams& params,
                                  const SimSettings& settings, const SwapTiming& timing) {
  require_nonempty(delta_grid, "delta");
  require_nonempty(t_swap_grid, "t_swap");
  ExperimentResult result;
  result.name = "chevron";
  result.seed = settings.seed;
  result.axes = {{"delta_MHz", scaled(delta_grid, 1.0 / kMHz)}, {"t_swap_ns", scaled(t_swap_grid, 1e9)}};

  const double omega = std::abs(coupling_strength(params, i_cb_on)) / kTwoPi;
  result.fits["omega_c_MHz"] = omega / kMHz;
  json rows = json::array();
  for (double delta : delta_grid) {
    std::vector<double> trace;
    for (double t : t_swap_grid) {
      const PulseSequence seq = build_swap_sequence(delta, i_cb_on, t, params, timing);
      const Probabilities p = observe(run_sequence(seq, params, settings), settings, result.points.size());
      result.points.push_back(p);
      trace.push_back(normalized_p01(p));
    }
    json row{{"delta_MHz", delta / kMHz}, {"expected_MHz", std::hypot(delta, omega) / kMHz}};
    try {
      const DampedSineFit fit = fit_damped_sine(t_swap_grid, trace);
      row["frequency_MHz"] = fit.frequency / kMHz;
      row["amplitude"] = fit.amplitude;
      row["decay_time_ns"] = decay_json(fit.decay_time);
      row["residual_rms"] = fit.residual_rms;
      row["status"] = "fitted";
    } catch (const FitDiverged& e) {
      row["status"] = "unresolved";
      row["reason"] = e.what();
    }
    rows.push_back(row);
  }
  result.fits["rows"] = rows;
  result.check();
  return result;
}

std::vector<CouplingPoint> run_coupling_curve(const std::vector<double>& i_cb_grid, const DeviceParams& params,
                                              const SimSettings& settings, const CouplingCurveOptions& options) {
  if (options.trace_points < 8) throw std::invalid_argument("coupling curve needs >= 8 trace points");
  std::vector<CouplingPoint> out;
  std::size_t index = 0;
  for (double bias : i_cb_grid) {
    CouplingPoint point;
    point.bias = bias;
    point.theory = std::abs(coupling_strength(params, bias)) / kTwoPi;
    point.decay_limited = params.t1_a * kTwoPi * point.theory < kTwoPi;

    const double window = point.theory > 0.0
                              ? std::clamp(options.periods / point.theory, options.min_window, options.max_window)
                              : options.max_window;
    // From two edge lengths on, the edges only shift the trace in time.
    const double t0 = 2.0 * options.timing.rise_fall;
    std::vector<double> t(static_cast<std::size_t>(options.trace_points));
    for (std::size_t k = 0; k < t.size(); ++k) {
      t[k] = t0 + window * static_cast<double>(k) / static_cast<double>(t.size() - 1);
    }
    std::vector<double> trace;
    for (double ts : t) {
      const PulseSequence seq = build_swap_sequence(0.0, bias, ts, params, options.timing);
      trace.push_back(normalized_p01(observe(run_sequence(seq, params, settings), settings, index++)));
    }
    try {
      point.fitted = fit_damped_sine(t, trace).frequency;
    } catch (const FitDiverged&) {
      // Small-angle estimate from the end of the window: P = sin^2(Omega t / 2).
      point.sub_period = true;
      const double p_end = std::clamp(trace.back(), 0.0, 1.0);
      point.fitted = 2.0 * std::asin(std::sqrt(p_end)) / (kTwoPi * (t.back() - options.timing.rise_fall));
    }
    point.below_floor = point.fitted < options.resolution_floor;
    out.push_back(point);
  }
  return out;
}

// ---------------------------------------------------------------------------

Resolvability f_test(const std::vector<double>& t, const std::vector<double>& observed,
                     const std::vector<double>& noise_free, double frequency, double t1, std::int64_t shots,
                     double threshold) {
  const std::size_t m = t.size();
  if (m < 5 || observed.size() != m || noise_free.size() != m) {
    throw std::invalid_argument("F-test needs >= 5 matching points");
  }
  if (shots < 1) throw std::invalid_argument("F-test needs shots >= 1");

  auto residuals = [&](const std::vector<double>& y) {
    const auto n = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd decay(n, 2), sine(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ti = t[static_cast<std::size_t>(i)];
      const double e = std::exp(-ti / t1);
      decay(i, 0) = sine(i, 0) = 1.0;
      decay(i, 1) = e;
      sine(i, 1) = e * std::cos(kTwoPi * frequency * ti);
      sine(i, 2) = e * std::sin(kTwoPi * frequency * ti);
      b(i) = y[static_cast<std::size_t>(i)];
    }
    const double rd = (decay * decay.colPivHouseholderQr().solve(b) - b).squaredNorm();
    const double rs = (sine * sine.colPivHouseholderQr().solve(b) - b).squaredNorm();
    return std::pair{rd, rs};
  };

  Resolvability out;
  const auto [rd, rs] = residuals(observed);
  const double gain = rd - rs;
  if (gain > 0.0 && rs > 0.0) {
    out.f_ratio = gain / (rs / static_cast<double>(m - 3));
  } else if (gain > 1e-300 && rs == 0.0) {
    out.f_ratio = std::numeric_limits<double>::infinity();
  }

  const auto [rd0, rs0] = residuals(noise_free);
  double variance = 0.0;
  for (double p : noise_free) variance += std::clamp(p, 0.0, 1.0) * (1.0 - std::clamp(p, 0.0, 1.0));
  variance /= static_cast<double>(m) * static_cast<double>(shots);
  // Half a count of resolution keeps an all-zero trace finite.
  const double floor = 0.25 / (static_cast<double>(shots) * static_cast<double>(shots));
  out.expected_f_ratio = 1.0 + std::max(rd0 - rs0, 0.0) / std::max(variance, floor);
  out.resolvable = out.f_ratio >= threshold;
  return out;
}

MinCouplingStudy run_min_coupling_study(const std::vector<double>& omega_c_list, double t1,
                                        const std::vector<double>& t_grid, const DeviceParams& params,
                                        const SimSettings& settings, const MinCouplingOptions& options) {
  require_nonempty(omega_c_list, "coupling");
  require_nonempty(t_grid, "time");
  DeviceParams device = params;
  device.t1_a = device.t1_b = t1;
  SimSettings sampled = settings;
  if (!sampled.shots) sampled.shots = options.shots;

  MinCouplingStudy study;
  ExperimentResult& result = study.traces;
  result.name = "min-coupling";
  result.seed = settings.seed;
  result.axes = {{"omega_c_MHz", scaled(omega_c_list, 1.0 / kMHz)}, {"t_ns", scaled(t_grid, 1e9)}};

  json verdicts = json::array();
  for (double omega : omega_c_list) {
    ControlSnapshot snapshot;
    snapshot.omega_c = -kTwoPi * omega;
    const auto states = propagate_constant_trace(TwoQubitState::basis(1, 0), snapshot, t_grid, settings.dt, device,
                                                 settings.dynamics);
    std::vector<double> observed, ideal;
    for (const TwoQubitState& s : states) {
      ideal.push_back(measure_probabilities(s, settings.measurement)(basis_index(0, 1)));
      const Probabilities p = observe(s, sampled, result.points.size());
      result.points.push_back(p);
      observed.push_back(p(basis_index(0, 1)));
    }
    const Resolvability r = f_test(t_grid, observed, ideal, omega, t1, *sampled.shots, options.threshold);
    study.verdicts.push_back(r);
    json f = r.f_ratio;
    if (!std::isfinite(r.f_ratio)) f = "inf";
    verdicts.push_back({{"omega_c_MHz", omega / kMHz},
                        {"f_ratio", f},
                        {"expected_f_ratio", r.expected_f_ratio},
                        {"resolvable", r.resolvable}});
  }
  result.fits["threshold"] = options.threshold;
  result.fits["shots"] = *sampled.shots;
  result.fits["t1_ns"] = t1 / 1e-9;
  result.fits["verdicts"] = verdicts;
  result.check();
  return study;
}

}  // namespace tcoupler
