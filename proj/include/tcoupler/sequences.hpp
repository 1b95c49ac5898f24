#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "tcoupler/device.hpp"
#include "tcoupler/dynamics.hpp"

namespace tcoupler {

enum class ChannelId { z_a, z_b, uw_a, uw_b, coupler };
enum class Shape { constant, linear_ramp, flat_with_rise_fall, gaussian_pulse };

std::string to_string(ChannelId id);
std::string to_string(Shape shape);

/// One piece of a channel waveform. Units follow the channel: Hz of frequency
/// shift on z channels, rad/s of Rabi rate on uw channels, A on the coupler.
///
/// value(t) = base + (level - base) * envelope(t - t_start), where the envelope
/// is 1 for constant, a linear 0->1 ramp for linear_ramp, a raised-cosine
/// 0->1->0 trapezoid for flat_with_rise_fall and a Gaussian truncated at
/// +-2 sigma (sigma = duration / 4) for gaussian_pulse.
struct Segment {
  double t_start = 0.0;
  double duration = 0.0;
  Shape shape = Shape::constant;
  double level = 0.0;
  double base = 0.0;
  double rise_fall = 0.0;
  double phase = 0.0;

  double end() const { return t_start + duration; }
  double envelope(double t) const;
  double value(double t) const { return base + (level - base) * envelope(t); }
  /// Value held after the segment ends until the next one starts.
  double settled() const;
  void check() const;
};

struct Channel {
  ChannelId id = ChannelId::z_a;
  std::vector<Segment> segments;
  /// Additive layer on top of `segments` (used for coupler compensation on z channels).
  std::vector<Segment> offsets;

  /// Appends a segment; segments must be added in time order without overlap.
  Channel& add(const Segment& segment);
  Channel& add_offset(const Segment& segment);

  double value(double t) const;
  double phase(double t) const;
};

struct PulseSequence {
  std::array<Channel, 5> channels{
      Channel{ChannelId::z_a, {}, {}}, Channel{ChannelId::z_b, {}, {}}, Channel{ChannelId::uw_a, {}, {}},
      Channel{ChannelId::uw_b, {}, {}}, Channel{ChannelId::coupler, {}, {}}};
  double total_duration = 0.0;
  double measurement_time = 0.0;
  /// Rotating-frame frequency relative to qubit A's idle frequency, Hz. Drives
  /// are resonant with the frame.
  double frame_offset = 0.0;

  Channel& channel(ChannelId id) { return channels[static_cast<std::size_t>(id)]; }
  const Channel& channel(ChannelId id) const { return channels[static_cast<std::size_t>(id)]; }
  void check() const;
};

/// Modeled qubit transition frequency (Hz) at time t: idle frequency + z channel
/// (including compensation) + bias_shift_coeff * coupler bias.
double qubit_frequency(const PulseSequence& seq, const DeviceParams& params, int qubit, double t);

/// Midpoint samples of every channel on steps no longer than dt. Coupler bias is
/// mapped through coupling_strength; detunings are taken against the frame.
ControlTrack sample(const PulseSequence& seq, double dt, const DeviceParams& params);

/// Gaussian pi pulse for a uw channel: truncated at +-2 sigma, sigma = duration/4,
/// amplitude chosen so the envelope integrates to pi.
Segment pi_pulse(ChannelId qubit, double duration, double t_start = 0.0, double phase = 0.0);

/// Z offsets that cancel bias_shift_coeff * I_cb(t) on both qubits, mirroring the
/// coupler segments one for one. Returns {qubit A offsets, qubit B offsets}.
std::pair<std::vector<Segment>, std::vector<Segment>> compensation_offsets(const Channel& coupler,
                                                                           const DeviceParams& params);

/// Installs compensation_offsets on both z channels.
void apply_compensation(PulseSequence& seq, const DeviceParams& params);

struct SpectroscopyTiming {
  double probe_duration = 2e-6;
  double probe_phase_b = 1.5707963267948966;  // keeps both dressed lines bright at zero detuning
};

/// Static coupler at i_cb, qubit B parked delta (Hz) below qubit A, weak probes
/// on both qubits at f10_a + f_probe_offset, measurement at the end.
PulseSequence build_spectroscopy_sequence(double delta, double f_probe_offset, double probe_amp, double i_cb,
                                          const DeviceParams& params, const SpectroscopyTiming& timing = {});

enum class Qubit { a, b };

struct CrosstalkTiming {
  double rabi_amp = kTwoPi * 20e6;  // rad/s
  double idle_detuning = 200e6;     // Hz, f_A - f_B held throughout
};

/// Static coupler, qubits held idle_detuning apart, resonant Rabi drive on the
/// driven qubit for t_rabi, simultaneous measurement.
PulseSequence build_crosstalk_sequence(Qubit driven, double t_rabi, double i_cb, const DeviceParams& params,
                                       const CrosstalkTiming& timing = {});

struct SwapTiming {
  double pi_duration = 10e-9;
  double rise_fall = 2e-9;
  double settle = 2e-9;  // idle time between coupler turn-off and measurement
  double idle_detuning = 200e6;
};

/// Coupler at zero-coupling bias during a pi pulse on A; then B is stepped to
/// delta (Hz, f_A - f_B) over rise_fall, the coupler pulsed to i_cb_on for
/// t_swap (compensated), and B stepped back. The coupler's raised-cosine edges
/// sit inside t_swap and shrink to t_swap/2 for short pulses, so t_swap = 0
/// applies no interaction at all. Idle before measurement.
PulseSequence build_swap_sequence(double delta, double i_cb_on, double t_swap, const DeviceParams& params,
                                  const SwapTiming& timing = {});

}  // namespace tcoupler
