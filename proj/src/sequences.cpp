#include "tcoupler/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tcoupler {

std::string to_string(ChannelId id) {
  switch (id) {
    case ChannelId::z_a: return "z_a";
    case ChannelId::z_b: return "z_b";
    case ChannelId::uw_a: return "uw_a";
    case ChannelId::uw_b: return "uw_b";
    case ChannelId::coupler: return "coupler";
  }
  return "unknown";
}

std::string to_string(Shape shape) {
  switch (shape) {
    case Shape::constant: return "constant";
    case Shape::linear_ramp: return "linear_ramp";
    case Shape::flat_with_rise_fall: return "flat_with_rise_fall";
    case Shape::gaussian_pulse: return "gaussian_pulse";
  }
  return "unknown";
}

double Segment::envelope(double t) const {
  const double tau = t - t_start;
  switch (shape) {
    case Shape::constant:
      return 1.0;
    case Shape::linear_ramp:
      return std::clamp(tau / duration, 0.0, 1.0);
    case Shape::flat_with_rise_fall: {
      if (rise_fall <= 0.0) return 1.0;
      const double edge = std::min(tau, duration - tau);
      if (edge >= rise_fall) return 1.0;
      if (edge <= 0.0) return 0.0;
      return 0.5 * (1.0 - std::cos(std::numbers::pi * edge / rise_fall));
    }
    case Shape::gaussian_pulse: {
      const double sigma = duration / 4.0;
      const double x = (tau - 0.5 * duration) / sigma;
      return std::exp(-0.5 * x * x);
    }
  }
  return 0.0;
}

double Segment::settled() const {
  switch (shape) {
    case Shape::constant:
    case Shape::linear_ramp:
      return level;
    case Shape::flat_with_rise_fall:
    case Shape::gaussian_pulse:
      return base;
  }
  return base;
}

void Segment::check() const {
  if (!(duration > 0.0) || !std::isfinite(duration)) throw std::invalid_argument("segment duration must be > 0");
  if (!std::isfinite(t_start) || !std::isfinite(level) || !std::isfinite(base) || !std::isfinite(phase)) {
    throw std::invalid_argument("segment fields must be finite");
  }
  if (rise_fall < 0.0 || rise_fall > 0.5 * duration * (1.0 + 1e-12)) {
    throw std::invalid_argument("segment rise_fall must lie in [0, duration/2]");
  }
}

namespace {

void append_checked(std::vector<Segment>& list, const Segment& segment) {
  segment.check();
  if (!list.empty() && segment.t_start < list.back().end() - 1e-18) {
    throw std::invalid_argument("segments must be sorted and non-overlapping");
  }
  list.push_back(segment);
}

const Segment* active(const std::vector<Segment>& list, double t) {
  auto it = std::upper_bound(list.begin(), list.end(), t,
                             [](double time, const Segment& s) { return time < s.t_start; });
  if (it == list.begin()) return nullptr;
  return &*std::prev(it);
}

double layer_value(const std::vector<Segment>& list, double t) {
  const Segment* s = active(list, t);
  if (s == nullptr) return 0.0;
  return t < s->end() ? s->value(t) : s->settled();
}

}  // namespace

Channel& Channel::add(const Segment& segment) {
  append_checked(segments, segment);
  return *this;
}

Channel& Channel::add_offset(const Segment& segment) {
  append_checked(offsets, segment);
  return *this;
}

double Channel::value(double t) const { return layer_value(segments, t) + layer_value(offsets, t); }

double Channel::phase(double t) const {
  const Segment* s = active(segments, t);
  return s == nullptr ? 0.0 : s->phase;
}

void PulseSequence::check() const {
  if (!(total_duration >= 0.0)) throw std::invalid_argument("total_duration must be >= 0");
  if (!(measurement_time <= total_duration * (1.0 + 1e-12) + 1e-18)) {
    throw std::invalid_argument("measurement_time must not exceed total_duration");
  }
  for (const Channel& c : channels) {
    for (const Segment& s : c.segments) {
      if (s.end() > total_duration * (1.0 + 1e-9) + 1e-18) {
        throw std::invalid_argument("segment on " + to_string(c.id) + " extends past total_duration");
      }
    }
  }
}

double qubit_frequency(const PulseSequence& seq, const DeviceParams& params, int qubit, double t) {
  const double idle = qubit == 0 ? params.f10_a : params.f10_b;
  const ChannelId z = qubit == 0 ? ChannelId::z_a : ChannelId::z_b;
  return idle + seq.channel(z).value(t) + params.bias_shift_coeff * seq.channel(ChannelId::coupler).value(t);
}

ControlTrack sample(const PulseSequence& seq, double dt, const DeviceParams& params) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample needs dt > 0");
  seq.check();
  ControlTrack track;
  if (seq.total_duration <= 0.0) {
    track.dt = dt;
    return track;
  }
  const auto n = static_cast<std::size_t>(std::ceil(seq.total_duration / dt - 1e-9));
  track.dt = seq.total_duration / static_cast<double>(n);
  track.steps.reserve(n);

  const double frame = params.f10_a + seq.frame_offset;
  const Channel& uw_a = seq.channel(ChannelId::uw_a);
  const Channel& uw_b = seq.channel(ChannelId::uw_b);
  const Channel& coupler = seq.channel(ChannelId::coupler);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * track.dt;
    ControlSnapshot s;
    s.detune_a = kTwoPi * (qubit_frequency(seq, params, 0, t) - frame);
    s.detune_b = kTwoPi * (qubit_frequency(seq, params, 1, t) - frame);
    s.rabi_a = uw_a.value(t);
    s.phase_a = uw_a.phase(t);
    s.rabi_b = uw_b.value(t);
    s.phase_b = uw_b.phase(t);
    s.omega_c = coupling_strength(params, coupler.value(t));
    track.steps.push_back(s);
  }
  return track;
}

Segment pi_pulse(ChannelId qubit, double duration, double t_start, double phase) {
  if (qubit != ChannelId::uw_a && qubit != ChannelId::uw_b) {
    throw std::invalid_argument("pi pulses go on a microwave channel");
  }
  if (!(duration > 0.0)) throw std::invalid_argument("pi pulse duration must be > 0");
  const double sigma = duration / 4.0;
  // Integral of exp(-x^2 / 2 sigma^2) over |x| <= 2 sigma.
  const double area = sigma * std::sqrt(kTwoPi) * std::erf(std::numbers::sqrt2);
  Segment s;
  s.t_start = t_start;
  s.duration = duration;
  s.shape = Shape::gaussian_pulse;
  s.level = std::numbers::pi / area;
  s.phase = phase;
  return s;
}

std::pair<std::vector<Segment>, std::vector<Segment>> compensation_offsets(const Channel& coupler,
                                                                           const DeviceParams& params) {
  std::pair<std::vector<Segment>, std::vector<Segment>> out;
  const bool idle = std::all_of(coupler.segments.begin(), coupler.segments.end(),
                                [](const Segment& s) { return s.level == 0.0 && s.base == 0.0; });
  if (idle) return out;
  for (Segment s : coupler.segments) {
    s.level *= -params.bias_shift_coeff;
    s.base *= -params.bias_shift_coeff;
    s.phase = 0.0;
    out.first.push_back(s);
    out.second.push_back(s);
  }
  return out;
}

void apply_compensation(PulseSequence& seq, const DeviceParams& params) {
  auto [a, b] = compensation_offsets(seq.channel(ChannelId::coupler), params);
  seq.channel(ChannelId::z_a).offsets = std::move(a);
  seq.channel(ChannelId::z_b).offsets = std::move(b);
}

namespace {

Segment constant(double t_start, double duration, double level) {
  Segment s;
  s.t_start = t_start;
  s.duration = duration;
  s.shape = Shape::constant;
  s.level = level;
  return s;
}

Segment square(double t_start, double duration, double level, double phase) {
  Segment s;
  s.t_start = t_start;
  s.duration = duration;
  s.shape = Shape::flat_with_rise_fall;
  s.level = level;
  s.phase = phase;
  return s;
}

Segment pulse(double t_start, double duration, double base, double level, double rise_fall) {
  Segment s;
  s.t_start = t_start;
  s.duration = duration;
  s.shape = Shape::flat_with_rise_fall;
  s.base = base;
  s.level = level;
  s.rise_fall = rise_fall;
  return s;
}

}  // namespace

PulseSequence build_spectroscopy_sequence(double delta, double f_probe_offset, double probe_amp, double i_cb,
                                          const DeviceParams& params, const SpectroscopyTiming& timing) {
  PulseSequence seq;
  const double t = timing.probe_duration;
  seq.total_duration = t;
  seq.measurement_time = t;
  seq.frame_offset = f_probe_offset;
  seq.channel(ChannelId::z_b).add(constant(0.0, t, params.f10_a - delta - params.f10_b));
  seq.channel(ChannelId::coupler).add(constant(0.0, t, i_cb));
  seq.channel(ChannelId::uw_a).add(square(0.0, t, probe_amp, 0.0));
  seq.channel(ChannelId::uw_b).add(square(0.0, t, probe_amp, timing.probe_phase_b));
  apply_compensation(seq, params);
  return seq;
}

PulseSequence build_crosstalk_sequence(Qubit driven, double t_rabi, double i_cb, const DeviceParams& params,
                                       const CrosstalkTiming& timing) {
  PulseSequence seq;
  seq.total_duration = t_rabi;
  seq.measurement_time = t_rabi;
  seq.frame_offset = driven == Qubit::a ? 0.0 : -timing.idle_detuning;
  if (t_rabi <= 0.0) return seq;
  seq.channel(ChannelId::z_b).add(constant(0.0, t_rabi, params.f10_a - timing.idle_detuning - params.f10_b));
  seq.channel(ChannelId::coupler).add(constant(0.0, t_rabi, i_cb));
  seq.channel(driven == Qubit::a ? ChannelId::uw_a : ChannelId::uw_b).add(square(0.0, t_rabi, timing.rabi_amp, 0.0));
  apply_compensation(seq, params);
  return seq;
}

PulseSequence build_swap_sequence(double delta, double i_cb_on, double t_swap, const DeviceParams& params,
                                  const SwapTiming& timing) {
  if (t_swap < 0.0) throw std::invalid_argument("t_swap must be >= 0");
  const double off = zero_coupling_bias(params).bias;
  const double z_idle = params.f10_a - timing.idle_detuning - params.f10_b;
  const double z_on = params.f10_a - delta - params.f10_b;
  const double t_pulse = timing.pi_duration;
  const double window = t_swap;
  const double edge = std::min(timing.rise_fall, 0.5 * window);
  // B reaches its detuning before the coupler opens and leaves after it closes.
  const double z_edge = timing.rise_fall;
  const double t_on = t_pulse + z_edge;
  const double t_after = t_on + window + z_edge;

  PulseSequence seq;
  seq.total_duration = t_after + timing.settle;
  seq.measurement_time = seq.total_duration;

  Channel& coupler = seq.channel(ChannelId::coupler);
  Channel& z_b = seq.channel(ChannelId::z_b);
  coupler.add(constant(0.0, t_on, off));
  z_b.add(constant(0.0, t_pulse, z_idle));
  if (t_after > t_pulse) z_b.add(pulse(t_pulse, t_after - t_pulse, z_idle, z_on, z_edge));
  if (window > 0.0) coupler.add(pulse(t_on, window, off, i_cb_on, edge));
  if (seq.total_duration > t_on + window) coupler.add(constant(t_on + window, seq.total_duration - t_on - window, off));
  if (timing.settle > 0.0) z_b.add(constant(t_after, timing.settle, z_idle));
  seq.channel(ChannelId::uw_a).add(pi_pulse(ChannelId::uw_a, t_pulse));
  apply_compensation(seq, params);
  return seq;
}

}  // namespace tcoupler
