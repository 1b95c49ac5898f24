#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tcoupler/sequences.hpp"

using namespace tcoupler;

namespace {

constexpr double kMHz = kTwoPi * 1e6;

Segment make(Shape shape, double t0, double duration, double level, double base = 0.0, double rise_fall = 0.0) {
  Segment s;
  s.shape = shape;
  s.t_start = t0;
  s.duration = duration;
  s.level = level;
  s.base = base;
  s.rise_fall = rise_fall;
  return s;
}

Probabilities run(const PulseSequence& seq, const DeviceParams& p, double dt = kDefaultDt) {
  return measure_probabilities(propagate(TwoQubitState{}, sample(seq, dt, p), p));
}

// Single-qubit rotating-frame propagation of |0> under a real envelope, by
// composing exact 2x2 rotations; independent of the two-qubit engine.
double single_qubit_excitation(const Segment& s, double phase, int steps) {
  using C = std::complex<double>;
  C a0 = 1.0, a1 = 0.0;
  const double h = s.duration / steps;
  for (int k = 0; k < steps; ++k) {
    const double theta = s.value(s.t_start + (k + 0.5) * h) * h / 2.0;
    const C upper = C(0.0, -1.0) * std::sin(theta) * std::polar(1.0, -phase);
    const C lower = C(0.0, -1.0) * std::sin(theta) * std::polar(1.0, phase);
    const C b0 = std::cos(theta) * a0 + upper * a1;
    const C b1 = lower * a0 + std::cos(theta) * a1;
    a0 = b0;
    a1 = b1;
  }
  return std::norm(a1);
}

}  // namespace

TEST_CASE("segment envelopes") {
  const Segment ramp = make(Shape::linear_ramp, 1.0, 2.0, 4.0, 2.0);
  CHECK(ramp.value(1.0) == 2.0);
  CHECK(ramp.value(2.0) == 3.0);
  CHECK(ramp.settled() == 4.0);

  const Segment flat = make(Shape::flat_with_rise_fall, 0.0, 10.0, 1.0, 0.2, 2.0);
  CHECK(flat.value(0.0) == doctest::Approx(0.2));
  CHECK(flat.value(1.0) == doctest::Approx(0.6));
  CHECK(flat.value(5.0) == 1.0);
  CHECK(flat.value(9.0) == doctest::Approx(0.6));
  CHECK(flat.settled() == 0.2);

  const Segment g = make(Shape::gaussian_pulse, 0.0, 8.0, 1.0);
  CHECK(g.value(4.0) == 1.0);
  CHECK(g.value(0.0) == doctest::Approx(std::exp(-2.0)));

  CHECK_THROWS(make(Shape::constant, 0.0, 0.0, 1.0).check());
  CHECK_THROWS(make(Shape::flat_with_rise_fall, 0.0, 2.0, 1.0, 0.0, 1.5).check());
}

TEST_CASE("channels hold the last value across gaps") {
  Channel c;
  c.add(make(Shape::constant, 0.0, 1.0, 3.0));
  c.add(make(Shape::linear_ramp, 2.0, 1.0, 5.0, 1.0));
  CHECK(c.value(-1.0) == 0.0);
  CHECK(c.value(1.5) == 3.0);
  CHECK(c.value(2.5) == 3.0);
  CHECK(c.value(7.0) == 5.0);
  CHECK_THROWS(c.add(make(Shape::constant, 2.5, 1.0, 0.0)));
}

TEST_CASE("sampling") {
  SUBCASE("empty sequence on a balanced device samples to zero") {
    DeviceParams p = default_device();
    p.f10_b = p.f10_a;
    p.l_offset = junction_inductance(p, 0.0) - p.m;
    PulseSequence seq;
    seq.total_duration = 10e-9;
    const ControlTrack track = sample(seq, 1e-9, p);
    REQUIRE(track.steps.size() == 10);
    for (const auto& s : track.steps) {
      CHECK(s.detune_a == 0.0);
      CHECK(s.detune_b == 0.0);
      CHECK(s.rabi_a == 0.0);
      CHECK(s.rabi_b == 0.0);
      CHECK(std::abs(s.omega_c) < 1e-6);
    }
  }

  SUBCASE("coupler pulse plateau and ramps") {
    const DeviceParams p = calibrated_device();
    const double b = 0.7 * p.i_c0;
    PulseSequence seq;
    seq.total_duration = 20e-9;
    seq.channel(ChannelId::coupler).add(make(Shape::flat_with_rise_fall, 0.0, 20e-9, b, 0.0, 2e-9));
    const ControlTrack track = sample(seq, 0.1e-9, p);
    const double lo = coupling_strength(p, 0.0), hi = coupling_strength(p, b);
    for (std::size_t k = 0; k < track.steps.size(); ++k) {
      const double t = (k + 0.5) * track.dt;
      const double w = track.steps[k].omega_c;
      if (t > 2e-9 && t < 18e-9) {
        CHECK(w == hi);
      } else {
        CHECK(w < lo);
        CHECK(w > hi);
      }
    }
  }

  SUBCASE("refining dt is consistent") {
    const DeviceParams p = calibrated_device();
    PulseSequence seq;
    seq.total_duration = 10e-9;
    seq.channel(ChannelId::z_b).add(make(Shape::constant, 0.0, 4e-9, 30e6));
    seq.channel(ChannelId::z_b).add(make(Shape::linear_ramp, 4e-9, 6e-9, -30e6, 30e6));
    const ControlTrack coarse = sample(seq, 0.2e-9, p);
    const ControlTrack fine = sample(seq, 0.1e-9, p);
    const double slope = kTwoPi * 60e6 / 6e-9;
    for (std::size_t k = 0; k < coarse.steps.size(); ++k) {
      const double t = (k + 0.5) * coarse.dt;
      const double diff = std::abs(coarse.steps[k].detune_b - fine.steps[2 * k].detune_b);
      if (t < 4e-9 - coarse.dt) {
        CHECK(diff == 0.0);
      } else {
        CHECK(diff <= slope * coarse.dt / 2 * (1 + 1e-9));
      }
    }
    const ControlTrack again = sample(seq, 0.2e-9, p);
    CHECK(again.steps == coarse.steps);
  }
}

TEST_CASE("pi pulse") {
  const Segment pulse = pi_pulse(ChannelId::uw_a, 10e-9);
  double area = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) area += pulse.value((k + 0.5) * 10e-9 / n) * 10e-9 / n;
  CHECK(std::abs(area - std::numbers::pi) <= 1e-6);

  CHECK(single_qubit_excitation(pulse, 0.0, 2000) >= 0.999);
  CHECK(single_qubit_excitation(pulse, std::numbers::pi / 2, 2000) ==
        doctest::Approx(single_qubit_excitation(pulse, 0.0, 2000)).epsilon(1e-12));
  Segment half = pulse;
  half.level /= 2;
  CHECK(single_qubit_excitation(half, 0.0, 2000) == doctest::Approx(0.5).epsilon(1e-4));

  DeviceParams p = calibrated_device();
  PulseSequence seq;
  seq.total_duration = 10e-9;
  seq.channel(ChannelId::uw_a).add(pulse);
  seq.channel(ChannelId::z_b).add(make(Shape::constant, 0.0, 10e-9, -200e6 + p.f10_a - p.f10_b));
  p.t1_a = p.t1_b = std::numeric_limits<double>::infinity();
  CHECK(run(seq, p)(basis_index(1, 0)) >= 0.999);
  for (double d : {5e-9, 20e-9, 50e-9}) {
    CHECK(single_qubit_excitation(pi_pulse(ChannelId::uw_b, d), 0.0, 4000) >= 0.999);
  }
  CHECK_THROWS(pi_pulse(ChannelId::coupler, 10e-9));
}

TEST_CASE("compensation keeps qubit frequencies constant") {
  const DeviceParams p = calibrated_device();
  SUBCASE("idle coupler needs no offsets") {
    Channel c{ChannelId::coupler, {}, {}};
    c.add(make(Shape::constant, 0.0, 1e-9, 0.0));
    const auto [a, b] = compensation_offsets(c, p);
    CHECK(a.empty());
    CHECK(b.empty());
  }
  SUBCASE("step") {
    Channel c{ChannelId::coupler, {}, {}};
    c.add(make(Shape::constant, 0.0, 1e-9, 0.9e-6));
    const auto [a, b] = compensation_offsets(c, p);
    REQUIRE(a.size() == 1);
    CHECK(a[0].level == doctest::Approx(-p.bias_shift_coeff * 0.9e-6));
  }
  SUBCASE("random waveforms") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> bias(-0.9 * p.i_c0, 0.9 * p.i_c0);
    std::uniform_real_distribution<double> len(1e-9, 20e-9);
    for (int trial = 0; trial < 20; ++trial) {
      PulseSequence seq;
      Channel& coupler = seq.channel(ChannelId::coupler);
      double t = 0.0;
      for (int k = 0; k < 8; ++k) {
        const double d = len(rng);
        const auto shape = static_cast<Shape>(k % 4);
        coupler.add(make(shape, t, d, bias(rng), bias(rng), shape == Shape::flat_with_rise_fall ? d / 3 : 0.0));
        t += d + (k % 3 == 0 ? 2e-9 : 0.0);
      }
      seq.total_duration = t + 5e-9;
      seq.channel(ChannelId::z_b).add(make(Shape::constant, 0.0, seq.total_duration, -40e6));
      apply_compensation(seq, p);
      for (int k = 0; k <= 2000; ++k) {
        const double at = seq.total_duration * k / 2000.0;
        CHECK(std::abs(qubit_frequency(seq, p, 0, at) - p.f10_a) <= 1e-9 * p.f10_a);
        CHECK(std::abs(qubit_frequency(seq, p, 1, at) - (p.f10_b - 40e6)) <= 1e-9 * p.f10_b);
      }
    }
  }
}

TEST_CASE("crosstalk sequence") {
  const DeviceParams p = calibrated_device();
  const PulseSequence empty = build_crosstalk_sequence(Qubit::a, 0.0, 0.5e-6, p);
  CHECK(run(empty, p)(basis_index(0, 0)) == 1.0);

  const PulseSequence seq = build_crosstalk_sequence(Qubit::b, 100e-9, 0.5e-6, p);
  CHECK(seq.channel(ChannelId::uw_a).segments.empty());
  for (int k = 0; k <= 100; ++k) {
    const double t = 1e-9 * k;
    CHECK(seq.channel(ChannelId::uw_a).value(t) == 0.0);
    CHECK(seq.channel(ChannelId::coupler).value(t) == 0.5e-6);
  }
  const ControlTrack track = sample(seq, kDefaultDt, p);
  CHECK(track.steps.front().detune_b == 0.0);
  CHECK(track.steps.front().detune_a == doctest::Approx(kTwoPi * 200e6));
}

TEST_CASE("spectroscopy sequence") {
  const DeviceParams p = calibrated_device();
  const double off = zero_coupling_bias(p).bias;
  const double amp = kMHz * 1.5;
  SpectroscopyTiming timing;

  const double far = run(build_spectroscopy_sequence(100e6, 40e6, amp, off, p, timing), p)
                         .tail<3>()
                         .sum();
  CHECK(far < 0.01);
  const Probabilities on = run(build_spectroscopy_sequence(100e6, 0.0, amp, off, p, timing), p);
  CHECK(on(basis_index(1, 0)) + on(basis_index(1, 1)) > 0.2);
  const Probabilities b_line = run(build_spectroscopy_sequence(100e6, -100e6, amp, off, p, timing), p);
  CHECK(b_line(basis_index(0, 1)) + b_line(basis_index(1, 1)) > 0.2);
}

TEST_CASE("swap sequence") {
  const DeviceParams p = calibrated_device();
  const double on = bias_for_coupling(p, -kMHz * 40.0);
  const double off = zero_coupling_bias(p).bias;

  DeviceParams ideal = p;
  ideal.t1_a = ideal.t1_b = std::numeric_limits<double>::infinity();
  const Probabilities idle = run(build_swap_sequence(0.0, on, 0.0, ideal), ideal);
  CHECK(idle(basis_index(1, 0)) >= 0.99);
  CHECK(idle(basis_index(0, 1)) < 0.01);
  const Probabilities lossy = run(build_swap_sequence(0.0, on, 0.0, p), p);
  // Excited for roughly half the pi pulse, both detuning edges and the settle time.
  CHECK(lossy(basis_index(1, 0)) == doctest::Approx(std::exp(-11e-9 / p.t1_a)).epsilon(3e-3));

  double best = 0.0, at_quarter = 0.0;
  for (int k = 0; k <= 30; ++k) {
    const double t = 0.5e-9 * k;
    const double p01 = run(build_swap_sequence(0.0, on, t, p), p)(basis_index(0, 1));
    best = std::max(best, p01);
    if (k == 25) at_quarter = p01;
  }
  CHECK(best > 0.9);
  CHECK(at_quarter > 0.8 * best);

  for (double t : {50e-9, 200e-9, 500e-9}) {
    CHECK(run(build_swap_sequence(0.0, off, t, p), p)(basis_index(0, 1)) < 0.03);
  }
  CHECK_THROWS(build_swap_sequence(0.0, on, -1e-9, p));
}

TEST_CASE("swap transfer is even in the detuning sign") {
  const DeviceParams p = calibrated_device();
  const double on = bias_for_coupling(p, -kMHz * 27.0);
  for (double delta : {15e6, 45e6, 100e6}) {
    for (double t : {7e-9, 31e-9, 88e-9}) {
      const double plus = run(build_swap_sequence(delta, on, t, p), p)(basis_index(0, 1));
      const double minus = run(build_swap_sequence(-delta, on, t, p), p)(basis_index(0, 1));
      CHECK(std::abs(plus - minus) < 1e-3);
    }
  }
}
