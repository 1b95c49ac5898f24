#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

#include "tcoupler/device.hpp"

using namespace tcoupler;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

// Independent 50-digit evaluation of the junction inductance and coupling,
// written from the circuit formulas without going through the library.
Big oracle_inductance(const DeviceParams& p, double i_cb) {
  const Big phi0("2.067833848e-15");
  const Big pi = boost::multiprecision::atan(Big(1)) * 4;
  const Big ic(p.i_c0), i(i_cb);
  return phi0 / (2 * pi * boost::multiprecision::sqrt(ic * ic - i * i));
}

Big oracle_coupling(const DeviceParams& p, double i_cb) {
  const Big pi = boost::multiprecision::atan(Big(1)) * 4;
  const Big series = Big(p.l_m) + Big(p.l_s);
  const Big numerator = Big(p.m) + Big(p.l_offset) - oracle_inductance(p, i_cb);
  return numerator / (series * series * 2 * pi * Big(p.f10_a) * Big(p.c));
}

constexpr double kMHzRad = kTwoPi * 1e6;

}  // namespace

TEST_CASE("junction inductance at the printed critical current") {
  const DeviceParams p = default_device();
  CHECK(junction_inductance(p, 0.0) / kPico == doctest::Approx(208.29492).epsilon(1e-7));
  CHECK(junction_inductance(p, 0.6 * p.i_c0) / kPico == doctest::Approx(260.36865).epsilon(1e-7));
  CHECK(junction_inductance(p, 0.0) / kPico == doctest::Approx(208.3).epsilon(5e-4));
  CHECK(junction_inductance(p, 0.6 * p.i_c0) / kPico == doctest::Approx(260.4).epsilon(5e-4));
  CHECK_THROWS_AS(junction_inductance(p, p.i_c0), BiasAtOrBeyondCritical);
  CHECK_THROWS_AS(junction_inductance(p, -1.2 * p.i_c0), BiasAtOrBeyondCritical);
}

TEST_CASE("junction inductance is even, monotone in |i| and diverges at i_c0") {
  const DeviceParams p = default_device();
  double prev = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double i = p.i_c0 * k / 100.0;
    const double l = junction_inductance(p, i);
    CHECK(l == junction_inductance(p, -i));
    CHECK(l > prev);
    prev = l;
  }
  CHECK(junction_inductance(p, p.i_c0 * (1 - 1e-12)) > 1e5 * junction_inductance(p, 0.0));
}

TEST_CASE("coupling strength with the printed constants") {
  const DeviceParams p = default_device();
  CHECK(coupling_strength(p, 0.0) / kMHzRad == doctest::Approx(-8.3).epsilon(0.01));
  CHECK(coupling_strength(p, 0.9 * p.i_c0) / kMHzRad == doctest::Approx(-130.9).epsilon(0.1 / 130.9));

  DeviceParams balanced = p;
  balanced.l_offset = junction_inductance(p, 0.0) - p.m;
  CHECK(std::abs(coupling_strength(balanced, 0.0)) < 1e-9 * kMHzRad);
}

TEST_CASE("coupling strength matches the 50-digit oracle") {
  for (const DeviceParams& p : {default_device(), calibrated_device()}) {
    for (double x : {-0.95, -0.4, 0.0, 0.3, 0.9}) {
      const double i = x * p.i_c0;
      const double got = coupling_strength(p, i);
      const double want = static_cast<double>(oracle_coupling(p, i));
      CHECK(std::abs(got - want) <= 1e-12 * std::abs(want));
      CHECK(std::abs(junction_inductance(p, i) - static_cast<double>(oracle_inductance(p, i))) <=
            1e-14 * junction_inductance(p, i));
    }
  }
}

TEST_CASE("coupling strength is even and decreasing in |i|") {
  const DeviceParams p = calibrated_device();
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 200; ++k) {
    const double i = 0.99 * p.i_c0 * k / 200.0;
    const double w = coupling_strength(p, i);
    CHECK(w == coupling_strength(p, -i));
    CHECK(w < prev);
    prev = w;
  }
}

TEST_CASE("templated on the scalar type") {
  const DeviceParams p = default_device();
  BasicDeviceParams<long double> q{p.c, p.l, p.l_s, p.l_m, p.m, p.l_z, p.i_c0, p.f10_a, p.f10_b, p.n_a,
                                   p.n_b, p.t1_a, p.t1_b, p.omega_c0, p.bias_shift_coeff, p.l_offset};
  const long double w = coupling_strength(q, 0.5L * q.i_c0);
  CHECK(static_cast<double>(w) == doctest::Approx(coupling_strength(p, 0.5 * p.i_c0)).epsilon(1e-14));
}

TEST_CASE("zero-coupling bias") {
  SUBCASE("m + offset = 220 pH inverts analytically") {
    DeviceParams p = default_device();
    p.l_offset = 220e-12 - p.m;
    const ZeroCouplingBias z = zero_coupling_bias(p);
    REQUIRE(z.reachable);
    const double ratio = junction_inductance(p, 0.0) / 220e-12;
    const double expected = std::sqrt(1.0 - ratio * ratio);
    CHECK(z.bias / p.i_c0 == doctest::Approx(expected).epsilon(2e-6));
    CHECK(z.bias / p.i_c0 == doctest::Approx(0.320).epsilon(0.01));
  }
  SUBCASE("printed constants cannot reach zero") {
    const ZeroCouplingBias z = zero_coupling_bias(default_device());
    CHECK_FALSE(z.reachable);
    CHECK(z.bias == 0.0);
    CHECK(z.residual == coupling_strength(default_device(), 0.0));
  }
  SUBCASE("boundary solution at zero bias") {
    DeviceParams p = default_device();
    p.m = junction_inductance(p, 0.0);
    const ZeroCouplingBias z = zero_coupling_bias(p);
    CHECK(z.reachable);
    CHECK(z.bias == 0.0);
  }
  SUBCASE("residual is tiny against the on-scale coupling") {
    for (double offset_ph : {19.0, 30.0, 80.0, 200.0}) {
      DeviceParams p = default_device();
      p.l_offset = offset_ph * kPico;
      const ZeroCouplingBias z = zero_coupling_bias(p);
      REQUIRE(z.reachable);
      const double scale = std::abs(coupling_strength(p, 0.9 * p.i_c0));
      CHECK(std::abs(coupling_strength(p, z.bias)) <= 1e-6 * scale);
    }
  }
}

TEST_CASE("bias for a target coupling") {
  const DeviceParams p = calibrated_device();
  for (double mhz : {-3.0, -11.0, -40.0, -100.0}) {
    const double bias = bias_for_coupling(p, mhz * kMHzRad);
    CHECK(coupling_strength(p, bias) / kMHzRad == doctest::Approx(mhz).epsilon(1e-9));
  }
  CHECK_THROWS_AS(bias_for_coupling(p, 5.0 * kMHzRad), NotReachable);
}

TEST_CASE("effective inductance below the junction self-resonance") {
  const DeviceParams p = default_device();
  CHECK(effective_inductance(p, 0.3e-6, 0.0) == junction_inductance(p, 0.3e-6));
  const double at6 = effective_inductance(p, 0.0, kTwoPi * 6e9);
  CHECK(1.0 - at6 / junction_inductance(p, 0.0) == doctest::Approx(0.04).epsilon(1e-12));
  const double at15 = effective_inductance(p, 0.0, kTwoPi * 15e9);
  CHECK(1.0 - at15 / junction_inductance(p, 0.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(effective_inductance(p, 2e-6, 0.0), BiasAtOrBeyondCritical);
}

TEST_CASE("validation names the offending field") {
  DeviceParams p = default_device();
  CHECK_NOTHROW(validate(p));
  p.i_c0 = -1e-6;
  try {
    validate(p);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.key() == "i_c0");
  }
  p = default_device();
  p.n_b = 1.5;
  CHECK_THROWS_AS(validate(p), ValidationError);
}
