#include "tcoupler/device.hpp"

#include <cmath>
#include <string>

namespace tcoupler {

BiasAtOrBeyondCritical::BiasAtOrBeyondCritical(double i_cb, double i_c0)
    : Error("coupler bias " + std::to_string(i_cb) + " A is at or beyond the critical current " +
            std::to_string(i_c0) + " A"),
      bias_(i_cb) {}

DeviceParams default_device() {
  DeviceParams p{};
  p.c = 1.0e-12;
  p.l = 750e-12;
  p.l_s = 2657e-12;
  p.l_m = 390e-12;
  p.m = 190e-12;
  p.l_z = 9e-9;
  p.i_c0 = 1.58e-6;
  p.f10_a = 6.0e9;
  p.f10_b = 5.8e9;
  p.n_a = 5.0;
  p.n_b = 5.0;
  p.t1_a = 350e-9;
  p.t1_b = 350e-9;
  p.omega_c0 = kTwoPi * 30e9;
  p.bias_shift_coeff = 10e6 / 1e-6;
  p.l_offset = 0.0;
  return p;
}

DeviceParams calibrated_device() {
  DeviceParams p = default_device();
  p.l_offset = 209e-12 - p.m;
  return p;
}

namespace {

void require_positive(double value, const char* key) {
  if (!(value > 0.0)) {
    throw ValidationError(key, "must be strictly positive (got " + std::to_string(value) + ")");
  }
}

// Omega_c(i) is even and strictly decreasing in |i|; this finds the bias in
// [0, i_c0) where it equals target, assuming Omega_c(0) >= target.
double bisect_coupling(const DeviceParams& params, double target, double tol) {
  double lo = 0.0;
  double hi = params.i_c0 * (1.0 - 1e-15);
  if (coupling_strength(params, hi) > target) {
    throw NotReachable("coupling target beyond the junction's critical-current pole");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (coupling_strength(params, mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void validate(const DeviceParams& p) {
  require_positive(p.c, "c");
  require_positive(p.l, "l");
  require_positive(p.l_s, "l_s");
  require_positive(p.l_m, "l_m");
  require_positive(p.m, "m");
  require_positive(p.l_z, "l_z");
  require_positive(p.i_c0, "i_c0");
  require_positive(p.f10_a, "f10_a");
  require_positive(p.f10_b, "f10_b");
  require_positive(p.t1_a, "t1_a");
  require_positive(p.t1_b, "t1_b");
  require_positive(p.omega_c0, "omega_c0");
  if (!(p.n_a >= 2.0)) throw ValidationError("n_a", "well depth must be >= 2");
  if (!(p.n_b >= 2.0)) throw ValidationError("n_b", "well depth must be >= 2");
  if (!std::isfinite(p.bias_shift_coeff)) throw ValidationError("bias_shift_coeff", "must be finite");
  if (!std::isfinite(p.l_offset)) throw ValidationError("l_offset", "must be finite");
}

ZeroCouplingBias zero_coupling_bias(const DeviceParams& params) {
  const double at_zero = coupling_strength(params, 0.0);
  if (at_zero < 0.0) {
    return {false, 0.0, at_zero};
  }
  if (at_zero == 0.0) {
    return {true, 0.0, 0.0};
  }
  const double bias = bisect_coupling(params, 0.0, 1e-13 * params.i_c0);
  return {true, bias, coupling_strength(params, bias)};
}

double bias_for_coupling(const DeviceParams& params, double omega_c) {
  const double at_zero = coupling_strength(params, 0.0);
  if (omega_c > at_zero) {
    throw NotReachable("requested coupling " + std::to_string(omega_c) +
                       " rad/s exceeds the zero-bias coupling " + std::to_string(at_zero) + " rad/s");
  }
  if (omega_c == at_zero) return 0.0;
  return bisect_coupling(params, omega_c, 1e-13 * params.i_c0);
}

}  // namespace tcoupler
