#pragma once

#include <cmath>
#include <limits>

#include "tcoupler/constants.hpp"
#include "tcoupler/errors.hpp"

namespace tcoupler {

/// Circuit constants of two phase qubits joined by a current-biased junction
/// coupler. SI units throughout (F, H, A, Hz, s); omega_c0 in rad/s.
template <typename Scalar>
struct BasicDeviceParams {
  Scalar c;    // qubit shunt capacitance C
  Scalar l;    // qubit shunt inductance L
  Scalar l_s;  // series inductance L_s
  Scalar l_m;  // mutual-element self inductance L_M
  Scalar m;    // fixed negative mutual magnitude M
  Scalar l_z;  // coupler bias isolation inductor (recorded, not used by the dynamics)
  Scalar i_c0;
  Scalar f10_a;
  Scalar f10_b;
  Scalar n_a;  // normalized well depths
  Scalar n_b;
  Scalar t1_a;
  Scalar t1_b;
  Scalar omega_c0;
  Scalar bias_shift_coeff;  // Hz per A of coupler bias, same for both qubits
  Scalar l_offset;          // calibration offset added to M in the coupling formula

  /// Total inductance of one shunt loop seen by the coupler junction.
  Scalar loop_inductance() const { return l_s + l_m + l; }
};

using DeviceParams = BasicDeviceParams<double>;

/// The printed device constants (M + offset below L_c(0), so zero coupling is
/// not reachable).
DeviceParams default_device();

/// default_device() with M + l_offset = 209 pH, which places the zero-coupling
/// bias just above I_cb = 0 and spans roughly 0..100 MHz over the bias range.
DeviceParams calibrated_device();

/// Throws ValidationError naming the first field that violates positivity or
/// the n >= 2 two-level requirement.
void validate(const DeviceParams& params);

/// Josephson inductance of the coupler junction at bias i_cb.
template <typename Scalar>
Scalar junction_inductance(const BasicDeviceParams<Scalar>& params, Scalar i_cb) {
  using std::abs;
  using std::sqrt;
  if (!(abs(i_cb) < params.i_c0)) {
    throw BiasAtOrBeyondCritical(static_cast<double>(i_cb), static_cast<double>(params.i_c0));
  }
  const Scalar x = i_cb / params.i_c0;
  return Scalar(kFluxQuantum) / (Scalar(kTwoPi) * params.i_c0 * sqrt(Scalar(1) - x * x));
}

/// Signed coupling strength Omega_c in rad/s. The reference qubit frequency is
/// qubit A's idle frequency.
template <typename Scalar>
Scalar coupling_strength(const BasicDeviceParams<Scalar>& params, Scalar i_cb) {
  const Scalar lc = junction_inductance(params, i_cb);
  const Scalar series = params.l_m + params.l_s;
  const Scalar omega10 = Scalar(kTwoPi) * params.f10_a;
  return (params.m + params.l_offset - lc) / (series * series * omega10 * params.c);
}

/// Junction inductance seen at drive frequency omega below the junction's
/// self-resonance: L_c * (1 - (omega/omega_c0)^2).
template <typename Scalar>
Scalar effective_inductance(const BasicDeviceParams<Scalar>& params, Scalar i_cb, Scalar omega) {
  const Scalar r = omega / params.omega_c0;
  return junction_inductance(params, i_cb) * (Scalar(1) - r * r);
}

struct ZeroCouplingBias {
  bool reachable = false;
  double bias = 0.0;      // A; the bias of minimum |Omega_c| when unreachable
  double residual = 0.0;  // Omega_c at `bias`, rad/s
};

/// Bisects Omega_c(i_cb) = 0 on [0, i_c0) to 1e-13 * i_c0.
ZeroCouplingBias zero_coupling_bias(const DeviceParams& params);

/// Bias in [0, i_c0) with coupling_strength == omega_c (signed, rad/s).
/// Throws NotReachable when omega_c is outside (-inf, Omega_c(0)].
double bias_for_coupling(const DeviceParams& params, double omega_c);

}  // namespace tcoupler
