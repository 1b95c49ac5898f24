#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "tcoupler/device.hpp"

namespace tcoupler {

/// A root of the coupler loop's current balance at some bias.
///
/// branch_id is the index k of the 2*pi cell the phase sits in (round(delta/2pi)),
/// so the central branch "C" is 0 and A,B / D,E are -2,-1 / +1,+2. The stable
/// part of cell k is |delta - 2 pi k| < arccos(-1/beta).
struct BranchPoint {
  double delta = 0.0;  // junction phase, rad
  double flux = 0.0;   // Wb, (Phi0 / 2pi) * delta
  bool stable = true;
  int branch_id = 0;
};

BranchPoint make_branch_point(double delta, double beta);

struct ResetConfig {
  double i_cb_minus = 0.0;  // A
  double i_cb_plus = 0.0;   // A
  int n_cycles = 30;
  double per_cycle_survival_q = 0.746;
};

void validate(const ResetConfig& config);

/// Screening parameter of the junction shunted by the two qubit loops.
template <typename Scalar>
Scalar beta(const BasicDeviceParams<Scalar>& params) {
  return Scalar(kTwoPi) * params.i_c0 * params.loop_inductance() / (Scalar(2) * Scalar(kFluxQuantum));
}

/// Normalized bias i_cb / i_c0 at which phase delta is a stationary point.
template <typename Scalar>
Scalar branch_equation(Scalar delta, Scalar beta) {
  using std::sin;
  return sin(delta) + delta / beta;
}

/// All roots of branch_equation(delta) = i_cb / i_c0 within |delta| <= beta + 2 pi,
/// ordered by delta.
std::vector<BranchPoint> enumerate_branches(double i_cb, const DeviceParams& params);

struct FollowResult {
  BranchPoint point;
  bool switched = false;
  int switches = 0;
};

/// Continues a stable branch from its current bias (implied by its phase) to
/// new_i_cb. When the branch's turning point is crossed the point drops to the
/// stable branch nearest in phase to the vanished root and continues from there.
FollowResult follow_branch(const BranchPoint& current, double new_i_cb, const DeviceParams& params);

/// Bias interval [lo, hi] (A) over which stable branch `branch_id` exists.
/// For beta <= 1 the single branch exists for all biases.
struct BranchRange {
  double lo;
  double hi;
};
BranchRange stable_range(int branch_id, const DeviceParams& params);

using BranchDistribution = std::map<int, double>;

struct ResetOutcome {
  BranchDistribution final_distribution;
  double residual_error = 0.0;
  std::vector<double> residual_per_cycle;  // after cycle 1..n
  std::vector<int> eliminated;             // non-target branches destabilized by the rails
};

/// Analytic propagation of branch occupation through n reset cycles toward
/// branch 0. Every non-target branch that loses stability inside the rail
/// interval keeps a fraction q of its mass per cycle; the rest moves to 0.
ResetOutcome simulate_reset(const BranchDistribution& initial, const ResetConfig& config,
                            const DeviceParams& params);

/// Qubit frequency shift (Hz) caused by the loop current of a flux branch.
double branch_frequency_shift(const BranchPoint& point, const DeviceParams& params);

}  // namespace tcoupler
