#include "tcoupler/hysteresis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tcoupler {

namespace {

constexpr double kGridStep = 2e-3;  // rad, root bracketing grid

double bisect(double lo, double hi, double target, double beta_value) {
  double glo = branch_equation(lo, beta_value) - target;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gmid = branch_equation(mid, beta_value) - target;
    if (gmid == 0.0) return mid;
    if ((gmid < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> roots(double target, double beta_value) {
  const double window = beta_value + kTwoPi;
  const auto n = static_cast<long>(std::ceil(2.0 * window / kGridStep));
  const double h = 2.0 * window / static_cast<double>(n);
  std::vector<double> out;
  double prev_x = -window;
  double prev_g = branch_equation(prev_x, beta_value) - target;
  if (prev_g == 0.0) out.push_back(prev_x);
  for (long k = 1; k <= n; ++k) {
    const double x = -window + h * static_cast<double>(k);
    const double g = branch_equation(x, beta_value) - target;
    if (g == 0.0) {
      out.push_back(x);
    } else if (prev_g != 0.0 && (g < 0.0) != (prev_g < 0.0)) {
      out.push_back(bisect(prev_x, x, target, beta_value));
    }
    prev_x = x;
    prev_g = g;
  }
  return out;
}

// Half-width of the stable phase interval of each cell (beta > 1 only).
double stable_half_width(double beta_value) { return std::acos(-1.0 / beta_value); }

int cell_of(double delta) { return static_cast<int>(std::lround(delta / kTwoPi)); }

}  // namespace

BranchPoint make_branch_point(double delta, double beta_value) {
  BranchPoint p;
  p.delta = delta;
  p.flux = kFluxQuantum / kTwoPi * delta;
  p.stable = std::cos(delta) > -1.0 / beta_value;
  p.branch_id = cell_of(delta);
  return p;
}

void validate(const ResetConfig& config) {
  if (!(config.i_cb_minus < config.i_cb_plus)) {
    throw ValidationError("i_cb_minus", "reset rails need i_cb_minus < i_cb_plus");
  }
  if (config.n_cycles < 1) throw ValidationError("n_cycles", "must be >= 1");
  if (!(config.per_cycle_survival_q >= 0.0 && config.per_cycle_survival_q < 1.0)) {
    throw ValidationError("q", "per-cycle survival must lie in [0, 1)");
  }
}

std::vector<BranchPoint> enumerate_branches(double i_cb, const DeviceParams& params) {
  const double b = beta(params);
  std::vector<BranchPoint> out;
  for (double d : roots(i_cb / params.i_c0, b)) out.push_back(make_branch_point(d, b));
  return out;
}

BranchRange stable_range(int branch_id, const DeviceParams& params) {
  const double b = beta(params);
  if (b <= 1.0) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {-inf, inf};
  }
  const double a = stable_half_width(b);
  const double centre = kTwoPi * branch_id;
  return {params.i_c0 * branch_equation(centre - a, b), params.i_c0 * branch_equation(centre + a, b)};
}

FollowResult follow_branch(const BranchPoint& current, double new_i_cb, const DeviceParams& params) {
  if (!current.stable) throw std::invalid_argument("follow_branch needs a stable starting point");
  const double b = beta(params);
  const double target = new_i_cb / params.i_c0;

  FollowResult result;
  if (b <= 1.0) {
    const auto r = roots(target, b);
    if (r.empty()) throw NoStableBranch("no root at the requested bias");
    result.point = make_branch_point(r.front(), b);
    return result;
  }

  const double a = stable_half_width(b);
  int cell = cell_of(current.delta);
  // Each crossing of a turning point moves at least one cell, so this is bounded
  // by the number of cells in the search window.
  for (int guard = 0; guard < 1000; ++guard) {
    const double lo_phase = kTwoPi * cell - a;
    const double hi_phase = kTwoPi * cell + a;
    const double lo_bias = branch_equation(lo_phase, b);
    const double hi_bias = branch_equation(hi_phase, b);
    if (target >= lo_bias && target <= hi_bias) {
      result.point = make_branch_point(bisect(lo_phase, hi_phase, target, b), b);
      return result;
    }
    // The branch ends at the turning point on the side the bias moved past.
    const double turn_phase = target > hi_bias ? hi_phase : lo_phase;
    const double turn_bias = target > hi_bias ? hi_bias : lo_bias;
    double best = std::numeric_limits<double>::infinity();
    int next_cell = cell;
    for (double d : roots(turn_bias, b)) {
      const int k = cell_of(d);
      if (k == cell || !(std::cos(d) > -1.0 / b)) continue;
      if (std::abs(d - turn_phase) < best) {
        best = std::abs(d - turn_phase);
        next_cell = k;
      }
    }
    if (next_cell == cell) {
      throw NoStableBranch("no stable branch left at normalized bias " + std::to_string(turn_bias));
    }
    cell = next_cell;
    result.switched = true;
    ++result.switches;
  }
  throw NoStableBranch("branch continuation did not settle");
}

ResetOutcome simulate_reset(const BranchDistribution& initial, const ResetConfig& config,
                            const DeviceParams& params) {
  validate(config);
  const BranchRange target = stable_range(0, params);
  if (config.i_cb_minus < target.lo || config.i_cb_plus > target.hi) {
    throw TargetNotStable("branch 0 is not stable across the reset rails");
  }

  ResetOutcome out;
  out.final_distribution = initial;
  std::vector<int> eliminated;
  for (const auto& [id, mass] : initial) {
    if (mass < 0.0) throw ValidationError("initial", "branch occupation must be non-negative");
    if (id == 0) continue;
    const BranchRange r = stable_range(id, params);
    if (config.i_cb_minus < r.lo || config.i_cb_plus > r.hi) eliminated.push_back(id);
  }
  out.eliminated = eliminated;

  const double q = config.per_cycle_survival_q;
  for (int cycle = 0; cycle < config.n_cycles; ++cycle) {
    for (int id : eliminated) {
      double& mass = out.final_distribution[id];
      out.final_distribution[0] += mass * (1.0 - q);
      mass *= q;
    }
    double residual = 0.0;
    for (const auto& [id, mass] : out.final_distribution) {
      if (id != 0) residual += mass;
    }
    out.residual_per_cycle.push_back(residual);
  }
  out.residual_error = out.residual_per_cycle.back();
  return out;
}

double branch_frequency_shift(const BranchPoint& point, const DeviceParams& params) {
  return params.bias_shift_coeff * point.flux / params.loop_inductance();
}

}  // namespace tcoupler
