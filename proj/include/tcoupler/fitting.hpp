#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tcoupler/errors.hpp"

namespace tcoupler {

// ---------------------------------------------------------------------------
// Generic machinery

struct LeastSquaresOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-9;
};

struct LeastSquaresResult {
  Eigen::VectorXd params;
  double rss = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Residual vector and Jacobian (rows = samples) at a parameter point.
using ResidualModel = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac)>;

/// Damped Gauss-Newton with step halving. `project` (optional) maps a trial
/// point back into the feasible set.
LeastSquaresResult gauss_newton(const ResidualModel& model, Eigen::VectorXd start,
                                const LeastSquaresOptions& options = {},
                                const std::function<void(Eigen::VectorXd&)>& project = {});

/// Golden-section minimum of a unimodal f on [lo, hi].
double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol);

// ---------------------------------------------------------------------------
// Spectral peaks

struct Peak {
  double frequency;
  double width;  // full width at half maximum
  double height;
};

/// Up to two Lorentzian peaks of a (frequency, probability) line, highest
/// first by fitted height. Throws NoPeak when the line has no feature above
/// three times its baseline spread.
std::vector<Peak> extract_peaks(std::span<const double> frequency, std::span<const double> probability,
                                double width_seed = 3e6);

// ---------------------------------------------------------------------------
// Avoided crossing

struct CrossingRow {
  double delta;               // detuning, Hz
  std::vector<double> peaks;  // resonance frequencies, Hz
};

struct CrossingFit {
  double omega_c = 0.0;   // minimum branch separation, Hz
  double f_center = 0.0;  // Hz
  double slope = 0.0;     // d(center)/d(delta)
  double residual_rms = 0.0;
};

/// Least-squares fit of f(delta) = f_center + slope*delta +- sqrt(delta^2 + omega_c^2)/2.
CrossingFit fit_avoided_crossing(const std::vector<CrossingRow>& rows);

// ---------------------------------------------------------------------------
// Damped sinusoid: y = A exp(-t/tau) cos(2 pi f t + phi) + offset

struct DampedSineFit {
  double amplitude = 0.0;
  double frequency = 0.0;   // Hz
  double decay_time = 0.0;  // s; infinity when no decay is resolved
  double phase = 0.0;
  double offset = 0.0;
  double residual_rms = 0.0;

  bool decay_infinite() const { return decay_time == std::numeric_limits<double>::infinity(); }
  double operator()(double t) const;
};

struct DecayFit {
  double amplitude = 0.0;
  double decay_time = 0.0;
  double offset = 0.0;
  double residual_rms = 0.0;
};

/// y = offset + amplitude * exp(-t/decay_time).
DecayFit fit_decay(std::span<const double> t, std::span<const double> y);

class FitDiverged : public Error {
 public:
  FitDiverged(const std::string& what, std::optional<DecayFit> fallback)
      : Error(what), fallback_(fallback) {}
  const std::optional<DecayFit>& fallback() const { return fallback_; }

 private:
  std::optional<DecayFit> fallback_;
};

struct DampedSineOptions {
  bool allow_sub_period = false;
  LeastSquaresOptions solver;
};

/// Strongest periodogram frequency of a mean-removed trace (zero-padded 8x);
/// ties within 5% of the maximum resolve to the lower frequency.
double spectral_seed_frequency(std::span<const double> t, std::span<const double> y);

DampedSineFit fit_damped_sine(std::span<const double> t, std::span<const double> y,
                              const DampedSineOptions& options = {});

/// Linear fit of offset + exp(-t * decay_rate) (a cos + b sin)(2 pi f t) at a
/// fixed frequency and decay; returns the oscillation amplitude and rms residual.
struct FixedFrequencyFit {
  double amplitude = 0.0;
  double phase = 0.0;
  double offset = 0.0;
  double residual_rms = 0.0;
  double rss = 0.0;
};
FixedFrequencyFit fit_fixed_frequency(std::span<const double> t, std::span<const double> y, double frequency,
                                      double decay_rate);

struct CrosstalkRatio {
  double ratio = 0.0;
  double frequency = 0.0;
  double driven_amplitude = 0.0;
  double undriven_amplitude = 0.0;
  bool undriven_below_noise = false;
};

/// Amplitude of the undriven trace relative to the driven one, both measured
/// at the driven trace's fitted frequency and decay.
CrosstalkRatio crosstalk_ratio(std::span<const double> t, std::span<const double> driven,
                               std::span<const double> undriven);

}  // namespace tcoupler
