#include "tcoupler/fitting.hpp"

#include "tcoupler/constants.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace tcoupler {

LeastSquaresResult gauss_newton(const ResidualModel& model, Eigen::VectorXd start, const LeastSquaresOptions& options,
                                const std::function<void(Eigen::VectorXd&)>& project) {
  LeastSquaresResult out;
  Eigen::VectorXd p = std::move(start);
  if (project) project(p);
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  model(p, r, jac);
  double rss = r.squaredNorm();

  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) break;

    double lambda = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial;
    Eigen::VectorXd r_trial;
    Eigen::MatrixXd jac_trial;
    for (int halving = 0; halving < 40; ++halving, lambda *= 0.5) {
      trial = p + lambda * step;
      if (project) project(trial);
      model(trial, r_trial, jac_trial);
      const double rss_trial = r_trial.squaredNorm();
      if (std::isfinite(rss_trial) && rss_trial <= rss) {
        accepted = true;
        rss = rss_trial;
        break;
      }
    }
    if (!accepted) {
      out.converged = true;  // no descent direction left
      break;
    }
    const double change = (trial - p).norm();
    const double scale = p.norm();
    p = trial;
    r = r_trial;
    jac = jac_trial;
    if (change <= options.relative_tolerance * (scale + options.relative_tolerance)) {
      out.converged = true;
      break;
    }
  }
  out.params = p;
  out.rss = rss;
  return out;
}

double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

namespace {

void require_increasing(std::span<const double> x, const char* what) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw std::invalid_argument(std::string(what) + " must be strictly increasing");
  }
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Peak> extract_peaks(std::span<const double> frequency, std::span<const double> probability,
                                double width_seed) {
  const std::size_t n = frequency.size();
  if (n < 5 || probability.size() != n) throw std::invalid_argument("extract_peaks needs >= 5 matching points");
  require_increasing(frequency, "frequencies");

  const std::vector<double> y(probability.begin(), probability.end());
  const double baseline = median(y);
  std::vector<double> dev(n);
  std::transform(y.begin(), y.end(), dev.begin(), [&](double v) { return std::abs(v - baseline); });
  const double spread = median(dev);
  const double top = *std::max_element(y.begin(), y.end()) - baseline;
  if (!(top > 3.0 * spread) || !(top > 0.0)) throw NoPeak("no feature above three times the baseline spread");

  // Local maxima, tallest first.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] - baseline > 3.0 * spread && y[i] - baseline >= 0.2 * top) {
      candidates.push_back(i);
    }
  }
  if (candidates.empty()) {
    candidates.push_back(static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin()));
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });

  std::vector<std::size_t> chosen{candidates.front()};
  for (std::size_t k = 1; k < candidates.size() && chosen.size() < 2; ++k) {
    const std::size_t i = candidates[k];
    const std::size_t lo = std::min(i, chosen.front());
    const std::size_t hi = std::max(i, chosen.front());
    if (hi - lo < 2) continue;
    const double dip = *std::min_element(y.begin() + static_cast<std::ptrdiff_t>(lo),
                                         y.begin() + static_cast<std::ptrdiff_t>(hi)) - baseline;
    if (dip <= 0.8 * (y[i] - baseline)) chosen.push_back(i);
  }

  // Joint Lorentzian refinement in units of width_seed around the first peak.
  const double f_ref = frequency[chosen.front()];
  const double scale = width_seed;
  std::vector<std::size_t> window;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c : chosen) {
      if (std::abs(frequency[i] - frequency[c]) <= 4.0 * width_seed) {
        window.push_back(i);
        break;
      }
    }
  }
  const auto m = static_cast<Eigen::Index>(window.size());
  const auto npk = static_cast<Eigen::Index>(chosen.size());
  Eigen::VectorXd start(1 + 3 * npk);
  start(0) = baseline;
  for (Eigen::Index k = 0; k < npk; ++k) {
    start(1 + 3 * k) = y[chosen[static_cast<std::size_t>(k)]] - baseline;
    start(2 + 3 * k) = (frequency[chosen[static_cast<std::size_t>(k)]] - f_ref) / scale;
    start(3 + 3 * k) = 0.5;
  }

  auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    r.resize(m);
    jac.setZero(m, p.size());
    for (Eigen::Index j = 0; j < m; ++j) {
      const std::size_t i = window[static_cast<std::size_t>(j)];
      const double x = (frequency[i] - f_ref) / scale;
      double v = p(0);
      jac(j, 0) = 1.0;
      for (Eigen::Index k = 0; k < npk; ++k) {
        const double h = p(1 + 3 * k), x0 = p(2 + 3 * k), g = p(3 + 3 * k);
        const double u = (x - x0) / g;
        const double den = 1.0 + u * u;
        v += h / den;
        jac(j, 1 + 3 * k) = 1.0 / den;
        jac(j, 2 + 3 * k) = h * 2.0 * u / (g * den * den);
        jac(j, 3 + 3 * k) = h * 2.0 * u * u / (g * den * den);
      }
      r(j) = v - y[i];
    }
  };
  auto project = [&](Eigen::VectorXd& p) {
    for (Eigen::Index k = 0; k < npk; ++k) p(3 + 3 * k) = std::max(std::abs(p(3 + 3 * k)), 1e-6);
  };
  const LeastSquaresResult fit = gauss_newton(model, start, {}, project);

  std::vector<Peak> peaks;
  const double f_lo = frequency.front(), f_hi = frequency.back();
  for (Eigen::Index k = 0; k < npk; ++k) {
    Peak pk{f_ref + scale * fit.params(2 + 3 * k), 2.0 * scale * fit.params(3 + 3 * k), fit.params(1 + 3 * k)};
    const bool sane = fit.params.allFinite() && pk.frequency >= f_lo && pk.frequency <= f_hi && pk.height > 0.0;
    if (!sane) {
      // Fall back to the grid maximum.
      const std::size_t i = chosen[static_cast<std::size_t>(k)];
      pk = Peak{frequency[i], width_seed, y[i] - baseline};
    }
    peaks.push_back(pk);
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.height > b.height; });
  return peaks;
}

// ---------------------------------------------------------------------------

CrossingFit fit_avoided_crossing(const std::vector<CrossingRow>& rows) {
  std::size_t usable = 0;
  for (const CrossingRow& row : rows) usable += row.peaks.empty() ? 0 : 1;
  if (usable < 5) throw std::invalid_argument("avoided-crossing fit needs >= 5 detuning rows with peaks");

  double seed = std::numeric_limits<double>::infinity();
  double d_min = std::numeric_limits<double>::infinity(), d_max = -d_min;
  double p_min = d_min, p_max = -d_min;
  for (const CrossingRow& row : rows) {
    if (row.peaks.empty()) continue;
    d_min = std::min(d_min, row.delta);
    d_max = std::max(d_max, row.delta);
    const auto [lo, hi] = std::minmax_element(row.peaks.begin(), row.peaks.end());
    p_min = std::min(p_min, *lo);
    p_max = std::max(p_max, *hi);
    if (row.peaks.size() >= 2) seed = std::min(seed, *hi - *lo);
  }
  if (!std::isfinite(seed)) seed = 0.0;
  if (d_max - d_min < seed) throw DegenerateFit("detuning span is smaller than the splitting seed");

  struct Obs {
    double delta, f;
    int sign;  // +1 upper, -1 lower, 0 to be assigned
  };
  std::vector<Obs> obs;
  for (const CrossingRow& row : rows) {
    if (row.peaks.empty()) continue;
    if (row.peaks.size() == 1) {
      obs.push_back({row.delta, row.peaks.front(), 0});
    } else {
      const auto [lo, hi] = std::minmax_element(row.peaks.begin(), row.peaks.end());
      obs.push_back({row.delta, *hi, +1});
      obs.push_back({row.delta, *lo, -1});
    }
  }

  // Given omega_c and branch signs, center and slope are a linear fit.
  struct Line {
    double center, slope, rss;
  };
  auto solve_line = [&](double omega, const std::vector<int>& signs) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(obs.size()), 2);
    Eigen::VectorXd b(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto j = static_cast<Eigen::Index>(i);
      a(j, 0) = 1.0;
      a(j, 1) = obs[i].delta;
      b(j) = obs[i].f - signs[i] * 0.5 * std::hypot(obs[i].delta, omega);
    }
    Eigen::Vector2d x = a.colPivHouseholderQr().solve(b);
    return Line{x(0), x(1), (a * x - b).squaredNorm()};
  };
  auto fit_at = [&](double omega) {
    std::vector<int> signs(obs.size());
    // Start single-peak rows on the branch their side of the mean suggests.
    double mean = 0.0;
    for (const Obs& o : obs) mean += o.f;
    mean /= static_cast<double>(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) signs[i] = obs[i].sign != 0 ? obs[i].sign : (obs[i].f >= mean ? 1 : -1);
    Line line = solve_line(omega, signs);
    for (int pass = 0; pass < 4; ++pass) {
      bool changed = false;
      for (std::size_t i = 0; i < obs.size(); ++i) {
        if (obs[i].sign != 0) continue;
        const double c = line.center + line.slope * obs[i].delta;
        const int s = obs[i].f >= c ? 1 : -1;
        changed = changed || s != signs[i];
        signs[i] = s;
      }
      if (!changed) break;
      line = solve_line(omega, signs);
    }
    return line;
  };

  const double omega_max = std::max({2.0 * seed, p_max - p_min, 1.0});
  constexpr int kScan = 400;
  double best_omega = 0.0;
  double best_rss = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= kScan; ++k) {
    const double omega = omega_max * k / kScan;
    const double rss = fit_at(omega).rss;
    if (rss < best_rss) {
      best_rss = rss;
      best_omega = omega;
    }
  }
  const double step = omega_max / kScan;
  const double omega = golden_section([&](double w) { return fit_at(w).rss; }, std::max(0.0, best_omega - step),
                                      best_omega + step, 1e-9 * omega_max);
  const Line line = fit_at(omega);

  CrossingFit out;
  out.omega_c = omega;
  out.f_center = line.center;
  out.slope = line.slope;
  out.residual_rms = std::sqrt(line.rss / static_cast<double>(obs.size()));
  return out;
}

// ---------------------------------------------------------------------------

double DampedSineFit::operator()(double t) const {
  const double envelope = decay_infinite() ? 1.0 : std::exp(-t / decay_time);
  return amplitude * envelope * std::cos(kTwoPi * frequency * t + phase) + offset;
}

FixedFrequencyFit fit_fixed_frequency(std::span<const double> t, std::span<const double> y, double frequency,
                                      double decay_rate) {
  const auto n = static_cast<Eigen::Index>(t.size());
  if (n < 3 || y.size() != t.size()) throw std::invalid_argument("fixed-frequency fit needs >= 3 matching points");
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ti = t[static_cast<std::size_t>(i)];
    const double e = std::exp(-decay_rate * ti);
    a(i, 0) = 1.0;
    a(i, 1) = e * std::cos(kTwoPi * frequency * ti);
    a(i, 2) = e * std::sin(kTwoPi * frequency * ti);
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::Vector3d x = a.colPivHouseholderQr().solve(b);
  FixedFrequencyFit out;
  out.offset = x(0);
  out.amplitude = std::hypot(x(1), x(2));
  out.phase = -std::atan2(x(2), x(1));
  out.rss = (a * x - b).squaredNorm();
  out.residual_rms = std::sqrt(out.rss / static_cast<double>(n));
  return out;
}

DecayFit fit_decay(std::span<const double> t, std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(t.size());
  if (n < 3 || y.size() != t.size()) throw std::invalid_argument("decay fit needs >= 3 matching points");
  const double t0 = t.front();
  const double span = t.back() - t0;
  if (!(span > 0.0)) throw std::invalid_argument("decay fit needs a positive time span");

  auto linear = [&](double rate, Eigen::Vector2d* coeff) {
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      a(i, 0) = 1.0;
      a(i, 1) = std::exp(-rate * (t[static_cast<std::size_t>(i)] - t0));
      b(i) = y[static_cast<std::size_t>(i)];
    }
    const Eigen::Vector2d x = a.colPivHouseholderQr().solve(b);
    if (coeff != nullptr) *coeff = x;
    return (a * x - b).squaredNorm();
  };
  // Scan log(rate * span) then refine.
  double best_u = -5.0, best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 200; ++k) {
    const double u = -5.0 + 10.0 * k / 200.0;
    const double rss = linear(std::exp(u) / span, nullptr);
    if (rss < best) {
      best = rss;
      best_u = u;
    }
  }
  const double u = golden_section([&](double v) { return linear(std::exp(v) / span, nullptr); }, best_u - 0.05,
                                  best_u + 0.05, 1e-10);
  const double rate = std::exp(u) / span;
  Eigen::Vector2d x;
  const double rss = linear(rate, &x);
  DecayFit out;
  out.offset = x(0);
  out.amplitude = x(1) * std::exp(rate * t0);
  out.decay_time = 1.0 / rate;
  out.residual_rms = std::sqrt(rss / static_cast<double>(n));
  return out;
}

double spectral_seed_frequency(std::span<const double> t, std::span<const double> y) {
  const std::size_t n = t.size();
  if (n < 4 || y.size() != n) throw std::invalid_argument("spectral seed needs >= 4 matching points");
  const double span = t.back() - t.front();
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  constexpr int kPad = 8;
  const int k_max = kPad * static_cast<int>(n - 1) / 2;
  std::vector<double> power(static_cast<std::size_t>(k_max) + 1, 0.0);
  for (int k = 1; k <= k_max; ++k) {
    const double f = k / (kPad * span);
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += (y[i] - mean) * std::polar(1.0, -kTwoPi * f * (t[i] - t.front()));
    }
    power[static_cast<std::size_t>(k)] = std::norm(acc);
  }
  const double top = *std::max_element(power.begin() + 1, power.end());
  for (int k = 1; k <= k_max; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const bool local_max = power[i] >= power[i - 1] && (k == k_max || power[i] >= power[i + 1]);
    if (local_max && power[i] >= 0.95 * top) return k / (kPad * span);
  }
  return 1.0 / (kPad * span);
}

DampedSineFit fit_damped_sine(std::span<const double> t, std::span<const double> y, const DampedSineOptions& options) {
  const std::size_t n = t.size();
  if (n < 8 || y.size() != n) throw std::invalid_argument("damped-sine fit needs >= 8 matching points");
  require_increasing(t, "times");
  const double t0 = t.front();
  const double span = t.back() - t0;

  const double f_seed = spectral_seed_frequency(t, y);
  if (f_seed * span < 1.0 && !options.allow_sub_period) {
    throw FitDiverged("trace spans less than one period at the seed frequency", fit_decay(t, y));
  }

  // Work in units of the span: tau in [0, 1], nu cycles per span, g decays per span.
  std::vector<double> tau(n);
  std::transform(t.begin(), t.end(), tau.begin(), [&](double v) { return (v - t0) / span; });

  Eigen::VectorXd start(5);
  double seed_rss = std::numeric_limits<double>::infinity();
  for (double g : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    const FixedFrequencyFit lin = fit_fixed_frequency(tau, y, f_seed * span, g);
    if (lin.rss < seed_rss) {
      seed_rss = lin.rss;
      start << lin.amplitude, f_seed * span, g, lin.phase, lin.offset;
    }
  }

  const auto m = static_cast<Eigen::Index>(n);
  auto model = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    r.resize(m);
    jac.resize(m, 5);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double x = tau[static_cast<std::size_t>(i)];
      const double e = std::exp(-p(2) * x);
      const double theta = kTwoPi * p(1) * x + p(3);
      const double c = std::cos(theta), s = std::sin(theta);
      r(i) = p(0) * e * c + p(4) - y[static_cast<std::size_t>(i)];
      jac(i, 0) = e * c;
      jac(i, 1) = -p(0) * e * s * kTwoPi * x;
      jac(i, 2) = -x * p(0) * e * c;
      jac(i, 3) = -p(0) * e * s;
      jac(i, 4) = 1.0;
    }
  };
  auto project = [](Eigen::VectorXd& p) {
    p(1) = std::abs(p(1));
    p(2) = std::max(p(2), 0.0);
  };
  const LeastSquaresResult fit = gauss_newton(model, start, options.solver, project);
  // The absolute floor keeps an already exact seed from reading as a failure.
  const double floor = 1e-24 * std::inner_product(y.begin(), y.end(), y.begin(), 0.0);
  if (!fit.params.allFinite() || !std::isfinite(fit.rss) || fit.rss > seed_rss * (1.0 + 1e-12) + floor) {
    throw FitDiverged("refinement did not reduce the residual below the seed", fit_decay(t, y));
  }

  Eigen::VectorXd p = fit.params;
  if (p(0) < 0.0) {
    p(0) = -p(0);
    p(3) += std::numbers::pi;
  }
  DampedSineFit out;
  out.frequency = p(1) / span;
  const double rate = p(2) / span;
  out.decay_time = rate > 1e-12 / span ? 1.0 / rate : std::numeric_limits<double>::infinity();
  out.amplitude = p(0) * std::exp(rate * t0);
  out.phase = std::remainder(p(3) - kTwoPi * out.frequency * t0, kTwoPi);
  out.offset = p(4);
  out.residual_rms = std::sqrt(fit.rss / static_cast<double>(n));
  return out;
}

CrosstalkRatio crosstalk_ratio(std::span<const double> t, std::span<const double> driven,
                               std::span<const double> undriven) {
  if (driven.size() != t.size() || undriven.size() != t.size()) {
    throw std::invalid_argument("crosstalk traces must share the time axis");
  }
  const DampedSineFit reference = fit_damped_sine(t, driven);
  const double rate = reference.decay_infinite() ? 0.0 : 1.0 / reference.decay_time;
  const FixedFrequencyFit d = fit_fixed_frequency(t, driven, reference.frequency, rate);
  const FixedFrequencyFit u = fit_fixed_frequency(t, undriven, reference.frequency, rate);

  CrosstalkRatio out;
  out.frequency = reference.frequency;
  out.driven_amplitude = d.amplitude;
  out.undriven_amplitude = u.amplitude;
  const double noise = 3.0 * u.residual_rms * std::sqrt(2.0 / static_cast<double>(t.size()));
  out.undriven_below_noise = u.amplitude <= std::max(1e-12, noise);
  out.ratio = out.undriven_below_noise || d.amplitude <= 0.0 ? 0.0 : u.amplitude / d.amplitude;
  return out;
}

}  // namespace tcoupler
