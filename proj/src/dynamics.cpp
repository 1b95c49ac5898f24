#include "tcoupler/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace tcoupler {

namespace {

using Vec16 = Eigen::Matrix<std::complex<double>, 16, 1>;

Vec16 vec(const Matrix4cd& rho) { return Eigen::Map<const Vec16>(rho.data()); }

Matrix4cd unvec(const Vec16& v) {
  Matrix4cd rho = Eigen::Map<const Matrix4cd>(v.data());
  // Re-Hermitize to keep rounding from accumulating an anti-Hermitian part.
  return 0.5 * (rho + rho.adjoint());
}

Superoperator kron(const Matrix4cd& a, const Matrix4cd& b) {
  Superoperator out;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out.block<4, 4>(4 * i, 4 * j) = a(i, j) * b;
  return out;
}

double spectral_spread(const Matrix4cd& h) {
  Eigen::SelfAdjointEigenSolver<Matrix4cd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff();
}

void check_step(const Matrix4cd& h, double dt) {
  const double phase = dt * spectral_spread(h);
  if (phase > kMaxStepPhase) {
    throw StepTooCoarse("step phase " + std::to_string(phase) + " rad exceeds " + std::to_string(kMaxStepPhase) +
                        " rad; reduce dt below " + std::to_string(kMaxStepPhase / (phase / dt)) + " s");
  }
}

// exp(L h) v by Taylor series; ||L h|| is bounded by the step check so this
// converges to rounding in a handful of terms.
Vec16 apply_step(const Superoperator& generator, double h, const Vec16& v) {
  Vec16 term = v;
  Vec16 sum = v;
  const double scale = v.norm();
  for (int k = 1; k < 60; ++k) {
    term = (generator * term) * (h / static_cast<double>(k));
    sum += term;
    if (term.norm() <= 1e-18 * scale) break;
  }
  return sum;
}

Vec16 apply_run(const Superoperator& generator, double h, int count, Vec16 v) {
  if (count <= 4) {
    for (int k = 0; k < count; ++k) v = apply_step(generator, h, v);
    return v;
  }
  const Superoperator scaled = generator * (h * static_cast<double>(count));
  const Superoperator propagator = scaled.exp();
  return propagator * v;
}

}  // namespace

double TwoQubitState::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix4cd> es(rho_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void TwoQubitState::check(double hermitian_tol, double trace_tol, double psd_tol) const {
  if (hermiticity_error() > hermitian_tol) throw std::domain_error("density matrix is not Hermitian");
  if (std::abs(trace() - 1.0) > trace_tol) throw std::domain_error("density matrix trace differs from 1");
  if (min_eigenvalue() < -psd_tol) throw std::domain_error("density matrix has a negative eigenvalue");
}

Superoperator liouvillian(const Matrix4cd& hamiltonian, double t1_a, double t1_b) {
  const Matrix4cd id = Matrix4cd::Identity();
  const std::complex<double> i(0.0, 1.0);
  // vec(A X B) = (B^T kron A) vec(X)
  Superoperator gen = -i * (kron(id, hamiltonian) - kron(hamiltonian.transpose(), id));

  Matrix4cd lower_a = Matrix4cd::Zero();
  lower_a(basis_index(0, 0), basis_index(1, 0)) = 1.0;
  lower_a(basis_index(0, 1), basis_index(1, 1)) = 1.0;
  Matrix4cd lower_b = Matrix4cd::Zero();
  lower_b(basis_index(0, 0), basis_index(0, 1)) = 1.0;
  lower_b(basis_index(1, 0), basis_index(1, 1)) = 1.0;

  auto add_decay = [&](const Matrix4cd& c, double t1) {
    if (!std::isfinite(t1)) return;
    const Matrix4cd cdc = c.adjoint() * c;
    gen += (kron(c.conjugate(), c) - 0.5 * kron(id, cdc) - 0.5 * kron(cdc.transpose(), id)) / t1;
  };
  add_decay(lower_a, t1_a);
  add_decay(lower_b, t1_b);
  return gen;
}

TwoQubitState propagate(const TwoQubitState& state, const ControlTrack& track, const DeviceParams& params,
                        const DynamicsOptions& options) {
  if (track.steps.empty()) return state;
  if (!(track.dt > 0.0)) throw std::invalid_argument("control track needs dt > 0");

  Vec16 v = vec(state.rho());
  std::size_t k = 0;
  while (k < track.steps.size()) {
    std::size_t run = 1;
    while (k + run < track.steps.size() && track.steps[k + run] == track.steps[k]) ++run;
    const Matrix4cd h = build_hamiltonian(track.steps[k], params, options);
    check_step(h, track.dt);
    const Superoperator gen = liouvillian(h, params.t1_a, params.t1_b);
    v = apply_run(gen, track.dt, static_cast<int>(run), v);
    k += run;
  }
  return TwoQubitState(unvec(v));
}

TwoQubitState propagate(const TwoQubitState& state, const std::function<ControlSnapshot(double)>& controls,
                        double t_start, double t_end, double dt, const DeviceParams& params,
                        const DynamicsOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate needs dt > 0");
  if (!(t_end >= t_start)) throw std::invalid_argument("propagate needs t_end >= t_start");
  const double span = t_end - t_start;
  if (span == 0.0) return state;
  const auto n = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
  ControlTrack track;
  track.t0 = t_start;
  track.dt = span / static_cast<double>(n);
  track.steps.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    track.steps.push_back(controls(t_start + (static_cast<double>(k) + 0.5) * track.dt));
  }
  return propagate(state, track, params, options);
}

std::vector<TwoQubitState> propagate_constant_trace(const TwoQubitState& state, const ControlSnapshot& snapshot,
                                                    const std::vector<double>& times, double dt,
                                                    const DeviceParams& params, const DynamicsOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate needs dt > 0");
  const Matrix4cd h = build_hamiltonian(snapshot, params, options);
  check_step(h, dt);
  const Superoperator gen = liouvillian(h, params.t1_a, params.t1_b);

  std::vector<TwoQubitState> out;
  out.reserve(times.size());
  Vec16 v = vec(state.rho());
  double now = 0.0;
  for (double t : times) {
    if (t < now) throw std::invalid_argument("trace times must be sorted and non-negative");
    if (t > now) {
      const Superoperator step = (gen * (t - now)).exp();
      v = step * v;
      now = t;
    }
    out.emplace_back(unvec(v));
  }
  return out;
}

MeasurementModel MeasurementModel::independent(double e0_a, double e1_a, double e0_b, double e1_b) {
  Eigen::Matrix2d a, b;
  a << 1.0 - e0_a, e0_a, e1_a, 1.0 - e1_a;
  b << 1.0 - e0_b, e0_b, e1_b, 1.0 - e1_b;
  MeasurementModel m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m.confusion.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  m.check();
  return m;
}

void MeasurementModel::check() const {
  if ((confusion.array() < 0.0).any() || (confusion.array() > 1.0).any()) {
    throw ValidationError("confusion", "entries must lie in [0, 1]");
  }
  if (((confusion.rowwise().sum().array() - 1.0).abs() > 1e-12).any()) {
    throw ValidationError("confusion", "rows must sum to 1");
  }
}

Probabilities measure_probabilities(const TwoQubitState& state, const MeasurementModel& model) {
  Probabilities p = state.rho().diagonal().real();
  p = p.cwiseMax(0.0);
  p /= p.sum();
  return model.confusion.transpose() * p;
}

std::array<std::int64_t, 4> sample_shots(const Probabilities& probs, std::int64_t n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("shot count must be non-negative");
  std::array<std::int64_t, 4> counts{0, 0, 0, 0};
  std::mt19937_64 rng(seed);
  std::int64_t remaining = n;
  double remaining_p = 1.0;
  // Sequential conditional binomials give an exact multinomial draw.
  for (int k = 0; k < 3 && remaining > 0; ++k) {
    const double p = remaining_p > 0.0 ? std::clamp(probs(k) / remaining_p, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::int64_t> draw(remaining, p);
    counts[k] = draw(rng);
    remaining -= counts[k];
    remaining_p -= probs(k);
  }
  counts[3] = remaining;
  return counts;
}

}  // namespace tcoupler
