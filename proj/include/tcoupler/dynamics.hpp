#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "tcoupler/device.hpp"

namespace tcoupler {

template <typename Scalar>
using Matrix4c = Eigen::Matrix<std::complex<Scalar>, 4, 4>;
using Matrix4cd = Matrix4c<double>;
using Superoperator = Eigen::Matrix<std::complex<double>, 16, 16>;

/// Computational basis index of |a b> (second label = qubit B).
constexpr int basis_index(int a, int b) { return 2 * a + b; }

/// Density matrix over {|00>, |01>, |10>, |11>}.
class TwoQubitState {
 public:
  TwoQubitState() : rho_(basis_projector(0)) {}
  explicit TwoQubitState(const Matrix4cd& rho) : rho_(rho) {}

  static TwoQubitState basis(int a, int b) { return TwoQubitState(basis_projector(basis_index(a, b))); }
  static TwoQubitState maximally_mixed() { return TwoQubitState(Matrix4cd::Identity() * 0.25); }

  const Matrix4cd& rho() const { return rho_; }
  Matrix4cd& rho() { return rho_; }

  double trace() const { return rho_.trace().real(); }
  double purity() const { return (rho_ * rho_).trace().real(); }
  double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }
  double min_eigenvalue() const;

  /// Throws std::domain_error unless Hermitian, unit trace and PSD within the
  /// stated tolerances.
  void check(double hermitian_tol = 1e-10, double trace_tol = 1e-9, double psd_tol = 1e-9) const;

 private:
  static Matrix4cd basis_projector(int k) {
    Matrix4cd m = Matrix4cd::Zero();
    m(k, k) = 1.0;
    return m;
  }

  Matrix4cd rho_;
};

/// Instantaneous rotating-frame controls. All rates in rad/s.
struct ControlSnapshot {
  double detune_a = 0.0;  // qubit frequency minus frame frequency
  double detune_b = 0.0;
  double rabi_a = 0.0;
  double phase_a = 0.0;
  double rabi_b = 0.0;
  double phase_b = 0.0;
  double omega_c = 0.0;

  bool operator==(const ControlSnapshot&) const = default;
};

struct DynamicsOptions {
  bool rwa = true;         // exchange-only sigma_x sigma_x
  bool include_zz = true;  // the 1/(6 sqrt(N_A N_B)) sigma_z sigma_z correction
};

/// Relative weight of the sigma_z sigma_z term against sigma_x sigma_x.
template <typename Scalar>
Scalar zz_weight(const BasicDeviceParams<Scalar>& params) {
  using std::sqrt;
  return Scalar(1) / (Scalar(6) * sqrt(params.n_a * params.n_b));
}

/// Two-qubit Hamiltonian (hbar = 1). Each qubit contributes detune * |1><1|
/// plus (rabi/2)(cos phi sx + sin phi sy); the coupler contributes
/// (omega_c/2)[XX + w ZZ], with XX -> (s+ s- + s- s+) under the RWA.
template <typename Scalar>
Matrix4c<Scalar> build_hamiltonian(const ControlSnapshot& s, const BasicDeviceParams<Scalar>& params,
                                   const DynamicsOptions& options = {}) {
  using C = std::complex<Scalar>;
  using M2 = Eigen::Matrix<C, 2, 2>;
  M2 id = M2::Identity();
  M2 sx, sy, sz, sp, sm, n1;
  sx << C(0), C(1), C(1), C(0);
  sy << C(0), C(0, -1), C(0, 1), C(0);
  sz << C(1), C(0), C(0), C(-1);
  sp << C(0), C(0), C(1), C(0);  // |1><0|
  sm = sp.adjoint();
  n1 << C(0), C(0), C(0), C(1);

  auto kron = [](const M2& a, const M2& b) {
    Matrix4c<Scalar> out;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) out.template block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
  };
  auto drive = [&](Scalar rabi, Scalar phase) -> M2 {
    using std::cos;
    using std::sin;
    return (rabi / Scalar(2)) * (C(cos(phase)) * sx + C(sin(phase)) * sy);
  };

  const Scalar half_c = Scalar(s.omega_c) / Scalar(2);
  const Matrix4c<Scalar> exchange = options.rwa ? Matrix4c<Scalar>(kron(sp, sm) + kron(sm, sp)) : kron(sx, sx);
  Matrix4c<Scalar> h = Scalar(s.detune_a) * kron(n1, id) + Scalar(s.detune_b) * kron(id, n1) +
                       kron(drive(Scalar(s.rabi_a), Scalar(s.phase_a)), id) +
                       kron(id, drive(Scalar(s.rabi_b), Scalar(s.phase_b))) + half_c * exchange;
  if (options.include_zz) h += half_c * zz_weight(params) * kron(sz, sz);
  return h;
}

/// Column-stacked Lindblad generator with amplitude damping at 1/t1 per qubit.
/// Infinite t1 disables that qubit's dissipator.
Superoperator liouvillian(const Matrix4cd& hamiltonian, double t1_a, double t1_b);

/// Piecewise-constant control samples: step k covers [t0 + k dt, t0 + (k+1) dt).
struct ControlTrack {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<ControlSnapshot> steps;

  double duration() const { return dt * static_cast<double>(steps.size()); }
};

/// Maximum dt * (spread of H's spectrum) accepted by the propagator, in rad.
inline constexpr double kMaxStepPhase = 0.25;
inline constexpr double kDefaultDt = 0.05e-9;

/// Applies the exact propagator of each constant step. Runs of identical
/// snapshots are exponentiated once.
TwoQubitState propagate(const TwoQubitState& state, const ControlTrack& track, const DeviceParams& params,
                        const DynamicsOptions& options = {});

/// Samples `controls` at step midpoints between t_start and t_end with steps no
/// longer than dt, then propagates.
TwoQubitState propagate(const TwoQubitState& state, const std::function<ControlSnapshot(double)>& controls,
                        double t_start, double t_end, double dt, const DeviceParams& params,
                        const DynamicsOptions& options = {});

/// Evolves under one constant snapshot for `duration`, checking the step bound
/// against dt. Samples the state at each of `times` (sorted, >= 0) and returns them.
std::vector<TwoQubitState> propagate_constant_trace(const TwoQubitState& state, const ControlSnapshot& snapshot,
                                                    const std::vector<double>& times, double dt,
                                                    const DeviceParams& params, const DynamicsOptions& options = {});

/// Readout model: confusion(i, j) = P(report j | true outcome i).
struct MeasurementModel {
  Eigen::Matrix4d confusion = Eigen::Matrix4d::Identity();

  /// Independent per-qubit readout errors: e0 = P(read 1 | 0), e1 = P(read 0 | 1).
  static MeasurementModel independent(double e0_a, double e1_a, double e0_b, double e1_b);
  void check() const;
};

using Probabilities = Eigen::Vector4d;  // (P00, P01, P10, P11)

Probabilities measure_probabilities(const TwoQubitState& state, const MeasurementModel& model = {});

/// Multinomial shot counts, deterministic for a given seed.
std::array<std::int64_t, 4> sample_shots(const Probabilities& probs, std::int64_t n, std::uint64_t seed);

}  // namespace tcoupler
