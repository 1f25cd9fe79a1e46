#pragma once

#include <span>
#include <variant>
#include <vector>

#include "lognav/se23.hpp"
#include "lognav/types.hpp"

namespace lognav {

inline constexpr double kEarthRateWgs84 = 7.292115e-5;  // rad/s
inline constexpr double kMuEarthWgs84 = 3.986004418e14;  // m^3/s^2

/// Gyroscope rate and specific force at a timestamp. Streams are uniformly
/// spaced and zero-order held over each integration step.
struct ImuSample {
  double t = 0.0;
  Vec3 omega_ib_b = Vec3::Zero();  // rad/s
  Vec3 f_b = Vec3::Zero();         // m/s^2
};

/// Earth rate plus a gravitation field: either a fixed vector or a central
/// body evaluated at a supplied reference position.
struct EarthModel {
  struct ConstantVector {
    Vec3 G = Vec3(0.0, 0.0, -9.81);
  };
  struct CentralBody {
    double mu = kMuEarthWgs84;
  };

  Vec3 omega_ie_e = Vec3(0.0, 0.0, kEarthRateWgs84);
  std::variant<ConstantVector, CentralBody> gravitation = ConstantVector{};
};

/// Gravitation at r. CentralBody mode requires ||r|| > 1e5 m
/// (DegeneratePosition otherwise).
Vec3 gravitation_at(const EarthModel& model, const Vec3& r);

/// Gravity g = G - (w_ie x)^2 r.
Vec3 gravity_at(const EarthModel& model, const Vec3& r);

/// Ground velocity v_eb = v_ib - (w_ie x) r_ib.
Vec3 ground_velocity(const ExtendedPose& chi, const EarthModel& earth);

/// Input matrices of the group-affine factorization chi U + W chi + f(chi).
struct AffineInputs {
  Mat5 U = Mat5::Zero();
  Mat5 W = Mat5::Zero();
};

Mat5 input_matrix_u(const ImuSample& imu);
Mat5 input_matrix_w(const EarthModel& earth, const Vec3& G);
AffineInputs affine_inputs(const ImuSample& imu, const EarthModel& earth, const Vec3& G);

/// Invariant vector field on the ambient space: moves the velocity column
/// into the position column, zero elsewhere.
Mat5 invariant_field(const Mat5& x);

/// Full dynamics chi U + W chi + f(chi) as a 5x5 derivative matrix.
Mat5 chi_dot(const ExtendedPose& chi, const ImuSample& imu, const EarthModel& earth,
             const Vec3& G);

/// || f_u(x1 x2) - f_u(x1) x2 - x1 f_u(x2) + x1 f_u(I) x2 ||_F
/// normalized by (1 + ||f_u(x1 x2)||_F). Zero for a group-affine system.
double group_affine_residual(const ExtendedPose& chi1, const ExtendedPose& chi2,
                             const ImuSample& imu, const EarthModel& earth,
                             const Vec3& G);

/// Classical 4-stage Runge-Kutta step; f(t, y) -> dy/dt.
template <class State, class Deriv>
State rk4_step(const State& y, double t, double h, Deriv&& f) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
  const State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
  const State k4 = f(t + h, State(y + h * k3));
  return State(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

struct TrueState {
  double t = 0.0;
  ExtendedPose chi;
};

struct Propagation {
  std::vector<TrueState> states;
  std::vector<double> ortho_drift;  // ||C^T C - I||_F per sample
  double max_ortho_drift = 0.0;
};

/// RK4 over the stream with zero-order-held inputs. Gravitation is a common
/// input supplied per sample, never evaluated from the propagated state.
/// No re-projection is applied; drift beyond 1e-9 throws DriftExceeded.
Propagation propagate_chi(const ExtendedPose& chi0, std::span<const ImuSample> imu,
                          std::span<const Vec3> G, const EarthModel& earth);

/// Local increment: chi_b' = chi_b U + f(chi_b), chi_b(0) = I.
Propagation propagate_chi_b(std::span<const ImuSample> imu);

/// Global increment: chi_e' = W chi_e + f(chi_e), chi_e(0) = I.
Propagation propagate_chi_e(const EarthModel& earth, std::span<const Vec3> G, double h);

/// Combined increment: same vector field as chi_b, initial value chi0.
Propagation propagate_chi_b_tilde(const ExtendedPose& chi0, std::span<const ImuSample> imu);

/// chi = chi_e * flow_phi(t, chi_0) * chi_b.
struct DecomposedState {
  ExtendedPose chi_e;
  ExtendedPose chi_0;
  ExtendedPose chi_b;
  double t = 0.0;
};

ExtendedPose recompose(const DecomposedState& d);

}  // namespace lognav
