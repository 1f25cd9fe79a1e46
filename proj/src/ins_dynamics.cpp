#include "lognav/ins_dynamics.hpp"

#include <cmath>
#include <cstdio>

#include "lognav/so3.hpp"

namespace lognav {

namespace {

constexpr double kDriftTol = 1e-9;
constexpr double kCentralBodyRadiusFloor = 1e5;  // m

std::string fmt_sci(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3e", x);
  return buf;
}

double step_of(std::span<const ImuSample> imu) {
  if (imu.size() < 2) {
    throw Error("propagation requires at least two samples");
  }
  return imu[1].t - imu[0].t;
}

// Shared RK4 loop over the ambient 5x5 space. The derivative for step k is
// built once from the held inputs and reused by all four stages.
template <class MakeDeriv>
Propagation propagate_ambient(const ExtendedPose& chi0, std::size_t n_samples,
                              double t0, double h, MakeDeriv&& make_deriv) {
  Propagation out;
  out.states.reserve(n_samples);
  out.ortho_drift.reserve(n_samples);

  Mat5 x = chi0.embed();
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double t = t0 + static_cast<double>(k) * h;
    const double drift = orthonormality_defect(Mat3(x.block<3, 3>(0, 0)));
    if (drift > kDriftTol) {
      throw DriftExceeded("orthonormality drift " + fmt_sci(drift) + " at t = " +
                          fmt_sci(t) + "; reduce the integration step");
    }
    out.ortho_drift.push_back(drift);
    out.max_ortho_drift = std::max(out.max_ortho_drift, drift);
    out.states.push_back({t, ExtendedPose::from_embedding(x)});
    if (k + 1 < n_samples) {
      const auto deriv = make_deriv(k);
      x = rk4_step(x, t, h, deriv);
    }
  }
  return out;
}

}  // namespace

Vec3 gravitation_at(const EarthModel& model, const Vec3& r) {
  if (const auto* cv = std::get_if<EarthModel::ConstantVector>(&model.gravitation)) {
    return cv->G;
  }
  const auto& cb = std::get<EarthModel::CentralBody>(model.gravitation);
  const double dist = r.norm();
  if (dist <= kCentralBodyRadiusFloor) {
    throw DegeneratePosition("central-body gravitation at ||r|| = " +
                             std::to_string(dist) + " m (floor 1e5 m)");
  }
  return -cb.mu / (dist * dist * dist) * r;
}

Vec3 gravity_at(const EarthModel& model, const Vec3& r) {
  const Mat3 w = hat3(model.omega_ie_e);
  return gravitation_at(model, r) - w * (w * r);
}

Vec3 ground_velocity(const ExtendedPose& chi, const EarthModel& earth) {
  return chi.v - earth.omega_ie_e.cross(chi.r);
}

Mat5 input_matrix_u(const ImuSample& imu) {
  Mat5 u = Mat5::Zero();
  u.block<3, 3>(0, 0) = hat3(imu.omega_ib_b);
  u.block<3, 1>(0, 3) = imu.f_b;
  return u;
}

Mat5 input_matrix_w(const EarthModel& earth, const Vec3& G) {
  Mat5 w = Mat5::Zero();
  w.block<3, 3>(0, 0) = -hat3(earth.omega_ie_e);
  w.block<3, 1>(0, 3) = G;
  return w;
}

AffineInputs affine_inputs(const ImuSample& imu, const EarthModel& earth, const Vec3& G) {
  return AffineInputs{input_matrix_u(imu), input_matrix_w(earth, G)};
}

Mat5 invariant_field(const Mat5& x) {
  Mat5 f = Mat5::Zero();
  f.block<3, 1>(0, 4) = x.block<3, 1>(0, 3);
  return f;
}

Mat5 chi_dot(const ExtendedPose& chi, const ImuSample& imu, const EarthModel& earth,
             const Vec3& G) {
  const AffineInputs in = affine_inputs(imu, earth, G);
  const Mat5 x = chi.embed();
  return x * in.U + in.W * x + invariant_field(x);
}

double group_affine_residual(const ExtendedPose& chi1, const ExtendedPose& chi2,
                             const ImuSample& imu, const EarthModel& earth,
                             const Vec3& G) {
  const AffineInputs in = affine_inputs(imu, earth, G);
  const auto f_u = [&in](const Mat5& x) -> Mat5 {
    return x * in.U + in.W * x + invariant_field(x);
  };
  const Mat5 x1 = chi1.embed();
  const Mat5 x2 = chi2.embed();
  const Mat5 x12 = x1 * x2;
  const Mat5 f12 = f_u(x12);
  const Mat5 fid = in.U + in.W;  // f_u at the identity element
  const Mat5 resid = f12 - f_u(x1) * x2 - x1 * f_u(x2) + x1 * fid * x2;
  return resid.norm() / (1.0 + f12.norm());
}

Propagation propagate_chi(const ExtendedPose& chi0, std::span<const ImuSample> imu,
                          std::span<const Vec3> G, const EarthModel& earth) {
  const double h = step_of(imu);
  if (G.size() + 1 < imu.size()) {
    throw Error("propagate_chi: gravitation stream shorter than the step count");
  }
  return propagate_ambient(chi0, imu.size(), imu[0].t, h, [&](std::size_t k) {
    const Mat5 U = input_matrix_u(imu[k]);
    const Mat5 W = input_matrix_w(earth, G[k]);
    return [U, W](double, const Mat5& y) -> Mat5 {
      return y * U + W * y + invariant_field(y);
    };
  });
}

Propagation propagate_chi_b(std::span<const ImuSample> imu) {
  return propagate_chi_b_tilde(ExtendedPose::identity(), imu);
}

Propagation propagate_chi_e(const EarthModel& earth, std::span<const Vec3> G, double h) {
  if (G.empty()) {
    throw Error("propagate_chi_e: empty gravitation stream");
  }
  return propagate_ambient(ExtendedPose::identity(), G.size(), 0.0, h,
                           [&](std::size_t k) {
                             const Mat5 W = input_matrix_w(earth, G[k]);
                             return [W](double, const Mat5& y) -> Mat5 {
                               return W * y + invariant_field(y);
                             };
                           });
}

Propagation propagate_chi_b_tilde(const ExtendedPose& chi0, std::span<const ImuSample> imu) {
  const double h = step_of(imu);
  return propagate_ambient(chi0, imu.size(), imu[0].t, h, [&](std::size_t k) {
    const Mat5 U = input_matrix_u(imu[k]);
    return [U](double, const Mat5& y) -> Mat5 { return y * U + invariant_field(y); };
  });
}

ExtendedPose recompose(const DecomposedState& d) {
  return compose(d.chi_e, compose(flow_phi(d.t, d.chi_0), d.chi_b));
}

}  // namespace lognav
