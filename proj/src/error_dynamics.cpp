#include "lognav/error_dynamics.hpp"

#include <cmath>
#include <cstdio>

#include "lognav/so3.hpp"

namespace lognav {

namespace {
constexpr double kDualFormTol = 1e-13;

void check_dual_form(const Mat5& factored, const Mat5& blockwise, const char* what) {
  const double gap = (factored - blockwise).norm();
  if (gap > kDualFormTol * (1.0 + factored.norm())) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3e", gap);
    throw InternalMismatch(std::string(what) +
                           ": factored and blockwise forms differ by " + buf);
  }
}
}  // namespace

GroupError left_error(const ExtendedPose& truth, const ExtendedPose& estimate) {
  return GroupError{compose(inverse(truth), estimate), Side::Left};
}

GroupError right_error(const ExtendedPose& truth, const ExtendedPose& estimate) {
  return GroupError{compose(estimate, inverse(truth)), Side::Right};
}

Mat5 eta_dot_left(const ExtendedPose& eta, const ImuSample& imu) {
  const Mat5 U = input_matrix_u(imu);
  const Mat5 e = eta.embed();
  const Mat5 factored = e * U - U * e + invariant_field(e);

  const Mat3& dC = eta.C.matrix();
  const Mat3 w = hat3(imu.omega_ib_b);
  Mat5 blockwise = Mat5::Zero();
  blockwise.block<3, 3>(0, 0) = dC * w - w * dC;
  blockwise.block<3, 1>(0, 3) = (dC - Mat3::Identity()) * imu.f_b - w * eta.v;
  blockwise.block<3, 1>(0, 4) = eta.v - w * eta.r;

  check_dual_form(factored, blockwise, "eta_dot_left");
  return factored;
}

Mat5 eta_dot_right(const ExtendedPose& eta, const EarthModel& earth, const Vec3& G) {
  const Mat5 W = input_matrix_w(earth, G);
  const Mat5 e = eta.embed();
  const Mat5 factored = W * e - e * W + invariant_field(e);

  const Mat3& dC = eta.C.matrix();
  const Mat3 w = hat3(earth.omega_ie_e);
  Mat5 blockwise = Mat5::Zero();
  blockwise.block<3, 3>(0, 0) = dC * w - w * dC;
  blockwise.block<3, 1>(0, 3) = (Mat3::Identity() - dC) * G - w * eta.v;
  blockwise.block<3, 1>(0, 4) = eta.v - w * eta.r;

  check_dual_form(factored, blockwise, "eta_dot_right");
  return factored;
}

ErrorDynamicsMatrix F_left(const ImuSample& imu) {
  const Mat3 w = hat3(imu.omega_ib_b);
  ErrorDynamicsMatrix out;
  out.side = Side::Left;
  out.t = imu.t;
  out.F.block<3, 3>(0, 0) = -w;
  out.F.block<3, 3>(3, 0) = -hat3(imu.f_b);
  out.F.block<3, 3>(3, 3) = -w;
  out.F.block<3, 3>(6, 3) = Mat3::Identity();
  out.F.block<3, 3>(6, 6) = -w;
  return out;
}

ErrorDynamicsMatrix F_right(const EarthModel& earth, const Vec3& G) {
  const Mat3 w = hat3(earth.omega_ie_e);
  ErrorDynamicsMatrix out;
  out.side = Side::Right;
  out.F.block<3, 3>(0, 0) = -w;
  out.F.block<3, 3>(3, 0) = hat3(G);
  out.F.block<3, 3>(3, 3) = -w;
  out.F.block<3, 3>(6, 3) = Mat3::Identity();
  out.F.block<3, 3>(6, 6) = -w;
  return out;
}

std::vector<ErrorVector> propagate_error_linear(
    const std::function<ErrorDynamicsMatrix(double)>& F_of_t, const ErrorVector& dx0,
    double h, double T) {
  if (h <= 0.0) {
    throw Error("propagate_error_linear: step must be positive");
  }
  const auto n_steps = static_cast<std::size_t>(std::llround(T / h));
  std::vector<ErrorVector> out;
  out.reserve(n_steps + 1);
  Vec9 x = dx0.dx.vec();
  for (std::size_t k = 0; k <= n_steps; ++k) {
    out.push_back(ErrorVector{Tangent::from_vec(x), dx0.side});
    if (k < n_steps) {
      const double t = static_cast<double>(k) * h;
      const ErrorDynamicsMatrix Fd = F_of_t(t);
      if (Fd.side != dx0.side) {
        throw Error("propagate_error_linear: F side does not match the error side");
      }
      x = rk4_step(x, t, h, [&Fd](double, const Vec9& y) -> Vec9 { return Fd.F * y; });
    }
  }
  return out;
}

ErrorVector closed_form_left(const ErrorVector& dx0_actual, const ExtendedPose& chi0,
                             const ExtendedPose& chi_b_tilde_t, double t) {
  if (dx0_actual.side != Side::Left) {
    throw Error("closed_form_left: expected a left-side error vector");
  }
  const Vec9 v = adjoint(inverse(chi_b_tilde_t)) *
                 (flow_matrix(t) * (adjoint(chi0) * dx0_actual.dx.vec()));
  return ErrorVector{Tangent::from_vec(v), Side::Left};
}

ErrorVector closed_form_right(const ErrorVector& dx0, const ExtendedPose& chi_e_t,
                              double t) {
  if (dx0.side != Side::Right) {
    throw Error("closed_form_right: expected a right-side error vector");
  }
  const Vec9 v = adjoint(chi_e_t) * (flow_matrix(t) * dx0.dx.vec());
  return ErrorVector{Tangent::from_vec(v), Side::Right};
}

double factorization_residual(Side side, const ExtendedPose& at_t_minus_h,
                              const ExtendedPose& at_t, const ExtendedPose& at_t_plus_h,
                              const Mat9& F_at_t, double t, double h) {
  const auto M = [side](const ExtendedPose& x, double tt) -> Mat9 {
    const Mat9 a = (side == Side::Left) ? adjoint(inverse(x)) : adjoint(x);
    return a * flow_matrix(tt);
  };
  const Mat9 m_dot = (M(at_t_plus_h, t + h) - M(at_t_minus_h, t - h)) / (2.0 * h);
  const Mat9 m_center = M(at_t, t);
  return (m_dot - F_at_t * m_center).norm() / m_center.norm();
}

Mat9 discretize(const ErrorDynamicsMatrix& F, double dt) {
  if (dt <= 0.0) {
    throw Error("discretize: dt must be positive");
  }
  Mat9 a = F.F * dt;
  int squarings = 0;
  double norm = a.norm();
  while (norm >= 0.5) {
    a *= 0.5;
    norm *= 0.5;
    ++squarings;
  }
  Mat9 result = Mat9::Identity();
  Mat9 term = Mat9::Identity();
  for (int k = 1; k <= 12; ++k) {
    term = Mat9(term * a) / static_cast<double>(k);
    result += term;
  }
  for (int s = 0; s < squarings; ++s) {
    result = Mat9(result * result);
  }
  return result;
}

ErrorVector error_vector_from_group(const GroupError& eta) {
  return ErrorVector{log_se23(eta.eta), eta.side};
}

}  // namespace lognav
