#pragma once

#include <functional>
#include <vector>

#include "lognav/ins_dynamics.hpp"
#include "lognav/se23.hpp"

namespace lognav {

enum class Side { Left, Right };

/// Group-valued discrepancy between estimate and truth.
/// Left: eta = chi^-1 chi_hat. Right: eta = chi_hat chi^-1.
struct GroupError {
  ExtendedPose eta;
  Side side = Side::Left;
};

/// Exponential coordinates of a group error, dx = log_se23(eta).
struct ErrorVector {
  Tangent dx;
  Side side = Side::Left;
};

struct ErrorDynamicsMatrix {
  Mat9 F = Mat9::Zero();
  Side side = Side::Left;
  double t = 0.0;
};

GroupError left_error(const ExtendedPose& truth, const ExtendedPose& estimate);
GroupError right_error(const ExtendedPose& truth, const ExtendedPose& estimate);

/// Group-error derivative eta U - U eta + f(eta). The factored and blockwise
/// forms are both evaluated and compared (InternalMismatch on disagreement).
Mat5 eta_dot_left(const ExtendedPose& eta, const ImuSample& imu);

/// Mirror: W eta - eta W + f(eta).
Mat5 eta_dot_right(const ExtendedPose& eta, const EarthModel& earth, const Vec3& G);

/// [[-(w_ib x),0,0],[-(f x),-(w_ib x),0],[0,I,-(w_ib x)]]
ErrorDynamicsMatrix F_left(const ImuSample& imu);

/// [[-(w_ie x),0,0],[(G x),-(w_ie x),0],[0,I,-(w_ie x)]]
/// Depends only on the earth model and gravitation, never on an estimate.
ErrorDynamicsMatrix F_right(const EarthModel& earth, const Vec3& G);

/// RK4 on dx' = F(t) dx with F zero-order held per step. Samples at k*h up
/// to and including round(T/h)*h.
std::vector<ErrorVector> propagate_error_linear(
    const std::function<ErrorDynamicsMatrix(double)>& F_of_t, const ErrorVector& dx0,
    double h, double T);

/// Approximation-free left-error solution
///   dx_l(t) = Ad(chi_b_tilde_t^-1) * flow_matrix(t) * Ad(chi0) * dx0
/// where chi_b_tilde_t is the true trajectory's combined increment at t and
/// dx0 is the actual error at t = 0; the Ad(chi0) factor conjugates it into
/// the increment frame.
ErrorVector closed_form_left(const ErrorVector& dx0_actual, const ExtendedPose& chi0,
                             const ExtendedPose& chi_b_tilde_t, double t);

/// Right counterpart: dx_r(t) = Ad(chi_e_t) * flow_matrix(t) * dx0. No
/// conjugation is needed because chi_e(0) = I.
ErrorVector closed_form_right(const ErrorVector& dx0, const ExtendedPose& chi_e_t,
                              double t);

/// Central finite-difference check of d/dt M = F M for
/// M(t) = Ad(x^-1) flow_matrix(t) (left) or Ad(x) flow_matrix(t) (right),
/// given the propagated poses at t - h, t, t + h. Returns
/// ||(M(t+h) - M(t-h)) / 2h - F M(t)||_F / ||M(t)||_F, expected O(h^2).
double factorization_residual(Side side, const ExtendedPose& at_t_minus_h,
                              const ExtendedPose& at_t, const ExtendedPose& at_t_plus_h,
                              const Mat9& F_at_t, double t, double h);

/// exp(F dt) by scaling-and-squaring over an order-12 Taylor series with the
/// scaled norm brought under 0.5.
Mat9 discretize(const ErrorDynamicsMatrix& F, double dt);

ErrorVector error_vector_from_group(const GroupError& eta);

}  // namespace lognav
