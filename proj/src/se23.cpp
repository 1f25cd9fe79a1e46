#include "lognav/se23.hpp"

#include <cmath>

#include "lognav/so3.hpp"

namespace lognav {

const ExtendedPose& ExtendedPose::identity() {
  static const ExtendedPose id;
  return id;
}

Mat5 ExtendedPose::embed() const {
  Mat5 m = Mat5::Identity();
  m.block<3, 3>(0, 0) = C.matrix();
  m.block<3, 1>(0, 3) = v;
  m.block<3, 1>(0, 4) = r;
  return m;
}

ExtendedPose ExtendedPose::from_embedding(const Mat5& m) {
  return ExtendedPose{Rotation(Mat3(m.block<3, 3>(0, 0))),
                      m.block<3, 1>(0, 3), m.block<3, 1>(0, 4)};
}

Mat5 hat_se23(const Tangent& xi) {
  Mat5 m = Mat5::Zero();
  m.block<3, 3>(0, 0) = hat3(xi.phi);
  m.block<3, 1>(0, 3) = xi.nu;
  m.block<3, 1>(0, 4) = xi.rho;
  return m;
}

ExtendedPose exp_se23(const Tangent& xi) {
  const Mat3 J = left_jacobian_so3(xi.phi);
  return ExtendedPose{exp_so3(xi.phi), J * xi.nu, J * xi.rho};
}

Tangent log_se23(const ExtendedPose& x) {
  const Vec3 phi = log_so3(x.C);
  const Mat3 Jinv = inv_left_jacobian_so3(phi);
  return Tangent{phi, Jinv * x.v, Jinv * x.r};
}

ExtendedPose compose(const ExtendedPose& a, const ExtendedPose& b) {
  const Mat3& Ca = a.C.matrix();
  return ExtendedPose{Rotation(Mat3(Ca * b.C.matrix())), Ca * b.v + a.v,
                      Ca * b.r + a.r};
}

ExtendedPose inverse(const ExtendedPose& x) {
  const Rotation Ct = x.C.transposed();
  return ExtendedPose{Ct, -(Ct.matrix() * x.v), -(Ct.matrix() * x.r)};
}

Mat9 adjoint(const ExtendedPose& x) {
  const Mat3& C = x.C.matrix();
  Mat9 a = Mat9::Zero();
  a.block<3, 3>(0, 0) = C;
  a.block<3, 3>(3, 3) = C;
  a.block<3, 3>(6, 6) = C;
  a.block<3, 3>(3, 0) = hat3(x.v) * C;
  a.block<3, 3>(6, 0) = hat3(x.r) * C;
  return a;
}

ExtendedPose flow_phi(double t, const ExtendedPose& x) {
  if (!std::isfinite(t)) {
    throw Error("flow_phi: t must be finite");
  }
  return ExtendedPose{x.C, x.v, x.r + t * x.v};
}

Mat9 flow_matrix(double t) {
  if (!std::isfinite(t)) {
    throw Error("flow_matrix: t must be finite");
  }
  Mat9 f = Mat9::Identity();
  f.block<3, 3>(6, 3) = t * Mat3::Identity();
  return f;
}

}  // namespace lognav
