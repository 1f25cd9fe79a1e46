#include "lognav/so3.hpp"

#include <cmath>
#include <cstdio>

namespace lognav {

namespace {
constexpr double kSmallAngle = 1e-4;      // series switch threshold
constexpr double kPiMargin = 1e-6;        // branch-cut guard

std::string fmt_sci(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6e", x);
  return buf;
}
}  // namespace

double orthonormality_defect(const Mat3& m) {
  return (m.transpose() * m - Mat3::Identity()).norm();
}

Rotation::Rotation(const Mat3& m) : m_(m) {
  const double defect = orthonormality_defect(m);
  if (defect > kRotationAdmissionTol) {
    throw NotARotation("rotation admission failed: ||m^T m - I||_F = " +
                       fmt_sci(defect));
  }
  const double det = m.determinant();
  if (std::abs(det - 1.0) > kRotationAdmissionTol) {
    throw NotARotation("rotation admission failed: det(m) = " + fmt_sci(det));
  }
}

const Rotation& Rotation::identity() {
  static const Rotation id;
  return id;
}

Mat3 hat3(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return m;
}

Vec3 vee3(const Mat3& m) {
  const Mat3 sym = 0.5 * (m + m.transpose());
  if (sym.norm() > 1e-9) {
    throw NonSkewError("vee3: symmetric part " + fmt_sci(sym.norm()) +
                       " exceeds tolerance");
  }
  return Vec3(0.5 * (m(2, 1) - m(1, 2)),
              0.5 * (m(0, 2) - m(2, 0)),
              0.5 * (m(1, 0) - m(0, 1)));
}

Rotation exp_so3(const Vec3& phi) {
  const double t2 = phi.squaredNorm();
  double a;  // sin(t)/t
  double b;  // (1-cos(t))/t^2
  if (t2 < kSmallAngle * kSmallAngle) {
    a = 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0);
    b = 0.5 * (1.0 - t2 / 12.0 * (1.0 - t2 / 30.0));
  } else {
    const double t = std::sqrt(t2);
    a = std::sin(t) / t;
    b = (1.0 - std::cos(t)) / t2;
  }
  const Mat3 w = hat3(phi);
  return Rotation(Mat3(Mat3::Identity() + a * w + b * w * w));
}

Vec3 log_so3(const Rotation& C) {
  const Mat3& R = C.matrix();
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double s = 0.5 * w.norm();           // sin(theta)
  const double c = 0.5 * (R.trace() - 1.0);  // cos(theta)
  const double theta = std::atan2(s, c);
  if (theta > M_PI - kPiMargin) {
    throw NearPiSingularity("log_so3: rotation angle " + fmt_sci(theta) +
                            " within 1e-6 of pi");
  }
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    return 0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) * w;
  }
  if (c > -0.7) {
    return (theta / (2.0 * s)) * w;
  }
  // Close to pi the skew part loses precision; recover the axis from the
  // symmetric part, a a^T = (sym(R) - c I) / (1 - c), sign from w.
  const Mat3 S = 0.5 * (R + R.transpose());
  Mat3 aaT = (S - c * Mat3::Identity()) / (1.0 - c);
  int j = 0;
  aaT.diagonal().maxCoeff(&j);
  Vec3 a = aaT.col(j) / std::sqrt(aaT(j, j));
  if (w.dot(a) < 0.0) a = -a;
  return theta * a;
}

Mat3 left_jacobian_so3(const Vec3& phi) {
  const double t2 = phi.squaredNorm();
  double a;  // (1-cos(t))/t^2
  double b;  // (t-sin(t))/t^3
  if (t2 < kSmallAngle * kSmallAngle) {
    a = 0.5 * (1.0 - t2 / 12.0 * (1.0 - t2 / 30.0));
    b = (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0)) / 6.0;
  } else {
    const double t = std::sqrt(t2);
    a = (1.0 - std::cos(t)) / t2;
    b = (t - std::sin(t)) / (t2 * t);
  }
  const Mat3 w = hat3(phi);
  return Mat3::Identity() + a * w + b * w * w;
}

Mat3 inv_left_jacobian_so3(const Vec3& phi) {
  const double t2 = phi.squaredNorm();
  const double t = std::sqrt(t2);
  if (t > M_PI - kPiMargin) {
    throw NearPiSingularity("inv_left_jacobian_so3: ||phi|| = " + fmt_sci(t) +
                            " within 1e-6 of pi");
  }
  double c;  // J^-1 = I - W/2 + c W^2
  if (t < kSmallAngle) {
    c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    const double half = 0.5 * t;
    c = (1.0 - half * std::cos(half) / std::sin(half)) / t2;
  }
  const Mat3 w = hat3(phi);
  return Mat3::Identity() - 0.5 * w + c * w * w;
}

}  // namespace lognav
