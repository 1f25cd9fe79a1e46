#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include <stdexcept>
#include <string>

namespace lognav {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// vee of a matrix whose symmetric part exceeds tolerance.
struct NonSkewError : Error {
  using Error::Error;
};

/// Logarithm/Jacobian-inverse requested within 1e-6 of the pi branch cut.
struct NearPiSingularity : Error {
  using Error::Error;
};

/// Central-body gravitation evaluated below the radius floor.
struct DegeneratePosition : Error {
  using Error::Error;
};

/// Orthonormality drift monitor tripped during propagation.
struct DriftExceeded : Error {
  using Error::Error;
};

/// Two algebraically equivalent forms disagreed (implementation bug).
struct InternalMismatch : Error {
  using Error::Error;
};

/// Trajectory specification outside the supported families/parameters.
struct UnsupportedSpec : Error {
  using Error::Error;
};

/// Config document is not well formed.
struct ParseError : Error {
  using Error::Error;
};

/// Config parsed but violates invariants.
struct ValidationError : Error {
  using Error::Error;
};

/// Matrix fails the rotation admission test.
struct NotARotation : Error {
  using Error::Error;
};

inline constexpr double kRotationAdmissionTol = 1e-9;

/// ||m^T m - I||_F
double orthonormality_defect(const Mat3& m);

/// Direction-cosine matrix with admission checks:
/// ||m^T m - I||_F <= 1e-9 and |det(m) - 1| <= 1e-9.
class Rotation {
 public:
  Rotation() = default;
  explicit Rotation(const Mat3& m);

  static const Rotation& identity();

  const Mat3& matrix() const noexcept { return m_; }

  /// Transpose (= inverse); skips re-admission, orthonormality is preserved.
  Rotation transposed() const { return Rotation(Mat3(m_.transpose()), Trusted{}); }

 private:
  struct Trusted {};
  Rotation(const Mat3& m, Trusted) : m_(m) {}
  Mat3 m_ = Mat3::Identity();
};

/// Exponential coordinates (phi, nu, rho) of an SE2(3) element, in the
/// (attitude, velocity, position) row order used by all 9x9 matrices here.
/// Canonical values produced by logarithms satisfy ||phi|| < pi.
struct Tangent {
  Vec3 phi = Vec3::Zero();
  Vec3 nu = Vec3::Zero();
  Vec3 rho = Vec3::Zero();

  Vec9 vec() const {
    Vec9 v;
    v << phi, nu, rho;
    return v;
  }
  static Tangent from_vec(const Vec9& v) {
    return Tangent{v.segment<3>(0), v.segment<3>(3), v.segment<3>(6)};
  }
  double norm() const { return vec().norm(); }
};

/// SE2(3) element (C, v, r): attitude, inertial velocity and position in the
/// earth frame. The 5x5 embedding is a view; the record is canonical.
struct ExtendedPose {
  Rotation C;
  Vec3 v = Vec3::Zero();
  Vec3 r = Vec3::Zero();

  static const ExtendedPose& identity();

  Mat5 embed() const;
  /// Reads (C, v, r) back out of an embedding; admission checks apply.
  static ExtendedPose from_embedding(const Mat5& m);
};

}  // namespace lognav
