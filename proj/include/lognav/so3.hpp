#pragma once

#include "lognav/types.hpp"

namespace lognav {

/// Skew-symmetric cross-product matrix: hat3(w) * u = w x u.
Mat3 hat3(const Vec3& w);

/// Inverse of hat3. Throws NonSkewError if the symmetric part of m exceeds
/// 1e-9 in Frobenius norm; the antisymmetric part is used otherwise.
Vec3 vee3(const Mat3& m);

/// Rodrigues exponential; series below ||phi|| = 1e-4.
Rotation exp_so3(const Vec3& phi);

/// Principal-branch logarithm. Throws NearPiSingularity for rotation angles
/// beyond pi - 1e-6 instead of picking a branch.
Vec3 log_so3(const Rotation& C);

/// Left Jacobian J = I + ((1-cos)/t^2) W + ((t-sin)/t^3) W^2, W = hat3(phi).
Mat3 left_jacobian_so3(const Vec3& phi);

/// Closed-form inverse of the left Jacobian; guarded at pi - 1e-6.
Mat3 inv_left_jacobian_so3(const Vec3& phi);

}  // namespace lognav
