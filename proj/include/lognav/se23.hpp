#pragma once

#include "lognav/types.hpp"

namespace lognav {

/// Lie-algebra embedding of a tangent: [[hat3(phi), nu, rho]; 0; 0].
Mat5 hat_se23(const Tangent& xi);

/// exp: C = exp_so3(phi), v = J(phi) nu, r = J(phi) rho.
ExtendedPose exp_se23(const Tangent& xi);

/// Principal-branch logarithm; throws NearPiSingularity past pi - 1e-6.
Tangent log_se23(const ExtendedPose& x);

/// Group product (C_a C_b, C_a v_b + v_a, C_a r_b + r_a).
ExtendedPose compose(const ExtendedPose& a, const ExtendedPose& b);

/// Group inverse (C^T, -C^T v, -C^T r).
ExtendedPose inverse(const ExtendedPose& x);

/// Adjoint [[C,0,0],[hat(v)C,C,0],[hat(r)C,0,C]];
/// satisfies x xi^ x^-1 = (adjoint(x) xi)^.
Mat9 adjoint(const ExtendedPose& x);

/// Flow automorphism x + t f(x): shifts position by t * velocity.
ExtendedPose flow_phi(double t, const ExtendedPose& x);

/// Tangent action of the flow: [[I,0,0],[0,I,0],[0,tI,I]];
/// flow_phi(t, exp_se23(xi)) = exp_se23(flow_matrix(t) xi).
Mat9 flow_matrix(double t);

}  // namespace lognav
