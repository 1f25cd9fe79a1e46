#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lognav/scenario.hpp"

namespace lognav {

struct RunReport {
  std::string name;
  double max_rel_residual = 0.0;
  double final_residual = 0.0;
  double convergence_ratio = 0.0;  // residual(h) / residual(h/2)
  bool pass = false;
  double wall_time_s = 0.0;
  std::map<std::string, double> metrics;
  std::vector<std::string> details;

  std::string summary_line() const;
};

/// Group-affine condition on n random (chi1, chi2, U, W) triples;
/// pass iff the largest normalized residual is <= 1e-12.
/// CSV (idx,residual) written when output_path is nonempty.
RunReport run_affine_check(int n_samples, std::uint64_t seed,
                           const std::string& output_path = {});

/// Propagates truth and estimate with identical inputs, the linear error
/// model and the adjoint/flow closed form, at cfg.step_s and at half the
/// step. Pass iff both residual maxima are <= 1e-6 and the combined maximum
/// shrinks by a factor in [12, 20] under halving (waived when the residual is
/// already at the 1e-12 floor). CSV columns:
///   t, dx_true[9], dx_lin[9], dx_closed[9], rel_resid_lin, rel_resid_closed,
///   ortho_drift
RunReport run_exactness(const ExperimentConfig& cfg);

/// Direct integration vs recomposed increments; pass iff the Frobenius gap
/// stays <= 1e-7 and shrinks by a factor in [12, 20] under step halving.
/// CSV columns: t, gap_frobenius.
RunReport run_decompose(const ExperimentConfig& cfg);

/// Algebraic identity suite (named residuals, fixed tolerances). With
/// corrupt_adjoint the adjoint used by the suite gets a sign flip in the
/// velocity-attitude block, which must fail the adjoint identities.
RunReport run_identity_suite(bool corrupt_adjoint = false);

/// Central finite-difference residual of the transition-factor ODE at time t
/// on cfg's scenario; h_fd is the differencing step.
double factorization_residual_at(const ExperimentConfig& cfg, Side side, double t,
                                 double h_fd);

}  // namespace lognav
