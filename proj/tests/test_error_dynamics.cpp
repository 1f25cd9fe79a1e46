#include <doctest.h>

#include <cmath>

#include "lognav/error_dynamics.hpp"
#include "lognav/experiments.hpp"
#include "lognav/scenario.hpp"
#include "lognav/so3.hpp"
#include "oracles.hpp"

using namespace lognav;

TEST_CASE("error definitions") {
  oracles::Rng rng(201);
  const ExtendedPose truth = rng.pose();
  const ExtendedPose estimate = rng.pose();

  CHECK((left_error(truth, truth).eta.embed() - Mat5::Identity()).norm() <= 1e-13);
  CHECK((right_error(truth, truth).eta.embed() - Mat5::Identity()).norm() <= 1e-13);

  CHECK((left_error(ExtendedPose::identity(), estimate).eta.embed() - estimate.embed())
            .norm() == 0.0);
  CHECK((right_error(ExtendedPose::identity(), estimate).eta.embed() - estimate.embed())
            .norm() <= 1e-15);

  const GroupError el = left_error(truth, estimate);
  CHECK((compose(truth, el.eta).embed() - estimate.embed()).norm() <= 1e-13);
  CHECK(el.side == Side::Left);

  const GroupError er = right_error(truth, estimate);
  CHECK((compose(er.eta, truth).embed() - estimate.embed()).norm() <= 1e-13);
  CHECK(er.side == Side::Right);
}

TEST_CASE("eta_dot forms") {
  EarthModel earth;
  oracles::Rng rng(202);

  CHECK(eta_dot_left(ExtendedPose::identity(), ImuSample{0, rng.vec(1.0), rng.vec(10.0)})
            .norm() == 0.0);
  CHECK(eta_dot_right(ExtendedPose::identity(), earth, rng.vec(10.0)).norm() == 0.0);

  // dC = I kills the specific-force / gravitation coupling.
  const ExtendedPose no_att_err{Rotation::identity(), Vec3(1, -2, 3), Vec3(4, 5, -6)};
  const ImuSample imu{0.0, Vec3(0.3, -0.2, 0.5), Vec3(1, 2, 3)};
  const Mat5 dl = eta_dot_left(no_att_err, imu);
  CHECK(dl.block<3, 3>(0, 0).norm() == 0.0);
  CHECK((dl.block<3, 1>(0, 3) + hat3(imu.omega_ib_b) * no_att_err.v).norm() <= 1e-15);

  const Vec3 G(0, 0, -9.81);
  const Mat5 dr = eta_dot_right(no_att_err, earth, G);
  CHECK((dr.block<3, 1>(0, 3) + hat3(earth.omega_ie_e) * no_att_err.v).norm() <= 1e-15);

  // Dual forms agree on random inputs (would throw InternalMismatch).
  for (int i = 0; i < 200; ++i) {
    eta_dot_left(rng.pose(), ImuSample{0.0, rng.vec(1.0), rng.vec(15.0)});
    eta_dot_right(rng.pose(), earth, rng.vec(12.0));
  }
}

TEST_CASE("error dynamics matrices") {
  const ErrorDynamicsMatrix zero_l = F_left(ImuSample{});
  Mat9 expected = Mat9::Zero();
  expected.block<3, 3>(6, 3) = Mat3::Identity();
  CHECK((zero_l.F - expected).norm() == 0.0);
  CHECK(zero_l.side == Side::Left);

  const ImuSample spin{0.0, Vec3(0, 0, 1), Vec3::Zero()};
  const Mat9 Fl = F_left(spin).F;
  const Mat3 block = -hat3(Vec3(0, 0, 1));
  CHECK((Mat3(Fl.block<3, 3>(0, 0)) - block).norm() == 0.0);
  CHECK((Mat3(Fl.block<3, 3>(3, 3)) - block).norm() == 0.0);
  CHECK((Mat3(Fl.block<3, 3>(6, 6)) - block).norm() == 0.0);
  CHECK(Mat3(Fl.block<3, 3>(3, 0)).norm() == 0.0);

  EarthModel still;
  still.omega_ie_e = Vec3::Zero();
  const ErrorDynamicsMatrix zero_r = F_right(still, Vec3::Zero());
  CHECK((zero_r.F - expected).norm() == 0.0);
  CHECK(zero_r.side == Side::Right);

  EarthModel earth;
  const Vec3 G(0, 0, -9.81);
  CHECK((Mat3(F_right(earth, G).F.block<3, 3>(3, 0)) - hat3(G)).norm() == 0.0);
}

TEST_CASE("F_right never sees the estimate") {
  // Two different estimate initializations produce bit-identical F streams.
  ExperimentConfig cfg;
  cfg.trajectory.duration_s = 1.0;
  const ReferenceStream ref = synth_reference(cfg.trajectory, cfg.earth);
  const ExtendedPose est_a = inject_error(ref.samples[0].chi, default_initial_error(),
                                          Side::Right);
  Tangent other = default_initial_error();
  other.nu = -other.nu;
  const ExtendedPose est_b = inject_error(ref.samples[0].chi, other, Side::Right);
  CHECK((est_a.embed() - est_b.embed()).norm() > 0.0);
  for (const auto& s : ref.samples) {
    const Mat9 Fa = F_right(cfg.earth, s.G).F;
    const Mat9 Fb = F_right(cfg.earth, s.G).F;
    CHECK((Fa.array() == Fb.array()).all());
  }
}

TEST_CASE("linear error propagation") {
  // Zero initial error stays zero.
  const auto F_const = [](double) { return F_left(ImuSample{0, Vec3(0.1, 0.2, 0.3),
                                                            Vec3(1, 2, 3)}); };
  const auto zeros = propagate_error_linear(F_const, ErrorVector{}, 0.01, 1.0);
  CHECK(zeros.back().dx.vec().norm() == 0.0);

  // Nilpotent closed form: zero earth rate, constant G.
  EarthModel still;
  still.omega_ie_e = Vec3::Zero();
  const Vec3 G(0, 0, -9.81);
  const ErrorVector dx0{Tangent{Vec3(0.2, -0.1, 0.3), Vec3(1, 2, -1), Vec3(10, -20, 5)},
                        Side::Right};
  const auto F_of_t = [&](double) { return F_right(still, G); };
  const double T = 3.0;
  const auto series = propagate_error_linear(F_of_t, dx0, 0.01, T);
  const Vec3 expected_nu = dx0.dx.nu + T * G.cross(dx0.dx.phi);
  const Vec3 expected_rho =
      dx0.dx.rho + T * dx0.dx.nu + 0.5 * T * T * G.cross(dx0.dx.phi);
  CHECK((series.back().dx.phi - dx0.dx.phi).norm() <= 1e-12);
  CHECK((series.back().dx.nu - expected_nu).norm() <= 1e-11);
  CHECK((series.back().dx.rho - expected_rho).norm() <= 1e-10);

  // Fourth-order convergence on a time-varying F, held on the coarse grid.
  // The epsilon keeps boundary samples in the same cell at every resolution.
  const auto F_held = [](double t) {
    const double tq = std::floor((t + 1e-9) / 0.02) * 0.02;
    return F_left(ImuSample{tq,
                            Vec3(0.9 * std::sin(2.1 * tq), -0.7 * std::cos(1.3 * tq), 0.4),
                            Vec3(3.0 * std::sin(1.7 * tq), 9.8, -2.0 * std::cos(2.9 * tq))});
  };
  const ErrorVector big{Tangent{Vec3(0.5, -0.4, 0.3), Vec3(2, -1, 1), Vec3(30, 10, -20)},
                        Side::Left};
  const Vec9 coarse = propagate_error_linear(F_held, big, 0.02, 2.0).back().dx.vec();
  const Vec9 mid = propagate_error_linear(F_held, big, 0.01, 2.0).back().dx.vec();
  const Vec9 fine = propagate_error_linear(F_held, big, 0.005, 2.0).back().dx.vec();
  const double ratio = (coarse - mid).norm() / (mid - fine).norm();
  CHECK(ratio >= 13.0);
  CHECK(ratio <= 19.0);
}

TEST_CASE("closed forms at t = 0 and in degenerate scenarios") {
  oracles::Rng rng(203);
  const Tangent dx0 = rng.tangent(2.0, 5.0, 50.0);
  const ExtendedPose chi0 = rng.pose();

  const ErrorVector at0 =
      closed_form_left(ErrorVector{dx0, Side::Left}, chi0, chi0, 0.0);
  CHECK((at0.dx.vec() - dx0.vec()).norm() <= 1e-12 * (1.0 + dx0.vec().norm()));

  const ErrorVector r0 =
      closed_form_right(ErrorVector{dx0, Side::Right}, ExtendedPose::identity(), 0.0);
  CHECK((r0.dx.vec() - dx0.vec()).norm() == 0.0);

  // chi0 = I and zero IMU: chi_b_tilde stays I, the solution is F_t dx0.
  const double t = 7.0;
  const ErrorVector ft = closed_form_left(ErrorVector{dx0, Side::Left},
                                          ExtendedPose::identity(),
                                          ExtendedPose::identity(), t);
  CHECK((ft.dx.phi - dx0.phi).norm() == 0.0);
  CHECK((ft.dx.nu - dx0.nu).norm() == 0.0);
  CHECK((ft.dx.rho - (dx0.rho + t * dx0.nu)).norm() <= 1e-13 * (1.0 + dx0.rho.norm()));

  // Right side, zero earth rate, constant G: chi_e is the gravity boost and
  // the closed form reproduces the nilpotent solution.
  EarthModel still;
  still.omega_ie_e = Vec3::Zero();
  const Vec3 G(0, 0, -9.81);
  const double T = 3.0;
  const ExtendedPose boost{Rotation::identity(), G * T, 0.5 * T * T * G};
  const ErrorVector rT = closed_form_right(ErrorVector{dx0, Side::Right}, boost, T);
  CHECK((rT.dx.nu - (dx0.nu + T * G.cross(dx0.phi))).norm() <= 1e-12 * (1.0 + rT.dx.norm()));
  CHECK((rT.dx.rho - (dx0.rho + T * dx0.nu + 0.5 * T * T * G.cross(dx0.phi))).norm() <=
        1e-12 * (1.0 + rT.dx.norm()));
}

TEST_CASE("closed form embodies the conjugated flow of the initial error") {
  // exp(dx_l(t)) = chi_b_tilde^-1 * flow_phi(t, exp(Ad_chi0 dx0)) * chi_b_tilde
  ExperimentConfig cfg;
  cfg.trajectory.duration_s = 10.0;
  const ReferenceStream ref = synth_reference(cfg.trajectory, cfg.earth);
  const ExtendedPose chi0 = ref.samples[0].chi;
  const Propagation tilde = propagate_chi_b_tilde(chi0, ref.imu_series());

  Tangent dx0 = default_initial_error();
  dx0.nu = Vec3(1.0, -0.5, 0.3);   // keep the conjugated log well inside the cut
  dx0.rho = Vec3(10.0, -5.0, 2.0);

  for (const std::size_t k : {std::size_t{400}, std::size_t{2000}}) {
    const double t = tilde.states[k].t;
    const ExtendedPose& xb = tilde.states[k].chi;
    const ErrorVector dx =
        closed_form_left(ErrorVector{dx0, Side::Left}, chi0, xb, t);

    const Tangent shifted = Tangent::from_vec(Vec9(adjoint(chi0) * dx0.vec()));
    const ExtendedPose rhs =
        compose(inverse(xb), compose(flow_phi(t, exp_se23(shifted)), xb));
    const double scale = 1.0 + rhs.embed().norm();
    CHECK((exp_se23(dx.dx).embed() - rhs.embed()).norm() <= 1e-9 * scale);
  }
}

TEST_CASE("closed forms match the linear ODE over a short scenario") {
  for (const Side side : {Side::Left, Side::Right}) {
    ExperimentConfig cfg;
    cfg.trajectory.duration_s = 30.0;
    cfg.error_side = side;
    const ReferenceStream ref = synth_reference(cfg.trajectory, cfg.earth);
    const auto imu = ref.imu_series();
    const auto grav = ref.gravitation_series();
    const double h = cfg.trajectory.step_s;
    const Tangent dx0 = cfg.initial_error;

    const auto F_of_t = [&](double t) -> ErrorDynamicsMatrix {
      const auto k = static_cast<std::size_t>(std::llround(t / h));
      return side == Side::Left ? F_left(imu[k]) : F_right(cfg.earth, grav[k]);
    };
    const auto lin =
        propagate_error_linear(F_of_t, ErrorVector{dx0, side}, h, cfg.trajectory.duration_s);

    Propagation aux;
    if (side == Side::Left) {
      aux = propagate_chi_b_tilde(ref.samples[0].chi, imu);
    } else {
      aux = propagate_chi_e(cfg.earth, grav, h);
    }

    double worst = 0.0;
    for (std::size_t k = 0; k < lin.size(); k += 100) {
      const double t = static_cast<double>(k) * h;
      const Vec9 closed =
          (side == Side::Left)
              ? closed_form_left(ErrorVector{dx0, side}, ref.samples[0].chi,
                                 aux.states[k].chi, t)
                    .dx.vec()
              : closed_form_right(ErrorVector{dx0, side}, aux.states[k].chi, t).dx.vec();
      worst = std::max(worst,
                       (closed - lin[k].dx.vec()).norm() / (1.0 + lin[k].dx.vec().norm()));
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("factorization residual is zero for the zero-input system") {
  // With no inputs M(t) = F_t; the centered difference of F_t is exact and
  // equals F_l(0) F_t.
  const Mat9 F0 = F_left(ImuSample{}).F;
  const double t = 5.0;
  const double h = 1e-4;
  const double resid = factorization_residual(Side::Left, ExtendedPose::identity(),
                                              ExtendedPose::identity(),
                                              ExtendedPose::identity(), F0, t, h);
  CHECK(resid <= 1e-12);
}

TEST_CASE("factorization residual on scenarios") {
  ExperimentConfig cfg;
  cfg.trajectory.duration_s = 10.0;

  // Static scenario stays under the headline bound.
  ExperimentConfig statics = cfg;
  statics.trajectory.kind = TrajectoryKind::Static;
  CHECK(factorization_residual_at(statics, Side::Left, 10.0, 1e-4) <= 1e-6);

  // On the stock circular scenario the residual is alive and O(h^2).
  const double r1 = factorization_residual_at(cfg, Side::Left, 10.0, 1e-4);
  const double r2 = factorization_residual_at(cfg, Side::Left, 10.0, 5e-5);
  CHECK(r1 <= 1e-6);
  const double ratio = r1 / r2;
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);

  CHECK(factorization_residual_at(cfg, Side::Right, 10.0, 1e-4) <= 1e-6);
}

TEST_CASE("discretize") {
  const ErrorDynamicsMatrix zero{Mat9::Zero(), Side::Left, 0.0};
  CHECK((discretize(zero, 0.3) - Mat9::Identity()).norm() == 0.0);

  EarthModel still;
  still.omega_ie_e = Vec3::Zero();
  const ErrorDynamicsMatrix F = F_right(still, Vec3(0, 0, -9.81));
  const double dt = 0.5;
  const Mat9 closed = Mat9::Identity() + dt * F.F + 0.5 * dt * dt * Mat9(F.F * F.F);
  CHECK((discretize(F, dt) - closed).norm() <= 1e-12);

  oracles::Rng rng(204);
  const ErrorDynamicsMatrix Fl =
      F_left(ImuSample{0.0, rng.vec(1.0), rng.vec(15.0)});
  Mat9 psi = Mat9::Identity();
  const int substeps = 200;
  const double hh = 0.02 / substeps;
  for (int k = 0; k < substeps; ++k) {
    psi = rk4_step(psi, k * hh, hh, [&](double, const Mat9& y) -> Mat9 { return Fl.F * y; });
  }
  CHECK((discretize(Fl, 0.02) - psi).norm() <= 1e-10);

  CHECK_THROWS_AS(discretize(F, 0.0), Error);
}

TEST_CASE("error_vector_from_group") {
  CHECK(error_vector_from_group(GroupError{ExtendedPose::identity(), Side::Left})
            .dx.vec()
            .norm() == 0.0);

  const ExtendedPose pure{Rotation::identity(), Vec3(1, 2, 3), Vec3::Zero()};
  const ErrorVector ev = error_vector_from_group(GroupError{pure, Side::Right});
  CHECK((ev.dx.nu - Vec3(1, 2, 3)).norm() == 0.0);
  CHECK(ev.side == Side::Right);

  oracles::Rng rng(205);
  for (int i = 0; i < 200; ++i) {
    const Tangent xi = rng.tangent(2.8, 10.0, 100.0);
    const ErrorVector back =
        error_vector_from_group(GroupError{exp_se23(xi), Side::Left});
    CHECK((back.dx.vec() - xi.vec()).norm() <= 1e-10 * (1.0 + xi.vec().norm()));
  }

  const ExtendedPose at_cut = exp_se23(Tangent{Vec3(0, 0, M_PI - 1e-8), Vec3::Zero(),
                                               Vec3::Zero()});
  CHECK_THROWS_AS(error_vector_from_group(GroupError{at_cut, Side::Left}),
                  NearPiSingularity);
}

TEST_CASE("attitude error angle is conserved over a short run") {
  for (const Side side : {Side::Left, Side::Right}) {
    ExperimentConfig cfg;
    cfg.error_side = side;
    cfg.trajectory.duration_s = 30.0;
    const ReferenceStream ref = synth_reference(cfg.trajectory, cfg.earth);
    const auto imu = ref.imu_series();
    const auto grav = ref.gravitation_series();

    const Propagation truth = propagate_chi(ref.samples[0].chi, imu, grav, cfg.earth);
    const Propagation est = propagate_chi(
        inject_error(ref.samples[0].chi, cfg.initial_error, side), imu, grav, cfg.earth);

    const double angle0 = cfg.initial_error.phi.norm();
    double worst = 0.0;
    for (std::size_t k = 0; k < truth.states.size(); k += 100) {
      const GroupError eta = (side == Side::Left)
                                 ? left_error(truth.states[k].chi, est.states[k].chi)
                                 : right_error(truth.states[k].chi, est.states[k].chi);
      worst = std::max(worst, std::abs(log_so3(eta.eta.C).norm() - angle0));
    }
    CHECK(worst <= 1e-9);
  }
}
