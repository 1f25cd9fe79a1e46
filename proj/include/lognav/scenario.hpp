#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lognav/error_dynamics.hpp"
#include "lognav/ins_dynamics.hpp"

namespace lognav {

enum class TrajectoryKind { Static, ConstantYawRate, CircularGround, Sinusoidal };

/// Analytic trajectory family. Defaults describe the stock experiment: a
/// 12 m / 4.4 s circle flown around the coordinate origin, which keeps the
/// synthesized inertial inputs exactly constant (see README for why the
/// circle is this aggressive).
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::CircularGround;

  double radius_m = 12.0;  // circular_ground
  double period_s = 4.4;   // circular_ground

  double yaw_rate_rad_s = 0.5;  // constant_yaw_rate

  Vec3 sin_amplitude_rad = Vec3(0.4, 0.3, 0.2);    // sinusoidal
  Vec3 sin_frequency_hz = Vec3(0.4, 0.25, 0.15);   // sinusoidal

  /// Start position r(0). Unset: (radius, 0, 0) for circular_ground (circle
  /// centered at the origin), zero otherwise.
  std::optional<Vec3> origin_position;

  Vec3 initial_attitude = Vec3(0.35, -0.25, 0.15);  // axis-angle, rad

  double duration_s = 300.0;
  double step_s = 0.005;

  Vec3 resolved_origin() const;
};

/// One experiment: trajectory, earth model, which invariant error to study
/// and the error injected at t = 0.
struct ExperimentConfig {
  TrajectorySpec trajectory;
  EarthModel earth;
  Side error_side = Side::Left;
  Tangent initial_error;  // defaults to the 150-degree stock error
  std::uint64_t rng_seed = 0;
  std::string output_path;  // empty: no CSV

  ExperimentConfig();
};

/// 150 deg about the normalized (1,2,3) axis, 10/-5/3 m/s, 1000/-500/200 m.
Tangent default_initial_error();

struct ReferenceSample {
  double t = 0.0;
  ExtendedPose chi;  // analytic true state
  ImuSample imu;     // inverse-kinematics gyro/accelerometer values
  Vec3 G = Vec3::Zero();  // gravitation on the reference trajectory
};

struct ReferenceStream {
  std::vector<ReferenceSample> samples;
  double step = 0.0;

  std::vector<ImuSample> imu_series() const;
  std::vector<Vec3> gravitation_series() const;
};

/// Closed-form trajectory, IMU and gravitation synthesis on the uniform grid
/// k * step_s for k = 0 .. round(duration/step).
ReferenceStream synth_reference(const TrajectorySpec& spec, const EarthModel& earth);

/// Left: truth * exp(dx0). Right: exp(dx0) * truth. Requires
/// ||dx0.phi|| <= pi - 0.2 (NearPiSingularity otherwise).
ExtendedPose inject_error(const ExtendedPose& truth0, const Tangent& dx0, Side side);

/// Parse a `key = value` config document (# comments). ParseError carries a
/// line diagnostic; ValidationError lists every violated invariant.
ExperimentConfig load_config(std::string_view text);

ExperimentConfig load_config_file(const std::string& path);

/// Emits a document that load_config maps back to the identical config.
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace lognav
