#include "lognav/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lognav/so3.hpp"

namespace lognav {

Vec3 TrajectorySpec::resolved_origin() const {
  if (origin_position) {
    return *origin_position;
  }
  if (kind == TrajectoryKind::CircularGround) {
    return Vec3(radius_m, 0.0, 0.0);
  }
  return Vec3::Zero();
}

Tangent default_initial_error() {
  Tangent dx;
  dx.phi = Vec3(1.0, 2.0, 3.0).normalized() * (150.0 * M_PI / 180.0);
  dx.nu = Vec3(10.0, -5.0, 3.0);
  dx.rho = Vec3(1000.0, -500.0, 200.0);
  return dx;
}

ExperimentConfig::ExperimentConfig() : initial_error(default_initial_error()) {}

std::vector<ImuSample> ReferenceStream::imu_series() const {
  std::vector<ImuSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.imu);
  return out;
}

std::vector<Vec3> ReferenceStream::gravitation_series() const {
  std::vector<Vec3> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.G);
  return out;
}

namespace {

struct KinematicPoint {
  Mat3 C;       // attitude C_b^e
  Vec3 u;       // world angular velocity of the attitude motion
  Vec3 r;       // position
  Vec3 r_dot;
  Vec3 r_ddot;
};

KinematicPoint evaluate_trajectory(const TrajectorySpec& spec, const Mat3& C0,
                                   const Vec3& origin, double t) {
  KinematicPoint p;
  p.r = origin;
  p.r_dot = Vec3::Zero();
  p.r_ddot = Vec3::Zero();
  switch (spec.kind) {
    case TrajectoryKind::Static:
      p.C = C0;
      p.u = Vec3::Zero();
      break;
    case TrajectoryKind::ConstantYawRate:
      p.u = Vec3(0.0, 0.0, spec.yaw_rate_rad_s);
      p.C = exp_so3(p.u * t).matrix() * C0;
      break;
    case TrajectoryKind::CircularGround: {
      const double omega = 2.0 * M_PI / spec.period_s;
      p.u = Vec3(0.0, 0.0, omega);
      p.C = exp_so3(p.u * t).matrix() * C0;
      const Vec3 center = origin - Vec3(spec.radius_m, 0.0, 0.0);
      const double ct = std::cos(omega * t);
      const double st = std::sin(omega * t);
      p.r = center + spec.radius_m * Vec3(ct, st, 0.0);
      p.r_dot = spec.radius_m * omega * Vec3(-st, ct, 0.0);
      p.r_ddot = -spec.radius_m * omega * omega * Vec3(ct, st, 0.0);
      break;
    }
    case TrajectoryKind::Sinusoidal: {
      Vec3 theta, theta_dot;
      for (int i = 0; i < 3; ++i) {
        const double w = 2.0 * M_PI * spec.sin_frequency_hz[i];
        theta[i] = spec.sin_amplitude_rad[i] * std::sin(w * t);
        theta_dot[i] = spec.sin_amplitude_rad[i] * w * std::cos(w * t);
      }
      p.C = exp_so3(theta).matrix() * C0;
      p.u = left_jacobian_so3(theta) * theta_dot;
      break;
    }
  }
  return p;
}

}  // namespace

ReferenceStream synth_reference(const TrajectorySpec& spec, const EarthModel& earth) {
  if (!(spec.step_s > 0.0) || !(spec.duration_s >= spec.step_s)) {
    throw UnsupportedSpec("synth_reference: need step > 0 and duration >= step");
  }
  if (spec.kind == TrajectoryKind::CircularGround &&
      (!(spec.radius_m > 0.0) || !(spec.period_s > 0.0))) {
    throw UnsupportedSpec("synth_reference: circular trajectory needs radius > 0 and period > 0");
  }

  const Mat3 C0 = exp_so3(spec.initial_attitude).matrix();
  const Vec3 origin = spec.resolved_origin();
  const Mat3 w_ie = hat3(earth.omega_ie_e);

  const auto n_steps = static_cast<std::size_t>(std::llround(spec.duration_s / spec.step_s));
  ReferenceStream out;
  out.step = spec.step_s;
  out.samples.reserve(n_steps + 1);

  for (std::size_t k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * spec.step_s;
    const KinematicPoint p = evaluate_trajectory(spec, C0, origin, t);

    const Vec3 v_ib = p.r_dot + w_ie * p.r;
    const Vec3 v_ib_dot = p.r_ddot + w_ie * p.r_dot;
    const Vec3 G = gravitation_at(earth, p.r);

    ReferenceSample s;
    s.t = t;
    s.chi = ExtendedPose{Rotation(p.C), v_ib, p.r};
    s.imu.t = t;
    s.imu.omega_ib_b = p.C.transpose() * (p.u + earth.omega_ie_e);
    s.imu.f_b = p.C.transpose() * (v_ib_dot + w_ie * v_ib - G);
    s.G = G;
    out.samples.push_back(std::move(s));
  }
  return out;
}

ExtendedPose inject_error(const ExtendedPose& truth0, const Tangent& dx0, Side side) {
  if (dx0.phi.norm() > M_PI - 0.2) {
    throw NearPiSingularity("inject_error: ||phi|| = " + std::to_string(dx0.phi.norm()) +
                            " exceeds pi - 0.2");
  }
  const ExtendedPose e = exp_se23(dx0);
  return side == Side::Left ? compose(truth0, e) : compose(e, truth0);
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

double parse_double(const std::string& value, int line) {
  const std::string v = trim(value);
  double out = 0.0;
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last || v.empty()) {
    throw ParseError("line " + std::to_string(line) + ": expected a real number, got '" +
                     v + "'");
  }
  return out;
}

Vec3 parse_triple(const std::string& value, int line) {
  std::array<double, 3> vals{};
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t comma = value.find(',', start);
    const bool last = (i == 2);
    if (last != (comma == std::string::npos)) {
      throw ParseError("line " + std::to_string(line) +
                       ": expected 3 comma-separated reals, got '" + value + "'");
    }
    const std::string field =
        value.substr(start, last ? std::string::npos : comma - start);
    vals[static_cast<std::size_t>(i)] = parse_double(field, line);
    start = comma + 1;
  }
  return Vec3(vals[0], vals[1], vals[2]);
}

std::uint64_t parse_seed(const std::string& value, int line) {
  const std::string v = trim(value);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ParseError("line " + std::to_string(line) +
                     ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string format_triple(const Vec3& v) {
  return format_double(v.x()) + "," + format_double(v.y()) + "," + format_double(v.z());
}

const char* kind_name(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::Static: return "static";
    case TrajectoryKind::ConstantYawRate: return "constant_yaw_rate";
    case TrajectoryKind::CircularGround: return "circular_ground";
    case TrajectoryKind::Sinusoidal: return "sinusoidal";
  }
  return "circular_ground";
}

}  // namespace

ExperimentConfig load_config(std::string_view text) {
  ExperimentConfig cfg;
  Vec3 constant_G(0.0, 0.0, -9.81);
  bool central = false;
  if (const auto* cv = std::get_if<EarthModel::ConstantVector>(&cfg.earth.gravitation)) {
    constant_G = cv->G;
  }

  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string stripped = trim(raw);
    if (stripped.empty()) continue;

    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(line) + ": expected 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw ParseError("line " + std::to_string(line) + ": empty key");
    }

    if (key == "trajectory.kind") {
      if (value == "static") cfg.trajectory.kind = TrajectoryKind::Static;
      else if (value == "constant_yaw_rate") cfg.trajectory.kind = TrajectoryKind::ConstantYawRate;
      else if (value == "circular_ground") cfg.trajectory.kind = TrajectoryKind::CircularGround;
      else if (value == "sinusoidal") cfg.trajectory.kind = TrajectoryKind::Sinusoidal;
      else throw ParseError("line " + std::to_string(line) + ": unknown trajectory.kind '" + value + "'");
    } else if (key == "trajectory.radius_m") {
      cfg.trajectory.radius_m = parse_double(value, line);
    } else if (key == "trajectory.period_s") {
      cfg.trajectory.period_s = parse_double(value, line);
    } else if (key == "trajectory.yaw_rate_rad_s") {
      cfg.trajectory.yaw_rate_rad_s = parse_double(value, line);
    } else if (key == "trajectory.sin_amp_rad") {
      cfg.trajectory.sin_amplitude_rad = parse_triple(value, line);
    } else if (key == "trajectory.sin_freq_hz") {
      cfg.trajectory.sin_frequency_hz = parse_triple(value, line);
    } else if (key == "trajectory.origin_m") {
      cfg.trajectory.origin_position = parse_triple(value, line);
    } else if (key == "trajectory.initial_attitude_rad") {
      cfg.trajectory.initial_attitude = parse_triple(value, line);
    } else if (key == "trajectory.duration_s") {
      cfg.trajectory.duration_s = parse_double(value, line);
    } else if (key == "trajectory.step_s") {
      cfg.trajectory.step_s = parse_double(value, line);
    } else if (key == "earth.rate_rad_s") {
      cfg.earth.omega_ie_e = Vec3(0.0, 0.0, parse_double(value, line));
    } else if (key == "earth.gravitation_mode") {
      if (value == "constant") central = false;
      else if (value == "central") central = true;
      else throw ParseError("line " + std::to_string(line) + ": unknown earth.gravitation_mode '" + value + "'");
    } else if (key == "earth.G_mps2") {
      constant_G = parse_triple(value, line);
    } else if (key == "error.side") {
      if (value == "left") cfg.error_side = Side::Left;
      else if (value == "right") cfg.error_side = Side::Right;
      else throw ParseError("line " + std::to_string(line) + ": unknown error.side '" + value + "'");
    } else if (key == "error.phi_rad") {
      cfg.initial_error.phi = parse_triple(value, line);
    } else if (key == "error.nu_mps") {
      cfg.initial_error.nu = parse_triple(value, line);
    } else if (key == "error.rho_m") {
      cfg.initial_error.rho = parse_triple(value, line);
    } else if (key == "seed") {
      cfg.rng_seed = parse_seed(value, line);
    } else if (key == "output") {
      cfg.output_path = value;
    } else {
      throw ParseError("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }

  if (central) {
    cfg.earth.gravitation = EarthModel::CentralBody{};
  } else {
    cfg.earth.gravitation = EarthModel::ConstantVector{constant_G};
  }

  std::vector<std::string> violations;
  const auto& tr = cfg.trajectory;
  if (!(tr.step_s > 0.0)) violations.push_back("trajectory.step_s must be > 0");
  if (!(tr.duration_s >= tr.step_s)) violations.push_back("trajectory.duration_s must be >= trajectory.step_s");
  if (tr.kind == TrajectoryKind::CircularGround) {
    if (!(tr.radius_m > 0.0)) violations.push_back("trajectory.radius_m must be > 0");
    if (!(tr.period_s > 0.0)) violations.push_back("trajectory.period_s must be > 0");
  }
  if (!(cfg.earth.omega_ie_e.norm() < 1e-3)) {
    violations.push_back("earth rate magnitude must be < 1e-3 rad/s");
  }
  if (!(cfg.initial_error.phi.norm() <= M_PI - 0.2)) {
    violations.push_back("||error.phi_rad|| must be <= pi - 0.2");
  }
  if (!cfg.initial_error.vec().allFinite() || !cfg.earth.omega_ie_e.allFinite()) {
    violations.push_back("all numeric fields must be finite");
  }
  if (!violations.empty()) {
    std::string msg = "invalid config:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ValidationError(msg);
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open config file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  const auto& tr = cfg.trajectory;
  out << "trajectory.kind = " << kind_name(tr.kind) << "\n";
  out << "trajectory.radius_m = " << format_double(tr.radius_m) << "\n";
  out << "trajectory.period_s = " << format_double(tr.period_s) << "\n";
  out << "trajectory.yaw_rate_rad_s = " << format_double(tr.yaw_rate_rad_s) << "\n";
  out << "trajectory.sin_amp_rad = " << format_triple(tr.sin_amplitude_rad) << "\n";
  out << "trajectory.sin_freq_hz = " << format_triple(tr.sin_frequency_hz) << "\n";
  if (tr.origin_position) {
    out << "trajectory.origin_m = " << format_triple(*tr.origin_position) << "\n";
  }
  out << "trajectory.initial_attitude_rad = " << format_triple(tr.initial_attitude) << "\n";
  out << "trajectory.duration_s = " << format_double(tr.duration_s) << "\n";
  out << "trajectory.step_s = " << format_double(tr.step_s) << "\n";
  out << "earth.rate_rad_s = " << format_double(cfg.earth.omega_ie_e.z()) << "\n";
  if (const auto* cv = std::get_if<EarthModel::ConstantVector>(&cfg.earth.gravitation)) {
    out << "earth.gravitation_mode = constant\n";
    out << "earth.G_mps2 = " << format_triple(cv->G) << "\n";
  } else {
    out << "earth.gravitation_mode = central\n";
  }
  out << "error.side = " << (cfg.error_side == Side::Left ? "left" : "right") << "\n";
  out << "error.phi_rad = " << format_triple(cfg.initial_error.phi) << "\n";
  out << "error.nu_mps = " << format_triple(cfg.initial_error.nu) << "\n";
  out << "error.rho_m = " << format_triple(cfg.initial_error.rho) << "\n";
  out << "seed = " << cfg.rng_seed << "\n";
  if (!cfg.output_path.empty()) {
    out << "output = " << cfg.output_path << "\n";
  }
  return out.str();
}

}  // namespace lognav
