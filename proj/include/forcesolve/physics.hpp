#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace forcesolve {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Quaternion = Eigen::Quaterniond;

// Simulator state: pose of the center of mass plus world-frame velocities.
// Flattened layout is [position(3), orientation w,x,y,z(4), linear(3), angular(3)].
struct RigidBodyState {
  static constexpr int kDim = 13;
  using Vector = Eigen::Matrix<double, kDim, 1>;

  Vector3 position = Vector3::Zero();
  Quaternion orientation = Quaternion::Identity();  // object -> world
  Vector3 linear_velocity = Vector3::Zero();
  Vector3 angular_velocity = Vector3::Zero();

  Vector flatten() const;
  static RigidBodyState unflatten(const Vector& flat);

  bool is_finite() const;
  Matrix3 rotation() const { return orientation.toRotationMatrix(); }
};

bool bitwise_equal(const RigidBodyState& a, const RigidBodyState& b);

// Contact points in the object frame, relative to the center of mass.
struct ContactSet {
  static constexpr double kDefaultRadius = 1.0;
  std::vector<Vector3> points;

  std::size_t size() const { return points.size(); }
  void validate(double radius = kDefaultRadius) const;
};

// Per-contact world-frame forces, constant over one frame interval.
struct ForceSet {
  static constexpr double kDefaultBound = 100.0;
  std::vector<Vector3> forces;

  std::size_t size() const { return forces.size(); }
  static ForceSet zeros(std::size_t k) { return ForceSet{std::vector<Vector3>(k, Vector3::Zero())}; }
  void validate(double bound = kDefaultBound) const;
};

struct Keypoint {
  std::string name;
  Vector3 position = Vector3::Zero();
};

struct ObjectModel {
  std::string name;
  double mass = 1.0;
  Matrix3 inertia_body = Matrix3::Identity();
  std::vector<Keypoint> keypoints;

  void validate() const;
  std::vector<Vector3> keypoint_positions() const;
};

enum class LinearScheme {
  // Exact for world-frame forces that are constant over the substep.
  kExactConstantAcceleration,
  // v += dt a; p += dt v.
  kSemiImplicitEuler,
};

struct SimulationConfig {
  Vector3 gravity{0.0, 0.0, -9.81};
  double frame_dt = 1.0 / 30.0;
  int substeps_per_frame = 10;
  LinearScheme linear_scheme = LinearScheme::kExactConstantAcceleration;
  double contact_radius = ContactSet::kDefaultRadius;

  void validate() const;
};

struct Wrench {
  Vector3 force = Vector3::Zero();
  Vector3 torque = Vector3::Zero();
};

// Sum of applied forces and their torque about the center of mass. Gravity is
// not included.
Wrench net_wrench(const RigidBodyState& state, const ForceSet& forces,
                  const ContactSet& contacts);

// Advances one frame interval (cfg.frame_dt) using cfg.substeps_per_frame
// substeps. Linear velocity is updated first, then position; the angular
// channel integrates world angular momentum, rotates with the exponential map
// and renormalizes the quaternion every substep.
RigidBodyState step(const RigidBodyState& state, const ForceSet& forces,
                    const ContactSet& contacts, const ObjectModel& model,
                    const SimulationConfig& cfg);

// Returns force_seq.size() + 1 states, the first being s0.
std::vector<RigidBodyState> simulate_trajectory(const RigidBodyState& s0,
                                                std::span<const ForceSet> force_seq,
                                                const ContactSet& contacts,
                                                const ObjectModel& model,
                                                const SimulationConfig& cfg);

// Unit quaternion for a rotation of |omega| * dt about omega.
Quaternion exp_rotation(const Vector3& omega, double dt);

}  // namespace forcesolve
