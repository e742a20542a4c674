#include "forcesolve/physics.hpp"

#include <cmath>
#include <cstring>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "forcesolve/error.hpp"

namespace forcesolve {

namespace {

bool finite3(const Vector3& v) { return v.allFinite(); }

void require_same_count(const ForceSet& forces, const ContactSet& contacts) {
  if (forces.size() != contacts.size()) {
    throw Error("contact_force_mismatch",
                std::to_string(forces.size()) + " forces for " +
                    std::to_string(contacts.size()) + " contacts");
  }
}

}  // namespace

RigidBodyState::Vector RigidBodyState::flatten() const {
  Vector out;
  out << position, orientation.w(), orientation.x(), orientation.y(), orientation.z(),
      linear_velocity, angular_velocity;
  return out;
}

RigidBodyState RigidBodyState::unflatten(const Vector& flat) {
  RigidBodyState s;
  s.position = flat.segment<3>(0);
  s.orientation = Quaternion(flat(3), flat(4), flat(5), flat(6));
  s.linear_velocity = flat.segment<3>(7);
  s.angular_velocity = flat.segment<3>(10);
  return s;
}

bool RigidBodyState::is_finite() const {
  return finite3(position) && orientation.coeffs().allFinite() &&
         finite3(linear_velocity) && finite3(angular_velocity);
}

bool bitwise_equal(const RigidBodyState& a, const RigidBodyState& b) {
  const RigidBodyState::Vector fa = a.flatten();
  const RigidBodyState::Vector fb = b.flatten();
  return std::memcmp(fa.data(), fb.data(), sizeof(double) * RigidBodyState::kDim) == 0;
}

void ContactSet::validate(double radius) const {
  if (points.empty()) throw Error("invalid_contacts", "at least one contact point is required");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!finite3(points[i])) {
      throw Error("non_finite_state", "contact " + std::to_string(i) + " is not finite");
    }
    if (points[i].norm() > radius) {
      throw Error("contact_out_of_bounds", "contact " + std::to_string(i) +
                                               " lies outside the bounding radius " +
                                               std::to_string(radius));
    }
  }
}

void ForceSet::validate(double bound) const {
  for (std::size_t i = 0; i < forces.size(); ++i) {
    if (!finite3(forces[i])) {
      throw Error("non_finite_state", "force " + std::to_string(i) + " is not finite");
    }
    if (forces[i].cwiseAbs().maxCoeff() > bound) {
      throw Error("force_out_of_bounds",
                  "force " + std::to_string(i) + " exceeds " + std::to_string(bound) + " N");
    }
  }
}

void ObjectModel::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw Error("invalid_object", "mass must be positive");
  if (!inertia_body.allFinite() || !inertia_body.isApprox(inertia_body.transpose(), 1e-12)) {
    throw Error("invalid_object", "inertia must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix3> eig(inertia_body, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw Error("invalid_object", "inertia must be positive definite");
  }
  for (const Keypoint& kp : keypoints) {
    if (!finite3(kp.position)) throw Error("invalid_object", "keypoint " + kp.name + " is not finite");
  }
}

std::vector<Vector3> ObjectModel::keypoint_positions() const {
  std::vector<Vector3> out;
  out.reserve(keypoints.size());
  for (const Keypoint& kp : keypoints) out.push_back(kp.position);
  return out;
}

void SimulationConfig::validate() const {
  if (!(frame_dt > 0.0) || !std::isfinite(frame_dt)) throw Error("invalid_config", "frame_dt must be positive");
  if (substeps_per_frame < 1) throw Error("invalid_config", "substeps_per_frame must be >= 1");
  if (!gravity.allFinite()) throw Error("invalid_config", "gravity must be finite");
  if (!(contact_radius > 0.0)) throw Error("invalid_config", "contact_radius must be positive");
}

Wrench net_wrench(const RigidBodyState& state, const ForceSet& forces,
                  const ContactSet& contacts) {
  require_same_count(forces, contacts);
  const Matrix3 rot = state.rotation();
  Wrench w;
  for (std::size_t i = 0; i < forces.size(); ++i) {
    w.force += forces.forces[i];
    w.torque += (rot * contacts.points[i]).cross(forces.forces[i]);
  }
  return w;
}

Quaternion exp_rotation(const Vector3& omega, double dt) {
  const double rate = omega.norm();
  const double half = 0.5 * rate * dt;
  // sin(half) / rate, with its series near zero.
  const double s = half < 1e-6 ? 0.5 * dt * (1.0 - half * half / 6.0) : std::sin(half) / rate;
  return Quaternion(std::cos(half), s * omega.x(), s * omega.y(), s * omega.z());
}

RigidBodyState step(const RigidBodyState& state, const ForceSet& forces,
                    const ContactSet& contacts, const ObjectModel& model,
                    const SimulationConfig& cfg) {
  require_same_count(forces, contacts);
  if (!state.is_finite()) throw Error("non_finite_state", "input state is not finite");
  for (const Vector3& f : forces.forces) {
    if (!finite3(f)) throw Error("non_finite_state", "input force is not finite");
  }
  contacts.validate(cfg.contact_radius);
  cfg.validate();

  const double dt = cfg.frame_dt / cfg.substeps_per_frame;
  const Matrix3 inv_inertia_body = model.inertia_body.inverse();
  const Matrix3 inertia_body = model.inertia_body;

  // The frame wrench is evaluated once at the frame-start pose and held over all substeps.
  const Wrench w = net_wrench(state, forces, contacts);
  RigidBodyState s = state;
  for (int sub = 0; sub < cfg.substeps_per_frame; ++sub) {
    const Vector3 accel = w.force / model.mass + cfg.gravity;

    if (cfg.linear_scheme == LinearScheme::kSemiImplicitEuler) {
      s.linear_velocity += dt * accel;
      s.position += dt * s.linear_velocity;
    } else {
      s.position += dt * s.linear_velocity + (0.5 * dt * dt) * accel;
      s.linear_velocity += dt * accel;
    }

    const Matrix3 rot = s.rotation();
    const Vector3 momentum = rot * (inertia_body * (rot.transpose() * s.angular_velocity)) + dt * w.torque;
    const Vector3 spin = rot * (inv_inertia_body * (rot.transpose() * momentum));

    s.orientation = (exp_rotation(spin, dt) * s.orientation).normalized();
    const Matrix3 rot_next = s.rotation();
    s.angular_velocity = rot_next * (inv_inertia_body * (rot_next.transpose() * momentum));
  }

  if (!s.is_finite()) throw Error("non_finite_state", "integration produced a non-finite state");
  return s;
}

std::vector<RigidBodyState> simulate_trajectory(const RigidBodyState& s0,
                                                std::span<const ForceSet> force_seq,
                                                const ContactSet& contacts,
                                                const ObjectModel& model,
                                                const SimulationConfig& cfg) {
  if (force_seq.empty()) throw Error("empty_force_sequence", "at least one frame is required");
  std::vector<RigidBodyState> states;
  states.reserve(force_seq.size() + 1);
  states.push_back(s0);
  for (std::size_t t = 0; t < force_seq.size(); ++t) {
    try {
      states.push_back(step(states.back(), force_seq[t], contacts, model, cfg));
    } catch (const Error& e) {
      throw Error(e.code(), "frame " + std::to_string(t) + ": " + e.message());
    }
  }
  return states;
}

}  // namespace forcesolve
