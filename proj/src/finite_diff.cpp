#include "forcesolve/finite_diff.hpp"

#include <string>

#include "forcesolve/error.hpp"

namespace forcesolve {

namespace {

using StateVector = RigidBodyState::Vector;

RigidBodyState perturbed_state(const RigidBodyState& state, int coord, double delta) {
  StateVector flat = state.flatten();
  flat(coord) += delta;
  RigidBodyState s = RigidBodyState::unflatten(flat);
  s.orientation.normalize();
  return s;
}

ForceSet perturbed_forces(const ForceSet& forces, int coord, double delta) {
  ForceSet f = forces;
  f.forces[coord / 3](coord % 3) += delta;
  return f;
}

ContactSet perturbed_contacts(const ContactSet& contacts, int coord, double delta) {
  ContactSet c = contacts;
  c.points[coord / 3](coord % 3) += delta;
  return c;
}

Eigen::Matrix3d skew(const Vector3& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace

void FDConfig::validate() const {
  if (!(h_state > 0.0) || !(h_force > 0.0) || !(h_contact > 0.0)) {
    throw Error("invalid_config", "finite-difference step sizes must be positive");
  }
}

std::size_t expected_simulator_calls(FdScheme scheme, std::size_t k) {
  const std::size_t coords = RigidBodyState::kDim + 6 * k;
  return scheme == FdScheme::kCentral ? 2 * coords : coords + 1;
}

StepJacobians step_jacobians(const RigidBodyState& state, const ForceSet& forces,
                             const ContactSet& contacts, const ObjectModel& model,
                             const SimulationConfig& cfg, const FDConfig& fd,
                             const JacobianBlocks& blocks, const StepFunction& simulator) {
  fd.validate();
  if (forces.size() != contacts.size()) {
    throw Error("contact_force_mismatch", std::to_string(forces.size()) + " forces for " +
                                              std::to_string(contacts.size()) + " contacts");
  }
  const int k3 = static_cast<int>(3 * forces.size());
  StepJacobians jac;
  jac.d_force = Eigen::MatrixXd::Zero(RigidBodyState::kDim, blocks.force ? k3 : 0);
  jac.d_contact = Eigen::MatrixXd::Zero(RigidBodyState::kDim, blocks.contact ? k3 : 0);

  int coordinate = 0;  // global probe index for diagnostics
  auto evaluate = [&](const RigidBodyState& s, const ForceSet& f, const ContactSet& c) {
    ++jac.simulator_calls;
    try {
      return simulator(s, f, c, model, cfg).flatten();
    } catch (const Error& e) {
      throw Error("fd_probe_failed",
                  "coordinate " + std::to_string(coordinate) + ": " + e.code() + ": " + e.message());
    }
  };

  StateVector nominal;
  if (fd.scheme == FdScheme::kForward) nominal = evaluate(state, forces, contacts);

  // probe(delta) evaluates the step with one input coordinate shifted by delta.
  auto column = [&](auto&& probe, double h) -> StateVector {
    StateVector diff;
    if (fd.scheme == FdScheme::kCentral) {
      diff = (probe(h) - probe(-h)) / (2.0 * h);
    } else {
      diff = (probe(h) - nominal) / h;
    }
    if (!diff.allFinite()) {
      throw Error("fd_non_finite", "coordinate " + std::to_string(coordinate));
    }
    return diff;
  };

  if (blocks.state) {
    for (int i = 0; i < RigidBodyState::kDim; ++i, ++coordinate) {
      jac.d_state.col(i) = column(
          [&](double d) { return evaluate(perturbed_state(state, i, d), forces, contacts); },
          fd.h_state);
    }
  } else {
    coordinate += RigidBodyState::kDim;
  }
  if (blocks.force) {
    for (int i = 0; i < k3; ++i, ++coordinate) {
      jac.d_force.col(i) = column(
          [&](double d) { return evaluate(state, perturbed_forces(forces, i, d), contacts); },
          fd.h_force);
    }
  } else {
    coordinate += k3;
  }
  if (blocks.contact) {
    for (int i = 0; i < k3; ++i, ++coordinate) {
      jac.d_contact.col(i) = column(
          [&](double d) { return evaluate(state, forces, perturbed_contacts(contacts, i, d)); },
          fd.h_contact);
    }
  }
  return jac;
}

RigidBodyState::Vector loss_gradient_single_frame(const FrameObservation& obs,
                                                  const RigidBodyState& state,
                                                  const ObjectModel& model, const Camera& camera) {
  if (obs.visible_keypoints() == 0) {
    throw Error("no_visible_keypoints", "frame " + std::to_string(obs.t) + " has no visible keypoints");
  }
  if (obs.keypoints.size() != model.keypoints.size()) {
    throw Error("keypoint_count_mismatch", "observation and model keypoint counts differ");
  }

  const Eigen::Vector4d q_raw(state.orientation.w(), state.orientation.x(), state.orientation.y(),
                              state.orientation.z());
  const double q_norm = q_raw.norm();
  const Eigen::Vector4d q_unit = q_raw / q_norm;
  const double w = q_unit(0);
  const Vector3 v = q_unit.tail<3>();
  const Matrix3 rot = Quaternion(q_unit(0), q_unit(1), q_unit(2), q_unit(3)).toRotationMatrix();
  const Matrix3 cam_rot = camera.extrinsic.rotation.normalized().toRotationMatrix();

  Vector3 grad_position = Vector3::Zero();
  Eigen::Vector4d grad_q_unit = Eigen::Vector4d::Zero();
  for (std::size_t i = 0; i < model.keypoints.size(); ++i) {
    if (!obs.keypoints[i]) continue;
    const Vector3& x = model.keypoints[i].position;
    const Vector3 cam = cam_rot * (rot * x + state.position) + camera.extrinsic.translation;
    if (!(cam.z() > 0.0)) {
      throw Error("behind_camera", "point " + std::to_string(i) + " has non-positive depth");
    }
    const double inv_z = 1.0 / cam.z();
    const double u = camera.fx * cam.x() * inv_z + camera.cx;
    const double pv = camera.fy * cam.y() * inv_z + camera.cy;
    const double ru = u - obs.keypoints[i]->x();
    const double rv = pv - obs.keypoints[i]->y();

    Eigen::Matrix<double, 2, 3> d_pixel;
    d_pixel << camera.fx * inv_z, 0.0, -camera.fx * cam.x() * inv_z * inv_z,
        0.0, camera.fy * inv_z, -camera.fy * cam.y() * inv_z * inv_z;
    const Vector3 grad_cam = 2.0 * d_pixel.transpose() * Eigen::Vector2d(ru, rv);
    const Vector3 grad_world = cam_rot.transpose() * grad_cam;
    grad_position += grad_world;

    // d(R(q) x)/dq for R(q) x = (w^2 - v.v) x + 2 (v.x) v + 2 w (v × x).
    Eigen::Matrix<double, 3, 4> d_rx;
    d_rx.col(0) = 2.0 * w * x + 2.0 * v.cross(x);
    d_rx.rightCols<3>() = -2.0 * x * v.transpose() + 2.0 * v * x.transpose() +
                          2.0 * v.dot(x) * Matrix3::Identity() - 2.0 * w * skew(x);
    grad_q_unit += d_rx.transpose() * grad_world;
  }

  const Eigen::Matrix4d normalize_jac =
      (Eigen::Matrix4d::Identity() - q_unit * q_unit.transpose()) / q_norm;
  RigidBodyState::Vector grad = RigidBodyState::Vector::Zero();
  grad.segment<3>(0) = grad_position;
  grad.segment<4>(3) = normalize_jac * grad_q_unit;
  return grad;
}

}  // namespace forcesolve
