#include "forcesolve/projection.hpp"

#include <cmath>
#include <string>

#include "forcesolve/error.hpp"
#include "forcesolve/simd/kernels.hpp"

namespace forcesolve {

namespace {

simd::Affine to_affine(const Matrix3& r, const Vector3& t) {
  simd::Affine a{};
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) a.r[row * 3 + col] = r(row, col);
    a.t[row] = t(row);
  }
  return a;
}

// Object frame -> camera frame, built from a normalized object rotation.
simd::Affine object_to_camera(const Pose& object_pose, const Camera& camera) {
  const Matrix3 cam_r = camera.extrinsic.rotation.normalized().toRotationMatrix();
  const Matrix3 obj_r = object_pose.rotation.normalized().toRotationMatrix();
  return to_affine(cam_r * obj_r, cam_r * object_pose.translation + camera.extrinsic.translation);
}

struct SoABuffer {
  explicit SoABuffer(std::size_t n) : x(n), y(n), z(n) {}
  std::vector<double> x, y, z;
  simd::PointsSoA view() const { return {x.data(), y.data(), z.data()}; }
  simd::MutablePointsSoA mut() { return {x.data(), y.data(), z.data()}; }
};

SoABuffer camera_points(std::span<const Vector3> points, const Pose& object_pose,
                        const Camera& camera) {
  const std::size_t n = points.size();
  SoABuffer in(n);
  for (std::size_t i = 0; i < n; ++i) {
    in.x[i] = points[i].x();
    in.y[i] = points[i].y();
    in.z[i] = points[i].z();
  }
  SoABuffer out(n);
  simd::active_kernels().transform(object_to_camera(object_pose, camera), in.view(), n, out.mut());
  return out;
}

void project_checked(const SoABuffer& cam, const Camera& camera, std::vector<double>& u,
                     std::vector<double>& v) {
  const std::size_t n = cam.x.size();
  u.resize(n);
  v.resize(n);
  const simd::Intrinsics k{camera.fx, camera.fy, camera.cx, camera.cy};
  const std::size_t bad = simd::active_kernels().project(k, cam.view(), n, u.data(), v.data());
  if (bad != n) {
    throw Error("behind_camera", "point " + std::to_string(bad) + " has non-positive depth");
  }
}

}  // namespace

Pose Pose::inverse() const {
  const Quaternion inv = rotation.conjugate();
  return Pose{inv, -(inv * translation)};
}

Pose Pose::compose(const Pose& inner) const {
  return Pose{rotation * inner.rotation, rotation * inner.translation + translation};
}

Pose pose_of(const RigidBodyState& state) { return Pose{state.orientation, state.position}; }

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error("invalid_camera", "focal lengths must be positive");
  }
  if (image_width <= 0 || image_height <= 0) throw Error("invalid_camera", "image size must be positive");
  if (!extrinsic.translation.allFinite() || !extrinsic.rotation.coeffs().allFinite() ||
      std::abs(extrinsic.rotation.norm() - 1.0) > 1e-6) {
    throw Error("invalid_camera", "extrinsic rotation must be a unit quaternion");
  }
}

bool Camera::in_image(const Pixel& p) const {
  return p.allFinite() && p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= image_width &&
         p.y() <= image_height;
}

std::size_t FrameObservation::visible_keypoints() const {
  std::size_t n = 0;
  for (const auto& kp : keypoints) n += kp.has_value() ? 1 : 0;
  return n;
}

std::vector<Vector3> to_camera_frame(std::span<const Vector3> points, const Pose& object_pose,
                                     const Camera& camera) {
  const SoABuffer cam = camera_points(points, object_pose, camera);
  std::vector<Vector3> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = Vector3(cam.x[i], cam.y[i], cam.z[i]);
  return out;
}

std::vector<Pixel> project_points(std::span<const Vector3> points, const Pose& object_pose,
                                  const Camera& camera) {
  const SoABuffer cam = camera_points(points, object_pose, camera);
  std::vector<double> u, v;
  project_checked(cam, camera, u, v);
  std::vector<Pixel> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = Pixel(u[i], v[i]);
  return out;
}

std::vector<double> keypoint_squared_residuals(const FrameObservation& obs, const Pose& pose,
                                               std::span<const Vector3> points,
                                               const Camera& camera) {
  const std::size_t n = points.size();
  if (obs.keypoints.size() != n) {
    throw Error("keypoint_count_mismatch", "observation has " + std::to_string(obs.keypoints.size()) +
                                               " keypoints, model has " + std::to_string(n));
  }
  const SoABuffer cam = camera_points(points, pose, camera);
  std::vector<double> u, v;
  project_checked(cam, camera, u, v);

  std::vector<double> obs_u(n, 0.0), obs_v(n, 0.0), weight(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (obs.keypoints[i]) {
      obs_u[i] = obs.keypoints[i]->x();
      obs_v[i] = obs.keypoints[i]->y();
      weight[i] = 1.0;
    } else {
      // Occluded: residual is multiplied by zero, keep it finite.
      obs_u[i] = u[i];
      obs_v[i] = v[i];
    }
  }
  std::vector<double> sq(n);
  simd::active_kernels().squared_residuals(u.data(), v.data(), obs_u.data(), obs_v.data(),
                                           weight.data(), n, sq.data());
  return sq;
}

double keypoint_loss(const FrameObservation& obs, const RigidBodyState& state,
                     const ObjectModel& model, const Camera& camera) {
  if (obs.visible_keypoints() == 0) {
    throw Error("no_visible_keypoints", "frame " + std::to_string(obs.t) + " has no visible keypoints");
  }
  const std::vector<Vector3> points = model.keypoint_positions();
  const std::vector<double> sq = keypoint_squared_residuals(obs, pose_of(state), points, camera);
  double total = 0.0;
  for (double s : sq) total += s;
  return total;
}

double cp_loss(const ContactSet& predicted, const ContactSet& truth) {
  if (predicted.size() != truth.size()) {
    throw Error("contact_count_mismatch", std::to_string(predicted.size()) + " vs " +
                                              std::to_string(truth.size()) + " contact points");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    total += (predicted.points[i] - truth.points[i]).squaredNorm();
  }
  return total;
}

double force_mse(std::span<const ForceSet> truth_seq, std::span<const ForceSet> predicted_seq) {
  if (truth_seq.size() != predicted_seq.size()) {
    throw Error("force_shape_mismatch", "sequence lengths " + std::to_string(truth_seq.size()) +
                                            " and " + std::to_string(predicted_seq.size()));
  }
  double total = 0.0;
  for (std::size_t t = 0; t < truth_seq.size(); ++t) {
    if (truth_seq[t].size() != predicted_seq[t].size()) {
      throw Error("force_shape_mismatch", "frame " + std::to_string(t) + " contact counts differ");
    }
    for (std::size_t i = 0; i < truth_seq[t].size(); ++i) {
      total += (truth_seq[t].forces[i] - predicted_seq[t].forces[i]).squaredNorm();
    }
  }
  return total;
}

}  // namespace forcesolve
