#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "forcesolve/physics.hpp"

namespace forcesolve {

using Pixel = Eigen::Vector2d;

// Rigid transform x -> rotation * x + translation.
struct Pose {
  Quaternion rotation = Quaternion::Identity();
  Vector3 translation = Vector3::Zero();

  Vector3 apply(const Vector3& x) const { return rotation * x + translation; }
  Pose inverse() const;
  Pose compose(const Pose& inner) const;  // this ∘ inner
};

Pose pose_of(const RigidBodyState& state);

// Static pinhole camera. `extrinsic` maps world coordinates to camera
// coordinates (x right, y down, z forward).
struct Camera {
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 960.0;
  double cy = 540.0;
  int image_width = 1920;
  int image_height = 1080;
  Pose extrinsic;

  void validate() const;
  bool in_image(const Pixel& p) const;
};

// Annotations for one frame; an empty optional marks an occluded point.
struct FrameObservation {
  int t = 0;
  std::vector<std::optional<Pixel>> keypoints;
  std::vector<std::optional<Pixel>> contacts;

  std::size_t visible_keypoints() const;
};

// Projects object-frame points under object_pose (object -> world) and the
// camera extrinsics. Throws "behind_camera" naming the first point with
// non-positive depth.
std::vector<Pixel> project_points(std::span<const Vector3> points, const Pose& object_pose,
                                  const Camera& camera);

// Points in the camera frame, no projection.
std::vector<Vector3> to_camera_frame(std::span<const Vector3> points, const Pose& object_pose,
                                     const Camera& camera);

// Sum over visible keypoints of squared pixel error, px^2. The rotation is taken
// from the normalized state quaternion.
double keypoint_loss(const FrameObservation& obs, const RigidBodyState& state,
                     const ObjectModel& model, const Camera& camera);

// Per-keypoint squared residuals (zero for occluded ones); same path as keypoint_loss.
std::vector<double> keypoint_squared_residuals(const FrameObservation& obs, const Pose& pose,
                                               std::span<const Vector3> points,
                                               const Camera& camera);

// Sum of squared distances between corresponding contact points, m^2.
double cp_loss(const ContactSet& predicted, const ContactSet& truth);

// Squared Frobenius distance summed over the sequence, N^2.
double force_mse(std::span<const ForceSet> truth_seq, std::span<const ForceSet> predicted_seq);

}  // namespace forcesolve
