#pragma once

#include <optional>
#include <span>
#include <vector>

#include "forcesolve/physics.hpp"
#include "forcesolve/projection.hpp"

namespace forcesolve {

// Rotation angle separating two orientations, 2 acos(|q1 . q2|), in [0, pi].
// Throws "non_unit_quaternion" if either norm is off by more than 1e-6.
double quaternion_distance(const Quaternion& q1, const Quaternion& q2);

struct FrameMetrics {
  double kp_error_px = 0.0;  // mean over visible keypoints; 0 when none are visible
  std::size_t visible_keypoints = 0;
  double rotation_error_rad = 0.0;
  double translation_error_m = 0.0;
};

// kp_error_px averages per-frame means over frames with visible keypoints.
// cp_error_m is the mean over fingers of the per-point L1 distance and is only
// present when both contact sets are supplied.
struct EvalReport {
  double kp_error_px = 0.0;
  double rotation_error_rad = 0.0;
  double translation_error_m = 0.0;
  std::optional<double> cp_error_m;
  std::vector<FrameMetrics> per_frame;
  std::vector<double> per_finger_cp_error_m;
};

// Per-point L1 distance averaged over fingers.
double contact_l1_error(const ContactSet& predicted, const ContactSet& truth,
                        std::vector<double>* per_finger = nullptr);

EvalReport evaluate(std::span<const RigidBodyState> simulated, std::span<const Pose> reference_poses,
                    std::span<const FrameObservation> observations, const ObjectModel& model,
                    const Camera& camera, const std::optional<ContactSet>& predicted_cp = std::nullopt,
                    const std::optional<ContactSet>& truth_cp = std::nullopt);

}  // namespace forcesolve
