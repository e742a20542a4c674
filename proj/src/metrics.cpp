#include "forcesolve/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "forcesolve/error.hpp"

namespace forcesolve {

double quaternion_distance(const Quaternion& q1, const Quaternion& q2) {
  if (std::abs(q1.norm() - 1.0) > 1e-6 || std::abs(q2.norm() - 1.0) > 1e-6) {
    throw Error("non_unit_quaternion", "quaternion_distance expects unit quaternions");
  }
  // 2 acos(|q1 . q2|) evaluated through the relative rotation; exact zero for
  // equal inputs and no loss of precision at small angles.
  const Quaternion rel = q1.conjugate() * q2;
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

double contact_l1_error(const ContactSet& predicted, const ContactSet& truth,
                        std::vector<double>* per_finger) {
  if (predicted.size() != truth.size()) {
    throw Error("contact_count_mismatch", std::to_string(predicted.size()) + " vs " +
                                              std::to_string(truth.size()) + " contact points");
  }
  if (predicted.size() == 0) return 0.0;
  double total = 0.0;
  if (per_finger) per_finger->clear();
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double l1 = (predicted.points[i] - truth.points[i]).lpNorm<1>();
    total += l1;
    if (per_finger) per_finger->push_back(l1);
  }
  return total / static_cast<double>(predicted.size());
}

EvalReport evaluate(std::span<const RigidBodyState> simulated, std::span<const Pose> reference_poses,
                    std::span<const FrameObservation> observations, const ObjectModel& model,
                    const Camera& camera, const std::optional<ContactSet>& predicted_cp,
                    const std::optional<ContactSet>& truth_cp) {
  if (simulated.size() != reference_poses.size() || simulated.size() != observations.size()) {
    throw Error("sequence_mismatch", "simulated, reference and observation lengths must match (" +
                                         std::to_string(simulated.size()) + ", " +
                                         std::to_string(reference_poses.size()) + ", " +
                                         std::to_string(observations.size()) + ")");
  }
  const std::vector<Vector3> points = model.keypoint_positions();

  EvalReport report;
  report.per_frame.resize(simulated.size());
  std::size_t kp_frames = 0;
  for (std::size_t t = 0; t < simulated.size(); ++t) {
    FrameMetrics& m = report.per_frame[t];
    const FrameObservation& obs = observations[t];
    const std::vector<double> sq = keypoint_squared_residuals(obs, pose_of(simulated[t]), points, camera);
    double sum = 0.0;
    for (std::size_t i = 0; i < sq.size(); ++i) {
      if (!obs.keypoints[i]) continue;
      sum += std::sqrt(sq[i]);
      ++m.visible_keypoints;
    }
    if (m.visible_keypoints > 0) {
      m.kp_error_px = sum / static_cast<double>(m.visible_keypoints);
      report.kp_error_px += m.kp_error_px;
      ++kp_frames;
    }
    m.rotation_error_rad = quaternion_distance(simulated[t].orientation.normalized(),
                                               reference_poses[t].rotation.normalized());
    m.translation_error_m = (simulated[t].position - reference_poses[t].translation).norm();
    report.rotation_error_rad += m.rotation_error_rad;
    report.translation_error_m += m.translation_error_m;
  }
  if (kp_frames > 0) report.kp_error_px /= static_cast<double>(kp_frames);
  if (!simulated.empty()) {
    report.rotation_error_rad /= static_cast<double>(simulated.size());
    report.translation_error_m /= static_cast<double>(simulated.size());
  }
  if (predicted_cp && truth_cp) {
    report.cp_error_m = contact_l1_error(*predicted_cp, *truth_cp, &report.per_finger_cp_error_m);
  }
  return report;
}

}  // namespace forcesolve
