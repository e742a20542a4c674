#include "forcesolve/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "forcesolve/error.hpp"
#include "least_squares.hpp"

namespace forcesolve {

namespace {

Eigen::Matrix3d skew(const Vector3& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix<double, 2, 3> pixel_jacobian(const Camera& camera, const Vector3& cam) {
  const double inv_z = 1.0 / cam.z();
  Eigen::Matrix<double, 2, 3> d;
  d << camera.fx * inv_z, 0.0, -camera.fx * cam.x() * inv_z * inv_z,
      0.0, camera.fy * inv_z, -camera.fy * cam.y() * inv_z * inv_z;
  return d;
}

Pixel project_camera_point(const Camera& camera, const Vector3& cam) {
  return Pixel(camera.fx * cam.x() / cam.z() + camera.cx, camera.fy * cam.y() / cam.z() + camera.cy);
}

double condition_number(const Eigen::MatrixXd& normal) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

struct Correspondence {
  Vector3 point;
  Pixel pixel;
};

// Object pose with the camera fixed; rotation updated on the left in world frame.
struct PoseProblem {
  const std::vector<Correspondence>& data;
  const Camera& camera;
  Matrix3 cam_rot;

  std::optional<Eigen::VectorXd> residuals(const Pose& pose) const {
    Eigen::VectorXd r(2 * data.size());
    const Matrix3 rot = pose.rotation.toRotationMatrix();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Vector3 cam = cam_rot * (rot * data[i].point + pose.translation) + camera.extrinsic.translation;
      if (!(cam.z() > 0.0)) return std::nullopt;
      r.segment<2>(2 * i) = project_camera_point(camera, cam) - data[i].pixel;
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const Pose& pose) const {
    Eigen::MatrixXd J(2 * data.size(), 6);
    const Matrix3 rot = pose.rotation.toRotationMatrix();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Vector3 rotated = rot * data[i].point;
      const Vector3 cam = cam_rot * (rotated + pose.translation) + camera.extrinsic.translation;
      const Eigen::Matrix<double, 2, 3> d = pixel_jacobian(camera, cam);
      J.block<2, 3>(2 * i, 0) = d * cam_rot * (-skew(rotated));
      J.block<2, 3>(2 * i, 3) = d * cam_rot;
    }
    return J;
  }

  Pose retract(const Pose& pose, const Eigen::VectorXd& delta) const {
    Pose out;
    out.rotation = (exp_rotation(delta.head<3>(), 1.0) * pose.rotation).normalized();
    out.translation = pose.translation + delta.tail<3>();
    return out;
  }
};

// Camera-frame translation minimizing the linearized reprojection error for a
// fixed object rotation.
std::optional<Pose> translation_for_rotation(const std::vector<Correspondence>& data,
                                             const Camera& camera, const Matrix3& cam_rot,
                                             const Quaternion& rotation) {
  const Matrix3 rot = cam_rot * rotation.toRotationMatrix();
  Eigen::MatrixXd A(2 * data.size(), 3);
  Eigen::VectorXd b(2 * data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector3 p = rot * data[i].point;
    const double xn = (data[i].pixel.x() - camera.cx) / camera.fx;
    const double yn = (data[i].pixel.y() - camera.cy) / camera.fy;
    A.row(2 * i) << 1.0, 0.0, -xn;
    b(2 * i) = xn * p.z() - p.x();
    A.row(2 * i + 1) << 0.0, 1.0, -yn;
    b(2 * i + 1) = yn * p.z() - p.y();
  }
  const Vector3 cam_t = A.colPivHouseholderQr().solve(b);
  if (!cam_t.allFinite()) return std::nullopt;
  Pose pose;
  pose.rotation = rotation;
  pose.translation = cam_rot.transpose() * (cam_t - camera.extrinsic.translation);
  return pose;
}

std::vector<Quaternion> build_seed_grid() {
  std::vector<Eigen::Vector4d> raw;  // (w, x, y, z)
  for (int axis = 0; axis < 4; ++axis) {
    Eigen::Vector4d q = Eigen::Vector4d::Zero();
    q(axis) = 1.0;
    raw.push_back(q);
  }
  for (int signs = 0; signs < 16; ++signs) {
    Eigen::Vector4d q;
    for (int i = 0; i < 4; ++i) q(i) = (signs >> i) & 1 ? -0.5 : 0.5;
    raw.push_back(q);
  }
  // Octahedral group: permutations of (1/sqrt2, 1/sqrt2, 0, 0) with signs.
  const double h = std::sqrt(0.5);
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      for (int signs = 0; signs < 4; ++signs) {
        Eigen::Vector4d q = Eigen::Vector4d::Zero();
        q(a) = signs & 1 ? -h : h;
        q(b) = signs & 2 ? -h : h;
        raw.push_back(q);
      }
    }
  }
  // Icosahedral group: even permutations of (0, 1, 1/phi, phi) / 2 with signs.
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  const std::array<double, 4> base{0.0, 1.0, 1.0 / phi, phi};
  const std::array<std::array<int, 4>, 12> even_perms{{{0, 1, 2, 3}, {0, 2, 3, 1}, {0, 3, 1, 2},
                                                       {1, 0, 3, 2}, {1, 2, 0, 3}, {1, 3, 2, 0},
                                                       {2, 0, 1, 3}, {2, 1, 3, 0}, {2, 3, 0, 1},
                                                       {3, 0, 2, 1}, {3, 1, 0, 2}, {3, 2, 1, 0}}};
  for (const auto& perm : even_perms) {
    for (int signs = 0; signs < 8; ++signs) {
      Eigen::Vector4d q;
      int bit = 0;
      for (int i = 0; i < 4; ++i) {
        double value = 0.5 * base[perm[i]];
        if (base[perm[i]] != 0.0) value = (signs >> bit++) & 1 ? -value : value;
        q(i) = value;
      }
      raw.push_back(q);
    }
  }

  std::vector<Quaternion> seeds;
  for (Eigen::Vector4d q : raw) {
    // Canonical sign: first nonzero coordinate positive.
    for (int i = 0; i < 4; ++i) {
      if (std::abs(q(i)) > 1e-12) {
        if (q(i) < 0.0) q = -q;
        break;
      }
    }
    const Quaternion candidate(q(0), q(1), q(2), q(3));
    const bool duplicate = std::any_of(seeds.begin(), seeds.end(), [&](const Quaternion& s) {
      return std::abs(std::abs(s.dot(candidate)) - 1.0) < 1e-9;
    });
    if (!duplicate) seeds.push_back(candidate.normalized());
  }
  return seeds;
}

struct PointProblem {
  const std::vector<Pose>& poses;
  const std::vector<Pixel>& pixels;
  const Camera& camera;
  Matrix3 cam_rot;

  std::optional<Eigen::VectorXd> residuals(const Vector3& c) const {
    Eigen::VectorXd r(2 * poses.size());
    for (std::size_t t = 0; t < poses.size(); ++t) {
      const Vector3 cam = cam_rot * poses[t].apply(c) + camera.extrinsic.translation;
      if (!(cam.z() > 0.0)) return std::nullopt;
      r.segment<2>(2 * t) = project_camera_point(camera, cam) - pixels[t];
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const Vector3& c) const {
    Eigen::MatrixXd J(2 * poses.size(), 3);
    for (std::size_t t = 0; t < poses.size(); ++t) {
      const Vector3 cam = cam_rot * poses[t].apply(c) + camera.extrinsic.translation;
      J.block<2, 3>(2 * t, 0) =
          pixel_jacobian(camera, cam) * cam_rot * poses[t].rotation.toRotationMatrix();
    }
    return J;
  }

  Vector3 retract(const Vector3& c, const Eigen::VectorXd& delta) const { return c + delta; }
};

bool poses_distinct(const Pose& a, const Pose& b, const ContactSolveOptions& opts) {
  const double angle = 2.0 * std::acos(std::min(1.0, std::abs(a.rotation.normalized().dot(b.rotation.normalized()))));
  return angle >= opts.min_rotation_rad || (a.translation - b.translation).norm() >= opts.min_translation_m;
}

}  // namespace

const std::vector<Quaternion>& pnp_rotation_seeds() {
  static const std::vector<Quaternion> seeds = build_seed_grid();
  return seeds;
}

PoseEstimate solve_pnp(std::span<const Vector3> keypoints,
                       std::span<const std::optional<Pixel>> pixels, const Camera& camera,
                       const std::optional<Pose>& init, const PnpOptions& opts) {
  if (keypoints.size() != pixels.size()) {
    throw Error("keypoint_count_mismatch", "3D and 2D keypoint counts differ");
  }
  std::vector<Correspondence> data;
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    if (pixels[i]) data.push_back({keypoints[i], *pixels[i]});
  }
  if (data.size() < 4) {
    throw Error("insufficient_correspondences",
                std::to_string(data.size()) + " visible correspondences, at least 4 required");
  }

  const PoseProblem problem{data, camera, camera.extrinsic.rotation.normalized().toRotationMatrix()};
  detail::LmOptions lm;
  lm.max_iterations = opts.max_iterations;

  Pose best;
  if (init) {
    best = *init;
    best.rotation.normalize();
  } else {
    detail::LmOptions short_lm = lm;
    short_lm.max_iterations = opts.seed_iterations;
    double best_cost = std::numeric_limits<double>::infinity();
    bool found = false;
    for (const Quaternion& seed : pnp_rotation_seeds()) {
      std::optional<Pose> start = translation_for_rotation(data, camera, problem.cam_rot, seed);
      if (!start || !problem.residuals(*start)) continue;
      Pose candidate = *start;
      const detail::LmSummary s = detail::levenberg_marquardt(candidate, problem, short_lm);
      if (s.cost < best_cost) {
        best_cost = s.cost;
        best = candidate;
        found = true;
      }
    }
    if (!found) throw Error("pnp_failed", "no rotation seed places the points in front of the camera");
  }
  if (!problem.residuals(best)) throw Error("behind_camera", "initial pose places points behind the camera");

  const detail::LmSummary summary = detail::levenberg_marquardt(best, problem, lm);

  PoseEstimate out;
  out.pose = best;
  out.iterations = summary.iterations;
  out.condition = condition_number(summary.normal_matrix);
  out.ambiguous = !(out.condition <= opts.ambiguity_condition);

  // Residual recomputed through the public projection so it is reproducible.
  std::vector<Vector3> visible_points;
  for (const Correspondence& c : data) visible_points.push_back(c.point);
  const std::vector<Pixel> projected = project_points(visible_points, best, camera);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double d2 = (projected[i] - data[i].pixel).squaredNorm();
    sum_sq += d2;
    if (std::sqrt(d2) <= opts.residual_gate_px) ++out.inlier_count;
  }
  out.residual_px = std::sqrt(sum_sq / static_cast<double>(data.size()));
  out.flagged = out.residual_px > opts.residual_gate_px;
  return out;
}

bool ContactSolveResult::ok() const {
  return std::none_of(failure.begin(), failure.end(), [](const auto& f) { return f.has_value(); });
}

void ContactSolveResult::throw_if_failed() const {
  for (std::size_t i = 0; i < failure.size(); ++i) {
    if (failure[i]) throw Error(*failure[i], "finger " + std::to_string(i) + ": " + failure_message[i]);
  }
}

ContactSolveResult solve_contact_points(
    std::span<const std::vector<std::optional<Pixel>>> tracks, std::span<const Pose> poses,
    const Camera& camera, const std::optional<ContactSet>& init, const ContactSolveOptions& opts) {
  if (tracks.size() != poses.size()) {
    throw Error("sequence_mismatch", std::to_string(tracks.size()) + " track frames for " +
                                         std::to_string(poses.size()) + " poses");
  }
  std::size_t k = 0;
  for (const auto& frame : tracks) k = std::max(k, frame.size());
  if (k == 0) throw Error("invalid_contacts", "no contact tracks");
  if (init && init->size() != k) throw Error("contact_count_mismatch", "initial guess has wrong size");

  const Matrix3 cam_rot = camera.extrinsic.rotation.normalized().toRotationMatrix();
  ContactSolveResult result;
  result.contacts.points.assign(k, Vector3::Zero());
  result.residual_px.assign(k, 0.0);
  result.failure.assign(k, std::nullopt);
  result.failure_message.assign(k, "");

  for (std::size_t finger = 0; finger < k; ++finger) {
    std::vector<Pose> finger_poses;
    std::vector<Pixel> finger_pixels;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      if (finger < tracks[t].size() && tracks[t][finger]) {
        finger_poses.push_back(poses[t]);
        finger_pixels.push_back(*tracks[t][finger]);
      }
    }

    bool observable = false;
    for (std::size_t a = 0; a < finger_poses.size() && !observable; ++a) {
      for (std::size_t b = a + 1; b < finger_poses.size() && !observable; ++b) {
        observable = poses_distinct(finger_poses[a], finger_poses[b], opts);
      }
    }

    Vector3 c = Vector3::Zero();
    if (init) {
      c = init->points[finger];
    } else if (!finger_poses.empty()) {
      // Back-project the first observation at the depth of the object center.
      const Pose& pose = finger_poses.front();
      const double depth = (cam_rot * pose.translation + camera.extrinsic.translation).z();
      const Pixel& px = finger_pixels.front();
      const Vector3 cam((px.x() - camera.cx) / camera.fx * depth, (px.y() - camera.cy) / camera.fy * depth,
                        depth);
      const Vector3 world = cam_rot.transpose() * (cam - camera.extrinsic.translation);
      c = pose.rotation.conjugate() * (world - pose.translation);
    }
    result.contacts.points[finger] = c;

    if (!observable) {
      result.failure[finger] = "depth_unobservable";
      result.failure_message[finger] =
          "needs at least 2 visible frames with distinct poses, has " + std::to_string(finger_poses.size()) +
          " visible frame(s)";
      continue;
    }

    const PointProblem problem{finger_poses, finger_pixels, camera, cam_rot};
    if (!problem.residuals(c)) {
      result.failure[finger] = "behind_camera";
      result.failure_message[finger] = "initial guess projects behind the camera";
      continue;
    }
    detail::LmOptions lm;
    lm.max_iterations = opts.max_iterations;
    const detail::LmSummary s = detail::levenberg_marquardt(c, problem, lm);
    result.contacts.points[finger] = c;
    result.residual_px[finger] = std::sqrt(s.cost / static_cast<double>(finger_pixels.size()));
    if (c.norm() > opts.contact_radius) {
      result.failure[finger] = "contact_out_of_bounds";
      result.failure_message[finger] = "solution lies outside the bounding radius";
    }
  }
  return result;
}

}  // namespace forcesolve
