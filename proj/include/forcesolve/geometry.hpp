#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forcesolve/physics.hpp"
#include "forcesolve/projection.hpp"

namespace forcesolve {

struct PoseEstimate {
  Pose pose;                 // object -> world
  double residual_px = 0.0;  // root-mean reprojection error over visible points
  int inlier_count = 0;      // visible points with error below the residual gate
  int iterations = 0;
  double condition = 0.0;    // condition number of the normal equations
  bool flagged = false;      // residual_px above the gate
  bool ambiguous = false;    // condition above the ambiguity threshold
};

struct PnpOptions {
  double residual_gate_px = 20.0;
  double ambiguity_condition = 1e6;
  int max_iterations = 100;
  int seed_iterations = 8;
};

// Pose of an object from 2D-3D keypoint correspondences with the camera held
// fixed. Without `init`, every rotation of a fixed seed grid is tried with a
// linear translation estimate and a short refinement; the best is refined
// fully. Throws "insufficient_correspondences" for fewer than 4 visible points.
PoseEstimate solve_pnp(std::span<const Vector3> keypoints,
                       std::span<const std::optional<Pixel>> pixels, const Camera& camera,
                       const std::optional<Pose>& init = std::nullopt, const PnpOptions& opts = {});

// The deterministic rotation seeds used when no initial pose is given.
const std::vector<Quaternion>& pnp_rotation_seeds();

struct ContactSolveOptions {
  double min_rotation_rad = 5.0 * 3.14159265358979323846 / 180.0;
  double min_translation_m = 0.01;
  double contact_radius = ContactSet::kDefaultRadius;
  int max_iterations = 100;
};

struct ContactSolveResult {
  ContactSet contacts;                          // unsolved fingers hold their initial guess
  std::vector<double> residual_px;              // per-finger RMS reprojection error
  std::vector<std::optional<std::string>> failure;  // per-finger error code, if any
  std::vector<std::string> failure_message;

  bool ok() const;
  // Throws the first per-finger failure as an Error.
  void throw_if_failed() const;
};

// Per-finger nonlinear least squares for object-frame contact points given
// their pixel tracks (tracks[frame][finger]) and the object pose of every frame.
ContactSolveResult solve_contact_points(
    std::span<const std::vector<std::optional<Pixel>>> tracks, std::span<const Pose> poses,
    const Camera& camera, const std::optional<ContactSet>& init = std::nullopt,
    const ContactSolveOptions& opts = {});

}  // namespace forcesolve
