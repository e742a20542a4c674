#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "forcesolve/finite_diff.hpp"
#include "forcesolve/physics.hpp"
#include "forcesolve/projection.hpp"

namespace forcesolve {

// Everything needed to score a force sequence against observed keypoints.
// observations[t] is compared with the state after t + 1 steps.
struct ForceProblem {
  RigidBodyState initial_state;
  ObjectModel model;
  Camera camera;
  SimulationConfig sim;
  std::vector<FrameObservation> observations;

  std::size_t frame_count() const { return observations.size(); }
};

using ForceGradient = std::vector<Vector3>;  // one entry per contact

struct OptimizerOptions {
  int max_iterations = 500;
  double initial_rate = 0.1;       // N per unit of normalized gradient
  double rate_decay = 0.01;        // rate_t = initial_rate / (1 + rate_decay * t)
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-12;
  double convergence_tol = 1e-6;   // relative decrease of the best loss ...
  int convergence_window = 200;    // ... over this many iterations
  double absolute_tol = 1e-12;     // px^2; a loss this small counts as converged
  double force_bound = ForceSet::kDefaultBound;
  double gradient_clip = 1e4;
  // After this fraction of max_iterations the adaptive step moves to
  // displacement coordinates u_t = sum_s (2(t - s) + 1) f_s / (t + 1) with a
  // fresh moment estimate and the constant rate below. 1 disables the switch.
  double displacement_phase = 0.3;
  double displacement_rate = 3e-4;  // N
  std::uint64_t seed = 0;
  // Optional refinement of contact positions through d s / d C.
  bool refine_contacts = false;
  double contact_rate = 0.002;     // m
  double contact_radius = ContactSet::kDefaultRadius;

  void validate() const;
};

struct InferenceResult {
  std::vector<ForceSet> force_seq;
  ContactSet contacts;
  std::vector<RigidBodyState> simulated_states;  // n + 1, first is the initial state
  std::vector<double> loss_history;              // total_loss of every evaluated iterate
  std::vector<double> per_frame_kp_error;        // mean pixel distance per frame 1..n
  double best_loss = 0.0;
  int best_iteration = 0;
  int iterations = 0;
  bool converged = false;
};

// Sum of keypoint_loss over frames 1..n of the rollout of force_seq.
double total_loss(std::span<const ForceSet> force_seq, const ContactSet& contacts,
                  const ForceProblem& problem);

struct AdjointResult {
  double loss = 0.0;
  std::vector<RigidBodyState> states;
  std::vector<ForceGradient> force_gradients;
  std::vector<Vector3> contact_gradient;  // empty unless requested
};

// Reverse-mode accumulation through time over finite-difference step Jacobians.
AdjointResult evaluate_adjoint(std::span<const ForceSet> force_seq, const ContactSet& contacts,
                               const ForceProblem& problem, const FDConfig& fd,
                               bool with_contact_gradient = false);

// d total_loss / d f_t for every frame, one k x 3 gradient per frame.
std::vector<ForceGradient> loss_gradients(std::span<const ForceSet> force_seq,
                                          const ContactSet& contacts, const ForceProblem& problem,
                                          const FDConfig& fd);

// Mean pixel distance over visible keypoints for each frame of a rollout.
std::vector<double> per_frame_keypoint_error(std::span<const RigidBodyState> states,
                                             const ForceProblem& problem);

// Minimizes total_loss over the force sequence from an all-zero start using
// Adam-style per-coordinate scaled descent, gradient clipping and projection
// onto the force bound. Returns the best iterate seen.
InferenceResult infer_forces(const ForceProblem& problem, const ContactSet& contacts,
                             const OptimizerOptions& opts, const FDConfig& fd);

}  // namespace forcesolve
