#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Core>

#include "forcesolve/physics.hpp"
#include "forcesolve/projection.hpp"

namespace forcesolve {

enum class FdScheme { kCentral, kForward };

struct FDConfig {
  double h_state = 0.01;
  double h_force = 0.01;    // N
  double h_contact = 0.05;  // m
  FdScheme scheme = FdScheme::kCentral;

  void validate() const;
};

// Which input blocks to differentiate. Skipped blocks cost no simulator calls
// and are left empty.
struct JacobianBlocks {
  bool state = true;
  bool force = true;
  bool contact = true;
};

struct StepJacobians {
  using StateMatrix = Eigen::Matrix<double, RigidBodyState::kDim, RigidBodyState::kDim>;
  StateMatrix d_state = StateMatrix::Zero();  // d s_{t+1} / d s_t
  Eigen::MatrixXd d_force;                    // 13 x 3k, column 3i+j is force i, axis j
  Eigen::MatrixXd d_contact;                  // 13 x 3k
  std::size_t simulator_calls = 0;
};

using StepFunction = std::function<RigidBodyState(const RigidBodyState&, const ForceSet&,
                                                  const ContactSet&, const ObjectModel&,
                                                  const SimulationConfig&)>;

// Number of step evaluations step_jacobians performs with all blocks enabled:
// 2(13 + 6k) for central differences, (13 + 6k) + 1 for forward differences.
std::size_t expected_simulator_calls(FdScheme scheme, std::size_t k);

// Finite-difference Jacobians of `step`. Quaternion coordinates are perturbed
// additively and renormalized before stepping. A probe that fails aborts the
// whole evaluation with "fd_probe_failed".
StepJacobians step_jacobians(const RigidBodyState& state, const ForceSet& forces,
                             const ContactSet& contacts, const ObjectModel& model,
                             const SimulationConfig& cfg, const FDConfig& fd,
                             const JacobianBlocks& blocks = {},
                             const StepFunction& simulator = &step);

// Closed-form gradient of keypoint_loss with respect to the 13 state
// coordinates. The velocity entries are zero.
RigidBodyState::Vector loss_gradient_single_frame(const FrameObservation& obs,
                                                  const RigidBodyState& state,
                                                  const ObjectModel& model, const Camera& camera);

}  // namespace forcesolve
