#include "forcesolve/force_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "forcesolve/error.hpp"
#include "forcesolve/parallel.hpp"

namespace forcesolve {

namespace {

void require_aligned(std::span<const ForceSet> force_seq, const ContactSet& contacts,
                     const ForceProblem& problem) {
  if (force_seq.size() != problem.observations.size()) {
    throw Error("sequence_mismatch", std::to_string(force_seq.size()) + " force frames for " +
                                         std::to_string(problem.observations.size()) +
                                         " observed frames");
  }
  for (std::size_t t = 0; t < force_seq.size(); ++t) {
    if (force_seq[t].size() != contacts.size()) {
      throw Error("contact_force_mismatch", "frame " + std::to_string(t) + " has " +
                                                std::to_string(force_seq[t].size()) + " forces for " +
                                                std::to_string(contacts.size()) + " contacts");
    }
  }
}

double frame_loss(const ForceProblem& problem, const RigidBodyState& state, std::size_t t) {
  try {
    return keypoint_loss(problem.observations[t], state, problem.model, problem.camera);
  } catch (const Error& e) {
    throw Error(e.code(), "frame " + std::to_string(t + 1) + ": " + e.message());
  }
}

// Adam moments for a flat parameter vector.
struct AdamState {
  explicit AdamState(std::size_t n) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
  Eigen::VectorXd m, v;
  int steps = 0;

  Eigen::VectorXd direction(const Eigen::VectorXd& g, double beta1, double beta2, double eps) {
    ++steps;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    const double c1 = 1.0 - std::pow(beta1, steps);
    const double c2 = 1.0 - std::pow(beta2, steps);
    return (m / c1).cwiseQuotient(((v / c2).cwiseSqrt().array() + eps).matrix());
  }
};

Eigen::VectorXd flatten_forces(std::span<const ForceSet> seq) {
  std::size_t n = 0;
  for (const ForceSet& f : seq) n += 3 * f.size();
  Eigen::VectorXd out(n);
  std::size_t i = 0;
  for (const ForceSet& f : seq) {
    for (const Vector3& v : f.forces) {
      out.segment<3>(i) = v;
      i += 3;
    }
  }
  return out;
}

Eigen::VectorXd flatten_gradients(const std::vector<ForceGradient>& grads) {
  std::size_t n = 0;
  for (const ForceGradient& g : grads) n += 3 * g.size();
  Eigen::VectorXd out(n);
  std::size_t i = 0;
  for (const ForceGradient& g : grads) {
    for (const Vector3& v : g) {
      out.segment<3>(i) = v;
      i += 3;
    }
  }
  return out;
}

void unflatten_forces(const Eigen::VectorXd& flat, std::vector<ForceSet>& seq) {
  std::size_t i = 0;
  for (ForceSet& f : seq) {
    for (Vector3& v : f.forces) {
      v = flat.segment<3>(i);
      i += 3;
    }
  }
}

// Row t maps forces 0..t to u_t = sum_s (2(t - s) + 1) f_s / (t + 1). Under
// constant per-frame forces the displacement at frame t + 1 depends on u_t
// alone, which decouples the frames in the loss.
Eigen::MatrixXd displacement_map(Eigen::Index n) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index s = 0; s <= t; ++s) c(t, s) = (2.0 * static_cast<double>(t - s) + 1.0) / static_cast<double>(t + 1);
  }
  return c;
}

void clip_norm(Eigen::VectorXd& g, double max_norm) {
  const double norm = g.norm();
  if (norm > max_norm) g *= max_norm / norm;
}

}  // namespace

void OptimizerOptions::validate() const {
  if (max_iterations < 1) throw Error("invalid_config", "max_iterations must be >= 1");
  if (!(initial_rate > 0.0) || !(force_bound > 0.0) || !(gradient_clip > 0.0) ||
      !(contact_rate > 0.0) || !(contact_radius > 0.0) || !(displacement_rate > 0.0)) {
    throw Error("invalid_config", "rates and bounds must be positive");
  }
  if (convergence_window < 1) throw Error("invalid_config", "convergence_window must be >= 1");
  if (!(displacement_phase >= 0.0 && displacement_phase <= 1.0)) {
    throw Error("invalid_config", "displacement_phase must lie in [0, 1]");
  }
}

double total_loss(std::span<const ForceSet> force_seq, const ContactSet& contacts,
                  const ForceProblem& problem) {
  require_aligned(force_seq, contacts, problem);
  const std::vector<RigidBodyState> states =
      simulate_trajectory(problem.initial_state, force_seq, contacts, problem.model, problem.sim);
  double loss = 0.0;
  for (std::size_t t = 0; t < force_seq.size(); ++t) loss += frame_loss(problem, states[t + 1], t);
  return loss;
}

AdjointResult evaluate_adjoint(std::span<const ForceSet> force_seq, const ContactSet& contacts,
                               const ForceProblem& problem, const FDConfig& fd,
                               bool with_contact_gradient) {
  require_aligned(force_seq, contacts, problem);
  const std::size_t n = force_seq.size();
  const std::size_t k = contacts.size();

  AdjointResult out;
  out.states =
      simulate_trajectory(problem.initial_state, force_seq, contacts, problem.model, problem.sim);
  for (std::size_t t = 0; t < n; ++t) out.loss += frame_loss(problem, out.states[t + 1], t);

  // Jacobians of step t (s_t -> s_{t+1}); the state block of step 0 is unused.
  std::vector<StepJacobians> jacobians(n);
  parallel_for(n, [&](std::size_t t) {
    JacobianBlocks blocks;
    blocks.state = t > 0;
    blocks.force = true;
    blocks.contact = with_contact_gradient;
    try {
      jacobians[t] = step_jacobians(out.states[t], force_seq[t], contacts, problem.model,
                                    problem.sim, fd, blocks);
    } catch (const Error& e) {
      throw Error(e.code(), "frame " + std::to_string(t) + ": " + e.message());
    }
  });

  out.force_gradients.assign(n, ForceGradient(k, Vector3::Zero()));
  if (with_contact_gradient) out.contact_gradient.assign(k, Vector3::Zero());

  RigidBodyState::Vector adjoint = RigidBodyState::Vector::Zero();
  for (std::size_t t = n; t-- > 0;) {
    // adjoint holds dL/ds_{t+1}, including all later frames.
    try {
      adjoint += loss_gradient_single_frame(problem.observations[t], out.states[t + 1],
                                            problem.model, problem.camera);
    } catch (const Error& e) {
      throw Error(e.code(), "frame " + std::to_string(t + 1) + ": " + e.message());
    }
    const Eigen::VectorXd g_force = jacobians[t].d_force.transpose() * adjoint;
    for (std::size_t i = 0; i < k; ++i) out.force_gradients[t][i] = g_force.segment<3>(3 * i);
    if (with_contact_gradient) {
      const Eigen::VectorXd g_contact = jacobians[t].d_contact.transpose() * adjoint;
      for (std::size_t i = 0; i < k; ++i) out.contact_gradient[i] += g_contact.segment<3>(3 * i);
    }
    if (t > 0) adjoint = jacobians[t].d_state.transpose() * adjoint;
  }
  return out;
}

std::vector<ForceGradient> loss_gradients(std::span<const ForceSet> force_seq,
                                          const ContactSet& contacts, const ForceProblem& problem,
                                          const FDConfig& fd) {
  return evaluate_adjoint(force_seq, contacts, problem, fd, false).force_gradients;
}

std::vector<double> per_frame_keypoint_error(std::span<const RigidBodyState> states,
                                             const ForceProblem& problem) {
  if (states.size() != problem.observations.size() + 1) {
    throw Error("sequence_mismatch", "expected one more state than observed frames");
  }
  const std::vector<Vector3> points = problem.model.keypoint_positions();
  std::vector<double> out(problem.observations.size(), 0.0);
  for (std::size_t t = 0; t < problem.observations.size(); ++t) {
    const FrameObservation& obs = problem.observations[t];
    const std::vector<double> sq =
        keypoint_squared_residuals(obs, pose_of(states[t + 1]), points, problem.camera);
    double sum = 0.0;
    std::size_t visible = 0;
    for (std::size_t i = 0; i < sq.size(); ++i) {
      if (!obs.keypoints[i]) continue;
      sum += std::sqrt(sq[i]);
      ++visible;
    }
    out[t] = visible > 0 ? sum / static_cast<double>(visible) : 0.0;
  }
  return out;
}

InferenceResult infer_forces(const ForceProblem& problem, const ContactSet& contacts,
                             const OptimizerOptions& opts, const FDConfig& fd) {
  opts.validate();
  fd.validate();
  const std::size_t n = problem.frame_count();
  const std::size_t k = contacts.size();
  if (n == 0) throw Error("infeasible_scenario", "scenario has no observed frames");

  std::vector<ForceSet> forces(n, ForceSet::zeros(k));
  ContactSet current_contacts = contacts;

  InferenceResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  result.force_seq = forces;
  result.contacts = contacts;

  const Eigen::Index nn = static_cast<Eigen::Index>(n);
  const Eigen::Index width = static_cast<Eigen::Index>(3 * k);
  const Eigen::MatrixXd c_map = displacement_map(nn);
  const Eigen::MatrixXd c_inv = c_map.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(nn, nn));
  const int switch_iteration =
      static_cast<int>(std::floor(opts.displacement_phase * static_cast<double>(opts.max_iterations)));
  AdamState force_adam(3 * k * n);
  AdamState contact_adam(3 * k);
  std::vector<double> best_history;

  for (int it = 0; it < opts.max_iterations; ++it) {
    AdjointResult adj;
    try {
      adj = evaluate_adjoint(forces, current_contacts, problem, fd, opts.refine_contacts);
    } catch (const Error& e) {
      if (it == 0) throw Error("infeasible_scenario", e.code() + ": " + e.message());
      throw;
    }
    if (!std::isfinite(adj.loss)) {
      throw Error("diverged", "loss became non-finite at iteration " + std::to_string(it));
    }
    result.loss_history.push_back(adj.loss);
    result.iterations = it + 1;
    if (adj.loss < result.best_loss) {
      result.best_loss = adj.loss;
      result.best_iteration = it;
      result.force_seq = forces;
      result.contacts = current_contacts;
      result.simulated_states = adj.states;
    }
    best_history.push_back(result.best_loss);

    if (result.best_loss <= opts.absolute_tol) {
      result.converged = true;
      break;
    }
    const int window = opts.convergence_window;
    // Adam overshoot stalls the best loss early on, so the relative test only
    // runs once the displacement phase has had a full window.
    if (it >= switch_iteration + window) {
      const double before = best_history[static_cast<std::size_t>(it - window)];
      if (before - result.best_loss <= opts.convergence_tol * before) {
        result.converged = true;
        break;
      }
    }
    if (it + 1 == opts.max_iterations) break;

    Eigen::VectorXd g = flatten_gradients(adj.force_gradients);
    if (!g.allFinite()) throw Error("diverged", "non-finite gradient at iteration " + std::to_string(it));
    clip_norm(g, opts.gradient_clip);
    Eigen::VectorXd x = flatten_forces(forces);
    if (it < switch_iteration) {
      const double rate = opts.initial_rate / (1.0 + opts.rate_decay * it);
      x -= rate * force_adam.direction(g, opts.beta1, opts.beta2, opts.epsilon);
    } else {
      if (it == switch_iteration) force_adam = AdamState(3 * k * n);
      // Columns are frames. u = F C^T, so dL/du = dL/dF C^-1.
      Eigen::Map<Eigen::MatrixXd> f_mat(x.data(), width, nn);
      Eigen::MatrixXd u = f_mat * c_map.transpose();
      const Eigen::MatrixXd g_u = Eigen::Map<const Eigen::MatrixXd>(g.data(), width, nn) * c_inv;
      const Eigen::VectorXd dir = force_adam.direction(
          Eigen::Map<const Eigen::VectorXd>(g_u.data(), g_u.size()), opts.beta1, opts.beta2, opts.epsilon);
      u -= opts.displacement_rate * Eigen::Map<const Eigen::MatrixXd>(dir.data(), width, nn);
      f_mat = u * c_inv.transpose();
    }
    x = x.cwiseMax(-opts.force_bound).cwiseMin(opts.force_bound);
    unflatten_forces(x, forces);

    if (opts.refine_contacts) {
      Eigen::VectorXd gc(3 * k);
      for (std::size_t i = 0; i < k; ++i) gc.segment<3>(3 * i) = adj.contact_gradient[i];
      clip_norm(gc, opts.gradient_clip);
      const Eigen::VectorXd dir = contact_adam.direction(gc, opts.beta1, opts.beta2, opts.epsilon);
      const double c_rate = opts.contact_rate / (1.0 + opts.rate_decay * it);
      for (std::size_t i = 0; i < k; ++i) {
        Vector3 p = current_contacts.points[i] - c_rate * dir.segment<3>(3 * i);
        // Stay strictly inside the radius so h_contact probes remain valid.
        const double limit = opts.contact_radius - fd.h_contact;
        if (p.norm() > limit) p *= limit / p.norm();
        current_contacts.points[i] = p;
      }
    }
  }

  result.per_frame_kp_error = per_frame_keypoint_error(result.simulated_states, problem);
  return result;
}

}  // namespace forcesolve
