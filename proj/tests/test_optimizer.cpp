#include <cmath>

#include <Eigen/LU>

#include "forcesolve/force_optimizer.hpp"
#include "forcesolve/scenario.hpp"
#include "support.hpp"

using namespace fs_test;

namespace {

// Pixel of a world point, written out with an explicit K [R | t].
Pixel oracle_pixel(const Camera& cam, const Vector3& world) {
  Matrix3 k;
  k << cam.fx, 0, cam.cx, 0, cam.fy, cam.cy, 0, 0, 1;
  const Vector3 h = k * (cam.extrinsic.rotation.toRotationMatrix() * world + cam.extrinsic.translation);
  return Pixel(h.x() / h.z(), h.y() / h.z());
}

ForceProblem observed_problem(const RigidBodyState& s0, const std::vector<ForceSet>& forces,
                              const ContactSet& contacts, const ObjectModel& model, const Camera& cam) {
  ForceProblem p;
  p.initial_state = s0;
  p.model = model;
  p.camera = cam;
  const auto states = simulate_trajectory(s0, forces, contacts, model, p.sim);
  for (std::size_t t = 1; t < states.size(); ++t) {
    p.observations.push_back(observe(model.keypoint_positions(), pose_of(states[t]), cam, static_cast<int>(t)));
  }
  return p;
}

std::vector<ForceSet> random_forces(Rng& rng, std::size_t n, std::size_t k, double amp) {
  std::vector<ForceSet> seq;
  for (std::size_t t = 0; t < n; ++t) {
    ForceSet f;
    for (std::size_t i = 0; i < k; ++i) f.forces.push_back(random_vector(rng, -amp, amp));
    seq.push_back(f);
  }
  return seq;
}

ContactSet random_contacts(Rng& rng, std::size_t k) {
  ContactSet c;
  for (std::size_t i = 0; i < k; ++i) c.points.push_back(random_vector(rng, -0.08, 0.08));
  return c;
}

RigidBodyState random_start(Rng& rng) {
  RigidBodyState s;
  s.position = random_vector(rng, -0.03, 0.03);
  s.orientation = random_rotation(rng);
  s.linear_velocity = random_vector(rng, -0.2, 0.2);
  s.angular_velocity = random_vector(rng, -1, 1);
  return s;
}

ForceProblem random_problem(std::uint64_t seed, std::size_t n, std::size_t k, std::vector<ForceSet>* planted,
                            ContactSet* contacts, double noise = 0.0) {
  Rng rng(seed);
  const ObjectModel model = box_object(0.5, Vector3(0.0017, 0.0017, 0.0017), 10, seed);
  *contacts = random_contacts(rng, k);
  *planted = random_forces(rng, n, k, 3.0);
  ForceProblem p = observed_problem(random_start(rng), *planted, *contacts, model, front_camera());
  for (auto& obs : p.observations)
    for (auto& kp : obs.keypoints) *kp += noise * Pixel(rng.normal(), rng.normal());
  return p;
}

double max_abs_gradient(const std::vector<ForceGradient>& g) {
  double m = 0.0;
  for (const auto& frame : g)
    for (const auto& v : frame) m = std::max(m, v.cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

TEST(TotalLoss, SelfConsistentObservationsGiveZero) {
  std::vector<ForceSet> planted;
  ContactSet c;
  const ForceProblem p = random_problem(1, 6, 3, &planted, &c);
  EXPECT_LT(total_loss(planted, c, p), 1e-16);
}

TEST(TotalLoss, ZeroForcesReproduceGravityOnlyTarget) {
  Rng rng(2);
  const ContactSet c = random_contacts(rng, 5);
  const std::vector<ForceSet> zero(10, ForceSet::zeros(5));
  const ForceProblem p = observed_problem(random_start(rng), zero, c, box_object(0.5, Vector3(0.002, 0.003, 0.004)),
                                          front_camera());
  EXPECT_LT(total_loss(zero, c, p), 1e-16);
}

TEST(TotalLoss, FreeFallAgainstHoverMatchesBallisticProjection) {
  const ObjectModel model = box_object(0.5, Vector3(0.002, 0.003, 0.004));
  const Camera cam = front_camera();
  RigidBodyState s0;
  s0.position = Vector3(0.01, 0.0, 0.02);
  s0.orientation = Quaternion(Eigen::AngleAxisd(0.5, Vector3(1, 1, 0).normalized()));
  ForceProblem p;
  p.initial_state = s0;
  p.model = model;
  p.camera = cam;
  for (int t = 1; t <= 10; ++t) p.observations.push_back(observe(model.keypoint_positions(), pose_of(s0), cam, t));

  const ContactSet c{{Vector3(0.05, 0, 0)}};
  const std::vector<ForceSet> zero(10, ForceSet::zeros(1));
  const Matrix3 r = s0.rotation();
  double want = 0.0;
  for (int t = 1; t <= 10; ++t) {
    const double time = t / 30.0;
    const Vector3 drop(0, 0, -0.5 * 9.81 * time * time);
    for (const Vector3& x : model.keypoint_positions()) {
      const Vector3 rest = r * x + s0.position;
      want += (oracle_pixel(cam, rest + drop) - oracle_pixel(cam, rest)).squaredNorm();
    }
  }
  EXPECT_GT(want, 1.0);
  EXPECT_NEAR(total_loss(zero, c, p), want, 1e-9 * want);
}

TEST(TotalLoss, LengthMismatch) {
  std::vector<ForceSet> planted;
  ContactSet c;
  const ForceProblem p = random_problem(3, 4, 2, &planted, &c);
  planted.pop_back();
  EXPECT_EQ(error_code([&] { total_loss(planted, c, p); }), "sequence_mismatch");
}

TEST(LossGradients, ZeroResidualGivesZeroGradient) {
  std::vector<ForceSet> planted;
  ContactSet c;
  const ForceProblem p = random_problem(4, 5, 3, &planted, &c);
  EXPECT_LT(max_abs_gradient(loss_gradients(planted, c, p, FDConfig{})), 1e-9);
}

TEST(LossGradients, SingleFrameIsDirectChainRule) {
  std::vector<ForceSet> planted;
  ContactSet c;
  const ForceProblem p = random_problem(5, 1, 3, &planted, &c, 4.0);
  const std::vector<ForceSet> guess{ForceSet{{Vector3(0.5, 0, 1), Vector3(-1, 0.2, 0), Vector3(0, 0, 2)}}};
  const auto g = loss_gradients(guess, c, p, FDConfig{});

  const FDConfig fd;
  const StepJacobians j = step_jacobians(p.initial_state, guess[0], c, p.model, p.sim, fd);
  const RigidBodyState s1 = step(p.initial_state, guess[0], c, p.model, p.sim);
  const auto dl = loss_gradient_single_frame(p.observations[0], s1, p.model, p.camera);
  const Eigen::VectorXd want = j.d_force.transpose() * dl;
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(g[0][i][a], want(3 * i + a), 1e-9 * want.cwiseAbs().maxCoeff());
}

TEST(LossGradients, MatchCentralDifferencesOfTotalLoss) {
  for (std::uint64_t seed : {6u, 7u, 8u}) {
    std::vector<ForceSet> planted;
    ContactSet c;
    const ForceProblem p = random_problem(seed, 5, 5, &planted, &c);
    Rng rng(seed + 100);
    const std::vector<ForceSet> guess = random_forces(rng, 5, 5, 2.0);
    const auto g = loss_gradients(guess, c, p, FDConfig{});
    const double h = 1e-4;
    double num_max = 0.0, err_max = 0.0;
    for (std::size_t t = 0; t < 5; ++t) {
      for (std::size_t i = 0; i < 5; ++i) {
        for (int a = 0; a < 3; ++a) {
          std::vector<ForceSet> plus = guess, minus = guess;
          plus[t].forces[i][a] += h;
          minus[t].forces[i][a] -= h;
          const double num = (total_loss(plus, c, p) - total_loss(minus, c, p)) / (2 * h);
          num_max = std::max(num_max, std::abs(num));
          err_max = std::max(err_max, std::abs(num - g[t][i][a]));
        }
      }
    }
    EXPECT_LT(err_max / num_max, 1e-2) << "seed " << seed;
  }
}

TEST(InferForces, GravityOnlyTargetConvergesImmediately) {
  Rng rng(9);
  const ContactSet c = random_contacts(rng, 5);
  const std::vector<ForceSet> zero(10, ForceSet::zeros(5));
  const ForceProblem p = observed_problem(random_start(rng), zero, c, box_object(0.5, Vector3(0.002, 0.003, 0.004)),
                                          front_camera());
  const InferenceResult r = infer_forces(p, c, OptimizerOptions{}, FDConfig{});
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 2);
  EXPECT_LE(r.best_iteration, 1);
  EXPECT_LT(r.best_loss, 1e-6);
  for (const auto& f : r.force_seq)
    for (const auto& v : f.forces) EXPECT_LT(v.norm(), 1e-6);
}

TEST(InferForces, HoverRecoversWeight) {
  SyntheticSpec spec;
  spec.force_profile = ForceProfile::kHover;
  const Scenario s = gen_synthetic(3, spec);
  OptimizerOptions opts;
  opts.max_iterations = 5000;
  const InferenceResult r = infer_forces(s.force_problem(), s.ground_truth->contacts, opts, FDConfig{});
  const double weight = s.object.mass * 9.81;
  for (std::size_t t = 0; t < r.force_seq.size(); ++t) {
    const Wrench w = net_wrench(r.simulated_states[t], r.force_seq[t], r.contacts);
    EXPECT_LT((w.force - Vector3(0, 0, weight)).norm() / weight, 0.05) << "frame " << t;
  }
}

TEST(InferForces, SmoothRandomRoundTrip) {
  const Scenario s = gen_synthetic(7);
  const InferenceResult r = infer_forces(s.force_problem(), s.ground_truth->contacts, OptimizerOptions{}, FDConfig{});
  double mean = 0.0;
  for (double e : r.per_frame_kp_error) mean += e;
  mean /= static_cast<double>(r.per_frame_kp_error.size());
  EXPECT_LT(mean, 2.0);
  EXPECT_EQ(r.per_frame_kp_error.size(), s.frame_count());
  EXPECT_EQ(r.simulated_states.size(), s.frame_count() + 1);
}

TEST(InferForces, GenerativeRealizability) {
  const Scenario s = gen_synthetic(7);
  OptimizerOptions opts;
  opts.max_iterations = 5000;
  const InferenceResult r = infer_forces(s.force_problem(), s.ground_truth->contacts, opts, FDConfig{});
  EXPECT_LT(r.best_loss, 1e-4);
}

TEST(InferForces, LossHistoryIsRecomputable) {
  const Scenario s = gen_synthetic(11);
  const ForceProblem p = s.force_problem();
  const ContactSet& c = s.ground_truth->contacts;
  OptimizerOptions opts;
  opts.max_iterations = 40;
  opts.displacement_phase = 1.0;
  const InferenceResult full = infer_forces(p, c, opts, FDConfig{});
  ASSERT_EQ(full.loss_history.size(), 40u);
  EXPECT_EQ(full.loss_history[0], total_loss(std::vector<ForceSet>(p.frame_count(), ForceSet::zeros(c.size())), c, p));
  EXPECT_NEAR(full.loss_history[full.best_iteration], total_loss(full.force_seq, c, p), 1e-12 * full.best_loss);
  EXPECT_EQ(full.best_loss, *std::min_element(full.loss_history.begin(), full.loss_history.end()));
  // A shorter budget visits the same iterates; its best is the last entry it
  // recorded whenever that entry is the prefix minimum.
  for (int budget : {5, 17, 29}) {
    opts.max_iterations = budget;
    const InferenceResult part = infer_forces(p, c, opts, FDConfig{});
    ASSERT_EQ(part.loss_history.size(), static_cast<std::size_t>(budget));
    for (int i = 0; i < budget; ++i) EXPECT_EQ(part.loss_history[i], full.loss_history[i]);
    EXPECT_NEAR(total_loss(part.force_seq, c, p), part.best_loss, 1e-12 * part.best_loss);
  }
}

TEST(InferForces, RespectsForceBound) {
  const Scenario s = gen_synthetic(12);
  OptimizerOptions opts;
  opts.max_iterations = 60;
  opts.force_bound = 0.4;
  opts.initial_rate = 1.0;
  const InferenceResult r = infer_forces(s.force_problem(), s.ground_truth->contacts, opts, FDConfig{});
  double largest = 0.0;
  for (const auto& f : r.force_seq)
    for (const auto& v : f.forces) largest = std::max(largest, v.cwiseAbs().maxCoeff());
  EXPECT_LE(largest, 0.4);
  EXPECT_GT(largest, 0.3);  // the bound was actually active
}

TEST(InferForces, DeterministicForFixedSeed) {
  const Scenario s = gen_synthetic(13);
  OptimizerOptions opts;
  opts.max_iterations = 80;
  opts.seed = 5;
  const InferenceResult a = infer_forces(s.force_problem(), s.ground_truth->contacts, opts, FDConfig{});
  const InferenceResult b = infer_forces(s.force_problem(), s.ground_truth->contacts, opts, FDConfig{});
  EXPECT_EQ(a.loss_history, b.loss_history);
  ASSERT_EQ(a.force_seq.size(), b.force_seq.size());
  for (std::size_t t = 0; t < a.force_seq.size(); ++t) EXPECT_EQ(a.force_seq[t].forces, b.force_seq[t].forces);
}

TEST(InferForces, InfeasibleScenario) {
  std::vector<ForceSet> planted;
  ContactSet c;
  ForceProblem p = random_problem(14, 3, 2, &planted, &c);
  for (auto& kp : p.observations[1].keypoints) kp.reset();
  EXPECT_EQ(error_code([&] { infer_forces(p, c, OptimizerOptions{}, FDConfig{}); }), "infeasible_scenario");
  p.observations.clear();
  EXPECT_EQ(error_code([&] { infer_forces(p, c, OptimizerOptions{}, FDConfig{}); }), "infeasible_scenario");
}

TEST(InferForces, InvalidOptions) {
  std::vector<ForceSet> planted;
  ContactSet c;
  const ForceProblem p = random_problem(15, 2, 1, &planted, &c);
  OptimizerOptions opts;
  opts.max_iterations = 0;
  EXPECT_EQ(error_code([&] { infer_forces(p, c, opts, FDConfig{}); }), "invalid_config");
}

TEST(OptimizerProperties, WrenchNullSpaceLeavesLossUnchanged) {
  Rng rng(16);
  std::vector<ForceSet> planted;
  ContactSet c;
  const ForceProblem p = random_problem(16, 6, 5, &planted, &c, 3.0);
  const std::vector<ForceSet> base = random_forces(rng, 6, 5, 2.0);
  const auto states = simulate_trajectory(p.initial_state, base, c, p.model, p.sim);
  std::vector<ForceSet> moved = base;
  for (std::size_t t = 0; t < base.size(); ++t) {
    // Wrench map at the frame-start pose: 6 x 3k.
    const Matrix3 r = states[t].rotation();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 15);
    for (int i = 0; i < 5; ++i) {
      a.block<3, 3>(0, 3 * i) = Matrix3::Identity();
      a.block<3, 3>(3, 3 * i) = skew(r * c.points[i]);
    }
    const Eigen::MatrixXd null = Eigen::FullPivLU<Eigen::MatrixXd>(a).kernel();
    ASSERT_EQ(null.cols(), 9);
    Eigen::VectorXd coeff(9);
    for (int j = 0; j < 9; ++j) coeff(j) = rng.uniform(-3, 3);
    const Eigen::VectorXd delta = null * coeff;
    ASSERT_GT(delta.norm(), 0.5);
    for (int i = 0; i < 5; ++i) moved[t].forces[i] += delta.segment<3>(3 * i);
  }
  const double l0 = total_loss(base, c, p);
  const double l1 = total_loss(moved, c, p);
  EXPECT_GT(l0, 1.0);
  EXPECT_LT(std::abs(l1 - l0), 1e-9);
}
