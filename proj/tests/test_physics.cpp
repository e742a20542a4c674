#include <cmath>
#include <limits>

#include "forcesolve/metrics.hpp"
#include "support.hpp"

using namespace fs_test;

namespace {

SimulationConfig zero_g() {
  SimulationConfig cfg;
  cfg.gravity = Vector3::Zero();
  return cfg;
}

RigidBodyState tumbling_state() {
  RigidBodyState s;
  s.position = Vector3(0.1, -0.2, 0.3);
  s.orientation = Quaternion(Eigen::AngleAxisd(0.7, Vector3(1, 2, 3).normalized()));
  s.linear_velocity = Vector3(0.3, -0.1, 0.2);
  s.angular_velocity = Vector3(1.0, -0.6, 0.8);
  return s;
}

ObjectModel unit_body() { return box_object(1.0, Vector3(0.01, 0.01, 0.01)); }

ObjectModel asymmetric_body() { return box_object(0.7, Vector3(0.002, 0.005, 0.009)); }

}  // namespace

TEST(Step, ZeroForceZeroGravityIsFixedPoint) {
  RigidBodyState s;
  s.position = Vector3(0.2, 0.1, -0.3);
  s.orientation = Quaternion(Eigen::AngleAxisd(0.4, Vector3::UnitY()));
  ContactSet c{{Vector3(0.05, 0.0, 0.0)}};
  const RigidBodyState out = step(s, ForceSet::zeros(1), c, unit_body(), zero_g());
  EXPECT_TRUE(bitwise_equal(out, s));
}

TEST(Step, OneSemiImplicitSubstepOfFreeFall) {
  SimulationConfig cfg;
  cfg.substeps_per_frame = 1;
  cfg.linear_scheme = LinearScheme::kSemiImplicitEuler;
  ContactSet c{{Vector3::Zero()}};
  const RigidBodyState out = step(RigidBodyState{}, ForceSet::zeros(1), c, unit_body(), cfg);
  EXPECT_NEAR(out.linear_velocity.z(), -0.327, 1e-12);
  EXPECT_NEAR(out.position.z(), -0.0109, 1e-12);
  EXPECT_EQ(out.position.x(), 0.0);
  EXPECT_EQ(out.linear_velocity.y(), 0.0);
}

TEST(Step, OneExactSubstepOfFreeFall) {
  SimulationConfig cfg;
  cfg.substeps_per_frame = 1;
  ContactSet c{{Vector3::Zero()}};
  const RigidBodyState out = step(RigidBodyState{}, ForceSet::zeros(1), c, unit_body(), cfg);
  EXPECT_NEAR(out.linear_velocity.z(), -0.327, 1e-12);
  EXPECT_NEAR(out.position.z(), -0.00545, 1e-12);
}

TEST(Step, SingleOffsetForceMatchesOneSubstepOracle) {
  SimulationConfig cfg = zero_g();
  cfg.substeps_per_frame = 1;
  const ObjectModel body = unit_body();
  ContactSet c{{Vector3(0.1, 0.0, 0.0)}};
  ForceSet f{{Vector3(0.0, 0.0, 1.0)}};
  const RigidBodyState out = step(RigidBodyState{}, f, c, body, cfg);

  OracleState in{Vector3::Zero(), Vector3::Zero(), Vector3::Zero(), Quaternion::Identity()};
  const OracleState want = oracle_substep(in, f.forces, c.points, body.mass, body.inertia_body,
                                          Vector3::Zero(), cfg.frame_dt);
  EXPECT_LT((out.angular_velocity - want.w).norm(), 1e-12);
  EXPECT_LT((out.position - want.p).norm(), 1e-15);
  EXPECT_LT(std::abs(out.orientation.dot(want.q)) - 1.0, 1e-14);
  EXPECT_LT(out.angular_velocity.y(), 0.0);
  EXPECT_NEAR(out.angular_velocity.y(), -0.1 * cfg.frame_dt / 0.01, 1e-12);
  EXPECT_NEAR(out.angular_velocity.x(), 0.0, 1e-15);
}

TEST(Step, MultiSubstepMatchesRepeatedOracle) {
  SimulationConfig cfg;
  const ObjectModel body = asymmetric_body();
  const RigidBodyState s = tumbling_state();
  ContactSet c{{Vector3(0.05, 0.02, -0.03), Vector3(-0.04, 0.01, 0.06)}};
  ForceSet f{{Vector3(1.0, -2.0, 3.0), Vector3(-0.5, 0.4, 2.0)}};
  const RigidBodyState out = step(s, f, c, body, cfg);

  // The oracle recomputes torque from the current pose each substep, so feed it
  // a central force plus a couple whose world arms reproduce the held wrench.
  const Wrench w = net_wrench(s, f, c);
  OracleState o{s.position, s.linear_velocity, s.angular_velocity, s.orientation};
  const double dt = cfg.frame_dt / cfg.substeps_per_frame;
  for (int i = 0; i < cfg.substeps_per_frame; ++i) {
    const Matrix3 r = o.q.toRotationMatrix();
    const Vector3 tau = w.torque;
    const double tn = tau.norm();
    const Vector3 e1 = tau.unitOrthogonal();
    const Vector3 e2 = tau.normalized().cross(e1);
    const std::vector<Vector3> forces{w.force, tn * e2, -tn * e2};
    const std::vector<Vector3> arms{Vector3::Zero(), r.transpose() * (0.5 * e1),
                                    r.transpose() * (-0.5 * e1)};
    o = oracle_substep(o, forces, arms, body.mass, body.inertia_body, cfg.gravity, dt);
  }
  EXPECT_LT((out.position - o.p).norm(), 1e-12);
  EXPECT_LT((out.linear_velocity - o.v).norm(), 1e-12);
  EXPECT_LT((out.angular_velocity - o.w).norm(), 1e-9);
  EXPECT_NEAR(std::abs(out.orientation.dot(o.q)), 1.0, 1e-12);
}

TEST(NetWrench, ZeroForces) {
  const Wrench w = net_wrench(tumbling_state(), ForceSet::zeros(3),
                              ContactSet{{Vector3(0.1, 0, 0), Vector3(0, 0.1, 0), Vector3(0, 0, 0.1)}});
  EXPECT_EQ(w.force, Vector3::Zero());
  EXPECT_EQ(w.torque, Vector3::Zero());
}

TEST(NetWrench, SingleForceCrossProduct) {
  const Wrench w = net_wrench(RigidBodyState{}, ForceSet{{Vector3(0, 0, 1)}},
                              ContactSet{{Vector3(0.1, 0, 0)}});
  EXPECT_EQ(w.force, Vector3(0, 0, 1));
  EXPECT_NEAR((w.torque - Vector3(0, -0.1, 0)).norm(), 0.0, 1e-15);
}

TEST(NetWrench, CoupleMatchesDirectSummation) {
  RigidBodyState s;
  s.orientation = Quaternion(Eigen::AngleAxisd(0.3, Vector3(0.2, 1.0, -0.4).normalized()));
  const Vector3 c0(0.07, 0.02, -0.01);
  const Vector3 f0(0.3, -1.2, 0.8);
  const ContactSet c{{c0, -c0}};
  const ForceSet f{{f0, -f0}};
  const Wrench w = net_wrench(s, f, c);

  // Component-wise summation of r x f, written out longhand.
  const Matrix3 r = s.rotation();
  double tx = 0, ty = 0, tz = 0;
  for (int i = 0; i < 2; ++i) {
    const Vector3 a = r * c.points[i];
    const Vector3& b = f.forces[i];
    tx += a.y() * b.z() - a.z() * b.y();
    ty += a.z() * b.x() - a.x() * b.z();
    tz += a.x() * b.y() - a.y() * b.x();
  }
  EXPECT_LT(w.force.norm(), 1e-15);
  EXPECT_GT(w.torque.norm(), 0.1);
  EXPECT_NEAR(w.torque.x(), tx, 1e-15);
  EXPECT_NEAR(w.torque.y(), ty, 1e-15);
  EXPECT_NEAR(w.torque.z(), tz, 1e-15);
}

TEST(NetWrench, MismatchedCount) {
  EXPECT_EQ(error_code([] { net_wrench(RigidBodyState{}, ForceSet::zeros(2), ContactSet{{Vector3::Zero()}}); }),
            "contact_force_mismatch");
}

TEST(Step, Errors) {
  const ObjectModel body = unit_body();
  RigidBodyState bad;
  bad.linear_velocity.x() = std::numeric_limits<double>::quiet_NaN();
  ContactSet c{{Vector3::Zero()}};
  EXPECT_EQ(error_code([&] { step(bad, ForceSet::zeros(1), c, body, SimulationConfig{}); }),
            "non_finite_state");
  EXPECT_EQ(error_code([&] { step(RigidBodyState{}, ForceSet::zeros(2), c, body, SimulationConfig{}); }),
            "contact_force_mismatch");
  ForceSet inf{{Vector3(std::numeric_limits<double>::infinity(), 0, 0)}};
  EXPECT_EQ(error_code([&] { step(RigidBodyState{}, inf, c, body, SimulationConfig{}); }),
            "non_finite_state");
  EXPECT_EQ(error_code([&] { step(RigidBodyState{}, ForceSet::zeros(1), ContactSet{{Vector3(2, 0, 0)}}, body,
                                  SimulationConfig{}); }),
            "contact_out_of_bounds");
}

TEST(Trajectory, ZeroGravityRunStaysPut) {
  RigidBodyState s0;
  s0.position = Vector3(0.0, 0.0, 0.5);
  std::vector<ForceSet> seq(10, ForceSet::zeros(2));
  const auto states = simulate_trajectory(s0, seq, ContactSet{{Vector3(0.1, 0, 0), Vector3(-0.1, 0, 0)}},
                                          unit_body(), zero_g());
  ASSERT_EQ(states.size(), 11u);
  for (const auto& s : states) EXPECT_TRUE(bitwise_equal(s, s0));
}

TEST(Trajectory, FreeFallMatchesBallisticClosedForm) {
  RigidBodyState s0;
  s0.position = Vector3(0.1, 0.2, 0.3);
  s0.linear_velocity = Vector3(0.5, 0.0, 1.0);
  SimulationConfig cfg;
  std::vector<ForceSet> seq(10, ForceSet::zeros(1));
  const auto states = simulate_trajectory(s0, seq, ContactSet{{Vector3::Zero()}}, unit_body(), cfg);
  for (int t = 0; t <= 10; ++t) {
    const double time = t / 30.0;
    const Vector3 want = s0.position + s0.linear_velocity * time + 0.5 * cfg.gravity * time * time;
    EXPECT_LT((states[t].position - want).norm(), 1e-4) << "frame " << t;
    EXPECT_LT((states[t].position - want).norm(), 1e-12) << "frame " << t;
  }
}

TEST(Trajectory, MatchesSequentialSteps) {
  Rng rng(3);
  const ObjectModel body = asymmetric_body();
  const ContactSet c{{Vector3(0.05, 0, 0), Vector3(0, 0.05, 0.02), Vector3(-0.03, -0.03, 0)}};
  std::vector<ForceSet> seq;
  for (int t = 0; t < 10; ++t) {
    ForceSet f;
    for (int i = 0; i < 3; ++i) f.forces.push_back(random_vector(rng, -5, 5));
    seq.push_back(f);
  }
  const RigidBodyState s0 = tumbling_state();
  const auto states = simulate_trajectory(s0, seq, c, body, SimulationConfig{});

  // The wrench is held per frame, so composition holds at frame granularity.
  RigidBodyState s = s0;
  for (int t = 0; t < 10; ++t) {
    s = step(s, seq[t], c, body, SimulationConfig{});
    EXPECT_TRUE(bitwise_equal(s, states[t + 1])) << "frame " << t;
  }
}

TEST(Trajectory, ErrorNamesFrame) {
  std::vector<ForceSet> seq(3, ForceSet::zeros(1));
  seq[2].forces[0].x() = std::numeric_limits<double>::quiet_NaN();
  try {
    simulate_trajectory(RigidBodyState{}, seq, ContactSet{{Vector3::Zero()}}, unit_body(), SimulationConfig{});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "non_finite_state");
    EXPECT_NE(e.message().find("frame 2"), std::string::npos);
  }
}

TEST(PhysicsProperties, StepIsBitwiseDeterministic) {
  const ObjectModel body = asymmetric_body();
  const ContactSet c{{Vector3(0.05, 0.01, 0), Vector3(-0.02, 0.04, 0.01)}};
  const ForceSet f{{Vector3(1, 2, 3), Vector3(-3, 0.5, 1)}};
  const RigidBodyState a = step(tumbling_state(), f, c, body, SimulationConfig{});
  for (int i = 0; i < 5; ++i) {
    EXPECT_TRUE(bitwise_equal(a, step(tumbling_state(), f, c, body, SimulationConfig{})));
  }
}

TEST(PhysicsProperties, ConservationOverThreeHundredSubsteps) {
  const ObjectModel body = asymmetric_body();
  const RigidBodyState s0 = tumbling_state();
  std::vector<ForceSet> seq(30, ForceSet::zeros(1));
  const auto states = simulate_trajectory(s0, seq, ContactSet{{Vector3::Zero()}}, body, zero_g());
  auto angular_momentum = [&](const RigidBodyState& s) {
    const Matrix3 r = s.rotation();
    return Vector3(r * body.inertia_body * r.transpose() * s.angular_velocity);
  };
  const Vector3 p0 = body.mass * s0.linear_velocity;
  const Vector3 l0 = angular_momentum(s0);
  double max_lin = 0, max_ang = 0;
  for (const auto& s : states) {
    max_lin = std::max(max_lin, (body.mass * s.linear_velocity - p0).norm() / p0.norm());
    max_ang = std::max(max_ang, (angular_momentum(s) - l0).norm() / l0.norm());
  }
  EXPECT_LT(max_lin, 1e-9);
  EXPECT_LT(max_ang, 1e-6);
  // The body really tumbles.
  EXPECT_GT(quaternion_distance(states.front().orientation, states.back().orientation), 0.5);
}

TEST(PhysicsProperties, QuaternionNormAfterEveryCall) {
  Rng rng(9);
  const ObjectModel body = asymmetric_body();
  const ContactSet c{{Vector3(0.08, 0, 0.02)}};
  RigidBodyState s = tumbling_state();
  for (int t = 0; t < 200; ++t) {
    s = step(s, ForceSet{{random_vector(rng, -20, 20)}}, c, body, SimulationConfig{});
    ASSERT_NEAR(s.orientation.norm(), 1.0, 1e-9) << "call " << t;
  }
}

TEST(PhysicsProperties, CoincidentContactsSplitForceLinearly) {
  const ObjectModel body = asymmetric_body();
  const Vector3 point(0.04, -0.02, 0.07);
  const Vector3 f(2.0, -1.0, 6.0);
  const RigidBodyState one = step(tumbling_state(), ForceSet{{f}}, ContactSet{{point}}, body, SimulationConfig{});
  for (int k : {2, 3, 5}) {
    ContactSet c{std::vector<Vector3>(k, point)};
    ForceSet fs{std::vector<Vector3>(k, f / k)};
    const RigidBodyState many = step(tumbling_state(), fs, c, body, SimulationConfig{});
    EXPECT_LT((many.flatten() - one.flatten()).cwiseAbs().maxCoeff(), 1e-12) << "k=" << k;
  }
}

TEST(PhysicsProperties, FrameRateRefinementIsFirstOrder) {
  const ObjectModel body = asymmetric_body();
  const ContactSet c{{Vector3(0.06, 0.0, 0.02), Vector3(-0.03, 0.05, 0.0)}};
  auto force_at = [](double t) {
    return ForceSet{{Vector3(std::sin(7 * t), 2 * std::cos(5 * t), 6 + std::sin(3 * t)),
                     Vector3(-std::cos(4 * t), std::sin(6 * t), 1.0)}};
  };
  // Forces are sampled at frame midpoints so the hold itself adds no first-order bias.
  auto final_position = [&](int frames) {
    SimulationConfig cfg;
    cfg.frame_dt = (1.0 / 3.0) / frames;
    std::vector<ForceSet> seq;
    for (int i = 0; i < frames; ++i) seq.push_back(force_at((i + 0.5) * cfg.frame_dt));
    return simulate_trajectory(tumbling_state(), seq, c, body, cfg).back().position;
  };
  const Vector3 p10 = final_position(10);
  const Vector3 p20 = final_position(20);
  const Vector3 p40 = final_position(40);
  const double e1 = (p10 - p20).norm();
  const double e2 = (p20 - p40).norm();
  ASSERT_GT(e2, 0.0);
  const double order = std::log2(e1 / e2);
  EXPECT_GE(order, 1.0) << "e1=" << e1 << " e2=" << e2;
  EXPECT_LT(order, 2.5);
}
