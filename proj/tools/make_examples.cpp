// Regenerates data/objects and data/scenarios. Usage: make_examples <data dir>
#include <cstdio>
#include <filesystem>
#include <string>

#include "forcesolve/scenario.hpp"
#include "forcesolve/synthetic.hpp"

using namespace forcesolve;

namespace {

// Camera one metre from the world origin along -y, looking along +y.
Camera front_camera() {
  Camera cam;
  cam.fx = cam.fy = 1400.0;
  Matrix3 r;
  r << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  cam.extrinsic.rotation = Quaternion(r);
  cam.extrinsic.translation = Vector3(0, 0, 1);
  return cam;
}

FrameObservation observe(int t, const RigidBodyState& s, const ObjectModel& m, const ContactSet& c,
                         const Camera& cam) {
  FrameObservation obs;
  obs.t = t;
  const Pose pose = pose_of(s);
  for (const Pixel& p : project_points(m.keypoint_positions(), pose, cam)) obs.keypoints.emplace_back(p);
  for (const Pixel& p : project_points(c.points, pose, cam)) obs.contacts.emplace_back(p);
  return obs;
}

Scenario rollout(std::string name, ObjectModel m, SimulationConfig sim, RigidBodyState s0, ContactSet c,
                 std::vector<ForceSet> forces) {
  Scenario s;
  s.name = std::move(name);
  s.object = std::move(m);
  s.camera = front_camera();
  s.sim = sim;
  s.initial_state = s0;
  const std::vector<RigidBodyState> states = simulate_trajectory(s0, forces, c, s.object, sim);
  s.initial_observation = observe(0, states[0], s.object, c, s.camera);
  for (std::size_t t = 1; t < states.size(); ++t) {
    s.observations.push_back(observe(static_cast<int>(t), states[t], s.object, c, s.camera));
  }
  GroundTruth gt;
  gt.force_seq = std::move(forces);
  gt.contacts = c;
  for (const RigidBodyState& st : states) gt.poses.push_back(pose_of(st));
  s.ground_truth = gt;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_examples <data dir>\n");
    return 2;
  }
  const std::filesystem::path root = argv[1];
  for (const ObjectModel& m : bundled_objects()) {
    write_file(root / "objects" / (m.name + ".json"), io::to_json(m).dump(2) + "\n");
  }

  // Point mass: one keypoint and one contact at the centre of mass, so the
  // keypoint track depends on the linear channel only.
  ObjectModel point;
  point.name = "point_mass";
  point.mass = 0.5;
  point.inertia_body = Matrix3::Identity() * 1e-3;
  point.keypoints = {{"center", Vector3::Zero()}};
  ContactSet centre{{Vector3::Zero()}};
  std::vector<ForceSet> lift;
  for (int t = 0; t < 10; ++t) lift.push_back(ForceSet{{Vector3(0.2, 0.0, 5.2 - 0.05 * t)}});
  save_scenario(root / "scenarios" / "point_mass.json",
                rollout("point_mass", point, SimulationConfig{}, RigidBodyState{}, centre, lift));

  // Free body at rest without gravity; one idle contact.
  ObjectModel tetra;
  tetra.name = "tetrahedron";
  tetra.mass = 0.3;
  tetra.inertia_body = Matrix3::Identity() * 5e-4;
  tetra.keypoints = {{"a", Vector3(0.05, 0.05, 0.05)},
                     {"b", Vector3(-0.05, -0.05, 0.05)},
                     {"c", Vector3(-0.05, 0.05, -0.05)},
                     {"d", Vector3(0.05, -0.05, -0.05)}};
  SimulationConfig weightless;
  weightless.gravity = Vector3::Zero();
  save_scenario(root / "scenarios" / "zero_gravity_rest.json",
                rollout("zero_gravity_rest", tetra, weightless, RigidBodyState{},
                        ContactSet{{Vector3(0.05, 0.05, 0.05)}}, std::vector<ForceSet>(10, ForceSet::zeros(1))));

  struct Synth {
    const char* file;
    std::uint64_t seed;
    ForceProfile profile;
    double noise;
    double occlusion;
    const char* object;
  };
  const Synth synth[] = {
      {"smooth_random_seed7.json", 7, ForceProfile::kSmoothRandom, 0.0, 0.0, nullptr},
      {"hover_drill_seed3.json", 3, ForceProfile::kHover, 0.0, 0.0, "drill"},
      {"constant_mustard_seed5.json", 5, ForceProfile::kConstant, 0.0, 0.0, "mustard_bottle"},
      {"noisy_occluded_pitcher_seed11.json", 11, ForceProfile::kSmoothRandom, 1.0, 0.2, "pitcher"},
  };
  for (const Synth& s : synth) {
    SyntheticSpec spec;
    spec.force_profile = s.profile;
    spec.noise_px = s.noise;
    spec.occlusion_rate = s.occlusion;
    if (s.object) spec.object = bundled_object(s.object);
    save_scenario(root / "scenarios" / s.file, gen_synthetic(s.seed, spec));
  }
  return 0;
}
