#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "forcesolve/physics.hpp"
#include "forcesolve/scenario.hpp"

namespace forcesolve {

// Portable draws on top of std::mt19937_64, whose output sequence is fixed by
// the standard (the std distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

enum class ForceProfile { kZero, kConstant, kSmoothRandom, kHover };

std::optional<ForceProfile> parse_force_profile(const std::string& name);
std::string force_profile_name(ForceProfile profile);

struct SyntheticSpec {
  int n_frames = 10;
  int k = 5;
  ForceProfile force_profile = ForceProfile::kSmoothRandom;
  double noise_px = 0.0;
  double occlusion_rate = 0.0;
  double force_amplitude = 5.0;           // per-component bound on planted forces, N
  std::optional<ObjectModel> object;      // random box-sampled object when absent
  int substeps_per_frame = 10;
  int max_retries = 100;

  void validate() const;
};

// Samples object, camera, contacts and forces; simulates; projects keypoints and
// contacts; applies occlusion and pixel noise; embeds the ground truth. The
// output is fully determined by (seed, spec).
Scenario gen_synthetic(std::uint64_t seed, const SyntheticSpec& spec = {});

// Random object: `count` non-coplanar keypoints in a 0.2 m box, mass 0.5 kg,
// box inertia.
ObjectModel random_object(Rng& rng, int count = 10);

// Eight named example objects with plausible (not measured) mass, box
// dimensions and ten keypoints each.
const std::vector<ObjectModel>& bundled_objects();
std::optional<ObjectModel> bundled_object(const std::string& name);

// Per-contact forces realizing a net wrench with the smallest total norm.
ForceSet forces_for_wrench(const Wrench& wrench, const ContactSet& contacts, const Quaternion& orientation);

}  // namespace forcesolve
