#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forcesolve/force_optimizer.hpp"
#include "forcesolve/metrics.hpp"
#include "forcesolve/physics.hpp"
#include "forcesolve/projection.hpp"

namespace forcesolve {

inline constexpr const char* kScenarioSchema = "forcesolve.scenario/1";
inline constexpr const char* kResultsSchema = "forcesolve.results/1";

using Json = nlohmann::ordered_json;

// Planted values for synthetic scenarios. poses has n + 1 entries (frame 0 first).
struct GroundTruth {
  std::vector<ForceSet> force_seq;
  ContactSet contacts;
  std::vector<Pose> poses;
  double noise_px = 0.0;
};

struct Scenario {
  std::string name;
  ObjectModel object;
  Camera camera;
  SimulationConfig sim;
  RigidBodyState initial_state;
  std::optional<FrameObservation> initial_observation;  // frame 0
  std::vector<FrameObservation> observations;           // frames 1..n
  std::optional<ContactSet> contacts;                   // annotated contact points, if known
  std::optional<GroundTruth> ground_truth;

  std::size_t frame_count() const { return observations.size(); }
  ForceProblem force_problem() const;
  // Frames 0..n when an initial observation exists, else 1..n.
  std::vector<FrameObservation> all_frames() const;
};

struct LoadOptions {
  bool strict = true;                     // unknown fields are errors, not warnings
  bool check_ground_truth = true;
  std::vector<std::string>* warnings = nullptr;
};

// Structural validation: counts, image bounds, object and camera invariants.
// Errors name the offending field path.
void validate_scenario(const Scenario& scenario);

// Re-simulates the ground truth; throws "inconsistent_ground_truth" if the poses
// differ by more than 1e-9, or, for noiseless scenarios, if any visible
// observation differs from its reprojection by more than 1e-6 px.
void check_ground_truth(const Scenario& scenario);

Scenario scenario_from_json(const Json& json, const LoadOptions& opts = {});
Json scenario_to_json(const Scenario& scenario);

Scenario load_scenario(const std::filesystem::path& path, const LoadOptions& opts = {});
void save_scenario(const std::filesystem::path& path, const Scenario& scenario);

// A results file: what ran, how it was configured, what it produced. No
// timestamps, so identical runs give identical bytes.
struct ResultsFile {
  std::string command;
  std::string tool_version;
  std::uint64_t seed = 0;
  Json config = Json::object();
  Json outputs = Json::object();
};

Json results_to_json(const ResultsFile& results);
ResultsFile results_from_json(const Json& json);
void save_results(const std::filesystem::path& path, const ResultsFile& results);
ResultsFile load_results(const std::filesystem::path& path);

std::string tool_version();

// Hash of a file's bytes, recorded in configuration echoes.
std::string fnv1a64_hex(const std::string& bytes);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

namespace io {

Json to_json(const Vector3& v);
Json to_json(const Quaternion& q);
Json to_json(const Pose& pose);
Json to_json(const RigidBodyState& state);
Json to_json(const ForceSet& forces);
Json to_json(const ContactSet& contacts);
Json to_json(const ObjectModel& model);
Json to_json(const SimulationConfig& cfg);
Json to_json(const FDConfig& fd);
Json to_json(const OptimizerOptions& opts);
Json to_json(const EvalReport& report);
Json to_json(const FrameObservation& obs);

Vector3 vector3_from_json(const Json& json, const std::string& path);
Pose pose_from_json(const Json& json, const std::string& path, const LoadOptions& opts = {});
RigidBodyState state_from_json(const Json& json, const std::string& path, const LoadOptions& opts = {});
ForceSet forces_from_json(const Json& json, const std::string& path);
ContactSet contacts_from_json(const Json& json, const std::string& path);
ObjectModel object_from_json(const Json& json, const std::string& path, const LoadOptions& opts = {});

}  // namespace io

}  // namespace forcesolve
