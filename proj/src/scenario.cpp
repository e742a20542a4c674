#include "forcesolve/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "forcesolve/error.hpp"

#ifndef FORCESOLVE_VERSION
#define FORCESOLVE_VERSION "0.0.0"
#endif

namespace forcesolve {

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error("schema_error", path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

// Object accessor that remembers which keys were read so leftovers can be
// rejected (strict) or reported (lenient).
class ObjectReader {
 public:
  ObjectReader(const Json& json, std::string path, const LoadOptions& opts)
      : json_(json), path_(std::move(path)), opts_(opts) {
    if (!json_.is_object()) schema_error(path_.empty() ? "<root>" : path_, "expected an object");
  }

  const Json& required(const std::string& key) {
    seen_.insert(key);
    auto it = json_.find(key);
    if (it == json_.end()) schema_error(join(path_, key), "missing required field");
    return *it;
  }

  const Json* optional(const std::string& key) {
    seen_.insert(key);
    auto it = json_.find(key);
    if (it == json_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string child(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = json_.begin(); it != json_.end(); ++it) {
      if (seen_.count(it.key())) continue;
      const std::string field = join(path_, it.key());
      if (opts_.strict) schema_error(field, "unknown field");
      if (opts_.warnings) opts_.warnings->push_back("ignored unknown field " + field);
    }
  }

 private:
  const Json& json_;
  std::string path_;
  const LoadOptions& opts_;
  std::set<std::string> seen_;
};

double number(const Json& json, const std::string& path) {
  if (!json.is_number()) schema_error(path, "expected a number");
  const double v = json.get<double>();
  if (!std::isfinite(v)) schema_error(path, "expected a finite number");
  return v;
}

int integer(const Json& json, const std::string& path) {
  if (!json.is_number_integer()) schema_error(path, "expected an integer");
  return json.get<int>();
}

std::string string(const Json& json, const std::string& path) {
  if (!json.is_string()) schema_error(path, "expected a string");
  return json.get<std::string>();
}

const Json& array(const Json& json, const std::string& path, std::optional<std::size_t> size = {}) {
  if (!json.is_array()) schema_error(path, "expected an array");
  if (size && json.size() != *size) {
    schema_error(path, "expected " + std::to_string(*size) + " elements, found " + std::to_string(json.size()));
  }
  return json;
}

Quaternion quaternion_from_json(const Json& json, const std::string& path) {
  array(json, path, 4);
  const Quaternion q(number(json[0], index(path, 0)), number(json[1], index(path, 1)),
                     number(json[2], index(path, 2)), number(json[3], index(path, 3)));
  if (std::abs(q.norm() - 1.0) > 1e-6) schema_error(path, "quaternion must have unit norm");
  return q;
}

std::optional<Pixel> pixel_from_json(const Json& json, const std::string& path) {
  if (json.is_null()) return std::nullopt;
  array(json, path, 2);
  return Pixel(number(json[0], index(path, 0)), number(json[1], index(path, 1)));
}

Json pixel_to_json(const std::optional<Pixel>& p) {
  if (!p) return nullptr;
  return Json::array({p->x(), p->y()});
}

FrameObservation observation_from_json(const Json& json, const std::string& path, const LoadOptions& opts) {
  ObjectReader r(json, path, opts);
  FrameObservation obs;
  obs.t = integer(r.required("t"), r.child("t"));
  const std::string kp_path = r.child("keypoints");
  const Json& kps = array(r.required("keypoints"), kp_path);
  for (std::size_t i = 0; i < kps.size(); ++i) obs.keypoints.push_back(pixel_from_json(kps[i], index(kp_path, i)));
  if (const Json* cs = r.optional("contacts")) {
    const std::string c_path = r.child("contacts");
    array(*cs, c_path);
    for (std::size_t i = 0; i < cs->size(); ++i) obs.contacts.push_back(pixel_from_json((*cs)[i], index(c_path, i)));
  }
  r.finish();
  return obs;
}

Camera camera_from_json(const Json& json, const std::string& path, const LoadOptions& opts) {
  ObjectReader r(json, path, opts);
  Camera cam;
  cam.fx = number(r.required("fx"), r.child("fx"));
  cam.fy = number(r.required("fy"), r.child("fy"));
  cam.cx = number(r.required("cx"), r.child("cx"));
  cam.cy = number(r.required("cy"), r.child("cy"));
  if (const Json* w = r.optional("image_width")) cam.image_width = integer(*w, r.child("image_width"));
  if (const Json* h = r.optional("image_height")) cam.image_height = integer(*h, r.child("image_height"));
  if (const Json* e = r.optional("extrinsic")) cam.extrinsic = io::pose_from_json(*e, r.child("extrinsic"), opts);
  r.finish();
  return cam;
}

SimulationConfig sim_from_json(const Json& json, const std::string& path, const LoadOptions& opts) {
  ObjectReader r(json, path, opts);
  SimulationConfig cfg;
  cfg.gravity = io::vector3_from_json(r.required("gravity"), r.child("gravity"));
  cfg.frame_dt = number(r.required("frame_dt"), r.child("frame_dt"));
  cfg.substeps_per_frame = integer(r.required("substeps_per_frame"), r.child("substeps_per_frame"));
  if (const Json* s = r.optional("linear_scheme")) {
    const std::string name = string(*s, r.child("linear_scheme"));
    if (name == "exact_constant_acceleration") {
      cfg.linear_scheme = LinearScheme::kExactConstantAcceleration;
    } else if (name == "semi_implicit_euler") {
      cfg.linear_scheme = LinearScheme::kSemiImplicitEuler;
    } else {
      schema_error(r.child("linear_scheme"), "unknown scheme '" + name + "'");
    }
  }
  if (const Json* c = r.optional("contact_radius")) cfg.contact_radius = number(*c, r.child("contact_radius"));
  r.finish();
  return cfg;
}

GroundTruth ground_truth_from_json(const Json& json, const std::string& path, const LoadOptions& opts) {
  ObjectReader r(json, path, opts);
  GroundTruth gt;
  const std::string f_path = r.child("forces");
  const Json& forces = array(r.required("forces"), f_path);
  for (std::size_t t = 0; t < forces.size(); ++t) gt.force_seq.push_back(io::forces_from_json(forces[t], index(f_path, t)));
  gt.contacts = io::contacts_from_json(r.required("contacts"), r.child("contacts"));
  const std::string p_path = r.child("poses");
  const Json& poses = array(r.required("poses"), p_path);
  for (std::size_t t = 0; t < poses.size(); ++t) gt.poses.push_back(io::pose_from_json(poses[t], index(p_path, t), opts));
  if (const Json* noise = r.optional("noise_px")) gt.noise_px = number(*noise, r.child("noise_px"));
  r.finish();
  return gt;
}

std::string linear_scheme_name(LinearScheme s) {
  return s == LinearScheme::kSemiImplicitEuler ? "semi_implicit_euler" : "exact_constant_acceleration";
}

void validate_frame(const FrameObservation& obs, const Scenario& s, const std::string& path) {
  if (obs.keypoints.size() != s.object.keypoints.size()) {
    schema_error(join(path, "keypoints"), "expected " + std::to_string(s.object.keypoints.size()) +
                                              " keypoints, found " + std::to_string(obs.keypoints.size()));
  }
  for (std::size_t i = 0; i < obs.keypoints.size(); ++i) {
    if (obs.keypoints[i] && !s.camera.in_image(*obs.keypoints[i])) {
      schema_error(index(join(path, "keypoints"), i), "pixel outside the image");
    }
  }
  for (std::size_t i = 0; i < obs.contacts.size(); ++i) {
    if (obs.contacts[i] && !s.camera.in_image(*obs.contacts[i])) {
      schema_error(index(join(path, "contacts"), i), "pixel outside the image");
    }
  }
}

}  // namespace

// --- io -------------------------------------------------------------------

namespace io {

Json to_json(const Vector3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json to_json(const Quaternion& q) { return Json::array({q.w(), q.x(), q.y(), q.z()}); }

Json to_json(const Pose& pose) {
  return Json{{"rotation", to_json(pose.rotation)}, {"translation", to_json(pose.translation)}};
}

Json to_json(const RigidBodyState& s) {
  return Json{{"position", to_json(s.position)},
              {"orientation", to_json(s.orientation)},
              {"linear_velocity", to_json(s.linear_velocity)},
              {"angular_velocity", to_json(s.angular_velocity)}};
}

Json to_json(const ForceSet& forces) {
  Json out = Json::array();
  for (const Vector3& f : forces.forces) out.push_back(to_json(f));
  return out;
}

Json to_json(const ContactSet& contacts) {
  Json out = Json::array();
  for (const Vector3& c : contacts.points) out.push_back(to_json(c));
  return out;
}

Json to_json(const ObjectModel& m) {
  Json inertia = Json::array();
  for (int r = 0; r < 3; ++r) inertia.push_back(Json::array({m.inertia_body(r, 0), m.inertia_body(r, 1), m.inertia_body(r, 2)}));
  Json kps = Json::array();
  for (const Keypoint& kp : m.keypoints) kps.push_back(Json{{"name", kp.name}, {"position", to_json(kp.position)}});
  return Json{{"name", m.name}, {"mass", m.mass}, {"inertia", inertia}, {"keypoints", kps}};
}

Json to_json(const SimulationConfig& cfg) {
  return Json{{"gravity", to_json(cfg.gravity)},
              {"frame_dt", cfg.frame_dt},
              {"substeps_per_frame", cfg.substeps_per_frame},
              {"linear_scheme", linear_scheme_name(cfg.linear_scheme)},
              {"contact_radius", cfg.contact_radius}};
}

Json to_json(const FDConfig& fd) {
  return Json{{"scheme", fd.scheme == FdScheme::kCentral ? "central" : "forward"},
              {"h_state", fd.h_state},
              {"h_force", fd.h_force},
              {"h_contact", fd.h_contact}};
}

Json to_json(const OptimizerOptions& o) {
  return Json{{"max_iterations", o.max_iterations},   {"initial_rate", o.initial_rate},
              {"rate_decay", o.rate_decay},           {"beta1", o.beta1},
              {"beta2", o.beta2},                     {"epsilon", o.epsilon},
              {"convergence_tol", o.convergence_tol}, {"convergence_window", o.convergence_window},
              {"absolute_tol", o.absolute_tol},       {"force_bound", o.force_bound},
              {"gradient_clip", o.gradient_clip},     {"displacement_phase", o.displacement_phase},
              {"displacement_rate", o.displacement_rate}, {"seed", o.seed},
              {"refine_contacts", o.refine_contacts}, {"contact_rate", o.contact_rate},
              {"contact_radius", o.contact_radius}};
}

Json to_json(const EvalReport& report) {
  Json frames = Json::array();
  for (const FrameMetrics& m : report.per_frame) {
    frames.push_back(Json{{"kp_error_px", m.kp_error_px},
                          {"visible_keypoints", m.visible_keypoints},
                          {"rotation_error_rad", m.rotation_error_rad},
                          {"translation_error_m", m.translation_error_m}});
  }
  Json out{{"kp_error_px", report.kp_error_px},
           {"kp_error_convention", "mean over visible keypoints, then over frames"},
           {"rotation_error_rad", report.rotation_error_rad},
           {"translation_error_m", report.translation_error_m},
           {"cp_error_m", report.cp_error_m ? Json(*report.cp_error_m) : Json(nullptr)},
           {"per_finger_cp_error_m", report.per_finger_cp_error_m},
           {"per_frame", frames}};
  return out;
}

Json to_json(const FrameObservation& obs) {
  Json kps = Json::array();
  for (const auto& p : obs.keypoints) kps.push_back(pixel_to_json(p));
  Json cs = Json::array();
  for (const auto& p : obs.contacts) cs.push_back(pixel_to_json(p));
  return Json{{"t", obs.t}, {"keypoints", kps}, {"contacts", cs}};
}

Vector3 vector3_from_json(const Json& json, const std::string& path) {
  array(json, path, 3);
  return Vector3(number(json[0], index(path, 0)), number(json[1], index(path, 1)), number(json[2], index(path, 2)));
}

Pose pose_from_json(const Json& json, const std::string& path, const LoadOptions& opts) {
  ObjectReader r(json, path, opts);
  Pose p;
  p.rotation = quaternion_from_json(r.required("rotation"), r.child("rotation"));
  p.translation = vector3_from_json(r.required("translation"), r.child("translation"));
  r.finish();
  return p;
}

RigidBodyState state_from_json(const Json& json, const std::string& path, const LoadOptions& opts) {
  ObjectReader r(json, path, opts);
  RigidBodyState s;
  s.position = vector3_from_json(r.required("position"), r.child("position"));
  s.orientation = quaternion_from_json(r.required("orientation"), r.child("orientation"));
  s.linear_velocity = vector3_from_json(r.required("linear_velocity"), r.child("linear_velocity"));
  s.angular_velocity = vector3_from_json(r.required("angular_velocity"), r.child("angular_velocity"));
  r.finish();
  return s;
}

ForceSet forces_from_json(const Json& json, const std::string& path) {
  array(json, path);
  ForceSet f;
  for (std::size_t i = 0; i < json.size(); ++i) f.forces.push_back(vector3_from_json(json[i], index(path, i)));
  return f;
}

ContactSet contacts_from_json(const Json& json, const std::string& path) {
  array(json, path);
  ContactSet c;
  for (std::size_t i = 0; i < json.size(); ++i) c.points.push_back(vector3_from_json(json[i], index(path, i)));
  return c;
}

ObjectModel object_from_json(const Json& json, const std::string& path, const LoadOptions& opts) {
  ObjectReader r(json, path, opts);
  ObjectModel m;
  if (const Json* name = r.optional("name")) m.name = string(*name, r.child("name"));
  m.mass = number(r.required("mass"), r.child("mass"));
  const std::string i_path = r.child("inertia");
  const Json& inertia = array(r.required("inertia"), i_path, 3);
  for (int row = 0; row < 3; ++row) {
    const std::string row_path = index(i_path, row);
    array(inertia[row], row_path, 3);
    for (int col = 0; col < 3; ++col) m.inertia_body(row, col) = number(inertia[row][col], index(row_path, col));
  }
  const std::string k_path = r.child("keypoints");
  const Json& kps = array(r.required("keypoints"), k_path);
  for (std::size_t i = 0; i < kps.size(); ++i) {
    ObjectReader kr(kps[i], index(k_path, i), opts);
    Keypoint kp;
    kp.name = string(kr.required("name"), kr.child("name"));
    kp.position = vector3_from_json(kr.required("position"), kr.child("position"));
    kr.finish();
    m.keypoints.push_back(kp);
  }
  r.finish();
  if (!(m.mass > 0.0)) schema_error(r.child("mass"), "mass must be positive");
  try {
    m.validate();
  } catch (const Error& e) {
    schema_error(path, e.message());
  }
  return m;
}

}  // namespace io

// --- scenario ---------------------------------------------------------------

ForceProblem Scenario::force_problem() const {
  return ForceProblem{initial_state, object, camera, sim, observations};
}

std::vector<FrameObservation> Scenario::all_frames() const {
  std::vector<FrameObservation> out;
  if (initial_observation) out.push_back(*initial_observation);
  out.insert(out.end(), observations.begin(), observations.end());
  return out;
}

void validate_scenario(const Scenario& s) {
  try {
    s.object.validate();
  } catch (const Error& e) {
    schema_error("object", e.message());
  }
  try {
    s.camera.validate();
  } catch (const Error& e) {
    schema_error("camera", e.message());
  }
  try {
    s.sim.validate();
  } catch (const Error& e) {
    schema_error("sim", e.message());
  }
  if (!s.initial_state.is_finite() || std::abs(s.initial_state.orientation.norm() - 1.0) > 1e-6) {
    schema_error("initial_state", "state must be finite with a unit quaternion");
  }
  if (s.observations.empty()) schema_error("observations", "at least one frame is required");
  if (s.initial_observation) {
    if (s.initial_observation->t != 0) schema_error("initial_observation.t", "must be 0");
    validate_frame(*s.initial_observation, s, "initial_observation");
  }
  for (std::size_t t = 0; t < s.observations.size(); ++t) {
    const std::string path = index("observations", t);
    if (s.observations[t].t != static_cast<int>(t + 1)) {
      schema_error(join(path, "t"), "expected frame index " + std::to_string(t + 1));
    }
    validate_frame(s.observations[t], s, path);
  }
  if (s.contacts) {
    try {
      s.contacts->validate(s.sim.contact_radius);
    } catch (const Error& e) {
      schema_error("contacts", e.message());
    }
  }
  if (s.ground_truth) {
    const GroundTruth& gt = *s.ground_truth;
    if (gt.force_seq.size() != s.observations.size()) {
      schema_error("ground_truth.forces", "expected one force set per observed frame");
    }
    if (gt.poses.size() != s.observations.size() + 1) {
      schema_error("ground_truth.poses", "expected frame_count + 1 poses");
    }
    for (std::size_t t = 0; t < gt.force_seq.size(); ++t) {
      if (gt.force_seq[t].size() != gt.contacts.size()) {
        schema_error(index("ground_truth.forces", t), "force count differs from contact count");
      }
      try {
        gt.force_seq[t].validate();
      } catch (const Error& e) {
        schema_error(index("ground_truth.forces", t), e.message());
      }
    }
    try {
      gt.contacts.validate(s.sim.contact_radius);
    } catch (const Error& e) {
      schema_error("ground_truth.contacts", e.message());
    }
  }
}

void check_ground_truth(const Scenario& s) {
  if (!s.ground_truth) return;
  const GroundTruth& gt = *s.ground_truth;
  const std::vector<RigidBodyState> states =
      simulate_trajectory(s.initial_state, gt.force_seq, gt.contacts, s.object, s.sim);
  for (std::size_t t = 0; t < states.size(); ++t) {
    const Pose& ref = gt.poses[t];
    const double dp = (states[t].position - ref.translation).norm();
    const double dq = std::min((states[t].orientation.coeffs() - ref.rotation.coeffs()).norm(),
                               (states[t].orientation.coeffs() + ref.rotation.coeffs()).norm());
    if (dp > 1e-9 || dq > 1e-9) {
      throw Error("inconsistent_ground_truth", "re-simulated pose of frame " + std::to_string(t) +
                                                   " differs from ground_truth.poses");
    }
  }
  if (gt.noise_px != 0.0) return;
  const std::vector<Vector3> points = s.object.keypoint_positions();
  auto check_frame = [&](const FrameObservation& obs, const RigidBodyState& state) {
    const std::vector<Pixel> kp = project_points(points, pose_of(state), s.camera);
    for (std::size_t i = 0; i < obs.keypoints.size(); ++i) {
      if (obs.keypoints[i] && (kp[i] - *obs.keypoints[i]).norm() > 1e-6) {
        throw Error("inconsistent_ground_truth", "frame " + std::to_string(obs.t) + " keypoint " +
                                                     std::to_string(i) + " does not match re-simulation");
      }
    }
    if (obs.contacts.empty()) return;
    const std::vector<Pixel> cp = project_points(gt.contacts.points, pose_of(state), s.camera);
    for (std::size_t i = 0; i < obs.contacts.size() && i < cp.size(); ++i) {
      if (obs.contacts[i] && (cp[i] - *obs.contacts[i]).norm() > 1e-6) {
        throw Error("inconsistent_ground_truth", "frame " + std::to_string(obs.t) + " contact " +
                                                     std::to_string(i) + " does not match re-simulation");
      }
    }
  };
  if (s.initial_observation) check_frame(*s.initial_observation, states[0]);
  for (std::size_t t = 0; t < s.observations.size(); ++t) check_frame(s.observations[t], states[t + 1]);
}

Scenario scenario_from_json(const Json& json, const LoadOptions& opts) {
  ObjectReader r(json, "", opts);
  const std::string schema = string(r.required("schema"), "schema");
  if (schema != kScenarioSchema) {
    schema_error("schema", "unsupported schema '" + schema + "', expected '" + kScenarioSchema + "'");
  }
  Scenario s;
  if (const Json* name = r.optional("name")) s.name = string(*name, "name");
  s.object = io::object_from_json(r.required("object"), "object", opts);
  s.camera = camera_from_json(r.required("camera"), "camera", opts);
  s.sim = sim_from_json(r.required("sim"), "sim", opts);
  s.initial_state = io::state_from_json(r.required("initial_state"), "initial_state", opts);
  const int frame_count = integer(r.required("frame_count"), "frame_count");
  if (const Json* init = r.optional("initial_observation")) {
    s.initial_observation = observation_from_json(*init, "initial_observation", opts);
  }
  const Json& obs = array(r.required("observations"), "observations");
  for (std::size_t t = 0; t < obs.size(); ++t) s.observations.push_back(observation_from_json(obs[t], index("observations", t), opts));
  if (frame_count != static_cast<int>(s.observations.size())) {
    schema_error("frame_count", "declares " + std::to_string(frame_count) + " frames but " +
                                    std::to_string(s.observations.size()) + " observations are present");
  }
  if (const Json* c = r.optional("contacts")) s.contacts = io::contacts_from_json(*c, "contacts");
  if (const Json* gt = r.optional("ground_truth")) s.ground_truth = ground_truth_from_json(*gt, "ground_truth", opts);
  r.finish();

  validate_scenario(s);
  if (opts.check_ground_truth) check_ground_truth(s);
  return s;
}

Json scenario_to_json(const Scenario& s) {
  Json out;
  out["schema"] = kScenarioSchema;
  out["name"] = s.name;
  out["object"] = io::to_json(s.object);
  out["camera"] = Json{{"fx", s.camera.fx},
                       {"fy", s.camera.fy},
                       {"cx", s.camera.cx},
                       {"cy", s.camera.cy},
                       {"image_width", s.camera.image_width},
                       {"image_height", s.camera.image_height},
                       {"extrinsic", io::to_json(s.camera.extrinsic)}};
  out["sim"] = io::to_json(s.sim);
  out["initial_state"] = io::to_json(s.initial_state);
  out["frame_count"] = s.observations.size();
  if (s.initial_observation) out["initial_observation"] = io::to_json(*s.initial_observation);
  Json obs = Json::array();
  for (const FrameObservation& o : s.observations) obs.push_back(io::to_json(o));
  out["observations"] = obs;
  if (s.contacts) out["contacts"] = io::to_json(*s.contacts);
  if (s.ground_truth) {
    Json forces = Json::array();
    for (const ForceSet& f : s.ground_truth->force_seq) forces.push_back(io::to_json(f));
    Json poses = Json::array();
    for (const Pose& p : s.ground_truth->poses) poses.push_back(io::to_json(p));
    out["ground_truth"] = Json{{"forces", forces},
                               {"contacts", io::to_json(s.ground_truth->contacts)},
                               {"poses", poses},
                               {"noise_px", s.ground_truth->noise_px}};
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << contents;
  if (!out) throw Error("io_error", "failed writing " + path.string());
}

namespace {

Json parse(const std::string& text, const std::filesystem::path& path) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("parse_error", path.string() + ": " + e.what());
  }
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& path, const LoadOptions& opts) {
  return scenario_from_json(parse(read_file(path), path), opts);
}

void save_scenario(const std::filesystem::path& path, const Scenario& scenario) {
  write_file(path, scenario_to_json(scenario).dump(2) + "\n");
}

Json results_to_json(const ResultsFile& r) {
  return Json{{"schema", kResultsSchema},
              {"command", r.command},
              {"tool_version", r.tool_version},
              {"seed", r.seed},
              {"config", r.config},
              {"outputs", r.outputs}};
}

ResultsFile results_from_json(const Json& json) {
  const LoadOptions strict;
  ObjectReader r(json, "", strict);
  const std::string schema = string(r.required("schema"), "schema");
  if (schema != kResultsSchema) schema_error("schema", "unsupported schema '" + schema + "'");
  ResultsFile out;
  out.command = string(r.required("command"), "command");
  out.tool_version = string(r.required("tool_version"), "tool_version");
  const Json& seed = r.required("seed");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) schema_error("seed", "expected an integer");
  out.seed = seed.get<std::uint64_t>();
  out.config = r.required("config");
  out.outputs = r.required("outputs");
  r.finish();
  return out;
}

void save_results(const std::filesystem::path& path, const ResultsFile& results) {
  write_file(path, results_to_json(results).dump(2) + "\n");
}

ResultsFile load_results(const std::filesystem::path& path) {
  return results_from_json(parse(read_file(path), path));
}

std::string tool_version() { return FORCESOLVE_VERSION; }

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace forcesolve
