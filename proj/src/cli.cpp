#include "forcesolve/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "forcesolve/error.hpp"
#include "forcesolve/finite_diff.hpp"
#include "forcesolve/force_optimizer.hpp"
#include "forcesolve/geometry.hpp"
#include "forcesolve/metrics.hpp"
#include "forcesolve/scenario.hpp"
#include "forcesolve/synthetic.hpp"

namespace forcesolve {

namespace {

struct GlobalFlags {
  std::uint64_t seed = 0;
  std::string fd_scheme = "central";
  std::optional<double> h_force;
  std::optional<double> h_state;
  std::optional<double> h_contact;
  std::optional<int> substeps;
  std::optional<int> max_iters;
  std::optional<std::string> out;
  bool lenient = false;
};

struct Outcome {
  ResultsFile results;
  std::string summary;
  std::optional<Error> failure;  // results are still written
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

FDConfig fd_config(const GlobalFlags& g) {
  FDConfig fd;
  fd.scheme = g.fd_scheme == "forward" ? FdScheme::kForward : FdScheme::kCentral;
  if (g.h_force) fd.h_force = *g.h_force;
  if (g.h_state) fd.h_state = *g.h_state;
  if (g.h_contact) fd.h_contact = *g.h_contact;
  fd.validate();
  return fd;
}

struct LoadedScenario {
  Scenario scenario;
  Json echo;
};

LoadedScenario load_for_command(const std::string& path, const GlobalFlags& g, std::ostream& err) {
  std::vector<std::string> warnings;
  LoadOptions opts;
  opts.strict = !g.lenient;
  opts.warnings = &warnings;
  LoadedScenario out{load_scenario(path, opts), Json::object()};
  for (const std::string& w : warnings) err << Json{{"warning", w}}.dump() << "\n";
  if (g.substeps) {
    out.scenario.sim.substeps_per_frame = *g.substeps;
    out.scenario.sim.validate();
  }
  out.echo["scenario"] = path;
  out.echo["scenario_fnv1a64"] = fnv1a64_hex(read_file(path));
  out.echo["sim"] = io::to_json(out.scenario.sim);
  return out;
}

Json forces_json(const std::vector<ForceSet>& seq) {
  Json out = Json::array();
  for (const ForceSet& f : seq) out.push_back(io::to_json(f));
  return out;
}

Json states_json(const std::vector<RigidBodyState>& states) {
  Json out = Json::array();
  for (const RigidBodyState& s : states) out.push_back(io::to_json(s));
  return out;
}

std::vector<ForceSet> forces_from_results(const Json& outputs, const std::string& path) {
  if (!outputs.contains("force_seq") || !outputs["force_seq"].is_array()) {
    throw Error("schema_error", path + ".force_seq: missing or not an array");
  }
  std::vector<ForceSet> seq;
  const Json& arr = outputs["force_seq"];
  for (std::size_t t = 0; t < arr.size(); ++t) {
    seq.push_back(io::forces_from_json(arr[t], path + ".force_seq[" + std::to_string(t) + "]"));
  }
  return seq;
}

std::optional<ContactSet> known_contacts(const Scenario& s, std::string& source) {
  if (s.contacts) {
    source = "scenario";
    return s.contacts;
  }
  if (s.ground_truth) {
    source = "ground_truth";
    return s.ground_truth->contacts;
  }
  return std::nullopt;
}

struct PoseSolve {
  std::vector<PoseEstimate> estimates;  // aligned with frames
  std::vector<std::optional<Error>> failures;
};

PoseSolve solve_all_poses(const Scenario& s, const std::vector<FrameObservation>& frames) {
  const std::vector<Vector3> points = s.object.keypoint_positions();
  PoseSolve out;
  for (const FrameObservation& obs : frames) {
    try {
      out.estimates.push_back(solve_pnp(points, obs.keypoints, s.camera));
      out.failures.emplace_back();
    } catch (const Error& e) {
      out.estimates.emplace_back();
      out.failures.emplace_back(Error(e.code(), "frame " + std::to_string(obs.t) + ": " + e.message()));
    }
  }
  return out;
}

std::vector<std::vector<std::optional<Pixel>>> contact_tracks(const std::vector<FrameObservation>& frames) {
  std::vector<std::vector<std::optional<Pixel>>> tracks;
  for (const FrameObservation& obs : frames) tracks.push_back(obs.contacts);
  return tracks;
}

ContactSolveResult contacts_from_pnp(const Scenario& s) {
  const std::vector<FrameObservation> frames = s.all_frames();
  const PoseSolve poses = solve_all_poses(s, frames);
  for (const auto& f : poses.failures) {
    if (f) throw *f;
  }
  std::vector<Pose> pose_list;
  for (const PoseEstimate& e : poses.estimates) pose_list.push_back(e.pose);
  return solve_contact_points(contact_tracks(frames), pose_list, s.camera);
}

// ---------------------------------------------------------------- commands

Outcome run_simulate(const std::string& path, const std::optional<std::string>& forces_path,
                     const GlobalFlags& g, std::ostream& err) {
  LoadedScenario ls = load_for_command(path, g, err);
  const Scenario& s = ls.scenario;
  std::string contact_source = "none";
  ContactSet contacts = known_contacts(s, contact_source).value_or(ContactSet{});
  std::vector<ForceSet> forces;
  std::string force_source;
  if (forces_path) {
    const ResultsFile r = load_results(*forces_path);
    forces = forces_from_results(r.outputs, "outputs");
    if (r.outputs.contains("contacts")) {
      contacts = io::contacts_from_json(r.outputs["contacts"], "outputs.contacts");
      contact_source = "results";
    }
    force_source = "results";
    ls.echo["forces"] = *forces_path;
    ls.echo["forces_fnv1a64"] = fnv1a64_hex(read_file(*forces_path));
  } else if (s.ground_truth) {
    forces = s.ground_truth->force_seq;
    force_source = "ground_truth";
  } else {
    forces.assign(s.frame_count(), ForceSet::zeros(contacts.size()));
    force_source = "zero";
  }
  if (forces.size() != s.frame_count()) {
    throw Error("sequence_mismatch", std::to_string(forces.size()) + " force frames for " +
                                         std::to_string(s.frame_count()) + " observed frames");
  }

  const std::vector<RigidBodyState> states =
      simulate_trajectory(s.initial_state, forces, contacts, s.object, s.sim);
  const ForceProblem problem = s.force_problem();
  const std::vector<double> kp = per_frame_keypoint_error(states, problem);
  double loss = 0.0;
  for (std::size_t t = 0; t < s.frame_count(); ++t) {
    loss += keypoint_loss(s.observations[t], states[t + 1], s.object, s.camera);
  }

  Outcome o;
  o.results.command = "simulate";
  o.results.seed = g.seed;
  o.results.config = ls.echo;
  o.results.outputs = Json{{"force_source", force_source},
                           {"contact_source", contact_source},
                           {"force_seq", forces_json(forces)},
                           {"contacts", io::to_json(contacts)},
                           {"states", states_json(states)},
                           {"total_loss", loss},
                           {"per_frame_kp_error_px", kp}};
  o.summary = "frames=" + std::to_string(s.frame_count()) + " total_loss=" + fmt(loss);
  return o;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Json compare_json(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric, double h,
                  double& rel_out) {
  const double abs_err = max_abs(analytic - numeric);
  rel_out = abs_err / std::max(max_abs(numeric), 1e-12);
  return Json{{"max_abs_error", abs_err}, {"max_rel_error", rel_out}, {"fd_step", h},
              {"coordinates", analytic.size()}};
}

Outcome run_grad_check(const std::string& path, const GlobalFlags& g, std::ostream& err) {
  LoadedScenario ls = load_for_command(path, g, err);
  const Scenario& s = ls.scenario;
  const FDConfig fd = fd_config(g);
  std::string contact_source;
  const std::optional<ContactSet> maybe = known_contacts(s, contact_source);
  if (!maybe) throw Error("missing_contacts", "grad-check needs contacts in the scenario or its ground truth");
  const ContactSet& contacts = *maybe;
  const ForceProblem problem = s.force_problem();
  const std::size_t n = s.frame_count();
  const std::size_t k = contacts.size();

  // Evaluate away from the optimum: seeded forces uniform in [-1, 1] N.
  Rng rng(g.seed);
  std::vector<ForceSet> forces(n, ForceSet::zeros(k));
  for (ForceSet& f : forces) {
    for (Vector3& v : f.forces) v = Vector3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  }

  // Adjoint force gradient against central differences of total_loss.
  const double h_loss = 1e-4;
  const std::vector<ForceGradient> grads = loss_gradients(forces, contacts, problem, fd);
  Eigen::VectorXd analytic(static_cast<Eigen::Index>(3 * k * n)), numeric(analytic.size());
  Eigen::Index i = 0;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < k; ++c) {
      for (int a = 0; a < 3; ++a, ++i) {
        analytic(i) = grads[t][c][a];
        std::vector<ForceSet> plus = forces, minus = forces;
        plus[t].forces[c][a] += h_loss;
        minus[t].forces[c][a] -= h_loss;
        numeric(i) = (total_loss(plus, contacts, problem) - total_loss(minus, contacts, problem)) / (2 * h_loss);
      }
    }
  }
  double rel_adjoint = 0.0;
  const Json adjoint = compare_json(analytic, numeric, h_loss, rel_adjoint);

  // Closed-form single-frame loss gradient against central differences in the
  // state coordinates; quaternion probes are renormalized.
  const double h_state = 1e-6;
  const std::vector<RigidBodyState> states =
      simulate_trajectory(s.initial_state, forces, contacts, s.object, s.sim);
  Eigen::VectorXd sf_analytic(static_cast<Eigen::Index>(RigidBodyState::kDim * n)), sf_numeric(sf_analytic.size());
  for (std::size_t t = 0; t < n; ++t) {
    const RigidBodyState& st = states[t + 1];
    const RigidBodyState::Vector grad = loss_gradient_single_frame(s.observations[t], st, s.object, s.camera);
    const RigidBodyState::Vector x = st.flatten();
    for (int j = 0; j < RigidBodyState::kDim; ++j) {
      auto eval = [&](double delta) {
        RigidBodyState::Vector y = x;
        y(j) += delta;
        RigidBodyState p = RigidBodyState::unflatten(y);
        p.orientation.normalize();
        return keypoint_loss(s.observations[t], p, s.object, s.camera);
      };
      const Eigen::Index row = static_cast<Eigen::Index>(RigidBodyState::kDim * t) + j;
      sf_analytic(row) = grad(j);
      sf_numeric(row) = (eval(h_state) - eval(-h_state)) / (2 * h_state);
    }
  }
  double rel_single = 0.0;
  const Json single = compare_json(sf_analytic, sf_numeric, h_state, rel_single);
  const double worst = std::max(rel_adjoint, rel_single);

  ls.echo["fd"] = io::to_json(fd);
  ls.echo["evaluation_point"] = "uniform [-1, 1] N per force coordinate from --seed";
  Outcome o;
  o.results.command = "grad-check";
  o.results.seed = g.seed;
  o.results.config = ls.echo;
  o.results.outputs = Json{{"max_rel_error", worst},
                           {"adjoint_vs_total_loss_fd", adjoint},
                           {"single_frame_vs_fd", single},
                           {"contact_source", contact_source},
                           {"evaluation_forces", forces_json(forces)}};
  o.summary = "max_rel_error=" + fmt(worst) + " adjoint=" + fmt(rel_adjoint) + " single_frame=" + fmt(rel_single);
  return o;
}

Outcome run_infer_forces(const std::string& path, const GlobalFlags& g, bool refine_contacts,
                         std::ostream& err) {
  LoadedScenario ls = load_for_command(path, g, err);
  const Scenario& s = ls.scenario;
  const FDConfig fd = fd_config(g);

  std::string contact_source;
  std::optional<ContactSet> contacts = known_contacts(s, contact_source);
  Json contact_solve = nullptr;
  if (!contacts) {
    const ContactSolveResult solved = contacts_from_pnp(s);
    solved.throw_if_failed();
    contacts = solved.contacts;
    contact_source = "solved";
    contact_solve = Json{{"residual_px", solved.residual_px}};
  }

  OptimizerOptions opts;
  if (g.max_iters) opts.max_iterations = *g.max_iters;
  opts.seed = g.seed;
  opts.refine_contacts = refine_contacts;
  const InferenceResult r = infer_forces(s.force_problem(), *contacts, opts, fd);

  Json eval = nullptr;
  if (s.ground_truth) {
    std::vector<RigidBodyState> sim_frames;
    std::vector<Pose> ref;
    for (const FrameObservation& obs : s.observations) {
      sim_frames.push_back(r.simulated_states[static_cast<std::size_t>(obs.t)]);
      ref.push_back(s.ground_truth->poses[static_cast<std::size_t>(obs.t)]);
    }
    eval = io::to_json(evaluate(sim_frames, ref, s.observations, s.object, s.camera, r.contacts,
                                s.ground_truth->contacts));
  }
  double kp = 0.0;
  for (double e : r.per_frame_kp_error) kp += e;
  kp /= static_cast<double>(std::max<std::size_t>(1, r.per_frame_kp_error.size()));

  ls.echo["fd"] = io::to_json(fd);
  ls.echo["optimizer"] = io::to_json(opts);
  Outcome o;
  o.results.command = "infer-forces";
  o.results.seed = g.seed;
  o.results.config = ls.echo;
  o.results.outputs = Json{{"force_seq", forces_json(r.force_seq)},
                           {"contacts", io::to_json(r.contacts)},
                           {"contact_source", contact_source},
                           {"contact_solve", contact_solve},
                           {"simulated_states", states_json(r.simulated_states)},
                           {"loss_history", r.loss_history},
                           {"best_loss", r.best_loss},
                           {"best_iteration", r.best_iteration},
                           {"iterations", r.iterations},
                           {"converged", r.converged},
                           {"per_frame_kp_error_px", r.per_frame_kp_error},
                           {"kp_error_px", kp},
                           {"eval", eval}};
  o.summary = "loss=" + fmt(r.best_loss) + " kp_error_px=" + fmt(kp) + " iterations=" +
              std::to_string(r.iterations) + " converged=" + (r.converged ? "true" : "false");
  return o;
}

Outcome run_solve_pose(const std::string& path, const GlobalFlags& g, std::ostream& err) {
  LoadedScenario ls = load_for_command(path, g, err);
  const Scenario& s = ls.scenario;
  const std::vector<FrameObservation> frames = s.all_frames();
  const PoseSolve solved = solve_all_poses(s, frames);

  Outcome o;
  Json per_frame = Json::array();
  double residual_sum = 0.0, rot_sum = 0.0, trans_sum = 0.0;
  int solved_count = 0, flagged = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    Json entry{{"t", frames[i].t}};
    if (solved.failures[i]) {
      entry["error"] = Json{{"code", solved.failures[i]->code()}, {"message", solved.failures[i]->message()}};
      if (!o.failure) o.failure = solved.failures[i];
      per_frame.push_back(entry);
      continue;
    }
    const PoseEstimate& e = solved.estimates[i];
    entry["pose"] = io::to_json(e.pose);
    entry["residual_px"] = e.residual_px;
    entry["inlier_count"] = e.inlier_count;
    entry["iterations"] = e.iterations;
    entry["condition"] = e.condition;
    entry["flagged"] = e.flagged;
    entry["ambiguous"] = e.ambiguous;
    if (s.ground_truth) {
      const Pose& truth = s.ground_truth->poses[static_cast<std::size_t>(frames[i].t)];
      const double rot = quaternion_distance(e.pose.rotation.normalized(), truth.rotation.normalized());
      const double trans = (e.pose.translation - truth.translation).norm();
      entry["rotation_error_rad"] = rot;
      entry["translation_error_m"] = trans;
      rot_sum += rot;
      trans_sum += trans;
    }
    residual_sum += e.residual_px;
    flagged += e.flagged ? 1 : 0;
    ++solved_count;
    per_frame.push_back(entry);
  }
  const double denom = std::max(1, solved_count);
  o.results.command = "solve-pose";
  o.results.seed = g.seed;
  o.results.config = ls.echo;
  o.results.outputs = Json{{"frames", per_frame},
                           {"solved", solved_count},
                           {"flagged", flagged},
                           {"mean_residual_px", residual_sum / denom}};
  if (s.ground_truth) {
    o.results.outputs["mean_rotation_error_rad"] = rot_sum / denom;
    o.results.outputs["mean_translation_error_m"] = trans_sum / denom;
  }
  o.summary = "frames=" + std::to_string(frames.size()) + " solved=" + std::to_string(solved_count) +
              " mean_residual_px=" + fmt(residual_sum / denom) + " flagged=" + std::to_string(flagged);
  return o;
}

Outcome run_solve_contacts(const std::string& path, const std::string& pose_source,
                           const GlobalFlags& g, std::ostream& err) {
  LoadedScenario ls = load_for_command(path, g, err);
  const Scenario& s = ls.scenario;
  const std::vector<FrameObservation> frames = s.all_frames();
  std::vector<Pose> poses;
  if (pose_source == "truth") {
    if (!s.ground_truth) throw Error("missing_ground_truth", "--poses truth needs ground-truth poses");
    for (const FrameObservation& obs : frames) poses.push_back(s.ground_truth->poses[static_cast<std::size_t>(obs.t)]);
  } else {
    const PoseSolve solved = solve_all_poses(s, frames);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (solved.failures[i]) throw *solved.failures[i];
      poses.push_back(solved.estimates[i].pose);
    }
  }
  const ContactSolveResult r = solve_contact_points(contact_tracks(frames), poses, s.camera);

  Json fingers = Json::array();
  Outcome o;
  for (std::size_t i = 0; i < r.contacts.size(); ++i) {
    Json f{{"point", io::to_json(r.contacts.points[i])}, {"residual_px", r.residual_px[i]}};
    if (r.failure[i]) {
      f["error"] = Json{{"code", *r.failure[i]}, {"message", r.failure_message[i]}};
      if (!o.failure) o.failure = Error(*r.failure[i], "finger " + std::to_string(i) + ": " + r.failure_message[i]);
    }
    fingers.push_back(f);
  }
  ls.echo["poses"] = pose_source;
  o.results.command = "solve-contacts";
  o.results.seed = g.seed;
  o.results.config = ls.echo;
  o.results.outputs = Json{{"contacts", io::to_json(r.contacts)}, {"fingers", fingers}};
  double worst_residual = 0.0;
  for (double v : r.residual_px) worst_residual = std::max(worst_residual, v);
  o.summary = "fingers=" + std::to_string(r.contacts.size()) + " max_residual_px=" + fmt(worst_residual);
  if (s.ground_truth && s.ground_truth->contacts.size() == r.contacts.size()) {
    std::vector<double> per_finger;
    const double l1 = contact_l1_error(r.contacts, s.ground_truth->contacts, &per_finger);
    o.results.outputs["cp_error_m"] = l1;
    o.results.outputs["per_finger_cp_error_m"] = per_finger;
    o.summary += " cp_error_m=" + fmt(l1);
  }
  return o;
}

Outcome run_eval(const std::string& path, const std::string& results_path, const GlobalFlags& g,
                 std::ostream& err) {
  LoadedScenario ls = load_for_command(path, g, err);
  const Scenario& s = ls.scenario;
  const ResultsFile prior = load_results(results_path);
  const std::vector<ForceSet> forces = forces_from_results(prior.outputs, "outputs");
  if (!prior.outputs.contains("contacts")) throw Error("schema_error", "outputs.contacts: missing");
  const ContactSet contacts = io::contacts_from_json(prior.outputs["contacts"], "outputs.contacts");
  if (forces.size() != s.frame_count()) {
    throw Error("sequence_mismatch", std::to_string(forces.size()) + " force frames for " +
                                         std::to_string(s.frame_count()) + " observed frames");
  }
  const std::vector<RigidBodyState> states =
      simulate_trajectory(s.initial_state, forces, contacts, s.object, s.sim);

  const std::vector<FrameObservation> frames = s.all_frames();
  std::vector<RigidBodyState> sim_frames;
  std::vector<Pose> reference;
  std::string reference_source;
  if (s.ground_truth) {
    reference_source = "ground_truth";
    for (const FrameObservation& obs : frames) reference.push_back(s.ground_truth->poses[static_cast<std::size_t>(obs.t)]);
  } else {
    reference_source = "pnp";
    const PoseSolve solved = solve_all_poses(s, frames);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (solved.failures[i]) throw *solved.failures[i];
      reference.push_back(solved.estimates[i].pose);
    }
  }
  for (const FrameObservation& obs : frames) sim_frames.push_back(states[static_cast<std::size_t>(obs.t)]);

  std::string truth_source;
  const std::optional<ContactSet> truth = known_contacts(s, truth_source);
  const bool comparable = truth && truth->size() == contacts.size();
  const EvalReport report = evaluate(sim_frames, reference, frames, s.object, s.camera,
                                     comparable ? std::optional<ContactSet>(contacts) : std::nullopt,
                                     comparable ? truth : std::nullopt);

  ls.echo["results"] = results_path;
  ls.echo["results_fnv1a64"] = fnv1a64_hex(read_file(results_path));
  Outcome o;
  o.results.command = "eval";
  o.results.seed = g.seed;
  o.results.config = ls.echo;
  o.results.outputs = io::to_json(report);
  o.results.outputs["reference_poses"] = reference_source;
  o.results.outputs["contact_reference"] = comparable ? Json(truth_source) : Json(nullptr);
  o.summary = "kp_error_px=" + fmt(report.kp_error_px) + " rotation_error_rad=" + fmt(report.rotation_error_rad) +
              " translation_error_m=" + fmt(report.translation_error_m);
  if (report.cp_error_m) o.summary += " cp_error_m=" + fmt(*report.cp_error_m);
  return o;
}

struct SynthFlags {
  int frames = 10;
  int contacts = 5;
  std::string profile = "smooth-random";
  double noise_px = 0.0;
  double occlusion_rate = 0.0;
  std::optional<std::string> object;
};

std::string run_gen_synthetic(const SynthFlags& f, const GlobalFlags& g, const std::string& out_path) {
  SyntheticSpec spec;
  spec.n_frames = f.frames;
  spec.k = f.contacts;
  const std::optional<ForceProfile> profile = parse_force_profile(f.profile);
  if (!profile) throw Error("invalid_argument", "unknown force profile '" + f.profile + "'");
  spec.force_profile = *profile;
  spec.noise_px = f.noise_px;
  spec.occlusion_rate = f.occlusion_rate;
  if (g.substeps) spec.substeps_per_frame = *g.substeps;
  if (f.object) {
    if (std::optional<ObjectModel> named = bundled_object(*f.object)) {
      spec.object = named;
    } else {
      const Json j = Json::parse(read_file(*f.object));
      spec.object = io::object_from_json(j, "object");
    }
  }
  const Scenario s = gen_synthetic(g.seed, spec);
  save_scenario(out_path, s);
  return "seed=" + std::to_string(g.seed) + " object=" + s.object.name + " frames=" +
         std::to_string(s.frame_count()) + " contacts=" + std::to_string(spec.k) +
         " profile=" + force_profile_name(spec.force_profile);
}

void print_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << Json{{"error", Json{{"code", code}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contact-force inference through a differentiable rigid-body step", "forcesolve"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", tool_version());

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Seed for every randomized choice")->capture_default_str();
  app.add_option("--fd-scheme", g.fd_scheme, "Finite-difference scheme")
      ->check(CLI::IsMember({"central", "forward"}))
      ->capture_default_str();
  app.add_option("--h-force", g.h_force, "Force perturbation, N")->check(CLI::PositiveNumber);
  app.add_option("--h-state", g.h_state, "State perturbation")->check(CLI::PositiveNumber);
  app.add_option("--h-contact", g.h_contact, "Contact perturbation, m")->check(CLI::PositiveNumber);
  app.add_option("--substeps", g.substeps, "Integrator substeps per frame")->check(CLI::PositiveNumber);
  app.add_option("--max-iters", g.max_iters, "Optimizer iteration budget")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output file (default results.json, or scenario.json for gen-synthetic)");
  app.add_flag("--lenient", g.lenient, "Warn on unknown scenario fields instead of failing");

  std::string scenario_path;
  auto add_scenario_arg = [&](CLI::App* sub) {
    sub->add_option("scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Roll out a force sequence and score it");
  add_scenario_arg(simulate);
  std::optional<std::string> forces_path;
  simulate->add_option("--forces", forces_path, "Results file whose force_seq and contacts are simulated")
      ->check(CLI::ExistingFile);

  CLI::App* grad_check = app.add_subcommand("grad-check", "Compare analytic and finite-difference gradients");
  add_scenario_arg(grad_check);

  CLI::App* infer = app.add_subcommand("infer-forces", "Recover per-frame contact forces");
  add_scenario_arg(infer);
  bool refine = false;
  infer->add_flag("--refine-contacts", refine, "Also descend on contact positions");

  CLI::App* pose = app.add_subcommand("solve-pose", "Per-frame object pose from keypoints");
  add_scenario_arg(pose);

  CLI::App* solve_contacts = app.add_subcommand("solve-contacts", "Object-frame contact points from pixel tracks");
  add_scenario_arg(solve_contacts);
  std::string pose_source = "pnp";
  solve_contacts->add_option("--poses", pose_source, "Pose source")
      ->check(CLI::IsMember({"pnp", "truth"}))
      ->capture_default_str();

  CLI::App* gen = app.add_subcommand("gen-synthetic", "Generate a synthetic scenario with ground truth");
  SynthFlags synth;
  gen->add_option("--frames", synth.frames, "Frame count")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--contacts", synth.contacts, "Contact count")->check(CLI::NonNegativeNumber)->capture_default_str();
  gen->add_option("--force-profile", synth.profile, "Planted forces")
      ->check(CLI::IsMember({"zero", "constant", "smooth-random", "hover"}))
      ->capture_default_str();
  gen->add_option("--noise-px", synth.noise_px, "Gaussian pixel noise sigma")->check(CLI::NonNegativeNumber);
  gen->add_option("--occlusion-rate", synth.occlusion_rate, "Keypoint drop probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--object", synth.object, "Bundled object name or object JSON file");

  CLI::App* eval = app.add_subcommand("eval", "Score a results file against a scenario");
  add_scenario_arg(eval);
  std::string results_path;
  eval->add_option("--results", results_path, "Results file from infer-forces")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (name == "gen-synthetic") {
      const std::string path = g.out.value_or("scenario.json");
      out << "gen-synthetic ok " << run_gen_synthetic(synth, g, path) << " out=" << path << "\n";
      return 0;
    }
    Outcome o;
    if (name == "simulate") o = run_simulate(scenario_path, forces_path, g, err);
    else if (name == "grad-check") o = run_grad_check(scenario_path, g, err);
    else if (name == "infer-forces") o = run_infer_forces(scenario_path, g, refine, err);
    else if (name == "solve-pose") o = run_solve_pose(scenario_path, g, err);
    else if (name == "solve-contacts") o = run_solve_contacts(scenario_path, pose_source, g, err);
    else o = run_eval(scenario_path, results_path, g, err);

    const std::string path = g.out.value_or("results.json");
    o.results.tool_version = tool_version();
    save_results(path, o.results);
    if (o.failure) {
      out << name << " failed " << o.summary << " out=" << path << "\n";
      print_error(err, o.failure->code(), o.failure->message());
      return 1;
    }
    out << name << " ok " << o.summary << " out=" << path << "\n";
    return 0;
  } catch (const Error& e) {
    print_error(err, e.code(), e.message());
  } catch (const nlohmann::json::exception& e) {
    print_error(err, "parse_error", e.what());
  } catch (const std::exception& e) {
    print_error(err, "internal_error", e.what());
  }
  return 1;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"forcesolve"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace forcesolve
