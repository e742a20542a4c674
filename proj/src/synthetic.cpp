#include "forcesolve/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "forcesolve/error.hpp"

namespace forcesolve {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPixelMargin = 10.0;
constexpr double kMinDepth = 0.1;

Matrix3 box_inertia(double mass, const Vector3& dims) {
  const Vector3 sq = dims.cwiseProduct(dims);
  return (mass / 12.0) * Vector3(sq.y() + sq.z(), sq.x() + sq.z(), sq.x() + sq.y()).asDiagonal();
}

ObjectModel box_object(const std::string& name, double mass, const Vector3& dims) {
  ObjectModel m;
  m.name = name;
  m.mass = mass;
  m.inertia_body = box_inertia(mass, dims);
  const Vector3 h = 0.5 * dims;
  for (int corner = 0; corner < 8; ++corner) {
    const Vector3 p((corner & 1 ? 1 : -1) * h.x(), (corner & 2 ? 1 : -1) * h.y(), (corner & 4 ? 1 : -1) * h.z());
    std::string label = "corner_";
    label += corner & 1 ? 'p' : 'n';
    label += corner & 2 ? 'p' : 'n';
    label += corner & 4 ? 'p' : 'n';
    m.keypoints.push_back({label, p});
  }
  m.keypoints.push_back({"top_center", Vector3(0.0, 0.0, h.z())});
  m.keypoints.push_back({"side_center", Vector3(h.x(), 0.0, 0.0)});
  return m;
}

Quaternion random_rotation(Rng& rng) {
  Eigen::Vector4d q;
  do {
    q = Eigen::Vector4d(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  } while (q.norm() < 1e-6);
  q.normalize();
  if (q(0) < 0.0) q = -q;
  return Quaternion(q(0), q(1), q(2), q(3));
}

Vector3 uniform_box(Rng& rng, double half) {
  return Vector3(rng.uniform(-half, half), rng.uniform(-half, half), rng.uniform(-half, half));
}

// Contact points on the surface of the keypoints' bounding box.
ContactSet sample_contacts(Rng& rng, const ObjectModel& object, int k) {
  Vector3 lo = Vector3::Constant(1e9), hi = Vector3::Constant(-1e9);
  for (const Keypoint& kp : object.keypoints) {
    lo = lo.cwiseMin(kp.position);
    hi = hi.cwiseMax(kp.position);
  }
  ContactSet contacts;
  for (int i = 0; i < k; ++i) {
    const int axis = static_cast<int>(rng.next() % 3);
    const bool upper = rng.uniform() < 0.5;
    Vector3 p;
    for (int a = 0; a < 3; ++a) p(a) = rng.uniform(lo(a), hi(a));
    p(axis) = upper ? hi(axis) : lo(axis);
    contacts.points.push_back(p);
  }
  return contacts;
}

// World -> camera: camera looks along world +y with small random yaw and pitch,
// placing the world origin at `distance` along the optical axis.
Camera sample_camera(Rng& rng) {
  Camera cam;
  cam.fx = cam.fy = 1400.0;
  cam.cx = 960.0;
  cam.cy = 540.0;
  Matrix3 base;
  base << 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0;
  const double yaw = rng.uniform(-10.0, 10.0) * kPi / 180.0;
  const double pitch = rng.uniform(-10.0, 10.0) * kPi / 180.0;
  const double distance = rng.uniform(1.0, 1.4);
  const Matrix3 tilt = (Eigen::AngleAxisd(pitch, Vector3::UnitX()) * Eigen::AngleAxisd(yaw, Vector3::UnitY())).toRotationMatrix();
  const Matrix3 world_to_cam = tilt * base;
  cam.extrinsic.rotation = Quaternion(world_to_cam).normalized();
  cam.extrinsic.translation = Vector3(0.0, 0.0, distance);
  return cam;
}

std::vector<ForceSet> sample_forces(Rng& rng, const SyntheticSpec& spec, const ObjectModel& object,
                                    const ContactSet& contacts, const RigidBodyState& s0, const SimulationConfig& sim) {
  const std::size_t n = static_cast<std::size_t>(spec.n_frames);
  const std::size_t k = contacts.size();
  const Vector3 support = -object.mass * sim.gravity / static_cast<double>(k);
  std::vector<ForceSet> seq(n, ForceSet::zeros(k));
  auto clamp = [&](Vector3 f) { return f.cwiseMax(-spec.force_amplitude).cwiseMin(spec.force_amplitude); };

  switch (spec.force_profile) {
    case ForceProfile::kZero:
      break;
    case ForceProfile::kConstant: {
      ForceSet f = ForceSet::zeros(k);
      for (std::size_t i = 0; i < k; ++i) f.forces[i] = clamp(support + uniform_box(rng, 1.0));
      std::fill(seq.begin(), seq.end(), f);
      break;
    }
    case ForceProfile::kSmoothRandom: {
      // Two low-frequency harmonics per contact and axis around a support share.
      for (std::size_t i = 0; i < k; ++i) {
        for (int axis = 0; axis < 3; ++axis) {
          std::array<double, 2> amp{}, freq{}, phase{};
          for (int j = 0; j < 2; ++j) {
            amp[j] = rng.uniform(0.0, 0.4);
            freq[j] = rng.uniform(0.2, 1.0) * (j + 1);
            phase[j] = rng.uniform(0.0, 2.0 * kPi);
          }
          for (std::size_t t = 0; t < n; ++t) {
            const double x = static_cast<double>(t) / static_cast<double>(n);
            double v = support(axis);
            for (int j = 0; j < 2; ++j) v += amp[j] * std::sin(2.0 * kPi * freq[j] * x + phase[j]);
            seq[t].forces[i](axis) = v;
          }
        }
      }
      for (ForceSet& f : seq) {
        for (Vector3& v : f.forces) v = clamp(v);
      }
      break;
    }
    case ForceProfile::kHover: {
      const ForceSet f = forces_for_wrench(Wrench{-object.mass * sim.gravity, Vector3::Zero()}, contacts, s0.orientation);
      std::fill(seq.begin(), seq.end(), f);
      break;
    }
  }
  return seq;
}

}  // namespace

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  return r * std::cos(2.0 * kPi * u2);
}

std::optional<ForceProfile> parse_force_profile(const std::string& name) {
  if (name == "zero") return ForceProfile::kZero;
  if (name == "constant") return ForceProfile::kConstant;
  if (name == "smooth-random") return ForceProfile::kSmoothRandom;
  if (name == "hover") return ForceProfile::kHover;
  return std::nullopt;
}

std::string force_profile_name(ForceProfile profile) {
  switch (profile) {
    case ForceProfile::kZero:
      return "zero";
    case ForceProfile::kConstant:
      return "constant";
    case ForceProfile::kSmoothRandom:
      return "smooth-random";
    case ForceProfile::kHover:
      return "hover";
  }
  return "unknown";
}

void SyntheticSpec::validate() const {
  if (n_frames < 1) throw Error("invalid_spec", "n_frames must be >= 1");
  if (k < 1) throw Error("invalid_spec", "k must be >= 1");
  if (!(noise_px >= 0.0)) throw Error("invalid_spec", "noise_px must be >= 0");
  if (!(occlusion_rate >= 0.0) || !(occlusion_rate < 1.0)) throw Error("invalid_spec", "occlusion_rate must be in [0, 1)");
  if (!(force_amplitude > 0.0)) throw Error("invalid_spec", "force_amplitude must be positive");
  if (substeps_per_frame < 1) throw Error("invalid_spec", "substeps_per_frame must be >= 1");
  if (max_retries < 1) throw Error("invalid_spec", "max_retries must be >= 1");
}

ObjectModel random_object(Rng& rng, int count) {
  ObjectModel m;
  m.name = "random_box";
  m.mass = 0.5;
  m.inertia_body = box_inertia(m.mass, Vector3::Constant(0.2));
  while (true) {
    m.keypoints.clear();
    for (int i = 0; i < count; ++i) m.keypoints.push_back({"kp" + std::to_string(i), uniform_box(rng, 0.1)});
    Eigen::MatrixXd centered(count, 3);
    Vector3 mean = Vector3::Zero();
    for (const Keypoint& kp : m.keypoints) mean += kp.position / count;
    for (int i = 0; i < count; ++i) centered.row(i) = (m.keypoints[i].position - mean).transpose();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered);
    const Eigen::VectorXd sv = svd.singularValues();
    if (count < 4 || sv(2) >= 0.25 * sv(0)) break;
  }
  return m;
}

const std::vector<ObjectModel>& bundled_objects() {
  static const std::vector<ObjectModel> objects{
      box_object("pitcher", 0.18, Vector3(0.20, 0.15, 0.24)),
      box_object("bleach_bottle", 0.90, Vector3(0.10, 0.07, 0.25)),
      box_object("skillet", 0.95, Vector3(0.26, 0.26, 0.05)),
      box_object("drill", 0.90, Vector3(0.18, 0.06, 0.19)),
      box_object("hammer", 0.67, Vector3(0.32, 0.04, 0.13)),
      box_object("toy_airplane", 0.30, Vector3(0.25, 0.25, 0.08)),
      box_object("tomato_soup_can", 0.35, Vector3(0.07, 0.07, 0.10)),
      box_object("mustard_bottle", 0.60, Vector3(0.09, 0.06, 0.19)),
  };
  return objects;
}

std::optional<ObjectModel> bundled_object(const std::string& name) {
  for (const ObjectModel& m : bundled_objects()) {
    if (m.name == name) return m;
  }
  return std::nullopt;
}

ForceSet forces_for_wrench(const Wrench& wrench, const ContactSet& contacts, const Quaternion& orientation) {
  const std::size_t k = contacts.size();
  const Matrix3 rot = orientation.normalized().toRotationMatrix();
  Eigen::MatrixXd map(6, 3 * k);
  for (std::size_t i = 0; i < k; ++i) {
    const Vector3 r = rot * contacts.points[i];
    Matrix3 cross;
    cross << 0.0, -r.z(), r.y(), r.z(), 0.0, -r.x(), -r.y(), r.x(), 0.0;
    map.block<3, 3>(0, 3 * i) = Matrix3::Identity();
    map.block<3, 3>(3, 3 * i) = cross;
  }
  Eigen::Matrix<double, 6, 1> target;
  target << wrench.force, wrench.torque;
  const Eigen::VectorXd f = map.completeOrthogonalDecomposition().solve(target);
  ForceSet out = ForceSet::zeros(k);
  for (std::size_t i = 0; i < k; ++i) out.forces[i] = f.segment<3>(3 * i);
  return out;
}

Scenario gen_synthetic(std::uint64_t seed, const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(seed);
  const ObjectModel object = spec.object ? *spec.object : random_object(rng);
  object.validate();
  if (object.keypoints.size() < 4) throw Error("invalid_spec", "object needs at least 4 keypoints");
  const std::vector<Vector3> keypoints = object.keypoint_positions();

  SimulationConfig sim;
  sim.substeps_per_frame = spec.substeps_per_frame;

  for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
    Scenario s;
    s.name = "synthetic-" + force_profile_name(spec.force_profile) + "-seed" + std::to_string(seed);
    s.object = object;
    s.sim = sim;
    s.camera = sample_camera(rng);

    RigidBodyState s0;
    s0.position = uniform_box(rng, 0.05);
    s0.orientation = random_rotation(rng);
    switch (spec.force_profile) {
      case ForceProfile::kHover:
        break;
      case ForceProfile::kZero:
        s0.linear_velocity = Vector3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0.8, 1.6));
        s0.angular_velocity = uniform_box(rng, 1.5);
        break;
      default:
        s0.linear_velocity = uniform_box(rng, 0.3);
        s0.angular_velocity = uniform_box(rng, 1.5);
        break;
    }
    s.initial_state = s0;

    const ContactSet contacts = sample_contacts(rng, object, spec.k);
    const std::vector<ForceSet> forces = sample_forces(rng, spec, object, contacts, s0, sim);
    const std::vector<RigidBodyState> states = simulate_trajectory(s0, forces, contacts, object, sim);

    // Every keypoint and contact must stay in front of the camera and inside the image.
    bool visible = true;
    std::vector<std::vector<Pixel>> kp_pixels, cp_pixels;
    for (const RigidBodyState& st : states) {
      const Pose pose = pose_of(st);
      for (const auto* pts : {&keypoints, &contacts.points}) {
        for (const Vector3& c : to_camera_frame(*pts, pose, s.camera)) visible = visible && c.z() > kMinDepth;
      }
      if (!visible) break;
      kp_pixels.push_back(project_points(keypoints, pose, s.camera));
      cp_pixels.push_back(project_points(contacts.points, pose, s.camera));
      for (const auto* px : {&kp_pixels.back(), &cp_pixels.back()}) {
        for (const Pixel& p : *px) {
          visible = visible && p.x() >= kPixelMargin && p.y() >= kPixelMargin &&
                    p.x() <= s.camera.image_width - kPixelMargin && p.y() <= s.camera.image_height - kPixelMargin;
        }
      }
      if (!visible) break;
    }
    if (!visible) continue;

    auto noisy = [&](const Pixel& p) {
      Pixel out = p;
      if (spec.noise_px > 0.0) {
        out.x() += spec.noise_px * rng.normal();
        out.y() += spec.noise_px * rng.normal();
        out.x() = std::clamp(out.x(), 0.0, static_cast<double>(s.camera.image_width));
        out.y() = std::clamp(out.y(), 0.0, static_cast<double>(s.camera.image_height));
      }
      return out;
    };

    std::vector<FrameObservation> frames;
    for (std::size_t t = 0; t < states.size(); ++t) {
      FrameObservation obs;
      obs.t = static_cast<int>(t);
      std::vector<bool> hidden(keypoints.size(), false);
      if (spec.occlusion_rate > 0.0) {
        do {
          for (std::size_t i = 0; i < hidden.size(); ++i) hidden[i] = rng.uniform() < spec.occlusion_rate;
        } while (std::all_of(hidden.begin(), hidden.end(), [](bool h) { return h; }));
      }
      for (std::size_t i = 0; i < keypoints.size(); ++i) {
        const Pixel p = noisy(kp_pixels[t][i]);
        obs.keypoints.push_back(hidden[i] ? std::nullopt : std::optional<Pixel>(p));
      }
      for (const Pixel& p : cp_pixels[t]) obs.contacts.push_back(noisy(p));
      frames.push_back(obs);
    }
    s.initial_observation = frames.front();
    s.observations.assign(frames.begin() + 1, frames.end());

    GroundTruth gt;
    gt.force_seq = forces;
    gt.contacts = contacts;
    for (const RigidBodyState& st : states) gt.poses.push_back(pose_of(st));
    gt.noise_px = spec.noise_px;
    s.ground_truth = gt;
    return s;
  }
  throw Error("ungenerable_spec", "no configuration stayed inside the camera frustum after " +
                                      std::to_string(spec.max_retries) + " attempts");
}

}  // namespace forcesolve
