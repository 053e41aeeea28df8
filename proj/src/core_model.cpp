#include "hoicraft/core_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "hoicraft/error.hpp"

namespace hoicraft {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Eigen::AngleAxisd rotation(const Vec3& axis, double q) { return Eigen::AngleAxisd(q, axis); }

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidScene: return "InvalidScene";
    case ErrorCode::UnknownPart: return "UnknownPart";
    case ErrorCode::EmptyScript: return "EmptyScript";
    case ErrorCode::NoManipulation: return "NoManipulation";
    case ErrorCode::IncompleteMatrix: return "IncompleteMatrix";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::LLMUnavailable: return "LLMUnavailable";
    case ErrorCode::LLMError: return "LLMError";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::EmptyIntent: return "EmptyIntent";
    case ErrorCode::CountOutOfRange: return "CountOutOfRange";
    case ErrorCode::NotSelected: return "NotSelected";
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::WorkflowViolation: return "WorkflowViolation";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool Box::contains(const Vec3& p, double tol) const {
  const Vec3 lo = min_corner();
  const Vec3 hi = max_corner();
  for (int i = 0; i < 3; ++i) {
    if (p[i] < lo[i] - tol || p[i] > hi[i] + tol) return false;
  }
  return true;
}

bool Box::contains(const Box& other, double tol) const {
  return contains(other.min_corner(), tol) && contains(other.max_corner(), tol);
}

std::string_view to_string(JointKind kind) {
  return kind == JointKind::Prismatic ? "Prismatic" : "Revolute";
}

JointKind joint_kind_from_string(std::string_view s) {
  const auto l = lower(s);
  if (l == "prismatic") return JointKind::Prismatic;
  if (l == "revolute") return JointKind::Revolute;
  throw Error(ErrorCode::InvalidScene, "unknown constraint kind: " + std::string(s));
}

MotionConstraint::MotionConstraint(JointKind kind, Vec3 axis, Vec3 pivot,
                                   std::optional<Interval> range)
    : kind_(kind), axis_(std::move(axis)), pivot_(std::move(pivot)), range_(range) {
  if (std::abs(axis_.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidScene, "constraint axis must have unit length");
  }
  if (range_ && !(range_->lo < range_->hi)) {
    throw Error(ErrorCode::InvalidScene, "constraint range requires qMin < qMax");
  }
  if (kind_ == JointKind::Prismatic && !range_) {
    throw Error(ErrorCode::InvalidScene, "prismatic constraints need a range");
  }
}

MotionConstraint MotionConstraint::prismatic(const Vec3& axis, const Vec3& pivot, Interval range) {
  return MotionConstraint(JointKind::Prismatic, axis, pivot, range);
}

MotionConstraint MotionConstraint::revolute(const Vec3& axis, const Vec3& pivot,
                                            std::optional<Interval> range) {
  return MotionConstraint(JointKind::Revolute, axis, pivot, range);
}

Vec3 MotionConstraint::to_world(const Vec3& rest_point, double q) const {
  if (kind_ == JointKind::Prismatic) return rest_point + q * axis_;
  return pivot_ + rotation(axis_, q) * (rest_point - pivot_);
}

Vec3 MotionConstraint::to_rest(const Vec3& world_point, double q) const {
  if (kind_ == JointKind::Prismatic) return world_point - q * axis_;
  return pivot_ + rotation(axis_, -q) * (world_point - pivot_);
}

Vec3 MotionConstraint::direction_to_world(const Vec3& rest_dir, double q) const {
  if (kind_ == JointKind::Prismatic) return rest_dir;
  return rotation(axis_, q) * rest_dir;
}

const PartSpec* SceneObject::find(std::string_view id) const {
  for (const auto& p : parts) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const PartSpec& SceneObject::at(std::string_view id) const {
  if (const auto* p = find(id)) return *p;
  throw Error(ErrorCode::UnknownPart, "unknown part: " + std::string(id));
}

std::vector<const PartSpec*> SceneObject::interactive_parts() const {
  std::vector<const PartSpec*> out;
  for (const auto& p : parts) {
    if (!body_part_ids.contains(p.id)) out.push_back(&p);
  }
  return out;
}

std::string_view to_string(Gesture g) {
  switch (g) {
    case Gesture::None: return "None";
    case Gesture::Grab: return "Grab";
    case Gesture::Pinch: return "Pinch";
    case Gesture::Curl: return "Curl";
    case Gesture::Point: return "Point";
    case Gesture::Open: return "Open";
  }
  return "None";
}

Gesture gesture_from_string(std::string_view s) {
  const auto l = lower(s);
  if (l == "none" || l.empty()) return Gesture::None;
  if (l == "grab") return Gesture::Grab;
  if (l == "pinch") return Gesture::Pinch;
  if (l == "curl") return Gesture::Curl;
  if (l == "point") return Gesture::Point;
  if (l == "open") return Gesture::Open;
  throw Error(ErrorCode::InvalidArgument, "unknown gesture: " + std::string(s));
}

double wrap_angle(double rad) {
  double w = std::fmod(rad, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  // fmod of a value just below a multiple of 2pi can round up to 2pi
  if (w >= kTwoPi) w = 0.0;
  return w;
}

double angular_distance(double a, double b) {
  const double d = wrap_angle(a - b);
  return std::min(d, kTwoPi - d);
}

double clamp_to_constraint(double q, const MotionConstraint& c) {
  if (const auto& r = c.range()) return std::clamp(q, r->lo, r->hi);
  return wrap_angle(q);
}

TriggerRegion trigger_region(const PartSpec& p, double scale_factor) {
  if (scale_factor < 1.0) {
    throw Error(ErrorCode::InvalidArgument, "trigger scale factor must be >= 1");
  }
  return TriggerRegion{Box{p.bounds.center, p.bounds.extents * scale_factor}};
}

double normalized_anchor_distance(const Vec3& fingertip, const Vec3& anchor, double part_scale) {
  return (fingertip - anchor).norm() / part_scale;
}

bool inside_posed(const TriggerRegion& region, const MotionConstraint& c, double q,
                  const Vec3& point) {
  return region.box.contains(c.to_rest(point, q));
}

Vec3 vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::InvalidScene, "expected a 3-vector");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

nlohmann::json vec3_to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

namespace {

MotionConstraint constraint_from_json(const nlohmann::json& j) {
  const auto kind = joint_kind_from_string(j.at("kind").get<std::string>());
  Vec3 axis = vec3_from_json(j.at("axis"));
  const Vec3 pivot = j.contains("pivot") ? vec3_from_json(j.at("pivot")) : Vec3::Zero();
  std::optional<Interval> range;
  if (j.contains("range") && !j.at("range").is_null()) {
    const auto& r = j.at("range");
    if (!r.is_array() || r.size() != 2) throw Error(ErrorCode::InvalidScene, "range must be [min,max]");
    range = Interval{r[0].get<double>(), r[1].get<double>()};
  }
  if (kind == JointKind::Prismatic) {
    if (!range) throw Error(ErrorCode::InvalidScene, "prismatic constraints need a range");
    return MotionConstraint::prismatic(axis, pivot, *range);
  }
  return MotionConstraint::revolute(axis, pivot, range);
}

}  // namespace

SceneObject scene_from_json(const nlohmann::json& j) {
  try {
    SceneObject scene;
    scene.name = j.at("name").get<std::string>();
    std::set<std::string> seen;
    for (const auto& pj : j.at("parts")) {
      PartSpec p;
      p.id = pj.at("id").get<std::string>();
      if (p.id.empty()) throw Error(ErrorCode::InvalidScene, "part id must be non-empty");
      if (!seen.insert(p.id).second) {
        throw Error(ErrorCode::InvalidScene, "duplicate part id: " + p.id);
      }
      p.name = pj.value("name", p.id);
      p.object_name = scene.name;
      p.bounds.center = vec3_from_json(pj.at("bounds").at("center"));
      p.bounds.extents = vec3_from_json(pj.at("bounds").at("extents"));
      if ((p.bounds.extents.array() <= 0.0).any()) {
        throw Error(ErrorCode::InvalidScene, "part extents must be positive: " + p.id);
      }
      p.constraint = constraint_from_json(pj.at("constraint"));
      p.interaction_type = pj.value("interactionType", "");
      p.affordances = pj.value("affordances", "");
      scene.parts.push_back(std::move(p));
    }
    if (j.contains("bodyPartIds")) {
      for (const auto& b : j.at("bodyPartIds")) scene.body_part_ids.insert(b.get<std::string>());
    }
    return scene;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidScene, std::string("malformed scene: ") + e.what());
  }
}

nlohmann::json scene_to_json(const SceneObject& scene) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : scene.parts) {
    const auto& c = p.constraint;
    nlohmann::json range = nullptr;
    if (c.range()) range = nlohmann::json::array({c.range()->lo, c.range()->hi});
    parts.push_back({
        {"id", p.id},
        {"name", p.name},
        {"bounds", {{"center", vec3_to_json(p.bounds.center)}, {"extents", vec3_to_json(p.bounds.extents)}}},
        {"constraint",
         {{"kind", to_string(c.kind())},
          {"axis", vec3_to_json(c.axis())},
          {"pivot", vec3_to_json(c.pivot())},
          {"range", range}}},
        {"interactionType", p.interaction_type},
        {"affordances", p.affordances},
    });
  }
  return {{"name", scene.name},
          {"parts", parts},
          {"bodyPartIds", nlohmann::json(std::vector<std::string>(scene.body_part_ids.begin(),
                                                                  scene.body_part_ids.end()))}};
}

SceneObject load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open scene file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidScene, std::string("scene is not valid JSON: ") + e.what());
  }
  return scene_from_json(j);
}

}  // namespace hoicraft
