#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace hoicraft {

using Vec3 = Eigen::Vector3d;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.141592653589793238462643383279;

inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Axis-aligned box. `extents` are full edge lengths, not half sizes.
struct Box {
  Vec3 center = Vec3::Zero();
  Vec3 extents = Vec3::Ones();

  Vec3 min_corner() const { return center - extents / 2.0; }
  Vec3 max_corner() const { return center + extents / 2.0; }
  bool contains(const Vec3& p, double tol = 0.0) const;
  bool contains(const Box& other, double tol = 1e-12) const;
  double max_extent() const { return extents.maxCoeff(); }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

enum class JointKind { Prismatic, Revolute };

std::string_view to_string(JointKind kind);
JointKind joint_kind_from_string(std::string_view s);

/// One scalar degree of freedom. The coordinate q is measured from the rest
/// pose in which the part's bounds are given: meters along `axis` for
/// prismatic joints, radians about the line (pivot, axis) for revolute ones.
class MotionConstraint {
 public:
  static MotionConstraint prismatic(const Vec3& axis, const Vec3& pivot, Interval range);
  static MotionConstraint revolute(const Vec3& axis, const Vec3& pivot,
                                   std::optional<Interval> range);

  JointKind kind() const { return kind_; }
  const Vec3& axis() const { return axis_; }
  const Vec3& pivot() const { return pivot_; }
  const std::optional<Interval>& range() const { return range_; }
  bool bounded() const { return range_.has_value(); }
  bool unbounded_revolute() const { return kind_ == JointKind::Revolute && !range_; }

  /// Point attached to the part at rest, moved to where it sits at coordinate q.
  Vec3 to_world(const Vec3& rest_point, double q) const;
  /// Inverse of to_world.
  Vec3 to_rest(const Vec3& world_point, double q) const;
  /// Direction attached to the part, rotated with it.
  Vec3 direction_to_world(const Vec3& rest_dir, double q) const;

 private:
  MotionConstraint(JointKind kind, Vec3 axis, Vec3 pivot, std::optional<Interval> range);

  JointKind kind_;
  Vec3 axis_;
  Vec3 pivot_;
  std::optional<Interval> range_;
};

struct PartSpec {
  std::string id;
  std::string name;
  std::string object_name;
  Box bounds;
  MotionConstraint constraint = MotionConstraint::prismatic(Vec3::UnitX(), Vec3::Zero(), {0.0, 1.0});
  std::string interaction_type;
  std::string affordances;

  /// Characteristic size: the largest extent of the bounds.
  double part_scale() const { return bounds.max_extent(); }
};

struct SceneObject {
  std::string name;
  std::vector<PartSpec> parts;
  std::set<std::string> body_part_ids;

  const PartSpec* find(std::string_view id) const;
  const PartSpec& at(std::string_view id) const;
  /// Parts that may become interactive, in declaration order.
  std::vector<const PartSpec*> interactive_parts() const;
};

enum class Gesture { None, Grab, Pinch, Curl, Point, Open };

std::string_view to_string(Gesture g);
Gesture gesture_from_string(std::string_view s);

struct HandSample {
  double t = 0.0;
  Vec3 fingertip = Vec3::Zero();
  Gesture gesture = Gesture::None;
  bool tracked = true;
};

struct TriggerRegion {
  Box box;
};

inline constexpr double kDefaultTriggerScale = 1.2;

/// Clamps to the range when present; an unbounded revolute coordinate is
/// wrapped to [0, 2pi).
double clamp_to_constraint(double q, const MotionConstraint& c);

double wrap_angle(double rad);
/// Shortest angular distance between two angles, in [0, pi].
double angular_distance(double a, double b);

TriggerRegion trigger_region(const PartSpec& p, double scale_factor = kDefaultTriggerScale);

double normalized_anchor_distance(const Vec3& fingertip, const Vec3& anchor, double part_scale);

/// Whether `point` lies inside `region` once the owning part sits at q.
bool inside_posed(const TriggerRegion& region, const MotionConstraint& c, double q,
                  const Vec3& point);

/// Scene description file (see README for the layout). Throws InvalidScene.
SceneObject scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const SceneObject& scene);
SceneObject load_scene(const std::string& path);

Vec3 vec3_from_json(const nlohmann::json& j);
nlohmann::json vec3_to_json(const Vec3& v);

}  // namespace hoicraft
