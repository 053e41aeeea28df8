#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hoicraft/core_model.hpp"

namespace hoicraft {

/// The five hand-object interaction designs.
///   PM  physics-based manipulation
///   GM  gesture-based manipulation     GA  gesture-based animation
///   CM  contact-based manipulation     CA  contact-based animation
enum class HOIDesignKind { PM, GM, GA, CM, CA };

inline constexpr HOIDesignKind kAllDesigns[] = {HOIDesignKind::PM, HOIDesignKind::GM,
                                                HOIDesignKind::GA, HOIDesignKind::CM,
                                                HOIDesignKind::CA};

std::string_view to_string(HOIDesignKind d);
std::optional<HOIDesignKind> design_from_string(std::string_view s);
HOIDesignKind parse_design(std::string_view s);  // throws InvalidArgument

enum class AnimationMode { Single, Loop };

struct CustomizationParams {
  double resistance = 1.0;
  std::set<Gesture> allowed_gestures = {Gesture::Grab, Gesture::Pinch};
  double release_distance = 1.5;
  AnimationMode animation_mode = AnimationMode::Single;
  double step_angle = deg_to_rad(30.0);
  double animation_duration = 0.6;

  /// Throws InvalidParam naming the first offending field.
  void validate() const;
};

/// Customization JSON fragment: design choice plus tuning parameters. Angles
/// are degrees in the fragment and radians in CustomizationParams.
struct DesignConfig {
  std::optional<HOIDesignKind> design;
  CustomizationParams params;
};

DesignConfig design_config_from_json(const nlohmann::json& j);
nlohmann::json design_config_to_json(const DesignConfig& c);

/// Penalty-contact model used by PM in place of a full rigid-body engine.
struct PhysicsConfig {
  double fingertip_radius = 0.01;  // m
  double stiffness = 500.0;        // N/m
  double mass = 0.2;               // kg (generalized, per unit of q)
};

struct EngineConfig {
  PhysicsConfig physics;
  double trigger_scale = kDefaultTriggerScale;
  /// Revolute following freezes when the fingertip is this close to the axis.
  double min_follow_radius = 0.01;
};

struct Animation {
  double start_q = 0.0;
  double target_q = 0.0;  // unwrapped for unbounded revolute parts
  double start_t = 0.0;
};

struct InteractionState {
  double q = 0.0;
  double q_dot = 0.0;
  bool acquired = false;
  std::optional<Vec3> anchor;
  bool hand_inside = false;   // CA out-in latch
  bool gesture_held = false;  // GA gesture-cycle latch
  std::optional<Animation> animating;
  std::optional<Vec3> last_fingertip;  // previous sample while following
  std::optional<double> last_target;   // last animation limit for bounded parts
};

InteractionState initial_state(const PartSpec& part, double q0 = 0.0);

enum class EventKind { Acquired, Released, AnimationTriggered, Moved };

std::string_view to_string(EventKind k);

struct InteractionEvent {
  double t = 0.0;
  EventKind kind = EventKind::Moved;
  std::string part_id;
  double q = 0.0;

  bool operator==(const InteractionEvent&) const = default;
};

struct StepResult {
  InteractionState state;
  std::vector<InteractionEvent> events;
};

bool gesture_matches(Gesture g, const CustomizationParams& params);

StepResult step_pm(const InteractionState& s, const PartSpec& part, const HandSample& hand,
                   double dt, const CustomizationParams& params, const EngineConfig& cfg = {});
StepResult step_gm(const InteractionState& s, const PartSpec& part, const HandSample& hand,
                   double dt, const CustomizationParams& params, const EngineConfig& cfg = {});
StepResult step_ga(const InteractionState& s, const PartSpec& part, const HandSample& hand,
                   double dt, const CustomizationParams& params, const EngineConfig& cfg = {});
StepResult step_cm(const InteractionState& s, const PartSpec& part, const HandSample& hand,
                   double dt, const CustomizationParams& params, const EngineConfig& cfg = {});
StepResult step_ca(const InteractionState& s, const PartSpec& part, const HandSample& hand,
                   double dt, const CustomizationParams& params, const EngineConfig& cfg = {});

StepResult step(HOIDesignKind design, const InteractionState& s, const PartSpec& part,
                const HandSample& hand, double dt, const CustomizationParams& params,
                const EngineConfig& cfg = {});

/// Change in q implied by moving the fingertip from `from` to `to` while the
/// part follows the hand: axial projection for prismatic joints, signed angle
/// about the pivot axis for revolute ones (0 near the axis).
double follow_delta(const MotionConstraint& c, const Vec3& from, const Vec3& to,
                    double min_radius = 0.01);

}  // namespace hoicraft
