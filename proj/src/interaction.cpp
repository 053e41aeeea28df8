#include "hoicraft/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hoicraft/error.hpp"

namespace hoicraft {

namespace {

constexpr double kMoveEpsilon = 1e-6;

// Signed change between two coordinates of the same constraint. Unbounded
// revolute coordinates live on a circle, so the short way round is used.
double coordinate_delta(const MotionConstraint& c, double from, double to) {
  if (!c.unbounded_revolute()) return to - from;
  double d = wrap_angle(to - from);
  if (d > kPi) d -= kTwoPi;
  return d;
}

void emit_moved(StepResult& r, const InteractionState& before, const PartSpec& part, double t) {
  if (std::abs(coordinate_delta(part.constraint, before.q, r.state.q)) > kMoveEpsilon) {
    r.events.push_back({t, EventKind::Moved, part.id, r.state.q});
  }
}

bool hand_in_trigger(const InteractionState& s, const PartSpec& part, const HandSample& hand,
                     const EngineConfig& cfg) {
  if (!hand.tracked) return false;
  return inside_posed(trigger_region(part, cfg.trigger_scale), part.constraint, s.q,
                      hand.fingertip);
}

Vec3 trigger_center(const InteractionState& s, const PartSpec& part) {
  return part.constraint.to_world(part.bounds.center, s.q);
}

// ---- animation designs (GA, CA) ----

void advance_animation(InteractionState& s, const PartSpec& part, double t,
                       const CustomizationParams& params) {
  if (!s.animating) return;
  const auto& a = *s.animating;
  const double frac = std::clamp((t - a.start_t) / params.animation_duration, 0.0, 1.0);
  s.q = clamp_to_constraint(a.start_q + (a.target_q - a.start_q) * frac, part.constraint);
  s.q_dot = 0.0;
  if (frac >= 1.0) s.animating.reset();
}

void trigger_animation(StepResult& r, const PartSpec& part, double t,
                       const CustomizationParams& params) {
  auto& s = r.state;
  const auto& c = part.constraint;
  double target = 0.0;
  if (c.unbounded_revolute()) {
    // A retrigger mid-flight keeps the unfinished remainder so that every
    // trigger contributes exactly one step.
    double remaining = 0.0;
    if (s.animating) {
      const auto& a = *s.animating;
      const double frac = std::clamp((t - a.start_t) / params.animation_duration, 0.0, 1.0);
      remaining = (a.target_q - a.start_q) * (1.0 - frac);
    }
    target = s.q + remaining + params.step_angle;
  } else {
    const auto& range = *c.range();
    const bool at_hi = s.q >= range.hi - kMoveEpsilon;
    if (params.animation_mode == AnimationMode::Loop) {
      if (s.last_target) {
        target = (*s.last_target == range.hi) ? range.lo : range.hi;
      } else {
        target = at_hi ? range.lo : range.hi;
      }
    } else {
      // Single mode is one-way: the first trigger fixes the direction.
      target = s.last_target ? *s.last_target : (at_hi ? range.lo : range.hi);
    }
    s.last_target = target;
  }
  s.animating = Animation{s.q, target, t};
  r.events.push_back({t, EventKind::AnimationTriggered, part.id, s.q});
}

// ---- following (GM, CM) ----

void follow_hand(InteractionState& s, const PartSpec& part, const Vec3& fingertip,
                 const EngineConfig& cfg) {
  if (s.last_fingertip) {
    const double d = follow_delta(part.constraint, *s.last_fingertip, fingertip, cfg.min_follow_radius);
    s.q = clamp_to_constraint(s.q + d, part.constraint);
  }
  s.q_dot = 0.0;
  s.last_fingertip = fingertip;
}

void release(StepResult& r, const PartSpec& part, double t) {
  r.state.acquired = false;
  r.state.anchor.reset();
  r.state.last_fingertip.reset();
  r.events.push_back({t, EventKind::Released, part.id, r.state.q});
}

void acquire(StepResult& r, const PartSpec& part, const HandSample& hand) {
  r.state.acquired = true;
  r.state.anchor = trigger_center(r.state, part);
  r.state.last_fingertip = hand.fingertip;
  r.events.push_back({hand.t, EventKind::Acquired, part.id, r.state.q});
}

void check_dt(double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
}

}  // namespace

std::string_view to_string(HOIDesignKind d) {
  switch (d) {
    case HOIDesignKind::PM: return "PM";
    case HOIDesignKind::GM: return "GM";
    case HOIDesignKind::GA: return "GA";
    case HOIDesignKind::CM: return "CM";
    case HOIDesignKind::CA: return "CA";
  }
  return "PM";
}

std::optional<HOIDesignKind> design_from_string(std::string_view s) {
  for (auto d : kAllDesigns) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

HOIDesignKind parse_design(std::string_view s) {
  if (auto d = design_from_string(s)) return *d;
  throw Error(ErrorCode::InvalidArgument, "unknown HOI design: " + std::string(s));
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Acquired: return "Acquired";
    case EventKind::Released: return "Released";
    case EventKind::AnimationTriggered: return "AnimationTriggered";
    case EventKind::Moved: return "Moved";
  }
  return "Moved";
}

void CustomizationParams::validate() const {
  auto bad = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidParam, "invalid " + field + ": " + why, field);
  };
  if (!(resistance >= 0.0) || !std::isfinite(resistance)) bad("resistance", "must be >= 0");
  if (allowed_gestures.empty()) bad("allowedGestures", "must be non-empty");
  if (allowed_gestures.contains(Gesture::None)) bad("allowedGestures", "None is not a gesture");
  if (!(release_distance > 0.0) || !std::isfinite(release_distance)) {
    bad("releaseDistance", "must be > 0");
  }
  if (!(step_angle > 0.0) || step_angle > kTwoPi + 1e-12) bad("stepAngle", "must be in (0, 360] degrees");
  if (!(animation_duration > 0.0) || !std::isfinite(animation_duration)) {
    bad("animationDuration", "must be > 0");
  }
}

DesignConfig design_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidParam, "customization must be a JSON object");
  DesignConfig out;
  auto& p = out.params;
  try {
    if (j.contains("design") && !j.at("design").is_null()) {
      const auto name = j.at("design").get<std::string>();
      out.design = design_from_string(name);
      if (!out.design) throw Error(ErrorCode::InvalidParam, "unknown design: " + name, "design");
    }
    p.resistance = j.value("resistance", p.resistance);
    if (j.contains("allowedGestures")) {
      p.allowed_gestures.clear();
      for (const auto& g : j.at("allowedGestures")) {
        try {
          p.allowed_gestures.insert(gesture_from_string(g.get<std::string>()));
        } catch (const Error& e) {
          throw Error(ErrorCode::InvalidParam, e.what(), "allowedGestures");
        }
      }
    }
    p.release_distance = j.value("releaseDistance", p.release_distance);
    if (j.contains("animationMode")) {
      const auto mode = j.at("animationMode").get<std::string>();
      if (mode == "single" || mode == "Single") {
        p.animation_mode = AnimationMode::Single;
      } else if (mode == "loop" || mode == "Loop") {
        p.animation_mode = AnimationMode::Loop;
      } else {
        throw Error(ErrorCode::InvalidParam, "unknown animationMode: " + mode, "animationMode");
      }
    }
    if (j.contains("stepAngle_deg")) p.step_angle = deg_to_rad(j.at("stepAngle_deg").get<double>());
    p.animation_duration = j.value("animationDuration_s", p.animation_duration);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidParam, std::string("malformed customization: ") + e.what());
  }
  p.validate();
  return out;
}

nlohmann::json design_config_to_json(const DesignConfig& c) {
  const auto& p = c.params;
  nlohmann::json gestures = nlohmann::json::array();
  for (auto g : p.allowed_gestures) gestures.push_back(to_string(g));
  nlohmann::json j = {
      {"design", c.design ? nlohmann::json(to_string(*c.design)) : nlohmann::json(nullptr)},
      {"resistance", p.resistance},
      {"allowedGestures", gestures},
      {"releaseDistance", p.release_distance},
      {"animationMode", p.animation_mode == AnimationMode::Single ? "single" : "loop"},
      {"stepAngle_deg", rad_to_deg(p.step_angle)},
      {"animationDuration_s", p.animation_duration},
  };
  return j;
}

InteractionState initial_state(const PartSpec& part, double q0) {
  InteractionState s;
  s.q = clamp_to_constraint(q0, part.constraint);
  return s;
}

bool gesture_matches(Gesture g, const CustomizationParams& params) {
  return g != Gesture::None && params.allowed_gestures.contains(g);
}

double follow_delta(const MotionConstraint& c, const Vec3& from, const Vec3& to, double min_radius) {
  if (c.kind() == JointKind::Prismatic) return (to - from).dot(c.axis());
  const Vec3& axis = c.axis();
  Vec3 a = from - c.pivot();
  Vec3 b = to - c.pivot();
  a -= a.dot(axis) * axis;
  b -= b.dot(axis) * axis;
  if (a.norm() < min_radius || b.norm() < min_radius) return 0.0;
  return std::atan2(axis.dot(a.cross(b)), a.dot(b));
}

StepResult step_pm(const InteractionState& s, const PartSpec& part, const HandSample& hand,
                   double dt, const CustomizationParams& params, const EngineConfig& cfg) {
  check_dt(dt);
  StepResult r{s, {}};
  auto& st = r.state;
  const auto& c = part.constraint;
  const auto& phys = cfg.physics;

  double generalized_force = 0.0;
  if (hand.tracked) {
    const Vec3 local = c.to_rest(hand.fingertip, s.q);
    const Vec3 lo = part.bounds.min_corner();
    const Vec3 hi = part.bounds.max_corner();
    const Vec3 closest = local.cwiseMax(lo).cwiseMin(hi);
    const Vec3 gap = local - closest;
    const double dist = gap.norm();

    double depth = 0.0;
    Vec3 normal = Vec3::Zero();  // part surface -> fingertip, rest frame
    if (dist > 0.0) {
      if (dist < phys.fingertip_radius) {
        depth = phys.fingertip_radius - dist;
        normal = gap / dist;
      }
    } else {
      // Fingertip centre inside the collider: push out through the nearest face.
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 3; ++i) {
        const double to_lo = local[i] - lo[i];
        const double to_hi = hi[i] - local[i];
        if (to_lo < best) {
          best = to_lo;
          normal = -Vec3::Unit(i);
        }
        if (to_hi < best) {
          best = to_hi;
          normal = Vec3::Unit(i);
        }
      }
      depth = phys.fingertip_radius + best;
    }

    if (depth > 0.0) {
      const Vec3 force = -phys.stiffness * depth * c.direction_to_world(normal, s.q);
      if (c.kind() == JointKind::Prismatic) {
        generalized_force = force.dot(c.axis());
      } else {
        const Vec3 contact = c.to_world(closest, s.q);
        generalized_force = c.axis().dot((contact - c.pivot()).cross(force));
      }
    }
  }

  // Semi-implicit Euler; the damping term is taken implicitly so that large
  // resistance values cannot flip the sign of the velocity.
  st.q_dot = (s.q_dot + dt * generalized_force / phys.mass) / (1.0 + dt * params.resistance / phys.mass);
  const double unclamped = s.q + dt * st.q_dot;
  st.q = clamp_to_constraint(unclamped, c);
  if (c.bounded() && st.q != unclamped) st.q_dot = 0.0;

  emit_moved(r, s, part, hand.t);
  return r;
}

StepResult step_gm(const InteractionState& s, const PartSpec& part, const HandSample& hand,
                   double dt, const CustomizationParams& params, const EngineConfig& cfg) {
  check_dt(dt);
  StepResult r{s, {}};
  auto& st = r.state;

  if (st.acquired) {
    const bool gesture_ok = hand.tracked && gesture_matches(hand.gesture, params);
    const bool in_reach =
        normalized_anchor_distance(hand.fingertip, *st.anchor, part.part_scale()) <= params.release_distance;
    if (!gesture_ok || !in_reach) {
      release(r, part, hand.t);
      return r;
    }
    follow_hand(st, part, hand.fingertip, cfg);
    emit_moved(r, s, part, hand.t);
    return r;
  }

  if (gesture_matches(hand.gesture, params) && hand_in_trigger(st, part, hand, cfg)) {
    acquire(r, part, hand);
  }
  return r;
}

StepResult step_cm(const InteractionState& s, const PartSpec& part, const HandSample& hand,
                   double dt, const CustomizationParams& /*params*/, const EngineConfig& cfg) {
  check_dt(dt);
  StepResult r{s, {}};
  auto& st = r.state;

  if (st.acquired) {
    if (!hand.tracked) {
      release(r, part, hand.t);
      return r;
    }
    InteractionState moved = st;
    follow_hand(moved, part, hand.fingertip, cfg);
    if (!hand_in_trigger(moved, part, hand, cfg)) {
      // The hand left the trigger before the part could follow.
      release(r, part, hand.t);
      return r;
    }
    st = moved;
    emit_moved(r, s, part, hand.t);
    return r;
  }

  if (hand_in_trigger(st, part, hand, cfg)) acquire(r, part, hand);
  return r;
}

StepResult step_ga(const InteractionState& s, const PartSpec& part, const HandSample& hand,
                   double dt, const CustomizationParams& params, const EngineConfig& cfg) {
  check_dt(dt);
  StepResult r{s, {}};
  auto& st = r.state;
  const bool inside = hand_in_trigger(s, part, hand, cfg);
  const bool matching = hand.tracked && gesture_matches(hand.gesture, params);

  advance_animation(st, part, hand.t, params);
  emit_moved(r, s, part, hand.t);

  if (matching && !st.gesture_held) {
    st.gesture_held = true;
    if (inside) trigger_animation(r, part, hand.t, params);
  } else if (!matching) {
    st.gesture_held = false;
  }
  return r;
}

StepResult step_ca(const InteractionState& s, const PartSpec& part, const HandSample& hand,
                   double dt, const CustomizationParams& params, const EngineConfig& cfg) {
  check_dt(dt);
  StepResult r{s, {}};
  auto& st = r.state;
  const bool inside = hand_in_trigger(s, part, hand, cfg);

  advance_animation(st, part, hand.t, params);
  emit_moved(r, s, part, hand.t);

  if (inside && !st.hand_inside) {
    st.hand_inside = true;
    trigger_animation(r, part, hand.t, params);
  } else if (!inside) {
    st.hand_inside = false;
  }
  return r;
}

StepResult step(HOIDesignKind design, const InteractionState& s, const PartSpec& part,
                const HandSample& hand, double dt, const CustomizationParams& params,
                const EngineConfig& cfg) {
  switch (design) {
    case HOIDesignKind::PM: return step_pm(s, part, hand, dt, params, cfg);
    case HOIDesignKind::GM: return step_gm(s, part, hand, dt, params, cfg);
    case HOIDesignKind::GA: return step_ga(s, part, hand, dt, params, cfg);
    case HOIDesignKind::CM: return step_cm(s, part, hand, dt, params, cfg);
    case HOIDesignKind::CA: return step_ca(s, part, hand, dt, params, cfg);
  }
  return {s, {}};
}

}  // namespace hoicraft
