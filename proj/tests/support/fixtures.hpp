#pragma once

#include <string>

#include "doctest.h"

#include "hoicraft/core_model.hpp"
#include "hoicraft/error.hpp"
#include "hoicraft/interaction.hpp"
#include "hoicraft/simulate.hpp"

namespace fixtures {

using hoicraft::Vec3;

// Error code thrown by fn; fails the test when nothing is thrown.
template <class F>
hoicraft::ErrorCode code_of(F&& fn) {
  try {
    fn();
  } catch (const hoicraft::Error& e) {
    return e.code();
  }
  FAIL("expected hoicraft::Error");
  return hoicraft::ErrorCode::InvalidArgument;
}

// Prismatic slider along +x, 0.1 m cube at the origin, travel [0, 0.5].
inline hoicraft::PartSpec slider(std::string id = "slider") {
  hoicraft::PartSpec p;
  p.id = id;
  p.name = "Slider";
  p.object_name = "Rig";
  p.bounds = {Vec3::Zero(), Vec3(0.1, 0.1, 0.1)};
  p.constraint = hoicraft::MotionConstraint::prismatic(Vec3::UnitX(), Vec3::Zero(), {0.0, 0.5});
  p.interaction_type = "Slide";
  return p;
}

// Door hinged on the z axis at the origin, slab along +x, opens to 90 degrees.
inline hoicraft::PartSpec door(std::string id = "door") {
  hoicraft::PartSpec p;
  p.id = id;
  p.name = "Door";
  p.object_name = "Cabinet";
  p.bounds = {Vec3(0.2, 0.0, 0.0), Vec3(0.4, 0.02, 0.3)};
  p.constraint = hoicraft::MotionConstraint::revolute(Vec3::UnitZ(), Vec3::Zero(),
                                                      hoicraft::Interval{0.0, hoicraft::kPi / 2});
  p.interaction_type = "Pull";
  return p;
}

// Free-spinning dial about z, 5 cm across.
inline hoicraft::PartSpec dial(std::string id = "dial") {
  hoicraft::PartSpec p;
  p.id = id;
  p.name = "Dial";
  p.object_name = "Radio";
  p.bounds = {Vec3::Zero(), Vec3(0.05, 0.05, 0.02)};
  p.constraint = hoicraft::MotionConstraint::revolute(Vec3::UnitZ(), Vec3::Zero(), std::nullopt);
  p.interaction_type = "Rotate";
  return p;
}

inline hoicraft::HandSample hand(double t, const Vec3& at, hoicraft::Gesture g = hoicraft::Gesture::None,
                                 bool tracked = true) {
  return {t, at, g, tracked};
}

// A point well outside every fixture's trigger region.
inline Vec3 far_away() { return Vec3(5.0, 5.0, 5.0); }

}  // namespace fixtures
