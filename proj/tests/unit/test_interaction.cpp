#include "doctest.h"

#include "hoicraft/error.hpp"
#include "hoicraft/interaction.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace hoicraft;
using doctest::Approx;
using fixtures::code_of;
using fixtures::hand;

namespace {

constexpr double kDt = 1.0 / 90.0;

int count(const std::vector<InteractionEvent>& events, EventKind k) {
  int n = 0;
  for (const auto& e : events) n += e.kind == k ? 1 : 0;
  return n;
}

struct Runner {
  HOIDesignKind design;
  PartSpec part;
  CustomizationParams params;
  InteractionState state;
  std::vector<InteractionEvent> events;
  double t = 0.0;

  Runner(HOIDesignKind d, PartSpec p, CustomizationParams cp = {})
      : design(d), part(std::move(p)), params(cp), state(initial_state(part)) {}

  void feed(const Vec3& tip, Gesture g = Gesture::None, bool tracked = true) {
    auto r = step(design, state, part, hand(t, tip, g, tracked), kDt, params);
    state = r.state;
    events.insert(events.end(), r.events.begin(), r.events.end());
    t += kDt;
  }
  void hold(const Vec3& tip, Gesture g, double seconds) {
    const int n = static_cast<int>(seconds / kDt);
    for (int i = 0; i < n; ++i) feed(tip, g);
  }
  int n(EventKind k) const { return count(events, k); }
};

}  // namespace

TEST_CASE("gesture_matches") {
  CustomizationParams p;
  p.allowed_gestures = {Gesture::Grab, Gesture::Pinch};
  CHECK(gesture_matches(Gesture::Grab, p));
  CHECK_FALSE(gesture_matches(Gesture::None, p));
  p.allowed_gestures = {Gesture::Grab};
  CHECK_FALSE(gesture_matches(Gesture::Point, p));
}

TEST_CASE("customization params validate and convert units") {
  CustomizationParams p;
  CHECK_NOTHROW(p.validate());
  p.release_distance = -1.0;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::InvalidParam);

  const auto cfg = design_config_from_json({{"design", "GA"}, {"stepAngle_deg", 30.0}, {"animationMode", "loop"}});
  CHECK(cfg.design == HOIDesignKind::GA);
  CHECK(cfg.params.step_angle == Approx(kPi / 6));
  CHECK(design_config_to_json(cfg)["stepAngle_deg"].get<double>() == Approx(30.0));
  CHECK(design_config_from_json(design_config_to_json(cfg)).params.animation_mode == AnimationMode::Loop);

  const auto defaults = design_config_from_json(nlohmann::json::object());
  CHECK(design_config_to_json(design_config_from_json(design_config_to_json(defaults))) ==
        design_config_to_json(defaults));

  CHECK(code_of([] { design_config_from_json({{"releaseDistance", -1}}); }) == ErrorCode::InvalidParam);
  CHECK(code_of([] { design_config_from_json({{"design", "XX"}}); }) == ErrorCode::InvalidParam);
  CHECK(code_of([] { design_config_from_json({{"allowedGestures", {"Wave"}}}); }) == ErrorCode::InvalidParam);
}

TEST_CASE("design names round trip") {
  for (auto d : kAllDesigns) CHECK(parse_design(to_string(d)) == d);
  CHECK_FALSE(design_from_string("pm").has_value());
  CHECK(code_of([] { parse_design("XX"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("PM: no contact means no change") {
  const auto p = fixtures::slider();
  const auto s = initial_state(p, 0.2);
  const auto r = step_pm(s, p, hand(0, fixtures::far_away()), kDt, {});
  CHECK(r.state.q == s.q);
  CHECK(r.state.q_dot == 0.0);
  CHECK(r.events.empty());
}

TEST_CASE("PM: pushing against the upper limit holds q there") {
  const auto p = fixtures::slider();
  auto s = initial_state(p, 0.5);
  // Fingertip just inside the low face of the posed slider pushes along +x.
  for (int i = 0; i < 30; ++i) {
    const auto r = step_pm(s, p, hand(i * kDt, Vec3(0.455, 0, 0)), kDt, {});
    CHECK(r.state.q == 0.5);
    CHECK(r.state.q_dot == 0.0);
    s = r.state;
  }
}

TEST_CASE("PM: a push moves the part away from the fingertip") {
  const auto p = fixtures::slider();
  auto s = initial_state(p, 0.1);
  const auto r = step_pm(s, p, hand(0, Vec3(0.055, 0, 0)), kDt, {});
  CHECK(r.state.q > 0.1);
  REQUIRE(count(r.events, EventKind::Moved) == 1);
}

TEST_CASE("PM: total displacement does not grow with resistance") {
  double previous = std::numeric_limits<double>::infinity();
  for (double r : {0.5, 1.0, 2.0, 4.0}) {
    const double d = oracles::pm_sweep_displacement(r);
    CHECK(d > 0.0);
    CHECK(d <= previous + 1e-9);
    previous = d;
  }
}

TEST_CASE("PM: rejects a non-positive time step") {
  const auto p = fixtures::slider();
  CHECK(code_of([&] { step_pm(initial_state(p), p, hand(0, Vec3::Zero()), 0.0, {}); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("GM: acquire with an allowed gesture and follow along the axis") {
  Runner run(HOIDesignKind::GM, fixtures::slider());
  run.feed(Vec3(0, 0, 0), Gesture::None);
  CHECK(run.n(EventKind::Acquired) == 0);
  run.feed(Vec3(0, 0, 0), Gesture::Point);
  CHECK(run.n(EventKind::Acquired) == 0);
  run.feed(Vec3(0, 0, 0), Gesture::Grab);
  REQUIRE(run.n(EventKind::Acquired) == 1);
  run.feed(Vec3(0.05, 0.0, 0.0), Gesture::Grab);
  CHECK(run.state.q == Approx(0.05));
  run.feed(Vec3(0.05, 0.0, 0.0), Gesture::None);
  CHECK(run.n(EventKind::Released) == 1);
  CHECK_FALSE(run.state.acquired);
}

TEST_CASE("GM: release fires at the first step beyond the release distance") {
  auto p = fixtures::slider();  // part scale 0.1 m, release at 0.15 m from the anchor
  Runner run(HOIDesignKind::GM, p);
  run.feed(Vec3::Zero(), Gesture::Grab);
  REQUIRE(run.state.acquired);
  int released_at = -1;
  int first_crossing = -1;
  for (int i = 1; i <= 40 && released_at < 0; ++i) {
    const Vec3 tip(0.0, 0.007 * i, 0.0);
    if (first_crossing < 0 && normalized_anchor_distance(tip, Vec3::Zero(), 0.1) > 1.5) first_crossing = i;
    const auto before = run.n(EventKind::Released);
    run.feed(tip, Gesture::Grab);
    if (run.n(EventKind::Released) > before) released_at = i;
  }
  CHECK(first_crossing == 22);
  CHECK(released_at == first_crossing);
}

TEST_CASE("GM: losing tracking releases") {
  Runner run(HOIDesignKind::GM, fixtures::slider());
  run.feed(Vec3::Zero(), Gesture::Grab);
  run.feed(Vec3::Zero(), Gesture::Grab, false);
  CHECK(run.n(EventKind::Released) == 1);
}

TEST_CASE("CM: contact alone acquires") {
  Runner run(HOIDesignKind::CM, fixtures::slider());
  run.feed(fixtures::far_away());
  CHECK(run.events.empty());
  run.feed(Vec3(0.02, 0.0, 0.0), Gesture::None);
  CHECK(run.n(EventKind::Acquired) == 1);
}

TEST_CASE("CM: a 30 degree arc about the hinge turns the door 30 degrees") {
  Runner run(HOIDesignKind::CM, fixtures::door());
  const double radius = 0.3;
  run.feed(Vec3(radius, 0, 0));
  REQUIRE(run.state.acquired);
  for (int deg = 1; deg <= 30; ++deg) {
    const double a = deg_to_rad(deg);
    run.feed(Vec3(radius * std::cos(a), radius * std::sin(a), 0.0));
  }
  CHECK(run.state.acquired);
  CHECK(std::abs(run.state.q - deg_to_rad(30)) < 1e-6);
}

TEST_CASE("CM: leaving the trigger releases") {
  Runner run(HOIDesignKind::CM, fixtures::slider());
  run.feed(Vec3::Zero());
  run.feed(Vec3(0.0, 0.2, 0.0));
  CHECK(run.n(EventKind::Released) == 1);
  CHECK_FALSE(run.state.acquired);
}

TEST_CASE("GA: a held gesture triggers once") {
  Runner run(HOIDesignKind::GA, fixtures::dial());
  for (int i = 0; i < 100; ++i) run.feed(Vec3::Zero(), Gesture::Grab);
  CHECK(run.n(EventKind::AnimationTriggered) == 1);
}

TEST_CASE("GA: a gesture made outside the trigger does nothing") {
  Runner run(HOIDesignKind::GA, fixtures::dial());
  run.hold(Vec3(0.3, 0, 0), Gesture::Grab, 0.3);
  run.hold(Vec3::Zero(), Gesture::Grab, 0.3);  // still the same cycle
  CHECK(run.n(EventKind::AnimationTriggered) == 0);
}

TEST_CASE("GA: loop mode moves a door back and forth") {
  CustomizationParams params;
  params.animation_mode = AnimationMode::Loop;
  Runner run(HOIDesignKind::GA, fixtures::door(), params);
  run.hold(Vec3(0.3, 0, 0), Gesture::Grab, 1.0);
  CHECK(run.state.q == Approx(kPi / 2));
  run.hold(Vec3(0, 0.3, 0), Gesture::None, 0.2);
  run.hold(Vec3(0, 0.3, 0), Gesture::Grab, 1.0);
  CHECK(run.n(EventKind::AnimationTriggered) == 2);
  CHECK(run.state.q == Approx(0.0));
}

TEST_CASE("GA: single mode keeps the first direction") {
  Runner run(HOIDesignKind::GA, fixtures::door());
  run.hold(Vec3(0.3, 0, 0), Gesture::Grab, 1.0);
  run.hold(Vec3(0, 0.3, 0), Gesture::None, 0.2);
  run.hold(Vec3(0, 0.3, 0), Gesture::Grab, 1.0);
  CHECK(run.n(EventKind::AnimationTriggered) == 2);
  CHECK(run.state.q == Approx(kPi / 2));
}

TEST_CASE("GA: three cycles on a dial add three step angles") {
  CustomizationParams params;
  params.step_angle = deg_to_rad(30.0);
  Runner run(HOIDesignKind::GA, fixtures::dial(), params);
  for (int cycle = 0; cycle < 3; ++cycle) {
    run.hold(Vec3::Zero(), Gesture::Grab, 0.8);
    run.hold(Vec3::Zero(), Gesture::None, 0.1);
  }
  CHECK(run.n(EventKind::AnimationTriggered) == 3);
  CHECK(rad_to_deg(run.state.q) == Approx(90.0));
}

TEST_CASE("GA: quick retriggers on a dial still add one step each") {
  CustomizationParams params;
  params.step_angle = deg_to_rad(30.0);
  Runner run(HOIDesignKind::GA, fixtures::dial(), params);
  for (int cycle = 0; cycle < 4; ++cycle) {
    run.hold(Vec3::Zero(), Gesture::Grab, 0.1);
    run.hold(Vec3::Zero(), Gesture::None, 0.05);
  }
  run.hold(Vec3::Zero(), Gesture::None, 1.0);
  CHECK(run.n(EventKind::AnimationTriggered) == 4);
  CHECK(rad_to_deg(run.state.q) == Approx(120.0));
}

TEST_CASE("CA: dwelling inside triggers once") {
  Runner run(HOIDesignKind::CA, fixtures::dial());
  run.hold(fixtures::far_away(), Gesture::None, 0.2);
  run.hold(Vec3::Zero(), Gesture::None, 5.0);
  run.hold(fixtures::far_away(), Gesture::None, 0.2);
  CHECK(run.n(EventKind::AnimationTriggered) == 1);
}

TEST_CASE("CA: each entry triggers") {
  Runner run(HOIDesignKind::CA, fixtures::dial());
  for (int cycle = 0; cycle < 3; ++cycle) {
    run.hold(fixtures::far_away(), Gesture::None, 0.1);
    run.hold(Vec3::Zero(), Gesture::None, 0.7);
  }
  CHECK(run.n(EventKind::AnimationTriggered) == 3);
  CHECK(rad_to_deg(run.state.q) == Approx(90.0));
}

TEST_CASE("CA: no entry, no events") {
  Runner run(HOIDesignKind::CA, fixtures::door());
  run.hold(fixtures::far_away(), Gesture::Grab, 1.0);
  CHECK(run.events.empty());
  CHECK(run.state.q == 0.0);
}

TEST_CASE("randomized sessions keep the state-machine invariants") {
  const PartSpec parts[] = {fixtures::slider(), fixtures::door(), fixtures::dial()};
  unsigned seed = 11;
  for (const auto& part : parts) {
    for (auto d : kAllDesigns) {
      CAPTURE(part.id);
      CAPTURE(to_string(d));
      const auto rep = oracles::run_random_session(d, part, 4000, seed++);
      CHECK(rep.bound_violations == 0);
      if (d == HOIDesignKind::CA || d == HOIDesignKind::GA) {
        CHECK(rep.triggers == rep.expected_triggers);
        CHECK(rep.triggers > 0);
      }
      if (d == HOIDesignKind::GM) {
        CHECK(rep.release_mismatches == 0);
        CHECK(rep.releases > 0);
      }
      if (d == HOIDesignKind::GM || d == HOIDesignKind::CM) {
        CHECK(rep.acquisitions > 0);
        CHECK(rep.max_follow_error < 1e-6);
      }
    }
  }
}

TEST_CASE("follow_delta") {
  const auto pri = MotionConstraint::prismatic(Vec3(0, 1, 0), Vec3::Zero(), {0, 1});
  CHECK(follow_delta(pri, Vec3::Zero(), Vec3(0.3, 0.2, 0.1)) == Approx(0.2));
  const auto rev = MotionConstraint::revolute(Vec3::UnitZ(), Vec3::Zero(), std::nullopt);
  CHECK(follow_delta(rev, Vec3(1, 0, 0), Vec3(0, 1, 0.5)) == Approx(kPi / 2));
  CHECK(follow_delta(rev, Vec3(0.001, 0, 0), Vec3(0, 1, 0)) == 0.0);
}
