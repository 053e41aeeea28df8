#include "doctest.h"

#include <cctype>

#include "hoicraft/core_model.hpp"
#include "hoicraft/error.hpp"
#include "hoicraft/recommend.hpp"
#include "support/fixtures.hpp"

using namespace hoicraft;
using fixtures::code_of;
using D = HOIDesignKind;

namespace {

const TierTable& table() { return TierTable::shipped(); }

std::vector<D> designs_of(const Recommendation& r) {
  std::vector<D> out;
  for (const auto& item : r.ranked) out.push_back(item.design);
  return out;
}

// Scores every dataset part on its own and returns the first best id.
int oracle_match(JointKind kind, const std::string& verb_text, SizeClass size, Granularity gran) {
  std::string text;
  for (char c : verb_text) text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  int best = -1;
  int best_id = 0;
  for (const auto& p : table().parts()) {
    std::string verb;
    for (char c : p.gesture_verb) verb.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    bool verb_hit = false;
    std::string word;
    for (char c : text + " ") {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        word.push_back(c);
      } else {
        verb_hit = verb_hit || word == verb;
        word.clear();
      }
    }
    const int s = (p.constraint_kind == kind ? 2 : 0) + (verb_hit ? 2 : 0) + (p.size_class == size ? 1 : 0) +
                  (p.granularity == gran ? 1 : 0);
    if (s > best) {
      best = s;
      best_id = p.id;
    }
  }
  return best_id;
}

PartSpec globe_sphere() {
  PartSpec p;
  p.id = "sphere";
  p.name = "Sphere";
  p.object_name = "Globe";
  p.bounds = {Vec3(0, 0.4, 0), Vec3(0.4, 0.4, 0.4)};
  p.constraint = MotionConstraint::revolute(Vec3::UnitY(), Vec3(0, 0.4, 0), std::nullopt);
  p.interaction_type = "Spin";
  p.affordances = "spin to explore countries";
  return p;
}

}  // namespace

TEST_CASE("metric selector: prompt examples") {
  CHECK(select_metric_rule("I want realistic physics").metric == MetricKind::Realism);
  CHECK(select_metric_rule("Make it easy for beginners").metric == MetricKind::Usability);
  CHECK(select_metric_rule("Need fast response times").metric == MetricKind::Efficiency);
  CHECK(select_metric_rule("I want to master a difficult skill").metric == MetricKind::Challenge);
  CHECK(select_metric_rule("I want something that feels right for my workflow").metric == MetricKind::Preference);
}

TEST_CASE("metric selector: priority order and word boundaries") {
  CHECK(select_metric_rule("A natural but intuitive feel").metric == MetricKind::Realism);
  CHECK(select_metric_rule("Intuitive and fast").metric == MetricKind::Usability);
  CHECK(select_metric_rule("quick yet challenging").metric == MetricKind::Efficiency);
  CHECK(select_metric_rule("REALISTIC").metric == MetricKind::Realism);
  // "unrealistic" and "breakfast" contain keywords but not as whole words.
  CHECK(select_metric_rule("unrealistic breakfast").metric == MetricKind::Preference);
  CHECK(select_metric_rule("low completion time").metric == MetricKind::Efficiency);
  CHECK(select_metric_rule("").metric == MetricKind::Preference);
  const auto d = select_metric_rule("Make it easy for beginners");
  CHECK(d.reason.find("\"easy\"") != std::string::npos);
  CHECK(d.reason.find("\"beginners\"") != std::string::npos);
}

TEST_CASE("metric selector: one decision per part, LLM only refines Preference") {
  MockBackend mock(table());
  const auto out = select_metric({"open it", "realistic"}, {"Door", "Dial"}, &mock);
  REQUIRE(out.size() == 2);
  CHECK(out[0].part == "Door");
  CHECK(out[1].metric == MetricKind::Realism);
  const auto pref = select_metric({"whatever I like", ""}, {"Door"}, &mock);
  CHECK(pref[0].metric == MetricKind::Preference);
}

TEST_CASE("metric names") {
  CHECK(metric_from_string("realism") == MetricKind::Realism);
  CHECK(metric_from_string("EFFICIENCY") == MetricKind::Efficiency);
  CHECK(code_of([] { metric_from_string("speed"); }) == ErrorCode::ParseError);
  CHECK(is_ranking_metric(MetricKind::Usability));
  CHECK_FALSE(is_ranking_metric(MetricKind::Challenge));
}

TEST_CASE("part matcher examples") {
  MatchQuery cabinet{"Cabinet", "Door", "pull open", JointKind::Revolute, SizeClass::Large, Granularity::Discrete};
  CHECK(match_part_rule(cabinet, table()) == 8);
  CHECK(oracle_match(JointKind::Revolute, "pull open", SizeClass::Large, Granularity::Discrete) == 8);

  const auto& hinge = table().part(1);
  MatchQuery self{"Laptop", "Hinge", hinge.gesture_verb, hinge.constraint_kind, hinge.size_class, hinge.granularity};
  CHECK(match_part_rule(self, table()) == 1);
  CHECK(match_score(self, hinge) == 6);

  MatchQuery knob{"Radio", "Volume Knob", "rotate", JointKind::Revolute, SizeClass::Small, Granularity::Continuous};
  CHECK(match_part_rule(knob, table()) == 9);
  CHECK(oracle_match(JointKind::Revolute, "rotate", SizeClass::Small, Granularity::Continuous) == 9);
}

TEST_CASE("part matcher agrees with the oracle over all feature combinations") {
  const std::vector<std::string> verbs = {"rotate", "slide", "press", "pull", "squeeze", "spin", "lift", "twist", ""};
  for (auto kind : {JointKind::Revolute, JointKind::Prismatic}) {
    for (const auto& v : verbs) {
      for (auto size : {SizeClass::Small, SizeClass::Medium, SizeClass::Large}) {
        for (auto gran : {Granularity::Continuous, Granularity::Discrete}) {
          CAPTURE(v);
          MatchQuery q{"Obj", "Part", v, kind, size, gran};
          const int got = match_part_rule(q, table());
          CHECK(got == oracle_match(kind, v, size, gran));
          CHECK(got >= 1);
          CHECK(got <= 13);
        }
      }
    }
  }
}

TEST_CASE("size classes") {
  CHECK(size_class_of(0.05) == SizeClass::Small);
  CHECK(size_class_of(0.10) == SizeClass::Medium);
  CHECK(size_class_of(0.29) == SizeClass::Medium);
  CHECK(size_class_of(0.30) == SizeClass::Large);
}

TEST_CASE("map_ranking examples in mock mode") {
  MockBackend mock(table());
  const DesignIntent any{"open it", ""};
  CHECK(map_ranking(5, MetricKind::Preference, any, table(), mock).ranked.front().design == D::CM);
  CHECK(designs_of(map_ranking(12, MetricKind::Preference, any, table(), mock)) ==
        std::vector<D>{D::CM, D::CA, D::GM, D::PM, D::GA});
  const auto r10 = map_ranking(10, MetricKind::Realism, any, table(), mock);
  REQUIRE(r10.ranked.size() == 5);
  CHECK(r10.ranked[0].design == D::CM);
  CHECK(r10.ranked[1].design == D::PM);
  CHECK(r10.tier_string == std::optional<std::string>("CM=PM>GM=CA>GA"));
  CHECK(r10.matched_dataset_part == 10);
  for (const auto& item : r10.ranked) {
    CHECK_FALSE(item.rationale.empty());
    CHECK(utf8_length(item.rationale) <= kMaxRationaleChars);
  }
  CHECK(code_of([&] { map_ranking(14, MetricKind::Preference, any, table(), mock); }) == ErrorCode::UnknownPart);
  CHECK(code_of([&] { map_ranking(3, MetricKind::Efficiency, any, table(), mock); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("ranked output never breaks tier order") {
  MockBackend mock(table());
  for (int part = 1; part <= 13; ++part) {
    for (auto metric : {MetricKind::Preference, MetricKind::Realism, MetricKind::Usability}) {
      CAPTURE(part);
      CAPTURE(to_string(metric));
      const auto tiers = ranking_tiers(table(), part, metric);
      const auto rec = map_ranking(part, metric, {"anything", ""}, table(), mock);
      const auto order = designs_of(rec);
      REQUIRE(order.size() == 5);
      CHECK(std::set<D>(order.begin(), order.end()).size() == 5);
      for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t j = i + 1; j < order.size(); ++j) CHECK(tiers.tier_of(order[i]) <= tiers.tier_of(order[j]));
      }
    }
  }
}

TEST_CASE("enforce_tier_order keeps in-tier order") {
  const auto tiers = parse_tier_string("CM>GM=CA>GA=PM");
  CHECK(enforce_tier_order(tiers, {D::PM, D::CA, D::GA, D::GM, D::CM}) ==
        std::vector<D>{D::CM, D::CA, D::GM, D::PM, D::GA});
}

TEST_CASE("binary mapper rules") {
  const auto fast = map_binary_rule(MetricKind::Efficiency, {"users must finish fast with minimal effort", ""}, table());
  CHECK(designs_of(fast) == std::vector<D>{D::CM, D::GM});
  CHECK_FALSE(fast.low_confidence);
  CHECK(fast.source == RecommendationSource::Binary);

  const auto precise = map_binary_rule(MetricKind::Efficiency, {"precise fine control of the dial", ""}, table());
  CHECK(precise.ranked.front().design == D::GM);

  const auto mastery = map_binary_rule(MetricKind::Challenge, {"players should master the skill", ""}, table());
  CHECK(designs_of(mastery) == std::vector<D>{D::GM, D::PM});

  const auto heavy = map_binary_rule(MetricKind::Challenge, {"realistic resistance like a heavy real door", ""}, table());
  CHECK(designs_of(heavy) == std::vector<D>{D::PM, D::GM});

  const auto vague = map_binary_rule(MetricKind::Efficiency, {"something good", ""}, table());
  CHECK(vague.ranked.front().design == D::GM);
  CHECK(vague.low_confidence);

  CHECK(code_of([] { map_binary_rule(MetricKind::Realism, {"x", ""}, table()); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("binary output only holds the rule's two options") {
  MockBackend mock(table());
  const std::vector<std::string> intents = {"fast", "precise", "master it", "heavy", "", "whatever", "quick control"};
  for (auto metric : {MetricKind::Efficiency, MetricKind::Challenge}) {
    const std::set<D> allowed =
        metric == MetricKind::Efficiency ? std::set<D>{D::GM, D::CM} : std::set<D>{D::GM, D::PM};
    for (const auto& text : intents) {
      for (bool llm : {false, true}) {
        const auto rec = map_binary(metric, {text, ""}, table(), mock, llm);
        REQUIRE(rec.ranked.size() == 2);
        CHECK(allowed.count(rec.ranked[0].design) == 1);
        CHECK(allowed.count(rec.ranked[1].design) == 1);
        CHECK(rec.ranked[0].design != rec.ranked[1].design);
      }
    }
  }
}

TEST_CASE("object analyzer") {
  const auto a = analyze_object_rule("Microwave", {"Door", "Dial"});
  REQUIRE(a.size() == 2);
  CHECK(a[0].part == "Door");
  CHECK(a[0].interaction_type == "Rotate");
  CHECK(a[1].interaction_type == "Rotate");
  CHECK(a[0].affordances == "operate the Door");
  CHECK(analyze_object_rule("Camera", {"ShutterButton"})[0].interaction_type == "Press");
  CHECK(analyze_object_rule("Box", {"Thing"})[0].interaction_type == "Move");
  CHECK(analyze_object_rule("Box", {"Lid"}, {"lift to open"})[0].affordances == "lift to open");
  CHECK(code_of([] { analyze_object_rule("Box", {}); }) == ErrorCode::InvalidArgument);

  MockBackend mock(table());
  const auto via_llm = analyze_object("Microwave", {"Door", "Dial"}, mock);
  REQUIRE(via_llm.size() == 2);
  CHECK(via_llm[1].interaction_type == "Rotate");
  CHECK(code_of([&] { analyze_object("Box", {}, mock); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("part prioritizer") {
  const auto camera = analyze_object_rule("Camera", {"ZoomRing", "ShutterButton", "Strap"},
                                          {"twist to zoom the lens", "press to take a picture", "carry the camera"});
  const auto p = prioritize_parts_rule({"take a picture", ""}, camera);
  CHECK(p.ordered_ids.front() == "ShutterButton");
  CHECK(p.initial_level == 1);
  CHECK(utf8_length(p.rationale) <= kMaxRationaleChars);

  const auto single = prioritize_parts_rule({"anything", ""}, analyze_object_rule("Box", {"Lid"}));
  CHECK(single.ordered_ids == std::vector<std::string>{"Lid"});
  CHECK(single.initial_level == 1);

  const auto none = prioritize_parts_rule({"zzz", ""}, camera);
  CHECK(none.ordered_ids == std::vector<std::string>{"ZoomRing", "ShutterButton", "Strap"});
  CHECK(none.initial_level == 1);

  const auto two = prioritize_parts_rule({"zoom then take a picture", ""}, camera);
  CHECK(two.initial_level == 2);
  CHECK(code_of([] { prioritize_parts_rule({"x", ""}, {}); }) == ErrorCode::InvalidArgument);

  MockBackend mock(table());
  const auto via_llm = prioritize_parts({"take a picture", ""}, camera, mock);
  CHECK(via_llm.ordered_ids.front() == "ShutterButton");
  CHECK(via_llm.ordered_ids.size() == 3);
}

TEST_CASE("pipeline") {
  MockBackend mock(table());
  const auto globe = recommend_pipeline(globe_sphere(), {"", "make it feel realistic"}, table(), mock);
  CHECK(globe.metric == MetricKind::Realism);
  CHECK(globe.matched_dataset_part == 10);
  CHECK(globe.ranked.front().design == D::CM);
  CHECK(globe.source == RecommendationSource::RankingBased);

  const auto fast = recommend_pipeline(fixtures::slider(), {"fast completion", ""}, table(), mock);
  CHECK(fast.metric == MetricKind::Efficiency);
  CHECK(fast.source == RecommendationSource::Binary);
  CHECK(fast.ranked.size() == 2);
  CHECK_FALSE(fast.matched_dataset_part.has_value());

  CHECK(code_of([&] { recommend_pipeline(fixtures::slider(), {"  ", ""}, table(), mock); }) == ErrorCode::EmptyIntent);
}

TEST_CASE("pipeline is deterministic and offline in mock mode") {
  MockBackend mock(table());
  const auto before = network_call_count();
  const auto a = recommend_pipeline(globe_sphere(), {"spin it", "whatever I like"}, table(), mock);
  const auto b = recommend_pipeline(globe_sphere(), {"spin it", "whatever I like"}, table(), mock);
  CHECK(recommendation_to_json(a) == recommendation_to_json(b));
  CHECK(network_call_count() == before);
}

TEST_CASE("recommendation json round trip") {
  MockBackend mock(table());
  const auto r = map_ranking(8, MetricKind::Usability, {"easy", ""}, table(), mock);
  const auto back = recommendation_from_json(recommendation_to_json(r));
  CHECK(recommendation_to_json(back) == recommendation_to_json(r));
  CHECK(code_of([] { recommendation_from_json({{"metric", "Realism"}}); }) == ErrorCode::SchemaError);
}
