#include "hoicraft/recommend.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "hoicraft/error.hpp"

namespace hoicraft {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Whole-word (or whole-phrase) occurrence in already lower-cased text.
bool has_word(std::string_view text, std::string_view word) {
  for (auto pos = text.find(word); pos != std::string_view::npos; pos = text.find(word, pos + 1)) {
    const bool left = pos == 0 || !is_word_char(text[pos - 1]);
    const auto end = pos + word.size();
    const bool right = end == text.size() || !is_word_char(text[end]);
    if (left && right) return true;
  }
  return false;
}

std::vector<std::string> matched_words(std::string_view text, const std::vector<std::string_view>& words) {
  std::vector<std::string> hits;
  for (auto w : words) {
    if (has_word(text, w)) hits.emplace_back(w);
  }
  return hits;
}

std::vector<std::string> tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (is_word_char(c)) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string quoted_list(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out += ", ";
    out += "\"" + words[i] + "\"";
  }
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

const std::vector<std::string_view> kRealismWords = {
    "realistic", "lifelike", "authentic", "natural", "detailed", "immersive", "convincing",
    "credible", "believable", "vivid", "true-to-life", "photorealistic", "faithful", "genuine"};
const std::vector<std::string_view> kUsabilityWords = {
    "intuitive", "accessible", "user-friendly", "navigable", "comprehensible", "effortless", "simple",
    "streamlined", "clear", "approachable", "responsive", "comfortable", "easy", "beginner", "beginners",
    "novice", "novices"};
const std::vector<std::string_view> kEfficiencyWords = {
    "fast", "quick", "speed", "responsive", "latency", "accuracy", "error rate", "completion time", "efficient"};
const std::vector<std::string_view> kChallengeWords = {
    "demanding", "complex", "challenging", "intense", "skillful", "rewarding", "testing", "strenuous",
    "satisfying", "motivating", "intricate", "mastery-focused", "accomplishment-driven", "stimulating",
    "engaging", "master", "mastery", "difficult", "skill"};

const std::vector<std::string_view> kPrecisionWords = {
    "precision", "precise", "precisely", "fine", "fine-tuning", "delicate", "control", "controlled",
    "accurate", "accuracy", "careful", "exact"};
const std::vector<std::string_view> kSpeedWords = {
    "fast", "quick", "quickly", "speed", "rapid", "minimal", "effort", "effortless", "easy", "instant"};
const std::vector<std::string_view> kMasteryWords = {
    "master", "mastery", "skill", "skills", "skillful", "practice", "learn", "learning", "training", "technique"};
const std::vector<std::string_view> kResistanceWords = {
    "realistic", "resistance", "natural", "heavy", "real", "physical", "physics", "weight", "difficulty", "force"};

const std::vector<std::string_view> kContinuousWords = {
    "adjust", "adjusts", "volume", "knob", "dial", "slider", "fine", "continuous", "spin", "zoom"};

const std::set<std::string> kStopwords = {
    "a", "an", "the", "to", "of", "for", "and", "or", "in", "on", "with", "my", "it", "is", "be", "that",
    "this", "i", "want", "should", "can", "make", "so", "as", "at", "by", "from", "into", "user", "users",
    "we", "they", "their", "its", "will", "need", "needs", "must"};

MetricDecision decide(std::string_view text) {
  const auto t = lower(text);
  const std::pair<MetricKind, const std::vector<std::string_view>*> rules[] = {
      {MetricKind::Realism, &kRealismWords},
      {MetricKind::Usability, &kUsabilityWords},
      {MetricKind::Efficiency, &kEfficiencyWords},
      {MetricKind::Challenge, &kChallengeWords}};
  for (const auto& [metric, words] : rules) {
    if (auto hits = matched_words(t, *words); !hits.empty()) {
      return {"", metric, "contains " + quoted_list(hits)};
    }
  }
  return {"", MetricKind::Preference, "no metric keywords; personal preference"};
}

std::string design_rationale(HOIDesignKind d, const std::vector<std::string>& pros, std::string_view why) {
  std::string text = std::string(long_name(d)) + " " + std::string(why);
  if (!pros.empty()) {
    text += ": " + pros.front();
    if (pros.size() > 1) text += ", " + pros[1];
  }
  text += ".";
  return truncate_rationale(text).first;
}

JointKind kind_from_verb(std::string_view verb) {
  static const std::vector<std::string_view> prismatic = {"slide", "press", "push", "click", "pump", "drag"};
  const auto v = lower(verb);
  for (auto w : prismatic) {
    if (has_word(v, w)) return JointKind::Prismatic;
  }
  return JointKind::Revolute;
}

json item_json(const RankedItem& item, int rank) {
  return {{"rank", rank},
          {"choice", std::string(to_string(item.design))},
          {"rationale", item.rationale},
          {"keywords", {{"pros", item.pros}, {"cons", item.cons}}}};
}

RankedItem item_from_json(const json& j) {
  RankedItem item;
  item.design = parse_design(j.at("choice").get<std::string>());
  item.rationale = j.at("rationale").get<std::string>();
  item.pros = j.at("keywords").at("pros").get<std::vector<std::string>>();
  item.cons = j.at("keywords").at("cons").get<std::vector<std::string>>();
  return item;
}

std::pair<HOIDesignKind, HOIDesignKind> binary_options(MetricKind metric) {
  if (metric == MetricKind::Efficiency) return {HOIDesignKind::GM, HOIDesignKind::CM};
  if (metric == MetricKind::Challenge) return {HOIDesignKind::GM, HOIDesignKind::PM};
  throw Error(ErrorCode::InvalidArgument, "binary mapping needs Efficiency or Challenge, got " +
                                              std::string(to_string(metric)));
}

json analysis_to_json(const PartAnalysis& a) {
  json out = json::array();
  for (const auto& e : a) {
    out.push_back({{"object", e.object}, {"part", e.part}, {"interaction_type", e.interaction_type},
                   {"affordances", e.affordances}});
  }
  return out;
}

json prioritizer_inputs(const DesignIntent& intent, const PartAnalysis& analysis) {
  json parts = json::array();
  for (const auto& e : analysis) {
    parts.push_back({{"id", e.id}, {"affordances", e.affordances}, {"interaction_type", e.interaction_type}});
  }
  return {{"intent", intent.text()}, {"parts", parts}};
}

json query_inputs(const MatchQuery& q) {
  json j{{"object", q.object}, {"part", q.part}, {"interactionType", q.interaction_type}};
  if (q.kind) j["constraintKind"] = std::string(to_string(*q.kind));
  if (q.size) j["sizeClass"] = std::string(to_string(*q.size));
  if (q.granularity) j["granularity"] = std::string(to_string(*q.granularity));
  return j;
}

MatchQuery query_from_inputs(const json& j) {
  MatchQuery q;
  q.object = j.value("object", "");
  q.part = j.value("part", "");
  q.interaction_type = j.value("interactionType", "");
  if (j.contains("constraintKind")) {
    q.kind = joint_kind_from_string(j.at("constraintKind").get<std::string>());
  } else {
    q.kind = kind_from_verb(q.interaction_type);
  }
  if (j.contains("sizeClass")) q.size = size_class_from_string(j.at("sizeClass").get<std::string>());
  if (j.contains("granularity")) q.granularity = granularity_from_string(j.at("granularity").get<std::string>());
  return q;
}

}  // namespace

std::string DesignIntent::text() const {
  const auto a = trim(intended_use);
  const auto b = trim(target_experience);
  if (a.empty()) return b;
  if (b.empty()) return a;
  return a + " " + b;
}

void DesignIntent::validate() const {
  if (text().empty()) throw Error(ErrorCode::EmptyIntent, "design intent is empty");
}

std::string_view to_string(MetricKind m) {
  switch (m) {
    case MetricKind::Realism: return "Realism";
    case MetricKind::Usability: return "Usability";
    case MetricKind::Efficiency: return "Efficiency";
    case MetricKind::Challenge: return "Challenge";
    case MetricKind::Preference: return "Preference";
  }
  return "Preference";
}

MetricKind metric_from_string(std::string_view s) {
  const auto l = lower(s);
  for (auto m : {MetricKind::Realism, MetricKind::Usability, MetricKind::Efficiency, MetricKind::Challenge,
                 MetricKind::Preference}) {
    if (lower(to_string(m)) == l) return m;
  }
  throw Error(ErrorCode::ParseError, "unknown metric: " + std::string(s));
}

bool is_ranking_metric(MetricKind m) {
  return m == MetricKind::Realism || m == MetricKind::Usability || m == MetricKind::Preference;
}

std::string_view long_name(HOIDesignKind d) {
  switch (d) {
    case HOIDesignKind::PM: return "Physics-based manipulation";
    case HOIDesignKind::GM: return "Gesture-based manipulation";
    case HOIDesignKind::GA: return "Gesture-based animation";
    case HOIDesignKind::CM: return "Contact-based manipulation";
    case HOIDesignKind::CA: return "Contact-based animation";
  }
  return "";
}

std::string_view to_string(RecommendationSource s) {
  return s == RecommendationSource::Binary ? "Binary" : "RankingBased";
}

MetricDecision select_metric_rule(std::string_view text) { return decide(text); }

std::vector<MetricDecision> select_metric(const DesignIntent& intent, const std::vector<std::string>& parts,
                                          Backend* llm) {
  const auto rule = decide(intent.text());
  std::vector<MetricDecision> out;
  for (const auto& p : parts) out.push_back({p, rule.metric, rule.reason});
  if (!llm || rule.metric != MetricKind::Preference || parts.empty()) return out;

  CompletionRequest req;
  req.template_id = TemplateId::MetricSelector;
  req.inputs = {{"parts", parts}, {"intent", intent.text()}};
  req.validation.part_count = parts.size();
  const auto res = llm->complete(req);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& item = res.parsed.at(i);
    out[i].metric = metric_from_string(item.at("metric").get<std::string>());
    out[i].reason = item.at("reason").get<std::string>();
  }
  return out;
}

SizeClass size_class_of(double part_scale) {
  if (part_scale < 0.10) return SizeClass::Small;
  if (part_scale < 0.30) return SizeClass::Medium;
  return SizeClass::Large;
}

MatchQuery match_query(const PartSpec& part) {
  MatchQuery q;
  q.object = part.object_name;
  q.part = part.name;
  q.interaction_type = part.interaction_type;
  q.kind = part.constraint.kind();
  q.size = size_class_of(part.part_scale());
  const auto text = lower(part.name + " " + part.interaction_type + " " + part.affordances);
  const bool continuous = part.constraint.unbounded_revolute() || !matched_words(text, kContinuousWords).empty();
  q.granularity = continuous ? Granularity::Continuous : Granularity::Discrete;
  return q;
}

MatchQuery match_query(const PartAnalysisEntry& entry) {
  MatchQuery q;
  q.object = entry.object;
  q.part = entry.part;
  q.interaction_type = entry.interaction_type;
  q.kind = kind_from_verb(entry.interaction_type);
  const auto text = lower(entry.part + " " + entry.interaction_type + " " + entry.affordances);
  q.granularity = matched_words(text, kContinuousWords).empty() ? Granularity::Discrete : Granularity::Continuous;
  return q;
}

int match_score(const MatchQuery& q, const DatasetPart& c) {
  int score = 0;
  if (q.kind && *q.kind == c.constraint_kind) score += 2;
  if (has_word(lower(q.interaction_type), lower(c.gesture_verb))) score += 2;
  if (q.size && *q.size == c.size_class) score += 1;
  if (q.granularity && *q.granularity == c.granularity) score += 1;
  return score;
}

int match_part_rule(const MatchQuery& q, const TierTable& table) {
  int best_id = 1;
  int best = -1;
  for (const auto& c : table.parts()) {
    const int s = match_score(q, c);
    if (s > best) {
      best = s;
      best_id = c.id;
    }
  }
  return best_id;
}

std::vector<int> match_parts(const std::vector<MatchQuery>& queries, Backend& llm) {
  if (queries.empty()) throw Error(ErrorCode::InvalidArgument, "part matcher needs at least one part");
  CompletionRequest req;
  req.template_id = TemplateId::PartMatcher;
  req.inputs = {{"parts", json::array()}};
  for (const auto& q : queries) req.inputs["parts"].push_back(query_inputs(q));
  req.validation.part_count = queries.size();
  const auto res = llm.complete(req);
  std::vector<int> ids;
  for (const auto& item : res.parsed) ids.push_back(item.at("id").get<int>());
  return ids;
}

json recommendation_to_llm_json(const Recommendation& r) {
  json out = json::array();
  for (std::size_t i = 0; i < r.ranked.size(); ++i) out.push_back(item_json(r.ranked[i], static_cast<int>(i + 1)));
  return out;
}

json recommendation_to_json(const Recommendation& r) {
  json j{{"metric", std::string(to_string(r.metric))},
         {"source", std::string(to_string(r.source))},
         {"matchedDatasetPart", r.matched_dataset_part ? json(*r.matched_dataset_part) : json(nullptr)},
         {"tierString", r.tier_string ? json(*r.tier_string) : json(nullptr)},
         {"lowConfidence", r.low_confidence},
         {"rationaleTruncated", r.rationale_truncated},
         {"ranked", recommendation_to_llm_json(r)}};
  return j;
}

Recommendation recommendation_from_json(const json& j) {
  try {
    Recommendation r;
    r.metric = metric_from_string(j.at("metric").get<std::string>());
    r.source = j.at("source").get<std::string>() == "Binary" ? RecommendationSource::Binary
                                                             : RecommendationSource::RankingBased;
    if (j.contains("matchedDatasetPart") && !j.at("matchedDatasetPart").is_null()) {
      r.matched_dataset_part = j.at("matchedDatasetPart").get<int>();
    }
    if (j.contains("tierString") && !j.at("tierString").is_null()) r.tier_string = j.at("tierString").get<std::string>();
    r.low_confidence = j.value("lowConfidence", false);
    r.rationale_truncated = j.value("rationaleTruncated", false);
    for (const auto& item : j.at("ranked")) r.ranked.push_back(item_from_json(item));
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed recommendation: ") + e.what());
  }
}

TierList ranking_tiers(const TierTable& table, int part_id, MetricKind metric) {
  switch (metric) {
    case MetricKind::Preference: return table.lookup_tiers(part_id, SurveyMetric::Preference);
    case MetricKind::Realism: return table.lookup_tiers(part_id, SurveyMetric::Realism);
    case MetricKind::Usability: return table.usability_tiers(part_id);
    default:
      throw Error(ErrorCode::InvalidArgument,
                  "ranking-based mapping needs Preference, Realism or Usability, got " + std::string(to_string(metric)));
  }
}

std::vector<HOIDesignKind> enforce_tier_order(const TierList& tiers, const std::vector<HOIDesignKind>& designs) {
  auto out = designs;
  std::stable_sort(out.begin(), out.end(),
                   [&](HOIDesignKind a, HOIDesignKind b) { return tiers.tier_of(a) < tiers.tier_of(b); });
  return out;
}

Recommendation map_ranking(int part_id, MetricKind metric, const DesignIntent& intent, const TierTable& table,
                           Backend& llm) {
  table.part(part_id);
  const auto tiers = ranking_tiers(table, part_id, metric);
  const auto source_metric = metric == MetricKind::Usability ? table.usability_source(part_id)
                             : metric == MetricKind::Realism ? SurveyMetric::Realism
                                                             : SurveyMetric::Preference;

  const auto candidates = tiers.flattened();
  json comments = json::object();
  std::vector<std::string> labels;
  for (auto d : candidates) {
    const auto pc = table.pros_cons(d, part_id);
    comments[std::string(to_string(d))] = {{"pros", pc.pros}, {"cons", pc.cons}};
    labels.emplace_back(to_string(d));
  }

  CompletionRequest req;
  req.template_id = TemplateId::MapperRanking;
  req.inputs = {{"candidates", labels},
                {"tiers", table.tier_string(part_id, source_metric)},
                {"comments", comments},
                {"intent", intent.text()},
                {"partId", part_id}};
  req.validation.allowed = candidates;
  const auto res = llm.complete(req);

  std::map<HOIDesignKind, RankedItem> by_design;
  std::vector<HOIDesignKind> order;
  for (const auto& item : res.parsed) {
    auto ri = item_from_json(item);
    order.push_back(ri.design);
    by_design[ri.design] = std::move(ri);
  }
  // Candidates the model left out keep the offline precedence inside their tier.
  for (auto d : mock_precedence()) {
    if (!by_design.count(d)) order.push_back(d);
  }
  order = enforce_tier_order(tiers, order);

  Recommendation rec;
  rec.metric = metric;
  rec.matched_dataset_part = part_id;
  rec.source = RecommendationSource::RankingBased;
  rec.tier_string = table.tier_string(part_id, source_metric);
  rec.rationale_truncated = res.rationale_truncated;
  for (auto d : order) {
    if (auto it = by_design.find(d); it != by_design.end()) {
      rec.ranked.push_back(it->second);
      continue;
    }
    const auto pc = table.pros_cons(d, part_id);
    const auto tier = tiers.tier_of(d);
    rec.ranked.push_back({d, design_rationale(d, pc.pros, "ranks in tier " + std::to_string(tier + 1)), pc.pros,
                          pc.cons});
  }
  return rec;
}

Recommendation map_binary_rule(MetricKind metric, const DesignIntent& intent, const TierTable& table) {
  const auto [first, second] = binary_options(metric);
  const auto text = lower(intent.text());

  const bool efficiency = metric == MetricKind::Efficiency;
  const auto& first_words = efficiency ? kPrecisionWords : kMasteryWords;
  const auto& second_words = efficiency ? kSpeedWords : kResistanceWords;
  const auto first_hits = matched_words(text, first_words);
  const auto second_hits = matched_words(text, second_words);

  Recommendation rec;
  rec.metric = metric;
  rec.source = RecommendationSource::Binary;
  HOIDesignKind top = first;
  std::string why;
  if (second_hits.size() > first_hits.size()) {
    top = second;
    why = "matches the " + std::string(efficiency ? "speed" : "realistic resistance") + " cues " +
          quoted_list(second_hits);
  } else if (first_hits.size() > second_hits.size()) {
    why = "matches the " + std::string(efficiency ? "precision" : "mastery") + " cues " + quoted_list(first_hits);
  } else {
    rec.low_confidence = true;
    why = "is the default; the intent gives no clear cue (low confidence)";
  }
  const auto other = top == first ? second : first;

  const auto pc_top = table.pros_cons(top);
  const auto pc_other = table.pros_cons(other);
  rec.ranked.push_back({top, truncate_rationale(std::string(long_name(top)) + " " + why + ".").first, pc_top.pros,
                        pc_top.cons});
  rec.ranked.push_back({other, design_rationale(other, pc_other.pros, "is the alternative"), pc_other.pros,
                        pc_other.cons});
  return rec;
}

Recommendation map_binary(MetricKind metric, const DesignIntent& intent, const TierTable& table, Backend& llm,
                          bool use_llm) {
  if (!use_llm) return map_binary_rule(metric, intent, table);
  const auto [first, second] = binary_options(metric);

  CompletionRequest req;
  req.template_id = TemplateId::MapperBinary;
  req.inputs = {{"primary_metric", std::string(to_string(metric))}, {"intent", intent.text()}};
  req.validation.allowed = std::vector<HOIDesignKind>{first, second};
  const auto res = llm.complete(req);

  Recommendation rec;
  rec.metric = metric;
  rec.source = RecommendationSource::Binary;
  rec.rationale_truncated = res.rationale_truncated;
  for (const auto& item : res.parsed) rec.ranked.push_back(item_from_json(item));
  for (auto d : {first, second}) {
    const bool present = std::any_of(rec.ranked.begin(), rec.ranked.end(), [d](const auto& r) { return r.design == d; });
    if (!present) {
      const auto pc = table.pros_cons(d);
      rec.ranked.push_back({d, design_rationale(d, pc.pros, "is the alternative"), pc.pros, pc.cons});
    }
  }
  return rec;
}

PartAnalysis analyze_object_rule(const std::string& object, const std::vector<std::string>& parts,
                                 const std::vector<std::string>& descriptors) {
  if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "object analysis needs at least one part");
  static const std::vector<std::pair<std::vector<std::string_view>, std::string_view>> table = {
      {{"knob", "dial"}, "Rotate"},
      {{"button"}, "Press"},
      {{"slider"}, "Slide"},
      {{"door", "lid", "hinge"}, "Rotate"},
      {{"drawer"}, "Slide"},
      {{"trigger"}, "Squeeze"}};
  PartAnalysis out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto name = lower(parts[i]);
    std::string type = "Move";
    for (const auto& [keys, verb] : table) {
      if (std::any_of(keys.begin(), keys.end(), [&](auto k) { return name.find(k) != std::string::npos; })) {
        type = verb;
        break;
      }
    }
    const bool has_desc = i < descriptors.size() && !trim(descriptors[i]).empty();
    out.push_back({parts[i], object, parts[i], type, has_desc ? descriptors[i] : "operate the " + parts[i]});
  }
  return out;
}

PartAnalysis analyze_object(const std::string& object, const std::vector<std::string>& parts, Backend& llm,
                            const std::vector<std::string>& descriptors) {
  if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "object analysis needs at least one part");
  CompletionRequest req;
  req.template_id = TemplateId::ObjectAnalyzer;
  req.inputs = {{"object", object}, {"parts", parts}};
  if (!descriptors.empty()) req.inputs["descriptors"] = descriptors;
  req.validation.part_count = parts.size();
  const auto res = llm.complete(req);

  PartAnalysis out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& item = res.parsed.at(i);
    out.push_back({parts[i], item.at("object").get<std::string>(), item.at("part").get<std::string>(),
                   item.at("interaction_type").get<std::string>(), item.at("affordances").get<std::string>()});
  }
  return out;
}

Prioritization prioritize_parts_rule(const DesignIntent& intent, const PartAnalysis& analysis) {
  if (analysis.empty()) throw Error(ErrorCode::InvalidArgument, "prioritization needs at least one part");
  std::set<std::string> intent_words;
  for (auto& t : tokens(intent.text())) {
    if (!kStopwords.count(t)) intent_words.insert(t);
  }

  std::vector<std::pair<int, std::size_t>> scored;
  for (std::size_t i = 0; i < analysis.size(); ++i) {
    std::set<std::string> part_words;
    for (auto& t : tokens(analysis[i].affordances + " " + analysis[i].interaction_type)) part_words.insert(t);
    int overlap = 0;
    for (const auto& w : intent_words) overlap += part_words.count(w) ? 1 : 0;
    scored.emplace_back(overlap, i);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  Prioritization p;
  int with_overlap = 0;
  for (const auto& [overlap, i] : scored) {
    p.ordered_ids.push_back(analysis[i].id);
    if (overlap > 0) ++with_overlap;
  }
  p.initial_level = std::clamp(with_overlap, 1, static_cast<int>(analysis.size()));
  if (with_overlap == 0) {
    p.rationale = "No part shares words with the intent; keeping the listed order with one part active.";
  } else {
    p.rationale = analysis[scored.front().second].part + " matches the intent best; " +
                  std::to_string(p.initial_level) + " part(s) relate to it.";
  }
  p.rationale = truncate_rationale(p.rationale).first;
  return p;
}

Prioritization prioritize_parts(const DesignIntent& intent, const PartAnalysis& analysis, Backend& llm) {
  if (analysis.empty()) throw Error(ErrorCode::InvalidArgument, "prioritization needs at least one part");
  CompletionRequest req;
  req.template_id = TemplateId::PartPrioritizer;
  req.inputs = prioritizer_inputs(intent, analysis);
  req.validation.part_count = analysis.size();
  const auto res = llm.complete(req);

  std::vector<std::string> known;
  for (const auto& e : analysis) known.push_back(e.id);
  Prioritization p;
  for (const auto& id : res.parsed.at("priority_parts")) {
    const auto s = id.get<std::string>();
    if (std::find(known.begin(), known.end(), s) == known.end()) {
      throw Error(ErrorCode::SchemaError, "prioritizer returned an unknown part id: " + s, res.raw_text);
    }
    p.ordered_ids.push_back(s);
  }
  for (const auto& id : known) {
    if (std::find(p.ordered_ids.begin(), p.ordered_ids.end(), id) == p.ordered_ids.end()) p.ordered_ids.push_back(id);
  }
  p.initial_level = res.parsed.at("initial_level").get<int>();
  p.rationale = res.parsed.at("rationale").get<std::string>();
  return p;
}

Recommendation recommend_pipeline(const PartSpec& part, const DesignIntent& intent, const TierTable& table,
                                  Backend& llm, const RecommendOptions& opts) {
  intent.validate();
  const auto decisions = select_metric(intent, {part.name}, opts.llm_metric_selector ? &llm : nullptr);
  const auto metric = decisions.front().metric;
  if (!is_ranking_metric(metric)) return map_binary(metric, intent, table, llm, opts.llm_binary_mapper);
  const auto matched = match_parts({match_query(part)}, llm).front();
  return map_ranking(matched, metric, intent, table, llm);
}

CompletionResponse MockBackend::complete(const CompletionRequest& request) {
  const auto& in = request.inputs;
  render_prompt(request.template_id, in);  // same input checks as the live path
  json out;
  switch (request.template_id) {
    case TemplateId::ObjectAnalyzer: {
      auto parts = in.at("parts").get<std::vector<std::string>>();
      auto descriptors = in.value("descriptors", std::vector<std::string>{});
      out = analysis_to_json(analyze_object_rule(in.at("object").get<std::string>(), parts, descriptors));
      break;
    }
    case TemplateId::PartPrioritizer: {
      PartAnalysis analysis;
      for (const auto& p : in.at("parts")) {
        const auto id = p.at("id").get<std::string>();
        analysis.push_back({id, "", id, p.value("interaction_type", ""), p.at("affordances").get<std::string>()});
      }
      const auto pr = prioritize_parts_rule({in.at("intent").get<std::string>(), ""}, analysis);
      out = {{"priority_parts", pr.ordered_ids}, {"initial_level", pr.initial_level}, {"rationale", pr.rationale}};
      break;
    }
    case TemplateId::MetricSelector: {
      const auto d = decide(in.at("intent").get<std::string>());
      out = json::array();
      for (const auto& p : in.at("parts")) {
        out.push_back({{"part", p.get<std::string>()}, {"metric", lower(to_string(d.metric))}, {"reason", d.reason}});
      }
      break;
    }
    case TemplateId::PartMatcher: {
      out = json::array();
      for (const auto& p : in.at("parts")) {
        const auto id = match_part_rule(query_from_inputs(p), table_);
        out.push_back({{"part", p.value("part", "")}, {"id", id}, {"matchedPart", table_.part(id).short_name()}});
      }
      break;
    }
    case TemplateId::MapperRanking: {
      std::vector<HOIDesignKind> candidates;
      for (const auto& c : in.at("candidates")) candidates.push_back(parse_design(c.get<std::string>()));
      const auto precedence = mock_precedence();
      auto prec_index = [&](HOIDesignKind d) {
        return std::find(precedence.begin(), precedence.end(), d) - precedence.begin();
      };
      std::stable_sort(candidates.begin(), candidates.end(),
                       [&](auto a, auto b) { return prec_index(a) < prec_index(b); });
      if (in.contains("tiers")) candidates = enforce_tier_order(parse_tier_string(in.at("tiers").get<std::string>()), candidates);
      out = json::array();
      const auto comments = in.value("comments", json::object());
      int rank = 1;
      for (auto d : candidates) {
        const auto label = std::string(to_string(d));
        const auto pc = comments.value(label, json::object());
        const auto pros = pc.value("pros", std::vector<std::string>{});
        const auto cons = pc.value("cons", std::vector<std::string>{});
        const auto why = rank == 1 ? std::string("is the strongest fit") : "is option " + std::to_string(rank);
        out.push_back(item_json({d, design_rationale(d, pros, why), pros, cons}, rank++));
      }
      break;
    }
    case TemplateId::MapperBinary: {
      const auto metric = metric_from_string(in.at("primary_metric").get<std::string>());
      out = recommendation_to_llm_json(map_binary_rule(metric, {in.at("intent").get<std::string>(), ""}, table_));
      break;
    }
  }
  CompletionResponse res;
  res.raw_text = out.dump();
  auto parsed = parse_llm_json(res.raw_text, request.template_id, request.validation);
  res.parsed = std::move(parsed.value);
  res.rationale_truncated = parsed.rationale_truncated;
  return res;
}

}  // namespace hoicraft
