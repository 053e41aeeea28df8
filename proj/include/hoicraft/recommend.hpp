#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hoicraft/core_model.hpp"
#include "hoicraft/empirical.hpp"
#include "hoicraft/interaction.hpp"
#include "hoicraft/llm_gateway.hpp"

namespace hoicraft {

struct DesignIntent {
  std::string intended_use;
  std::string target_experience;

  /// Both fields joined with a space.
  std::string text() const;
  /// Throws EmptyIntent when the combined text is blank.
  void validate() const;
};

enum class MetricKind { Realism, Usability, Efficiency, Challenge, Preference };

std::string_view to_string(MetricKind m);  // "Realism", ...
MetricKind metric_from_string(std::string_view s);  // case-insensitive; throws ParseError
bool is_ranking_metric(MetricKind m);     // Realism, Usability, Preference

struct MetricDecision {
  std::string part;
  MetricKind metric = MetricKind::Preference;
  std::string reason;
};

/// Keyword rules, checked Realism, Usability, Efficiency, Challenge; anything
/// else is Preference. Whole words, case-insensitive.
MetricDecision select_metric_rule(std::string_view text);

/// One decision per part. With `llm`, the model may only refine a Preference
/// outcome of the rules; an explicit keyword match always stands.
std::vector<MetricDecision> select_metric(const DesignIntent& intent, const std::vector<std::string>& parts,
                                          Backend* llm = nullptr);

struct PartAnalysisEntry {
  std::string id;  // scene part id; defaults to the part name
  std::string object;
  std::string part;
  std::string interaction_type;
  std::string affordances;
};

using PartAnalysis = std::vector<PartAnalysisEntry>;

/// Features used by the offline matcher.
struct MatchQuery {
  std::string object;
  std::string part;
  std::string interaction_type;
  std::optional<JointKind> kind;
  std::optional<SizeClass> size;
  std::optional<Granularity> granularity;
};

MatchQuery match_query(const PartSpec& part);
MatchQuery match_query(const PartAnalysisEntry& entry);

SizeClass size_class_of(double part_scale);

/// Points: +2 joint kind, +2 dataset verb in the interaction type, +1 size,
/// +1 granularity.
int match_score(const MatchQuery& q, const DatasetPart& candidate);

/// Best dataset part id (1..13); ties go to the lowest id.
int match_part_rule(const MatchQuery& q, const TierTable& table);

/// Part matcher prompt round trip, one id per query.
std::vector<int> match_parts(const std::vector<MatchQuery>& queries, Backend& llm);

struct RankedItem {
  HOIDesignKind design = HOIDesignKind::CM;
  std::string rationale;
  std::vector<std::string> pros;
  std::vector<std::string> cons;
};

/// "Contact-based manipulation" etc.
std::string_view long_name(HOIDesignKind d);

enum class RecommendationSource { RankingBased, Binary };

std::string_view to_string(RecommendationSource s);

struct Recommendation {
  std::vector<RankedItem> ranked;
  MetricKind metric = MetricKind::Preference;
  std::optional<int> matched_dataset_part;
  RecommendationSource source = RecommendationSource::RankingBased;
  std::optional<std::string> tier_string;  // tiers the ranking was drawn from
  bool low_confidence = false;
  bool rationale_truncated = false;
};

/// Output array in the mapper prompt format: rank, choice, rationale, keywords.
nlohmann::json recommendation_to_llm_json(const Recommendation& r);
nlohmann::json recommendation_to_json(const Recommendation& r);
Recommendation recommendation_from_json(const nlohmann::json& j);

/// Tier list used for a ranking metric (Usability picks EaseOfUse or Learnability).
TierList ranking_tiers(const TierTable& table, int part_id, MetricKind metric);

/// Candidate order: tiers in order, within a tier by the model's order or,
/// offline, mock_precedence(). Throws UnknownPart, InvalidArgument for a
/// binary metric.
Recommendation map_ranking(int part_id, MetricKind metric, const DesignIntent& intent, const TierTable& table,
                           Backend& llm);

/// Reorders `designs` so that tier order holds, keeping the given order inside each tier.
std::vector<HOIDesignKind> enforce_tier_order(const TierList& tiers, const std::vector<HOIDesignKind>& designs);

/// Keyword rules: Efficiency picks GM for precision/control and CM for speed;
/// Challenge picks GM for mastery/skill and PM for realistic resistance.
/// Ties fall back to GM with low_confidence set.
Recommendation map_binary_rule(MetricKind metric, const DesignIntent& intent, const TierTable& table);

/// Binary mapper; with `use_llm` the model chooses, restricted to the rule's two options.
Recommendation map_binary(MetricKind metric, const DesignIntent& intent, const TierTable& table, Backend& llm,
                          bool use_llm = false);

/// Offline object analyzer: interaction type from part-name keywords,
/// affordance "operate the <part>" unless a descriptor is supplied.
PartAnalysis analyze_object_rule(const std::string& object, const std::vector<std::string>& parts,
                                 const std::vector<std::string>& descriptors = {});

/// Throws InvalidArgument on an empty part list.
PartAnalysis analyze_object(const std::string& object, const std::vector<std::string>& parts, Backend& llm,
                            const std::vector<std::string>& descriptors = {});

struct Prioritization {
  std::vector<std::string> ordered_ids;
  int initial_level = 1;
  std::string rationale;
};

/// Offline prioritizer: intent-word overlap with affordances and interaction
/// type, descending, ties in input order; level = parts with any overlap,
/// clamped to [1, n].
Prioritization prioritize_parts_rule(const DesignIntent& intent, const PartAnalysis& analysis);

/// Throws InvalidArgument on an empty analysis.
Prioritization prioritize_parts(const DesignIntent& intent, const PartAnalysis& analysis, Backend& llm);

struct RecommendOptions {
  bool llm_metric_selector = false;
  bool llm_binary_mapper = false;
};

/// select_metric, then match_part + map_ranking or map_binary.
Recommendation recommend_pipeline(const PartSpec& part, const DesignIntent& intent, const TierTable& table,
                                  Backend& llm, const RecommendOptions& opts = {});

/// Deterministic offline backend. It answers every prompt with the rule
/// engines above and returns text that passes parse_llm_json.
class MockBackend : public Backend {
 public:
  explicit MockBackend(const TierTable& table) : table_(table) {}
  CompletionResponse complete(const CompletionRequest& request) override;
  bool is_live() const override { return false; }

 private:
  const TierTable& table_;
};

}  // namespace hoicraft
