#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hoicraft/core_model.hpp"
#include "hoicraft/interaction.hpp"

namespace hoicraft {

inline constexpr int kDatasetPartCount = 13;

enum class SizeClass { Small, Medium, Large };
enum class Granularity { Continuous, Discrete };

std::string_view to_string(SizeClass s);
std::string_view to_string(Granularity g);
SizeClass size_class_from_string(std::string_view s);
Granularity granularity_from_string(std::string_view s);

/// One of the thirteen object-part pairs the preference data was collected on.
struct DatasetPart {
  int id = 0;
  std::string descriptor;  // "Microwave-Door - Hinged door pulled to access the chamber"
  JointKind constraint_kind = JointKind::Revolute;
  SizeClass size_class = SizeClass::Small;
  Granularity granularity = Granularity::Discrete;
  std::string gesture_verb;

  /// "Microwave-Door" part of the descriptor.
  std::string short_name() const;
};

/// Survey measures with published tier rows.
enum class SurveyMetric { Preference, EaseOfUse, Learnability, Realism };

inline constexpr SurveyMetric kAllSurveyMetrics[] = {SurveyMetric::Preference, SurveyMetric::EaseOfUse,
                                                     SurveyMetric::Learnability, SurveyMetric::Realism};

std::string_view to_string(SurveyMetric m);
SurveyMetric survey_metric_from_string(std::string_view s);

/// Ordered groups of designs; designs inside a group are statistically tied,
/// earlier groups rank higher. Order within a group is kept as written.
struct TierList {
  std::vector<std::vector<HOIDesignKind>> tiers;

  bool operator==(const TierList&) const = default;
  std::vector<HOIDesignKind> flattened() const;
  /// Index of the tier holding `d`; throws InvalidArgument when absent.
  std::size_t tier_of(HOIDesignKind d) const;
  /// True when every design appears exactly once.
  bool is_partition() const;
};

/// Parses "CM>GM=CA>GA=PM". Throws ParseError on unknown labels, empty
/// groups, or a result that is not a partition of the five designs.
TierList parse_tier_string(std::string_view s);
std::string to_tier_string(const TierList& t);

struct ProsCons {
  std::vector<std::string> pros;
  std::vector<std::string> cons;
};

class TierTable {
 public:
  static TierTable from_json(const nlohmann::json& j);
  static TierTable load(const std::string& path);
  /// Loads data/empirical_tiers.json from the configured data directory.
  static const TierTable& shipped();

  const std::vector<DatasetPart>& parts() const { return parts_; }
  const DatasetPart& part(int id) const;

  TierList lookup_tiers(int part_id, SurveyMetric metric) const;
  /// Verbatim tier string as published.
  const std::string& tier_string(int part_id, SurveyMetric metric) const;
  /// EaseOfUse or Learnability, whichever has the larger top tier (ties go to EaseOfUse).
  TierList usability_tiers(int part_id) const;
  SurveyMetric usability_source(int part_id) const;

  double kendall_w(int part_id, SurveyMetric metric) const;
  const std::string& friedman_sig(int part_id, SurveyMetric metric) const;

  /// Paraphrased pros/cons keywords for a design, part-specific when available.
  ProsCons pros_cons(HOIDesignKind d, std::optional<int> part_id = std::nullopt) const;

 private:
  using Key = std::pair<int, SurveyMetric>;
  void check_part(int id) const;

  std::vector<DatasetPart> parts_;
  std::map<Key, std::string> tier_strings_;
  std::map<Key, TierList> tiers_;
  std::map<Key, double> kendall_w_;
  std::map<Key, std::string> friedman_sig_;
  std::map<HOIDesignKind, ProsCons> pros_cons_;
  std::map<std::pair<int, HOIDesignKind>, ProsCons> part_pros_cons_;
};

/// Directory holding shipped data assets (tiers, prompts, schemas, sample
/// scenes). HOICRAFT_DATA_DIR overrides the build-time default.
std::string data_dir();

// ---- round-robin pairwise ranking ----

enum class PairOutcome { FirstWins, SecondWins, Skip };

/// Outcomes of one participant's round of pairwise comparisons. Pairs are
/// keyed by indices (i < j) into `designs`.
struct PairwiseResult {
  std::vector<HOIDesignKind> designs;
  std::map<std::pair<int, int>, PairOutcome> outcomes;

  void record(int i, int j, PairOutcome o);
};

struct RankedDesign {
  HOIDesignKind design;
  double score = 0.0;
  int rank = 1;  // competition ranking: ties share the better rank
};

/// Row-sum scores (win = 1, skip = 0.5 to each side), sorted descending.
/// Throws IncompleteMatrix when a pair is missing.
std::vector<RankedDesign> round_robin_rank(const PairwiseResult& results);

/// Deterministic within-tier order used by the offline recommender.
std::array<HOIDesignKind, 5> mock_precedence();

/// How often each design sits in the top tier over the given parts.
std::map<HOIDesignKind, int> top_tier_counts(const TierTable& table, SurveyMetric metric,
                                             int first_part, int last_part);

}  // namespace hoicraft
