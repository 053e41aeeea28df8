#include "hoicraft/empirical.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <mutex>

#include "hoicraft/error.hpp"

#ifndef HOICRAFT_DEFAULT_DATA_DIR
#define HOICRAFT_DEFAULT_DATA_DIR "data"
#endif

namespace hoicraft {

std::string_view to_string(SizeClass s) {
  switch (s) {
    case SizeClass::Small: return "small";
    case SizeClass::Medium: return "medium";
    case SizeClass::Large: return "large";
  }
  return "small";
}

std::string_view to_string(Granularity g) {
  return g == Granularity::Continuous ? "continuous" : "discrete";
}

SizeClass size_class_from_string(std::string_view s) {
  if (s == "small") return SizeClass::Small;
  if (s == "medium") return SizeClass::Medium;
  if (s == "large") return SizeClass::Large;
  throw Error(ErrorCode::ParseError, "unknown size class: " + std::string(s));
}

Granularity granularity_from_string(std::string_view s) {
  if (s == "continuous") return Granularity::Continuous;
  if (s == "discrete") return Granularity::Discrete;
  throw Error(ErrorCode::ParseError, "unknown granularity: " + std::string(s));
}

std::string DatasetPart::short_name() const {
  const auto pos = descriptor.find(" - ");
  return pos == std::string::npos ? descriptor : descriptor.substr(0, pos);
}

std::string_view to_string(SurveyMetric m) {
  switch (m) {
    case SurveyMetric::Preference: return "Preference";
    case SurveyMetric::EaseOfUse: return "EaseOfUse";
    case SurveyMetric::Learnability: return "Learnability";
    case SurveyMetric::Realism: return "Realism";
  }
  return "Preference";
}

SurveyMetric survey_metric_from_string(std::string_view s) {
  for (auto m : kAllSurveyMetrics) {
    if (to_string(m) == s) return m;
  }
  throw Error(ErrorCode::ParseError, "unknown survey metric: " + std::string(s));
}

std::vector<HOIDesignKind> TierList::flattened() const {
  std::vector<HOIDesignKind> out;
  for (const auto& tier : tiers) out.insert(out.end(), tier.begin(), tier.end());
  return out;
}

std::size_t TierList::tier_of(HOIDesignKind d) const {
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    if (std::find(tiers[i].begin(), tiers[i].end(), d) != tiers[i].end()) return i;
  }
  throw Error(ErrorCode::InvalidArgument, "design not in tier list: " + std::string(to_string(d)));
}

bool TierList::is_partition() const {
  auto flat = flattened();
  if (flat.size() != std::size(kAllDesigns)) return false;
  for (auto d : kAllDesigns) {
    if (std::count(flat.begin(), flat.end(), d) != 1) return false;
  }
  return std::none_of(tiers.begin(), tiers.end(), [](const auto& t) { return t.empty(); });
}

TierList parse_tier_string(std::string_view s) {
  TierList out;
  std::vector<HOIDesignKind> current;
  std::string token;
  auto flush_token = [&] {
    auto d = design_from_string(token);
    if (!d) throw Error(ErrorCode::ParseError, "bad design label in tier string", std::string(s));
    current.push_back(*d);
    token.clear();
  };
  for (char c : s) {
    if (c == '=' || c == '>') {
      flush_token();
      if (c == '>') {
        out.tiers.push_back(std::move(current));
        current.clear();
      }
    } else if (c != ' ') {
      token.push_back(c);
    }
  }
  flush_token();
  out.tiers.push_back(std::move(current));
  if (!out.is_partition()) {
    throw Error(ErrorCode::ParseError, "tier string is not a partition of the five designs",
                std::string(s));
  }
  return out;
}

std::string to_tier_string(const TierList& t) {
  std::string out;
  for (std::size_t i = 0; i < t.tiers.size(); ++i) {
    if (i > 0) out += '>';
    for (std::size_t j = 0; j < t.tiers[i].size(); ++j) {
      if (j > 0) out += '=';
      out += to_string(t.tiers[i][j]);
    }
  }
  return out;
}

namespace {

ProsCons pros_cons_from_json(const nlohmann::json& j) {
  return {j.value("pros", std::vector<std::string>{}), j.value("cons", std::vector<std::string>{})};
}

}  // namespace

TierTable TierTable::from_json(const nlohmann::json& j) {
  TierTable t;
  try {
    for (const auto& pj : j.at("parts")) {
      DatasetPart p;
      p.id = pj.at("id").get<int>();
      p.descriptor = pj.at("descriptor").get<std::string>();
      p.constraint_kind = joint_kind_from_string(pj.at("constraintKind").get<std::string>());
      p.size_class = size_class_from_string(pj.at("sizeClass").get<std::string>());
      p.granularity = granularity_from_string(pj.at("granularity").get<std::string>());
      p.gesture_verb = pj.at("gestureVerb").get<std::string>();
      t.parts_.push_back(std::move(p));
    }
    std::sort(t.parts_.begin(), t.parts_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (int i = 0; i < static_cast<int>(t.parts_.size()); ++i) {
      if (t.parts_[i].id != i + 1) throw Error(ErrorCode::ParseError, "dataset part ids must be 1..13");
    }
    if (t.parts_.size() != kDatasetPartCount) {
      throw Error(ErrorCode::ParseError, "dataset must list 13 parts");
    }

    for (auto metric : kAllSurveyMetrics) {
      const std::string name(to_string(metric));
      for (int id = 1; id <= kDatasetPartCount; ++id) {
        const auto key = std::to_string(id);
        const auto s = j.at("tiers").at(name).at(key).get<std::string>();
        t.tier_strings_[{id, metric}] = s;
        t.tiers_[{id, metric}] = parse_tier_string(s);
        t.kendall_w_[{id, metric}] = j.at("kendallW").at(name).at(key).get<double>();
        t.friedman_sig_[{id, metric}] = j.at("friedmanSig").at(name).at(key).get<std::string>();
      }
    }

    if (j.contains("prosCons")) {
      for (const auto& [label, pc] : j.at("prosCons").items()) {
        t.pros_cons_[parse_design(label)] = pros_cons_from_json(pc);
      }
    }
    if (j.contains("partProsCons")) {
      for (const auto& [pid, per_design] : j.at("partProsCons").items()) {
        for (const auto& [label, pc] : per_design.items()) {
          t.part_pros_cons_[{std::stoi(pid), parse_design(label)}] = pros_cons_from_json(pc);
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed tier data: ") + e.what());
  }
  return t;
}

TierTable TierTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open tier data: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("tier data is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

const TierTable& TierTable::shipped() {
  static const TierTable table = load(data_dir() + "/empirical_tiers.json");
  return table;
}

std::string data_dir() {
  if (const char* env = std::getenv("HOICRAFT_DATA_DIR"); env && *env) return env;
  return HOICRAFT_DEFAULT_DATA_DIR;
}

void TierTable::check_part(int id) const {
  if (id < 1 || id > kDatasetPartCount) {
    throw Error(ErrorCode::UnknownPart, "dataset part id must be in 1..13, got " + std::to_string(id));
  }
}

const DatasetPart& TierTable::part(int id) const {
  check_part(id);
  return parts_[static_cast<std::size_t>(id - 1)];
}

TierList TierTable::lookup_tiers(int part_id, SurveyMetric metric) const {
  check_part(part_id);
  return tiers_.at({part_id, metric});
}

const std::string& TierTable::tier_string(int part_id, SurveyMetric metric) const {
  check_part(part_id);
  return tier_strings_.at({part_id, metric});
}

SurveyMetric TierTable::usability_source(int part_id) const {
  const auto ease = lookup_tiers(part_id, SurveyMetric::EaseOfUse);
  const auto learn = lookup_tiers(part_id, SurveyMetric::Learnability);
  return learn.tiers.front().size() > ease.tiers.front().size() ? SurveyMetric::Learnability
                                                                 : SurveyMetric::EaseOfUse;
}

TierList TierTable::usability_tiers(int part_id) const {
  return lookup_tiers(part_id, usability_source(part_id));
}

double TierTable::kendall_w(int part_id, SurveyMetric metric) const {
  check_part(part_id);
  return kendall_w_.at({part_id, metric});
}

const std::string& TierTable::friedman_sig(int part_id, SurveyMetric metric) const {
  check_part(part_id);
  return friedman_sig_.at({part_id, metric});
}

ProsCons TierTable::pros_cons(HOIDesignKind d, std::optional<int> part_id) const {
  if (part_id) {
    if (auto it = part_pros_cons_.find({*part_id, d}); it != part_pros_cons_.end()) return it->second;
  }
  if (auto it = pros_cons_.find(d); it != pros_cons_.end()) return it->second;
  return {};
}

void PairwiseResult::record(int i, int j, PairOutcome o) {
  if (i == j) throw Error(ErrorCode::InvalidArgument, "a design cannot be compared with itself");
  if (i > j) {
    std::swap(i, j);
    if (o == PairOutcome::FirstWins) {
      o = PairOutcome::SecondWins;
    } else if (o == PairOutcome::SecondWins) {
      o = PairOutcome::FirstWins;
    }
  }
  outcomes[{i, j}] = o;
}

std::vector<RankedDesign> round_robin_rank(const PairwiseResult& results) {
  const int k = static_cast<int>(results.designs.size());
  std::vector<double> score(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      auto it = results.outcomes.find({i, j});
      if (it == results.outcomes.end()) {
        throw Error(ErrorCode::IncompleteMatrix, "missing comparison " + std::to_string(i) + " vs " +
                                                     std::to_string(j));
      }
      switch (it->second) {
        case PairOutcome::FirstWins: score[i] += 1.0; break;
        case PairOutcome::SecondWins: score[j] += 1.0; break;
        case PairOutcome::Skip:
          score[i] += 0.5;
          score[j] += 0.5;
          break;
      }
    }
  }

  std::vector<RankedDesign> ranked;
  for (int i = 0; i < k; ++i) ranked.push_back({results.designs[i], score[i], 1});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  for (std::size_t i = 1; i < ranked.size(); ++i) {
    ranked[i].rank = ranked[i].score == ranked[i - 1].score ? ranked[i - 1].rank : static_cast<int>(i) + 1;
  }
  return ranked;
}

std::array<HOIDesignKind, 5> mock_precedence() {
  // Top-tier appearances over preference rows 1-11: CM 11, CA 8, GM 4, PM 3, GA 2.
  return {HOIDesignKind::CM, HOIDesignKind::CA, HOIDesignKind::GM, HOIDesignKind::PM, HOIDesignKind::GA};
}

std::map<HOIDesignKind, int> top_tier_counts(const TierTable& table, SurveyMetric metric,
                                             int first_part, int last_part) {
  std::map<HOIDesignKind, int> counts;
  for (auto d : kAllDesigns) counts[d] = 0;
  for (int id = first_part; id <= last_part; ++id) {
    const auto tiers = table.lookup_tiers(id, metric);
    for (auto d : tiers.tiers.front()) ++counts[d];
  }
  return counts;
}

}  // namespace hoicraft
