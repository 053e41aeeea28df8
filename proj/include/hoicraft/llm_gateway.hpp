#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hoicraft/interaction.hpp"

namespace hoicraft {

enum class TemplateId { ObjectAnalyzer, PartPrioritizer, MetricSelector, PartMatcher, MapperRanking, MapperBinary };

inline constexpr TemplateId kAllTemplates[] = {TemplateId::ObjectAnalyzer, TemplateId::PartPrioritizer,
                                               TemplateId::MetricSelector, TemplateId::PartMatcher,
                                               TemplateId::MapperRanking,  TemplateId::MapperBinary};

/// File stem under prompts/, e.g. "mapper_ranking".
std::string_view to_string(TemplateId id);

inline constexpr double kDefaultTemperature = 0.2;
inline constexpr std::size_t kMaxRationaleChars = 150;

/// Directory holding prompts/*.txt. HOICRAFT_PROMPT_DIR overrides the build default.
std::string prompt_dir();

struct PromptTemplate {
  TemplateId id;
  std::string system_text;
  /// Input fields render_prompt requires.
  std::vector<std::string> required_inputs;
};

/// Loaded once from prompt_dir() and cached.
const PromptTemplate& prompt_template(TemplateId id);

struct RenderedPrompt {
  std::string system;
  std::string user;

  std::string full() const { return system + "\n\n" + user; }
};

/// Builds the user message in the template's input format. Throws
/// MissingField (detail = field name) when a required input is absent.
///   ObjectAnalyzer   {object, parts[]}
///   PartPrioritizer  {intent, parts[{id, affordances}]}
///   MetricSelector   {parts[], intent}
///   PartMatcher      {parts[{object, part, interactionType}]}
///   MapperRanking    {candidates[], intent, tiers?, comments?{design:{pros,cons}}}
///   MapperBinary     {primary_metric, intent}
RenderedPrompt render_prompt(TemplateId id, const nlohmann::json& inputs);

/// Extra checks that depend on the request rather than the template.
struct ValidationContext {
  std::optional<std::size_t> part_count;             // analyzer/matcher output size, prioritizer level bound
  std::optional<std::vector<HOIDesignKind>> allowed;  // mapper choices
};

struct ParsedOutput {
  nlohmann::json value;
  bool rationale_truncated = false;
};

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);

/// Cuts `s` to at most `max_chars` code points at a word boundary and appends
/// "…". Returns the input unchanged when it already fits.
std::pair<std::string, bool> truncate_rationale(std::string_view s, std::size_t max_chars = kMaxRationaleChars);

/// Removes a surrounding ``` / ```json fence if present.
std::string strip_code_fence(std::string_view raw);

/// Parses and validates raw model output for `id`. Design choices are
/// normalized to upper case, metrics to lower case, and mapper items are
/// sorted by rank. Throws ParseError on malformed JSON and SchemaError on a
/// wrong shape; both carry the raw text as detail.
ParsedOutput parse_llm_json(std::string_view raw, TemplateId id, const ValidationContext& ctx = {});

struct CompletionRequest {
  TemplateId template_id = TemplateId::MetricSelector;
  nlohmann::json inputs = nlohmann::json::object();
  ValidationContext validation;
  double temperature = kDefaultTemperature;
  int max_tokens = 1024;
};

struct CompletionResponse {
  std::string raw_text;
  nlohmann::json parsed;
  bool rationale_truncated = false;
  double latency_ms = 0.0;
  int attempts = 1;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
  virtual bool is_live() const = 0;
};

/// Total HTTP requests issued by live backends in this process.
std::uint64_t network_call_count();

struct LiveConfig {
  std::string url;  // full chat-completions URL, http:// or https://
  std::string api_key;
  std::string model;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;  // on connection errors, 429 and 5xx
  int max_reasks = 1;   // on ParseError/SchemaError

  /// HOICRAFT_LLM_URL, HOICRAFT_LLM_API_KEY, HOICRAFT_LLM_MODEL, HOICRAFT_LLM_TIMEOUT_MS.
  static LiveConfig from_env();
};

/// Chat-completions style backend: POST {model, temperature, max_tokens,
/// messages[system, user]} and read choices[0].message.content.
class LiveBackend : public Backend {
 public:
  explicit LiveBackend(LiveConfig cfg);
  CompletionResponse complete(const CompletionRequest& request) override;
  bool is_live() const override { return true; }

 private:
  std::string post(const nlohmann::json& body, int& attempts);

  LiveConfig cfg_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

/// Uses `primary` and switches to `fallback` when it reports LLMUnavailable.
class FallbackBackend : public Backend {
 public:
  FallbackBackend(std::shared_ptr<Backend> primary, std::shared_ptr<Backend> fallback);
  CompletionResponse complete(const CompletionRequest& request) override;
  bool is_live() const override { return primary_->is_live(); }

 private:
  std::shared_ptr<Backend> primary_;
  std::shared_ptr<Backend> fallback_;
};

}  // namespace hoicraft
