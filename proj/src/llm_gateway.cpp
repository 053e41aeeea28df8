#include "hoicraft/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include <httplib.h>

#include "hoicraft/error.hpp"

#ifndef HOICRAFT_DEFAULT_PROMPT_DIR
#define HOICRAFT_DEFAULT_PROMPT_DIR "prompts"
#endif

namespace hoicraft {

using nlohmann::json;

namespace {

std::atomic<std::uint64_t> g_network_calls{0};

std::vector<std::string> required_inputs_for(TemplateId id) {
  switch (id) {
    case TemplateId::ObjectAnalyzer: return {"object", "parts"};
    case TemplateId::PartPrioritizer: return {"intent", "parts"};
    case TemplateId::MetricSelector: return {"parts", "intent"};
    case TemplateId::PartMatcher: return {"parts"};
    case TemplateId::MapperRanking: return {"candidates", "intent"};
    case TemplateId::MapperBinary: return {"primary_metric", "intent"};
  }
  return {};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open prompt template: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const json& require(const json& j, const std::string& field) {
  if (!j.is_object() || !j.contains(field) || j.at(field).is_null()) {
    throw Error(ErrorCode::MissingField, "missing input field: " + field, field);
  }
  return j.at(field);
}

std::string as_text(const json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

std::vector<std::string> string_list(const json& j) {
  std::vector<std::string> out;
  if (j.is_array()) {
    for (const auto& v : j) out.push_back(as_text(v));
  } else {
    out.push_back(as_text(j));
  }
  return out;
}

[[noreturn]] void schema_error(const std::string& what, std::string_view raw) {
  throw Error(ErrorCode::SchemaError, "LLM output does not match the expected schema: " + what, std::string(raw));
}

const json& field(const json& obj, const char* name, std::string_view raw) {
  if (!obj.is_object() || !obj.contains(name)) schema_error(std::string("missing field '") + name + "'", raw);
  return obj.at(name);
}

std::string string_field(const json& obj, const char* name, std::string_view raw) {
  const auto& v = field(obj, name, raw);
  if (!v.is_string()) schema_error(std::string("field '") + name + "' must be a string", raw);
  return v.get<std::string>();
}

void check_string_array(const json& v, const char* name, std::string_view raw) {
  if (!v.is_array()) schema_error(std::string("field '") + name + "' must be an array", raw);
  for (const auto& s : v) {
    if (!s.is_string()) schema_error(std::string("field '") + name + "' must hold strings", raw);
  }
}

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool truncate_in_place(json& obj, const char* name) {
  auto [text, cut] = truncate_rationale(obj.at(name).get<std::string>());
  if (cut) obj[name] = text;
  return cut;
}

void check_count(const json& arr, const ValidationContext& ctx, std::string_view raw) {
  if (ctx.part_count && arr.size() != *ctx.part_count) {
    schema_error("expected " + std::to_string(*ctx.part_count) + " items, got " + std::to_string(arr.size()), raw);
  }
}

ParsedOutput validate_object_analyzer(json v, const ValidationContext& ctx, std::string_view raw) {
  if (!v.is_array() || v.empty()) schema_error("expected a non-empty array", raw);
  check_count(v, ctx, raw);
  for (const auto& item : v) {
    for (const char* f : {"object", "part", "interaction_type", "affordances"}) string_field(item, f, raw);
  }
  return {std::move(v), false};
}

ParsedOutput validate_part_prioritizer(json v, const ValidationContext& ctx, std::string_view raw) {
  if (!v.is_object()) schema_error("expected an object", raw);
  const auto& parts = field(v, "priority_parts", raw);
  check_string_array(parts, "priority_parts", raw);
  if (parts.empty()) schema_error("priority_parts is empty", raw);
  std::set<std::string> seen;
  for (const auto& p : parts) {
    if (!seen.insert(p.get<std::string>()).second) schema_error("duplicate id in priority_parts", raw);
  }
  const auto& level = field(v, "initial_level", raw);
  if (!level.is_number_integer()) schema_error("initial_level must be an integer", raw);
  const auto max_level = ctx.part_count.value_or(parts.size());
  const auto lv = level.get<long long>();
  if (lv < 1 || static_cast<std::size_t>(lv) > max_level) {
    schema_error("initial_level must be in [1, " + std::to_string(max_level) + "]", raw);
  }
  string_field(v, "rationale", raw);
  const bool cut = truncate_in_place(v, "rationale");
  return {std::move(v), cut};
}

ParsedOutput validate_metric_selector(json v, const ValidationContext& ctx, std::string_view raw) {
  if (!v.is_array() || v.empty()) schema_error("expected a non-empty array", raw);
  check_count(v, ctx, raw);
  static const std::set<std::string> metrics = {"realism", "usability", "efficiency", "challenge", "preference"};
  for (auto& item : v) {
    if (!item.is_object() || !item.contains("part")) schema_error("missing field 'part'", raw);
    item["part"] = as_text(item["part"]);
    auto metric = lower(string_field(item, "metric", raw));
    if (!metrics.count(metric)) schema_error("unknown metric '" + metric + "'", raw);
    item["metric"] = metric;
    string_field(item, "reason", raw);
  }
  return {std::move(v), false};
}

ParsedOutput validate_part_matcher(json v, const ValidationContext& ctx, std::string_view raw) {
  if (!v.is_array() || v.empty()) schema_error("expected a non-empty array", raw);
  check_count(v, ctx, raw);
  for (const auto& item : v) {
    string_field(item, "part", raw);
    const auto& id = field(item, "id", raw);
    if (!id.is_number_integer() || id.get<int>() < 1 || id.get<int>() > 13) {
      schema_error("id must be an integer in 1..13", raw);
    }
    string_field(item, "matchedPart", raw);
  }
  return {std::move(v), false};
}

ParsedOutput validate_mapper(json v, TemplateId id, const ValidationContext& ctx, std::string_view raw) {
  if (!v.is_array() || v.empty()) schema_error("expected a non-empty array", raw);
  std::set<HOIDesignKind> allowed(std::begin(kAllDesigns), std::end(kAllDesigns));
  if (id == TemplateId::MapperBinary) allowed = {HOIDesignKind::PM, HOIDesignKind::GM, HOIDesignKind::CM};
  if (ctx.allowed) {
    std::set<HOIDesignKind> narrowed;
    for (auto d : *ctx.allowed) {
      if (allowed.count(d)) narrowed.insert(d);
    }
    allowed = std::move(narrowed);
  }

  bool cut = false;
  std::set<HOIDesignKind> seen;
  std::set<long long> ranks;
  for (auto& item : v) {
    const auto& rank = field(item, "rank", raw);
    if (!rank.is_number_integer() || rank.get<long long>() < 1) schema_error("rank must be a positive integer", raw);
    if (!ranks.insert(rank.get<long long>()).second) schema_error("duplicate rank", raw);

    const auto label = upper(string_field(item, "choice", raw));
    const auto design = design_from_string(label);
    if (!design) schema_error("choice '" + label + "' is not one of PM, GM, GA, CM, CA", raw);
    if (!allowed.count(*design)) schema_error("choice '" + label + "' is not an allowed candidate", raw);
    if (!seen.insert(*design).second) schema_error("choice '" + label + "' appears twice", raw);
    item["choice"] = label;

    string_field(item, "rationale", raw);
    cut = truncate_in_place(item, "rationale") || cut;

    const auto& kw = field(item, "keywords", raw);
    check_string_array(field(kw, "pros", raw), "pros", raw);
    check_string_array(field(kw, "cons", raw), "cons", raw);
  }
  std::stable_sort(v.begin(), v.end(),
                   [](const json& a, const json& b) { return a.at("rank").get<long long>() < b.at("rank").get<long long>(); });
  return {std::move(v), cut};
}

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "LLM URL must start with http:// or https://", url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string_view to_string(TemplateId id) {
  switch (id) {
    case TemplateId::ObjectAnalyzer: return "object_analyzer";
    case TemplateId::PartPrioritizer: return "part_prioritizer";
    case TemplateId::MetricSelector: return "metric_selector";
    case TemplateId::PartMatcher: return "part_matcher";
    case TemplateId::MapperRanking: return "mapper_ranking";
    case TemplateId::MapperBinary: return "mapper_binary";
  }
  return "metric_selector";
}

std::string prompt_dir() {
  if (const char* env = std::getenv("HOICRAFT_PROMPT_DIR"); env && *env) return env;
  return HOICRAFT_DEFAULT_PROMPT_DIR;
}

const PromptTemplate& prompt_template(TemplateId id) {
  static std::mutex mu;
  static std::map<TemplateId, PromptTemplate> cache;
  std::lock_guard lock(mu);
  if (auto it = cache.find(id); it != cache.end()) return it->second;
  PromptTemplate t{id, read_file(prompt_dir() + "/" + std::string(to_string(id)) + ".txt"), required_inputs_for(id)};
  return cache.emplace(id, std::move(t)).first->second;
}

RenderedPrompt render_prompt(TemplateId id, const json& inputs) {
  const auto& tmpl = prompt_template(id);
  for (const auto& f : tmpl.required_inputs) require(inputs, f);

  std::string user;
  switch (id) {
    case TemplateId::ObjectAnalyzer:
      user = "Object: " + as_text(inputs.at("object")) + "\nParts: " + join(string_list(inputs.at("parts")), ", ");
      break;
    case TemplateId::PartPrioritizer: {
      json body{{"intent", as_text(inputs.at("intent"))}, {"parts", json::array()}};
      for (const auto& p : inputs.at("parts")) {
        body["parts"].push_back({{"id", as_text(require(p, "id"))}, {"affordances", as_text(require(p, "affordances"))}});
      }
      user = body.dump(2);
      break;
    }
    case TemplateId::MetricSelector:
      user = "intent: [" + join(string_list(inputs.at("parts")), ", ") + "] and [" + as_text(inputs.at("intent")) + "]";
      break;
    case TemplateId::PartMatcher: {
      std::vector<std::string> lines;
      for (const auto& p : inputs.at("parts")) {
        lines.push_back("[" + as_text(require(p, "object")) + "-" + as_text(require(p, "part")) + "-" +
                        as_text(require(p, "interactionType")) + "]");
      }
      user = join(lines, "\n");
      break;
    }
    case TemplateId::MapperRanking: {
      user = "1. Candidate HOIs: " + join(string_list(inputs.at("candidates")), ", ") + "\n";
      if (inputs.contains("tiers")) user += "   Tier order: " + as_text(inputs.at("tiers")) + "\n";
      user += "2. Comments:\n";
      if (inputs.contains("comments") && inputs.at("comments").is_object()) {
        for (const auto& [label, pc] : inputs.at("comments").items()) {
          user += "   - " + label + " pros: " + join(string_list(pc.value("pros", json::array())), "; ") +
                  " | cons: " + join(string_list(pc.value("cons", json::array())), "; ") + "\n";
        }
      }
      user += "3. Intent: " + as_text(inputs.at("intent"));
      break;
    }
    case TemplateId::MapperBinary:
      user = "primary_metric: " + as_text(inputs.at("primary_metric")) + " intent: " + as_text(inputs.at("intent"));
      break;
  }
  return {tmpl.system_text, user};
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::pair<std::string, bool> truncate_rationale(std::string_view s, std::size_t max_chars) {
  if (utf8_length(s) <= max_chars) return {std::string(s), false};
  // Keep max_chars - 1 code points so the ellipsis fits.
  std::size_t bytes = 0;
  std::size_t points = 0;
  while (bytes < s.size()) {
    std::size_t next = bytes + 1;
    while (next < s.size() && (static_cast<unsigned char>(s[next]) & 0xC0) == 0x80) ++next;
    if (points + 1 > max_chars - 1) break;
    bytes = next;
    ++points;
  }
  std::string head(s.substr(0, bytes));
  const bool at_boundary = bytes < s.size() && s[bytes] == ' ';
  if (!at_boundary) {
    if (auto space = head.find_last_of(' '); space != std::string::npos && space > 0) head.resize(space);
  }
  while (!head.empty() && (head.back() == ' ' || head.back() == ',' || head.back() == ';')) head.pop_back();
  return {head + "\xE2\x80\xA6", true};
}

std::string strip_code_fence(std::string_view raw) {
  auto trim = [](std::string_view v) {
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    return v;
  };
  auto v = trim(raw);
  if (v.size() >= 6 && v.substr(0, 3) == "```" && v.substr(v.size() - 3) == "```") {
    v.remove_suffix(3);
    const auto eol = v.find('\n');
    v = eol == std::string_view::npos ? v.substr(3) : v.substr(eol + 1);
    v = trim(v);
  }
  return std::string(v);
}

ParsedOutput parse_llm_json(std::string_view raw, TemplateId id, const ValidationContext& ctx) {
  json v;
  try {
    v = json::parse(strip_code_fence(raw));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("LLM output is not valid JSON: ") + e.what(), std::string(raw));
  }
  switch (id) {
    case TemplateId::ObjectAnalyzer: return validate_object_analyzer(std::move(v), ctx, raw);
    case TemplateId::PartPrioritizer: return validate_part_prioritizer(std::move(v), ctx, raw);
    case TemplateId::MetricSelector: return validate_metric_selector(std::move(v), ctx, raw);
    case TemplateId::PartMatcher: return validate_part_matcher(std::move(v), ctx, raw);
    case TemplateId::MapperRanking:
    case TemplateId::MapperBinary: return validate_mapper(std::move(v), id, ctx, raw);
  }
  schema_error("unknown template", raw);
}

std::uint64_t network_call_count() { return g_network_calls.load(); }

LiveConfig LiveConfig::from_env() {
  LiveConfig c;
  auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? v : "";
  };
  c.url = env("HOICRAFT_LLM_URL");
  c.api_key = env("HOICRAFT_LLM_API_KEY");
  c.model = env("HOICRAFT_LLM_MODEL");
  if (auto t = env("HOICRAFT_LLM_TIMEOUT_MS"); !t.empty()) c.timeout = std::chrono::milliseconds(std::stoll(t));
  return c;
}

LiveBackend::LiveBackend(LiveConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.url.empty()) throw Error(ErrorCode::InvalidArgument, "live LLM backend needs an endpoint URL");
  std::tie(origin_, path_) = split_url(cfg_.url);
}

std::string LiveBackend::post(const json& body, int& attempts) {
  httplib::Client client(origin_);
  client.set_connection_timeout(cfg_.timeout);
  client.set_read_timeout(cfg_.timeout);
  client.set_write_timeout(cfg_.timeout);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    ++attempts;
    ++g_network_calls;
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::LLMError, "LLM endpoint rejected the request with HTTP " + std::to_string(res->status),
                  res->body);
    }
    try {
      return json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::LLMError, std::string("unexpected completion payload: ") + e.what(), res->body);
    }
  }
  throw Error(ErrorCode::LLMUnavailable, "LLM endpoint unavailable after retries", last_error);
}

CompletionResponse LiveBackend::complete(const CompletionRequest& request) {
  const auto prompt = render_prompt(request.template_id, request.inputs);
  json messages = json::array({{{"role", "system"}, {"content", prompt.system}},
                               {{"role", "user"}, {"content", prompt.user}}});
  const auto started = std::chrono::steady_clock::now();
  CompletionResponse out;
  out.attempts = 0;

  for (int ask = 0;; ++ask) {
    json body{{"messages", messages}, {"temperature", request.temperature}, {"max_tokens", request.max_tokens}};
    if (!cfg_.model.empty()) body["model"] = cfg_.model;
    out.raw_text = post(body, out.attempts);
    try {
      auto parsed = parse_llm_json(out.raw_text, request.template_id, request.validation);
      out.parsed = std::move(parsed.value);
      out.rationale_truncated = parsed.rationale_truncated;
      break;
    } catch (const Error& e) {
      const bool repairable = e.code() == ErrorCode::ParseError || e.code() == ErrorCode::SchemaError;
      if (!repairable || ask >= cfg_.max_reasks) throw;
      messages.push_back({{"role", "assistant"}, {"content", out.raw_text}});
      messages.push_back({{"role", "user"},
                          {"content", std::string("The previous output was rejected: ") + e.what() +
                                          ". Return only the JSON in the required output format."}});
    }
  }
  out.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return out;
}

FallbackBackend::FallbackBackend(std::shared_ptr<Backend> primary, std::shared_ptr<Backend> fallback)
    : primary_(std::move(primary)), fallback_(std::move(fallback)) {}

CompletionResponse FallbackBackend::complete(const CompletionRequest& request) {
  try {
    return primary_->complete(request);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::LLMUnavailable) throw;
    return fallback_->complete(request);
  }
}

}  // namespace hoicraft
