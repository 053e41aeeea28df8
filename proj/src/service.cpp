#include "hoicraft/service.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <set>

#include <httplib.h>

#include "hoicraft/error.hpp"

#ifndef HOICRAFT_DEFAULT_SCHEMA_DIR
#define HOICRAFT_DEFAULT_SCHEMA_DIR "schemas"
#endif

namespace hoicraft {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03lldZ", buf, static_cast<long long>(ms));
  return out;
}

std::string new_project_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 && std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_';
  });
}

bool is_selected(const Project& p, const std::string& part_id) {
  return std::find(p.selected_part_ids.begin(), p.selected_part_ids.end(), part_id) != p.selected_part_ids.end();
}

void require_step(const Project& p, WorkflowStep at_least, const char* action) {
  if (static_cast<int>(p.step) < static_cast<int>(at_least)) {
    throw Error(ErrorCode::WorkflowViolation,
                std::string(action) + " needs the " + std::string(to_string(at_least)) + " step; project is at " +
                    std::string(to_string(p.step)));
  }
}

const PartSpec& selected_part(const Project& p, const std::string& part_id) {
  const auto& part = p.scene.at(part_id);
  if (!is_selected(p, part_id)) throw Error(ErrorCode::NotSelected, "part is not selected: " + part_id);
  return part;
}

// Revolute coordinates cross the API in degrees.
double to_api(const PartSpec& part, double q) {
  return part.constraint.kind() == JointKind::Revolute ? rad_to_deg(q) : q;
}

double from_api(const PartSpec& part, double v) {
  return part.constraint.kind() == JointKind::Revolute ? deg_to_rad(v) : v;
}

json analysis_to_json(const PartAnalysis& a) {
  json out = json::array();
  for (const auto& e : a) {
    out.push_back({{"id", e.id}, {"object", e.object}, {"part", e.part}, {"interactionType", e.interaction_type},
                   {"affordances", e.affordances}});
  }
  return out;
}

json error_body(ErrorCode code, const std::string& message, const std::string& detail) {
  return {{"code", std::string(to_string(code))}, {"message", message}, {"detail", detail}};
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "request body is not valid JSON", e.what());
  }
}

}  // namespace

std::string_view to_string(WorkflowStep s) {
  switch (s) {
    case WorkflowStep::Intent: return "Intent";
    case WorkflowStep::Selection: return "Selection";
    case WorkflowStep::Customization: return "Customization";
    case WorkflowStep::Mapping: return "Mapping";
  }
  return "Intent";
}

WorkflowStep workflow_step_from_string(std::string_view s) {
  for (auto st : {WorkflowStep::Intent, WorkflowStep::Selection, WorkflowStep::Customization, WorkflowStep::Mapping}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::SchemaError, "unknown workflow step: " + std::string(s));
}

json project_to_json(const Project& p) {
  json customizations = json::object();
  for (const auto& [pid, c] : p.customizations) customizations[pid] = design_config_to_json(c);
  json mappings = json::object();
  for (const auto& [pid, r] : p.mappings) mappings[pid] = recommendation_to_json(r);
  return {{"schemaVersion", kProjectSchemaVersion},
          {"id", p.id},
          {"createdAt", p.created_at},
          {"updatedAt", p.updated_at},
          {"step", std::string(to_string(p.step))},
          {"scene", scene_to_json(p.scene)},
          {"intent", p.intent ? json{{"intendedUse", p.intent->intended_use},
                                     {"targetExperience", p.intent->target_experience}}
                              : json(nullptr)},
          {"analysis", analysis_to_json(p.analysis)},
          {"priorityList", p.priority_list},
          {"initialLevel", p.initial_level ? json(*p.initial_level) : json(nullptr)},
          {"priorityRationale", p.priority_rationale},
          {"selectedPartIds", p.selected_part_ids},
          {"customizations", customizations},
          {"mappings", mappings}};
}

Project project_from_json(const json& j) {
  if (const auto errs = project_schema().errors(j); !errs.empty()) {
    throw Error(ErrorCode::SchemaError, "project document fails schema validation", errs.front());
  }
  Project p;
  p.id = j.at("id").get<std::string>();
  p.created_at = j.at("createdAt").get<std::string>();
  p.updated_at = j.at("updatedAt").get<std::string>();
  p.step = workflow_step_from_string(j.at("step").get<std::string>());
  p.scene = scene_from_json(j.at("scene"));
  if (!j.at("intent").is_null()) {
    p.intent = DesignIntent{j.at("intent").at("intendedUse").get<std::string>(),
                            j.at("intent").at("targetExperience").get<std::string>()};
  }
  for (const auto& e : j.at("analysis")) {
    p.analysis.push_back({e.at("id").get<std::string>(), e.at("object").get<std::string>(),
                          e.at("part").get<std::string>(), e.at("interactionType").get<std::string>(),
                          e.at("affordances").get<std::string>()});
  }
  p.priority_list = j.at("priorityList").get<std::vector<std::string>>();
  if (!j.at("initialLevel").is_null()) p.initial_level = j.at("initialLevel").get<int>();
  p.priority_rationale = j.at("priorityRationale").get<std::string>();
  p.selected_part_ids = j.at("selectedPartIds").get<std::vector<std::string>>();
  for (const auto& [pid, c] : j.at("customizations").items()) p.customizations[pid] = design_config_from_json(c);
  for (const auto& [pid, r] : j.at("mappings").items()) p.mappings[pid] = recommendation_from_json(r);
  check_project_invariants(p);
  return p;
}

void check_project_invariants(const Project& p) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::SchemaError, "project invariant violated: " + what); };
  std::set<std::string> seen;
  for (const auto& id : p.selected_part_ids) {
    const auto* part = p.scene.find(id);
    if (!part) fail("selected part '" + id + "' is not in the scene");
    if (p.scene.body_part_ids.count(id)) fail("body part '" + id + "' cannot be selected");
    if (!seen.insert(id).second) fail("part '" + id + "' selected twice");
  }
  for (const auto& [pid, _] : p.mappings) {
    if (!is_selected(p, pid)) fail("mapping for unselected part '" + pid + "'");
  }
  for (const auto& [pid, _] : p.customizations) {
    if (!is_selected(p, pid)) fail("customization for unselected part '" + pid + "'");
  }
  if (!p.intent && p.step != WorkflowStep::Intent) fail("steps after Intent need an intent");
  if (!p.selected_part_ids.empty() && static_cast<int>(p.step) < static_cast<int>(WorkflowStep::Customization)) {
    fail("selection recorded before the Customization step");
  }
  if (!p.mappings.empty() && p.step != WorkflowStep::Mapping) fail("mappings recorded before the Mapping step");
}

std::string schema_dir() {
  if (const char* env = std::getenv("HOICRAFT_SCHEMA_DIR"); env && *env) return env;
  return HOICRAFT_DEFAULT_SCHEMA_DIR;
}

const JsonSchema& project_schema() {
  static const JsonSchema schema = JsonSchema::load(schema_dir() + "/project.schema.json");
  return schema;
}

SelectionRequest selection_from_json(const json& j) {
  SelectionRequest r;
  try {
    const auto mode = j.value("mode", j.contains("count") ? "count" : "manual");
    if (mode == "count" || mode == "ByCount") {
      r.count = j.at("count").get<int>();
    } else if (mode == "manual" || mode == "Manual") {
      r.ids = j.at("ids").get<std::vector<std::string>>();
    } else {
      throw Error(ErrorCode::InvalidArgument, "selection mode must be 'count' or 'manual'", mode);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed selection: ") + e.what());
  }
  return r;
}

AuthoringService::AuthoringService(std::string project_dir, std::shared_ptr<Backend> llm, const TierTable& table,
                                   RecommendOptions opts)
    : dir_(std::move(project_dir)), llm_(std::move(llm)), table_(table), opts_(opts) {
  fs::create_directories(dir_);
  project_schema();
}

std::string AuthoringService::path_for(const std::string& id) const { return dir_ + "/" + id + ".json"; }

std::shared_ptr<std::shared_mutex> AuthoringService::lock_for(const std::string& id) {
  std::lock_guard guard(locks_mu_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_shared<std::shared_mutex>();
  return slot;
}

Project AuthoringService::load(const std::string& id) const {
  if (!valid_id(id)) throw Error(ErrorCode::NotFound, "no such project", id);
  std::ifstream in(path_for(id));
  if (!in) throw Error(ErrorCode::NotFound, "no such project", id);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::IoError, "stored project is corrupt", e.what());
  }
  return project_from_json(j);
}

void AuthoringService::save(Project& p) const {
  p.updated_at = now_iso8601();
  check_project_invariants(p);
  const auto doc = project_to_json(p);
  if (const auto errs = project_schema().errors(doc); !errs.empty()) {
    throw Error(ErrorCode::SchemaError, "refusing to persist a project that fails schema validation", errs.front());
  }
  const auto path = path_for(p.id);
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write project file", tmp);
    out << doc.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "short write on project file", tmp);
  }
  fs::rename(tmp, path);
}

Project AuthoringService::create_project(const json& scene) {
  Project p;
  p.scene = scene_from_json(scene);
  if (p.scene.parts.empty()) throw Error(ErrorCode::InvalidScene, "scene has no parts");
  p.id = new_project_id();
  p.created_at = now_iso8601();
  auto lock = lock_for(p.id);
  std::unique_lock guard(*lock);
  save(p);
  return p;
}

Project AuthoringService::get_project(const std::string& id) {
  auto lock = lock_for(id);
  std::shared_lock guard(*lock);
  return load(id);
}

Prioritization AuthoringService::set_intent(const std::string& id, const DesignIntent& intent) {
  intent.validate();
  auto lock = lock_for(id);
  std::unique_lock guard(*lock);
  auto p = load(id);

  std::vector<std::string> names;
  std::vector<std::string> descriptors;
  std::vector<std::string> ids;
  for (const auto* part : p.scene.interactive_parts()) {
    names.push_back(part->name);
    descriptors.push_back(part->affordances);
    ids.push_back(part->id);
  }
  if (names.empty()) throw Error(ErrorCode::InvalidScene, "scene has no interactive parts");

  auto analysis = analyze_object(p.scene.name, names, *llm_, descriptors);
  for (std::size_t i = 0; i < analysis.size(); ++i) analysis[i].id = ids[i];
  auto prio = prioritize_parts(intent, analysis, *llm_);

  p.intent = intent;
  p.analysis = std::move(analysis);
  p.priority_list = prio.ordered_ids;
  p.initial_level = prio.initial_level;
  p.priority_rationale = prio.rationale;
  p.selected_part_ids.clear();
  p.customizations.clear();
  p.mappings.clear();
  p.step = WorkflowStep::Selection;
  save(p);
  return prio;
}

std::vector<std::string> AuthoringService::set_selection(const std::string& id, const SelectionRequest& req) {
  auto lock = lock_for(id);
  std::unique_lock guard(*lock);
  auto p = load(id);
  require_step(p, WorkflowStep::Selection, "part selection");

  std::vector<std::string> selected;
  if (req.count) {
    const int n = *req.count;
    if (n < 1 || n > static_cast<int>(p.priority_list.size())) {
      throw Error(ErrorCode::CountOutOfRange,
                  "count must be in [1, " + std::to_string(p.priority_list.size()) + "]", std::to_string(n));
    }
    selected.assign(p.priority_list.begin(), p.priority_list.begin() + n);
  } else if (req.ids) {
    if (req.ids->empty()) throw Error(ErrorCode::CountOutOfRange, "manual selection is empty");
    for (const auto& pid : *req.ids) {
      if (!p.scene.find(pid) || p.scene.body_part_ids.count(pid)) {
        throw Error(ErrorCode::UnknownPart, "not an interactive part: " + pid, pid);
      }
      if (std::find(selected.begin(), selected.end(), pid) == selected.end()) selected.push_back(pid);
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "selection needs a count or a list of ids");
  }

  p.selected_part_ids = selected;
  std::erase_if(p.customizations, [&](const auto& kv) { return !is_selected(p, kv.first); });
  std::erase_if(p.mappings, [&](const auto& kv) { return !is_selected(p, kv.first); });
  p.step = p.mappings.empty() ? WorkflowStep::Customization : WorkflowStep::Mapping;
  save(p);
  return selected;
}

DesignConfig AuthoringService::set_customization(const std::string& id, const std::string& part_id,
                                                 const json& params) {
  auto lock = lock_for(id);
  std::unique_lock guard(*lock);
  auto p = load(id);
  require_step(p, WorkflowStep::Customization, "customization");
  selected_part(p, part_id);
  auto cfg = design_config_from_json(params);
  p.customizations[part_id] = cfg;
  save(p);
  return cfg;
}

Recommendation AuthoringService::run_mapping(const std::string& id, const std::string& part_id) {
  auto lock = lock_for(id);
  std::unique_lock guard(*lock);
  auto p = load(id);
  require_step(p, WorkflowStep::Customization, "design mapping");
  const auto& part = selected_part(p, part_id);
  auto rec = recommend_pipeline(part, *p.intent, table_, *llm_, opts_);
  p.mappings[part_id] = rec;
  p.step = WorkflowStep::Mapping;
  save(p);
  return rec;
}

json AuthoringService::simulate(const std::string& id, const json& body) {
  auto lock = lock_for(id);
  std::shared_lock guard(*lock);
  const auto p = load(id);
  require_step(p, WorkflowStep::Customization, "simulation");

  if (!body.contains("trajectory")) throw Error(ErrorCode::MissingField, "missing field: trajectory", "trajectory");
  const auto script = trajectory_from_json(body.at("trajectory"));

  DesignAssignments assignments;
  json designs = json::object();
  for (const auto& pid : p.selected_part_ids) {
    DesignConfig cfg;
    if (auto it = p.customizations.find(pid); it != p.customizations.end()) cfg = it->second;
    if (!cfg.design) {
      if (auto it = p.mappings.find(pid); it != p.mappings.end()) cfg.design = it->second.ranked.front().design;
    }
    if (!cfg.design) cfg.design = HOIDesignKind::CM;
    designs[pid] = std::string(to_string(*cfg.design));
    assignments[pid] = cfg;
  }

  TargetMap targets;
  if (body.contains("targets")) {
    for (const auto& [pid, v] : body.at("targets").items()) {
      const auto* part = p.scene.find(pid);
      if (!part) throw Error(ErrorCode::UnknownPart, "unknown part in targets: " + pid, pid);
      targets[pid] = from_api(*part, v.get<double>());
    }
  }

  const auto log = run_session(p.scene, assignments, script, targets);
  const auto metrics = compute_metrics(p.scene, log, targets);

  json events = json::array();
  std::map<std::string, int> counts;
  for (auto k : {EventKind::Acquired, EventKind::Released, EventKind::AnimationTriggered, EventKind::Moved}) {
    counts[std::string(to_string(k))] = 0;
  }
  for (const auto& e : log.events) {
    ++counts[std::string(to_string(e.kind))];
    if (e.kind == EventKind::Moved) continue;
    events.push_back({{"t_s", e.t}, {"kind", std::string(to_string(e.kind))}, {"partId", e.part_id},
                      {"q", to_api(p.scene.at(e.part_id), e.q)}});
  }
  json finals = json::object();
  for (const auto& [pid, q] : log.final_states) finals[pid] = to_api(p.scene.at(pid), q);

  return {{"metrics", metrics_to_json(metrics)},
          {"designs", designs},
          {"eventCounts", counts},
          {"events", events},
          {"finalStates", finals}};
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownPart: return 404;
    case ErrorCode::WorkflowViolation:
    case ErrorCode::NotSelected: return 409;
    case ErrorCode::LLMUnavailable:
    case ErrorCode::LLMError: return 502;
    case ErrorCode::IoError: return 500;
    default: return 400;
  }
}

void register_routes(httplib::Server& server, AuthoringService& service) {
  using Handler = std::function<json(const httplib::Request&, int&)>;
  auto wrap = [](Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      int status = 200;
      json body;
      try {
        body = h(req, status);
      } catch (const Error& e) {
        status = http_status(e.code());
        body = error_body(e.code(), e.what(), e.detail());
      } catch (const json::exception& e) {
        status = 400;
        body = error_body(ErrorCode::InvalidArgument, "malformed request", e.what());
      } catch (const std::exception& e) {
        status = 500;
        body = error_body(ErrorCode::IoError, "internal error", e.what());
      }
      res.status = status;
      res.set_content(body.dump(), "application/json");
    };
  };

  server.Get("/health", wrap([](const httplib::Request&, int&) { return json{{"status", "ok"}}; }));

  server.Post("/projects", wrap([&service](const httplib::Request& req, int& status) {
                auto body = parse_body(req);
                const auto& scene = body.contains("scene") ? body.at("scene") : body;
                status = 201;
                return project_to_json(service.create_project(scene));
              }));

  server.Get(R"(/projects/([A-Za-z0-9_-]+))", wrap([&service](const httplib::Request& req, int&) {
               return project_to_json(service.get_project(req.matches[1]));
             }));

  server.Put(R"(/projects/([A-Za-z0-9_-]+)/intent)", wrap([&service](const httplib::Request& req, int&) {
               const auto body = parse_body(req);
               DesignIntent intent{body.value("intendedUse", body.value("intent", "")), body.value("targetExperience", "")};
               const auto prio = service.set_intent(req.matches[1], intent);
               return json{{"priorityList", prio.ordered_ids},
                           {"initialLevel", prio.initial_level},
                           {"rationale", prio.rationale}};
             }));

  server.Put(R"(/projects/([A-Za-z0-9_-]+)/selection)", wrap([&service](const httplib::Request& req, int&) {
               const auto ids = service.set_selection(req.matches[1], selection_from_json(parse_body(req)));
               return json{{"selectedPartIds", ids}};
             }));

  server.Put(R"(/projects/([A-Za-z0-9_-]+)/parts/([A-Za-z0-9_.-]+)/customization)",
             wrap([&service](const httplib::Request& req, int&) {
               return design_config_to_json(service.set_customization(req.matches[1], req.matches[2], parse_body(req)));
             }));

  server.Post(R"(/projects/([A-Za-z0-9_-]+)/parts/([A-Za-z0-9_.-]+)/mapping)",
              wrap([&service](const httplib::Request& req, int&) {
                return recommendation_to_json(service.run_mapping(req.matches[1], req.matches[2]));
              }));

  server.Post(R"(/projects/([A-Za-z0-9_-]+)/simulate)", wrap([&service](const httplib::Request& req, int&) {
                return service.simulate(req.matches[1], parse_body(req));
              }));
}

void serve(AuthoringService& service, const std::string& host, int port) {
  httplib::Server server;
  register_routes(server, service);
  if (!server.listen(host, port)) {
    throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace hoicraft
