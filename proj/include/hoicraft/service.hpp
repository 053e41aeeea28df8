#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "hoicraft/core_model.hpp"
#include "hoicraft/empirical.hpp"
#include "hoicraft/error.hpp"
#include "hoicraft/json_schema.hpp"
#include "hoicraft/llm_gateway.hpp"
#include "hoicraft/recommend.hpp"
#include "hoicraft/simulate.hpp"

namespace httplib {
class Server;
}

namespace hoicraft {

inline constexpr int kProjectSchemaVersion = 1;

enum class WorkflowStep { Intent, Selection, Customization, Mapping };

std::string_view to_string(WorkflowStep s);
WorkflowStep workflow_step_from_string(std::string_view s);

struct Project {
  std::string id;
  SceneObject scene;
  std::optional<DesignIntent> intent;
  PartAnalysis analysis;
  std::vector<std::string> priority_list;
  std::optional<int> initial_level;
  std::string priority_rationale;
  std::vector<std::string> selected_part_ids;
  std::map<std::string, DesignConfig> customizations;
  std::map<std::string, Recommendation> mappings;
  WorkflowStep step = WorkflowStep::Intent;
  std::string created_at;
  std::string updated_at;
};

nlohmann::json project_to_json(const Project& p);
Project project_from_json(const nlohmann::json& j);

/// Cross-field invariants the schema cannot express. Throws SchemaError.
void check_project_invariants(const Project& p);

/// Schema shipped under schemas/. HOICRAFT_SCHEMA_DIR overrides the build default.
std::string schema_dir();
const JsonSchema& project_schema();

struct SelectionRequest {
  std::optional<int> count;                 // ByCount n
  std::optional<std::vector<std::string>> ids;  // Manual
};

SelectionRequest selection_from_json(const nlohmann::json& j);

/// Four-step authoring workflow over JSON files in one directory. Each
/// project has its own reader/writer lock; documents are schema-checked on
/// every write and load.
class AuthoringService {
 public:
  AuthoringService(std::string project_dir, std::shared_ptr<Backend> llm, const TierTable& table,
                   RecommendOptions opts = {});

  Project create_project(const nlohmann::json& scene);
  Project get_project(const std::string& id);

  /// Runs object analysis and prioritization; resets selection, customizations and mappings.
  Prioritization set_intent(const std::string& id, const DesignIntent& intent);
  std::vector<std::string> set_selection(const std::string& id, const SelectionRequest& req);
  DesignConfig set_customization(const std::string& id, const std::string& part_id, const nlohmann::json& params);
  Recommendation run_mapping(const std::string& id, const std::string& part_id);

  /// Body: {trajectory, targets?: {partId: value}}.
  /// Revolute values are degrees, prismatic meters.
  nlohmann::json simulate(const std::string& id, const nlohmann::json& body);

  const std::string& project_dir() const { return dir_; }

 private:
  std::shared_ptr<std::shared_mutex> lock_for(const std::string& id);
  Project load(const std::string& id) const;
  void save(Project& p) const;
  std::string path_for(const std::string& id) const;

  std::string dir_;
  std::shared_ptr<Backend> llm_;
  const TierTable& table_;
  RecommendOptions opts_;
  std::mutex locks_mu_;
  std::map<std::string, std::shared_ptr<std::shared_mutex>> locks_;
};

/// HTTP status for an error code (400, 404, 409, 502, 500).
int http_status(ErrorCode code);

/// Registers the JSON API routes on `server`.
void register_routes(httplib::Server& server, AuthoringService& service);

/// Blocks serving on host:port until the server is stopped.
void serve(AuthoringService& service, const std::string& host, int port);

}  // namespace hoicraft
