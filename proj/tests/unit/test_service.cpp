#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "hoicraft/service.hpp"
#include "hoicraft/simulate.hpp"
#include "support/fixtures.hpp"

#include "httplib.h"

using namespace hoicraft;
using nlohmann::json;
using fixtures::code_of;
namespace fs = std::filesystem;

namespace {

json microwave_scene() {
  std::ifstream in(std::string(HOICRAFT_SOURCE_DIR) + "/data/scenes/microwave.json");
  return json::parse(in);
}

fs::path fresh_dir() {
  std::random_device rd;
  auto dir = fs::temp_directory_path() / ("hoicraft-test-" + std::to_string(rd()));
  fs::remove_all(dir);
  return dir;
}

struct Reply {
  int status = 0;
  json body;
};

// AuthoringService over the mock backend behind a local HTTP server.
class LocalServer {
 public:
  LocalServer()
      : dir_(fresh_dir()),
        service_(dir_.string(), std::make_shared<MockBackend>(TierTable::shipped()), TierTable::shipped()) {
    register_routes(server_, service_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
    fs::remove_all(dir_);
  }

  Reply send(const std::string& method, const std::string& path, const std::optional<json>& body = std::nullopt) {
    httplib::Client c("127.0.0.1", port_);
    const std::string payload = body ? body->dump() : "";
    httplib::Result r = method == "GET"    ? c.Get(path)
                        : method == "PUT"  ? c.Put(path, payload, "application/json")
                                           : c.Post(path, payload, "application/json");
    REQUIRE(r);
    return {r->status, r->body.empty() ? json() : json::parse(r->body)};
  }
  Reply send_raw(const std::string& path, const std::string& payload) {
    httplib::Client c("127.0.0.1", port_);
    auto r = c.Put(path, payload, "application/json");
    REQUIRE(r);
    return {r->status, json::parse(r->body)};
  }

  AuthoringService& service() { return service_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  AuthoringService service_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

json trajectory_near_door() {
  TrajectoryScript s;
  s.dt = 1.0 / 90.0;
  for (int i = 0; i < 90; ++i) {
    const double x = -0.1 + 0.002 * i;
    s.samples.push_back({i * s.dt, Vec3(x, 0.15, 0.22), Gesture::Grab, true});
  }
  return trajectory_to_json(s);
}

}  // namespace

TEST_CASE("http status mapping") {
  CHECK(http_status(ErrorCode::UnknownPart) == 404);
  CHECK(http_status(ErrorCode::NotFound) == 404);
  CHECK(http_status(ErrorCode::WorkflowViolation) == 409);
  CHECK(http_status(ErrorCode::NotSelected) == 409);
  CHECK(http_status(ErrorCode::EmptyIntent) == 400);
  CHECK(http_status(ErrorCode::LLMUnavailable) == 502);
}

TEST_CASE("full workflow over HTTP") {
  LocalServer srv;
  CHECK(srv.send("GET", "/health").body["status"] == "ok");

  const auto created = srv.send("POST", "/projects", json{{"scene", microwave_scene()}});
  REQUIRE(created.status == 201);
  const auto id = created.body["id"].get<std::string>();
  CHECK(created.body["step"] == "Intent");
  const auto base = "/projects/" + id;

  // Out-of-order steps.
  auto r = srv.send("PUT", base + "/selection", json{{"count", 1}});
  CHECK(r.status == 409);
  CHECK(r.body["code"] == "WorkflowViolation");
  CHECK(srv.send("PUT", base + "/parts/door/customization", json{{"design", "GM"}}).status == 409);
  CHECK(srv.send("POST", base + "/parts/door/mapping").status == 409);
  CHECK(srv.send("POST", base + "/simulate", json{{"trajectory", trajectory_near_door()}}).status == 409);

  r = srv.send("PUT", base + "/intent", json{{"intendedUse", "  "}, {"targetExperience", ""}});
  CHECK(r.status == 400);
  CHECK(r.body["code"] == "EmptyIntent");

  r = srv.send("PUT", base + "/intent", json{{"intendedUse", "heat food"}, {"targetExperience", "feels natural"}});
  REQUIRE(r.status == 200);
  CHECK(r.body["priorityList"] == json({"door", "dial"}));
  CHECK(r.body["initialLevel"] == 2);

  r = srv.send("PUT", base + "/selection", json{{"count", 3}});
  CHECK(r.status == 400);
  CHECK(r.body["code"] == "CountOutOfRange");
  CHECK(srv.send("PUT", base + "/selection", json{{"count", 0}}).body["code"] == "CountOutOfRange");
  r = srv.send("PUT", base + "/selection", json{{"mode", "manual"}, {"ids", {"body"}}});
  CHECK(r.status == 404);
  CHECK(r.body["code"] == "UnknownPart");

  r = srv.send("PUT", base + "/selection", json{{"count", 1}});
  REQUIRE(r.status == 200);
  CHECK(r.body["selectedPartIds"] == json({"door"}));

  r = srv.send("PUT", base + "/parts/dial/customization", json{{"design", "GM"}});
  CHECK(r.status == 409);
  CHECK(r.body["code"] == "NotSelected");
  CHECK(srv.send("PUT", base + "/parts/nope/customization", json{{"design", "GM"}}).status == 404);
  r = srv.send("PUT", base + "/parts/door/customization", json{{"design", "GM"}, {"resistance", -1}});
  CHECK(r.status == 400);
  CHECK(r.body["code"] == "InvalidParam");
  r = srv.send("PUT", base + "/parts/door/customization", json{{"design", "XX"}});
  CHECK(r.body["code"] == "InvalidParam");

  r = srv.send("PUT", base + "/parts/door/customization",
               json{{"design", "GM"}, {"resistance", 2.0}, {"stepAngle_deg", 45}});
  REQUIRE(r.status == 200);
  CHECK(r.body["design"] == "GM");
  CHECK(r.body["stepAngle_deg"].get<double>() == doctest::Approx(45.0));

  r = srv.send("POST", base + "/parts/door/mapping");
  REQUIRE(r.status == 200);
  CHECK(r.body["metric"] == "Realism");
  CHECK(r.body["ranked"].size() == 5);
  CHECK(r.body["matchedDatasetPart"].is_number_integer());

  r = srv.send("POST", base + "/simulate",
               json{{"trajectory", trajectory_near_door()}, {"targets", {{"door", 30.0}}}});
  REQUIRE(r.status == 200);
  CHECK(r.body["designs"]["door"] == "GM");
  CHECK(r.body["metrics"].contains("errorRatio"));
  CHECK(r.body["finalStates"].contains("door"));
  r = srv.send("POST", base + "/simulate", json::object());
  CHECK(r.body["code"] == "MissingField");
  r = srv.send("POST", base + "/simulate", json{{"trajectory", trajectory_near_door()}, {"targets", {{"nope", 1}}}});
  CHECK(r.status == 404);

  // Stored document validates and re-fetching is stable.
  const auto a = srv.send("GET", base);
  const auto b = srv.send("GET", base);
  REQUIRE(a.status == 200);
  CHECK(a.body == b.body);
  CHECK(a.body["step"] == "Mapping");
  CHECK(a.body["mappings"].contains("door"));
  std::ifstream file(srv.dir() / (id + ".json"));
  const auto on_disk = json::parse(file);
  CHECK(project_schema().errors(on_disk).empty());
  CHECK(on_disk == a.body);

  // A new intent starts selection over.
  r = srv.send("PUT", base + "/intent", json{{"intendedUse", "set a timer"}});
  REQUIRE(r.status == 200);
  const auto reset = srv.send("GET", base).body;
  CHECK(reset["step"] == "Selection");
  CHECK(reset["selectedPartIds"].empty());
  CHECK(reset["mappings"].empty());
}

TEST_CASE("request errors over HTTP") {
  LocalServer srv;
  CHECK(srv.send("GET", "/projects/doesnotexist").status == 404);
  CHECK(srv.send("POST", "/projects", json{{"scene", {{"name", "x"}, {"parts", json::array()}}}}).status == 400);
  const auto id = srv.send("POST", "/projects", microwave_scene()).body["id"].get<std::string>();
  const auto r = srv.send_raw("/projects/" + id + "/intent", "{not json");
  CHECK(r.status == 400);
}

TEST_CASE("concurrent requests on separate projects") {
  LocalServer srv;
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) {
    ids.push_back(srv.service().create_project(microwave_scene()).id);
  }
  std::vector<std::thread> workers;
  std::atomic<int> ok{0};
  for (const auto& id : ids) {
    workers.emplace_back([&srv, &ok, id] {
      auto& svc = srv.service();
      svc.set_intent(id, {"heat food", ""});
      svc.set_selection(id, {2, std::nullopt});
      svc.run_mapping(id, "door");
      svc.run_mapping(id, "dial");
      if (svc.get_project(id).mappings.size() == 2) ++ok;
    });
  }
  for (auto& w : workers) w.join();
  CHECK(ok == 4);
}

TEST_CASE("project documents") {
  LocalServer srv;
  auto& svc = srv.service();
  const auto p = svc.create_project(microwave_scene());
  const auto back = project_from_json(project_to_json(p));
  CHECK(project_to_json(back) == project_to_json(p));

  auto doc = project_to_json(p);
  doc["step"] = "Somewhere";
  CHECK(code_of([&] { project_from_json(doc); }) == ErrorCode::SchemaError);

  auto bad = p;
  bad.step = WorkflowStep::Customization;
  bad.selected_part_ids = {"body"};
  CHECK(code_of([&] { check_project_invariants(bad); }) == ErrorCode::SchemaError);

  CHECK(code_of([] { selection_from_json({{"mode", "random"}}); }) == ErrorCode::InvalidArgument);
  CHECK(selection_from_json({{"count", 2}}).count == 2);
  CHECK(code_of([&] { svc.get_project("../etc"); }) == ErrorCode::NotFound);
}
