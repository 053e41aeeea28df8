#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hoicraft/empirical.hpp"
#include "hoicraft/error.hpp"
#include "hoicraft/llm_gateway.hpp"
#include "hoicraft/recommend.hpp"
#include "hoicraft/service.hpp"
#include "hoicraft/simulate.hpp"
#include "hoicraft/stats.hpp"

using nlohmann::json;
using namespace hoicraft;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path + " is not valid JSON", e.what());
  }
}

// Inline JSON when the argument starts with '{', otherwise a file path.
json json_arg(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') {
    try {
      return json::parse(arg);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, "argument is not valid JSON", e.what());
    }
  }
  return read_json_file(arg);
}

std::shared_ptr<Backend> make_backend(const std::string& mode, bool fallback) {
  auto mock = std::make_shared<MockBackend>(TierTable::shipped());
  if (mode == "mock") return mock;
  auto live = std::make_shared<LiveBackend>(LiveConfig::from_env());
  if (fallback) return std::make_shared<FallbackBackend>(live, mock);
  return live;
}

std::string default_mode() {
  const char* env = std::getenv("HOICRAFT_LLM_MODE");
  return env && *env ? env : "mock";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

std::pair<std::string, double> parse_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "expected part=value, got " + s);
  return {s.substr(0, eq), std::stod(s.substr(eq + 1))};
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HOICraft headless engine and authoring service"};
  app.require_subcommand(1);

  std::string llm_mode = default_mode();
  bool fallback = false;
  auto add_llm_opts = [&](CLI::App* sub) {
    sub->add_option("--llm", llm_mode, "LLM backend")->check(CLI::IsMember({"live", "mock"}));
    sub->add_flag("--fallback", fallback, "fall back to mock when the live endpoint is unavailable");
  };

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP authoring service");
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string data_dir_opt = "projects";
  serve_cmd->add_option("--port", port, "listen port");
  serve_cmd->add_option("--host", host, "listen address");
  serve_cmd->add_option("--data-dir", data_dir_opt, "directory for project files");
  add_llm_opts(serve_cmd);

  // recommend
  auto* rec_cmd = app.add_subcommand("recommend", "recommend HOI designs for one scene part");
  std::string scene_path, part_id, intent_text;
  bool full = false;
  rec_cmd->add_option("--scene", scene_path, "scene JSON")->required();
  rec_cmd->add_option("--part", part_id, "part id")->required();
  rec_cmd->add_option("--intent", intent_text, "design intent text")->required();
  rec_cmd->add_flag("--full", full, "include metric, matched part and tiers");
  add_llm_opts(rec_cmd);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "run a scripted hand trajectory against a scene");
  std::string trajectory_path, assignments_arg;
  std::vector<std::string> design_opts, target_opts;
  bool with_log = false;
  sim_cmd->add_option("--scene", scene_path, "scene JSON")->required();
  sim_cmd->add_option("--trajectory", trajectory_path, "trajectory JSON")->required();
  sim_cmd->add_option("--assignments", assignments_arg, "JSON object {partId: customization} (file or inline)");
  sim_cmd->add_option("--design", design_opts, "partId=PM|GM|GA|CM|CA (repeatable)");
  sim_cmd->add_option("--target", target_opts, "partId=value; degrees for revolute parts, meters otherwise");
  sim_cmd->add_flag("--log", with_log, "also print the event log");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Friedman, Kendall's W and tier string from a CSV");
  std::string csv_path;
  bool higher_better = false;
  double alpha = 0.05;
  bool stats_json = false;
  stats_cmd->add_option("--csv", csv_path, "header row of design labels, one row per participant")->required();
  stats_cmd->add_flag("--higher-is-better", higher_better, "scores are ratings rather than ranks");
  stats_cmd->add_option("--alpha", alpha, "significance level");
  stats_cmd->add_flag("--json", stats_json, "emit JSON instead of a text row");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "object analysis and part prioritization");
  std::string object_name, parts_csv;
  analyze_cmd->add_option("--scene", scene_path, "scene JSON");
  analyze_cmd->add_option("--object", object_name, "object name");
  analyze_cmd->add_option("--parts", parts_csv, "comma-separated part names");
  analyze_cmd->add_option("--intent", intent_text, "intent for prioritization");
  add_llm_opts(analyze_cmd);

  // project workflow
  auto* project_cmd = app.add_subcommand("project", "authoring workflow on local project files");
  project_cmd->require_subcommand(1);
  project_cmd->add_option("--data-dir", data_dir_opt, "directory for project files");
  add_llm_opts(project_cmd);
  std::string project_id, params_arg, ids_csv;
  int count = 0;
  auto* p_create = project_cmd->add_subcommand("create", "create a project from a scene");
  p_create->add_option("--scene", scene_path)->required();
  auto* p_show = project_cmd->add_subcommand("show", "print a project");
  p_show->add_option("--id", project_id)->required();
  auto* p_intent = project_cmd->add_subcommand("intent", "set the design intent");
  p_intent->add_option("--id", project_id)->required();
  p_intent->add_option("--text", intent_text)->required();
  auto* p_select = project_cmd->add_subcommand("select", "select parts by count or ids");
  p_select->add_option("--id", project_id)->required();
  auto* count_opt = p_select->add_option("--count", count);
  auto* ids_opt = p_select->add_option("--ids", ids_csv, "comma-separated part ids");
  count_opt->excludes(ids_opt);
  auto* p_custom = project_cmd->add_subcommand("customize", "store customization parameters");
  p_custom->add_option("--id", project_id)->required();
  p_custom->add_option("--part", part_id)->required();
  p_custom->add_option("--params", params_arg, "JSON (file or inline)")->required();
  auto* p_map = project_cmd->add_subcommand("map", "run design mapping for a part");
  p_map->add_option("--id", project_id)->required();
  p_map->add_option("--part", part_id)->required();
  auto* p_sim = project_cmd->add_subcommand("simulate", "simulate the selected parts");
  p_sim->add_option("--id", project_id)->required();
  p_sim->add_option("--body", params_arg, "JSON {trajectory, targets} (file or inline)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve_cmd->parsed()) {
      AuthoringService service(data_dir_opt, make_backend(llm_mode, fallback), TierTable::shipped());
      std::cerr << "hoicraft: serving on http://" << host << ":" << port << " (llm=" << llm_mode << ")\n";
      serve(service, host, port);
      return 0;
    }

    if (rec_cmd->parsed()) {
      const auto scene = load_scene(scene_path);
      auto backend = make_backend(llm_mode, fallback);
      const auto rec = recommend_pipeline(scene.at(part_id), {intent_text, ""}, TierTable::shipped(), *backend);
      print(full ? recommendation_to_json(rec) : recommendation_to_llm_json(rec));
      return 0;
    }

    if (sim_cmd->parsed()) {
      const auto scene = load_scene(scene_path);
      const auto script = trajectory_from_json(read_json_file(trajectory_path));
      DesignAssignments assignments;
      if (!assignments_arg.empty()) {
        for (const auto& [pid, cfg] : json_arg(assignments_arg).items()) assignments[pid] = design_config_from_json(cfg);
      }
      for (const auto& d : design_opts) {
        const auto eq = d.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "expected part=DESIGN, got " + d);
        assignments[d.substr(0, eq)].design = parse_design(d.substr(eq + 1));
      }
      TargetMap targets;
      for (const auto& t : target_opts) {
        auto [pid, v] = parse_assignment(t);
        const auto& part = scene.at(pid);
        targets[pid] = part.constraint.kind() == JointKind::Revolute ? deg_to_rad(v) : v;
      }
      const auto log = run_session(scene, assignments, script, targets);
      const auto metrics = metrics_to_json(compute_metrics(scene, log, targets));
      if (!with_log) {
        print(metrics);
        return 0;
      }
      auto api_q = [&](const std::string& pid, double q) {
        return scene.at(pid).constraint.kind() == JointKind::Revolute ? rad_to_deg(q) : q;
      };
      json events = json::array();
      for (const auto& e : log.events) {
        if (e.kind == EventKind::Moved) continue;
        events.push_back({{"t_s", e.t}, {"kind", std::string(to_string(e.kind))}, {"partId", e.part_id},
                          {"q", api_q(e.part_id, e.q)}});
      }
      json finals = json::object();
      for (const auto& [pid, q] : log.final_states) finals[pid] = api_q(pid, q);
      print({{"metrics", metrics}, {"events", events}, {"finalStates", finals}});
      return 0;
    }

    if (stats_cmd->parsed()) {
      std::ifstream in(csv_path);
      if (!in) throw Error(ErrorCode::IoError, "cannot open " + csv_path);
      std::string line;
      std::getline(in, line);
      std::vector<HOIDesignKind> designs;
      for (const auto& label : split_csv_line(line)) designs.push_back(parse_design(label));
      std::vector<std::vector<double>> rows;
      while (std::getline(in, line)) {
        if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
        std::vector<double> row;
        for (const auto& cell : split_csv_line(line)) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
      }
      const auto r = analyze_table_row(designs, rows, higher_better, alpha);
      if (stats_json) {
        print({{"n", r.friedman.n}, {"k", r.friedman.k}, {"chi2", r.friedman.chi2}, {"p", r.friedman.p},
               {"kendallW", r.friedman.kendall_w}, {"pClass", r.p_class}, {"tiers", r.tier_string}});
      } else {
        char w[32];
        std::snprintf(w, sizeof w, "%.4f", r.friedman.kendall_w);
        std::cout << "W=" << w << '\t' << r.p_class << '\t' << r.tier_string << '\n';
      }
      return 0;
    }

    if (analyze_cmd->parsed()) {
      auto backend = make_backend(llm_mode, fallback);
      std::vector<std::string> names, descriptors, ids;
      if (!scene_path.empty()) {
        const auto scene = load_scene(scene_path);
        object_name = scene.name;
        for (const auto* p : scene.interactive_parts()) {
          names.push_back(p->name);
          descriptors.push_back(p->affordances);
          ids.push_back(p->id);
        }
      } else {
        std::stringstream ss(parts_csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (!item.empty()) names.push_back(item);
        }
        ids = names;
      }
      auto analysis = analyze_object(object_name, names, *backend, descriptors);
      for (std::size_t i = 0; i < analysis.size(); ++i) analysis[i].id = ids[i];
      json out{{"analysis", json::array()}};
      for (const auto& e : analysis) {
        out["analysis"].push_back({{"id", e.id}, {"object", e.object}, {"part", e.part},
                                   {"interaction_type", e.interaction_type}, {"affordances", e.affordances}});
      }
      if (!intent_text.empty()) {
        const auto p = prioritize_parts({intent_text, ""}, analysis, *backend);
        out["priority_parts"] = p.ordered_ids;
        out["initial_level"] = p.initial_level;
        out["rationale"] = p.rationale;
      }
      print(out);
      return 0;
    }

    if (project_cmd->parsed()) {
      AuthoringService service(data_dir_opt, make_backend(llm_mode, fallback), TierTable::shipped());
      if (p_create->parsed()) {
        print(project_to_json(service.create_project(read_json_file(scene_path))));
      } else if (p_show->parsed()) {
        print(project_to_json(service.get_project(project_id)));
      } else if (p_intent->parsed()) {
        const auto p = service.set_intent(project_id, {intent_text, ""});
        print({{"priorityList", p.ordered_ids}, {"initialLevel", p.initial_level}, {"rationale", p.rationale}});
      } else if (p_select->parsed()) {
        SelectionRequest req;
        if (*count_opt) {
          req.count = count;
        } else {
          std::vector<std::string> list;
          std::stringstream ss(ids_csv);
          std::string item;
          while (std::getline(ss, item, ',')) {
            if (!item.empty()) list.push_back(item);
          }
          req.ids = list;
        }
        print({{"selectedPartIds", service.set_selection(project_id, req)}});
      } else if (p_custom->parsed()) {
        print(design_config_to_json(service.set_customization(project_id, part_id, json_arg(params_arg))));
      } else if (p_map->parsed()) {
        print(recommendation_to_json(service.run_mapping(project_id, part_id)));
      } else if (p_sim->parsed()) {
        print(service.simulate(project_id, json_arg(params_arg)));
      }
      return 0;
    }
  } catch (const Error& e) {
    json err{{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"detail", e.detail()}};
    std::cerr << err.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hoicraft: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
