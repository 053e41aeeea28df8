#include "hoicraft/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "hoicraft/error.hpp"

namespace hoicraft {

void TrajectoryScript::validate() const {
  if (samples.empty()) throw Error(ErrorCode::EmptyScript, "trajectory has no samples");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "trajectory dt must be positive");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].t < 0.0) throw Error(ErrorCode::InvalidArgument, "sample times must be >= 0");
    if (i > 0 && !(samples[i].t > samples[i - 1].t)) {
      throw Error(ErrorCode::InvalidArgument, "sample times must be strictly increasing");
    }
  }
}

TrajectoryScript trajectory_from_json(const nlohmann::json& j) {
  TrajectoryScript script;
  try {
    script.dt = j.value("dt_s", kDefaultDt);
    for (const auto& sj : j.at("samples")) {
      HandSample s;
      s.t = sj.at("t_s").get<double>();
      s.fingertip = vec3_from_json(sj.at("fingertip"));
      s.gesture = gesture_from_string(sj.value("gesture", "None"));
      s.tracked = sj.value("tracked", true);
      script.samples.push_back(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed trajectory: ") + e.what());
  }
  script.validate();
  return script;
}

nlohmann::json trajectory_to_json(const TrajectoryScript& script) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : script.samples) {
    samples.push_back({{"t_s", s.t},
                       {"fingertip", vec3_to_json(s.fingertip)},
                       {"gesture", to_string(s.gesture)},
                       {"tracked", s.tracked}});
  }
  return {{"dt_s", script.dt}, {"samples", samples}};
}

bool SessionLog::operator==(const SessionLog& other) const {
  if (events != other.events || final_states != other.final_states) return false;
  if (error_series.size() != other.error_series.size()) return false;
  for (const auto& [id, series] : error_series) {
    auto it = other.error_series.find(id);
    if (it == other.error_series.end() || it->second.size() != series.size()) return false;
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (series[i].t != it->second[i].t || series[i].error != it->second[i].error) return false;
    }
  }
  return true;
}

nlohmann::json metrics_to_json(const MetricsReport& m) {
  return {{"completionTime_s", m.completion_time ? nlohmann::json(*m.completion_time) : nlohmann::json(nullptr)},
          {"reversalCount", m.reversal_count},
          {"errorRatio", m.error_ratio}};
}

double error_distance(double q, double target, const MotionConstraint& c) {
  if (c.unbounded_revolute()) return angular_distance(q, target);
  return std::abs(q - target);
}

double error_ratio(double q, double target, const MotionConstraint& c) {
  const double scale = c.bounded() ? c.range()->length() : kPi;
  return error_distance(q, target, c) / scale;
}

SessionLog run_session(const SceneObject& scene, const DesignAssignments& assignments,
                       const TrajectoryScript& script, const TargetMap& targets,
                       const EngineConfig& cfg) {
  script.validate();
  for (const auto& [id, _] : assignments) {
    if (!scene.find(id)) throw Error(ErrorCode::UnknownPart, "unknown part: " + id);
  }
  for (const auto& [id, _] : targets) {
    if (!scene.find(id)) throw Error(ErrorCode::UnknownPart, "unknown target part: " + id);
  }

  struct Track {
    const PartSpec* part;
    HOIDesignKind design;
    const CustomizationParams* params;
    InteractionState state;
  };
  std::vector<Track> tracks;
  for (const auto& [id, config] : assignments) {
    const auto& part = scene.at(id);
    tracks.push_back({&part, config.design.value_or(HOIDesignKind::CM), &config.params,
                      initial_state(part)});
  }

  SessionLog log;
  for (const auto& [id, target] : targets) {
    log.error_series[id].reserve(script.samples.size());
  }

  for (const auto& sample : script.samples) {
    for (auto& track : tracks) {
      auto result = step(track.design, track.state, *track.part, sample, script.dt, *track.params, cfg);
      track.state = std::move(result.state);
      for (auto& e : result.events) log.events.push_back(std::move(e));
    }
    for (const auto& [id, target] : targets) {
      const auto& part = scene.at(id);
      double q = 0.0;
      auto it = std::find_if(tracks.begin(), tracks.end(), [&](const Track& t) { return t.part->id == id; });
      q = it != tracks.end() ? it->state.q : initial_state(part).q;
      log.error_series[id].push_back({sample.t, error_distance(q, target, part.constraint)});
    }
  }
  for (const auto& track : tracks) log.final_states[track.part->id] = track.state.q;
  return log;
}

double completion_time(const SessionLog& log) {
  std::optional<double> first;
  double last = 0.0;
  for (const auto& e : log.events) {
    if (e.kind != EventKind::Moved && e.kind != EventKind::AnimationTriggered) continue;
    if (!first) first = e.t;
    last = e.t;
  }
  if (!first) throw Error(ErrorCode::NoManipulation, "no manipulation event in session");
  return last - *first;
}

int reversal_count(std::span<const double> series, double epsilon) {
  if (epsilon < 0.0) throw Error(ErrorCode::InvalidArgument, "epsilon must be >= 0");
  int count = 0;
  int previous_sign = 0;
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double d = series[i] - series[i - 1];
    if (std::abs(d) <= epsilon) continue;
    const int sign = d > 0.0 ? 1 : -1;
    if (previous_sign != 0 && sign != previous_sign) ++count;
    previous_sign = sign;
  }
  return count;
}

MetricsReport compute_metrics(const SceneObject& scene, const SessionLog& log,
                              const TargetMap& targets, double deadband) {
  MetricsReport report;
  try {
    report.completion_time = completion_time(log);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoManipulation) throw;
  }

  double ratio_sum = 0.0;
  for (const auto& [id, target] : targets) {
    const auto& c = scene.at(id).constraint;
    const double scale = c.bounded() ? c.range()->length() : kPi;
    std::vector<double> normalized;
    if (auto it = log.error_series.find(id); it != log.error_series.end()) {
      normalized.reserve(it->second.size());
      for (const auto& s : it->second) normalized.push_back(s.error / scale);
    }
    report.reversal_count += reversal_count(normalized, deadband);

    double q = 0.0;
    if (auto it = log.final_states.find(id); it != log.final_states.end()) {
      q = it->second;
    } else {
      q = initial_state(scene.at(id)).q;
    }
    ratio_sum += error_ratio(q, target, c);
  }
  if (!targets.empty()) report.error_ratio = ratio_sum / static_cast<double>(targets.size());
  return report;
}

}  // namespace hoicraft
