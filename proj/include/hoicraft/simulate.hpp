#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoicraft/interaction.hpp"

namespace hoicraft {

inline constexpr double kDefaultDt = 1.0 / 90.0;
inline constexpr double kDefaultReversalDeadband = 1e-4;

struct TrajectoryScript {
  std::vector<HandSample> samples;
  double dt = kDefaultDt;

  /// Throws EmptyScript or InvalidArgument.
  void validate() const;
};

TrajectoryScript trajectory_from_json(const nlohmann::json& j);
nlohmann::json trajectory_to_json(const TrajectoryScript& script);

struct ErrorSample {
  double t = 0.0;
  double error = 0.0;
};

struct SessionLog {
  std::vector<InteractionEvent> events;
  std::map<std::string, std::vector<ErrorSample>> error_series;
  std::map<std::string, double> final_states;

  bool operator==(const SessionLog& other) const;
};

struct MetricsReport {
  std::optional<double> completion_time;  // empty when nothing was manipulated
  int reversal_count = 0;
  double error_ratio = 0.0;
};

nlohmann::json metrics_to_json(const MetricsReport& m);

using DesignAssignments = std::map<std::string, DesignConfig>;
using TargetMap = std::map<std::string, double>;

/// Steps every assigned part over the script. Parts are visited in id order
/// within a step, which fixes the event order.
SessionLog run_session(const SceneObject& scene, const DesignAssignments& assignments,
                       const TrajectoryScript& script, const TargetMap& targets,
                       const EngineConfig& cfg = {});

/// Interval between the first and last Moved/AnimationTriggered event.
/// Throws NoManipulation.
double completion_time(const SessionLog& log);

int reversal_count(std::span<const double> series, double epsilon);

/// |q - target| (wrap-aware) normalized by range length, or by pi for an
/// unbounded revolute part.
double error_ratio(double q, double target, const MotionConstraint& c);

/// Error distance for one step, in the constraint's own units.
double error_distance(double q, double target, const MotionConstraint& c);

/// Completion time, summed per-part reversal counts over normalized error
/// series, and the unweighted mean of per-part error ratios.
MetricsReport compute_metrics(const SceneObject& scene, const SessionLog& log,
                              const TargetMap& targets,
                              double deadband = kDefaultReversalDeadband);

}  // namespace hoicraft
