#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crossway/baselines.hpp"
#include "crossway/collision_table.hpp"
#include "crossway/mcts.hpp"
#include "crossway/st_planner.hpp"
#include "crossway/traffic_sim.hpp"

namespace crossway {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run needs: geometry, vehicle/planner/table parameters, and
/// either a static vehicle list or an arrival process. Parsing is strict:
/// unknown keys are errors, and exactly one of vehicles/arrivals must be
/// present.
struct ScenarioConfig {
  int schema_version = 1;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::Bilevel;

  IntersectionGeometry geometry;
  VehicleParams vehicle;
  PlannerConfig planner;
  CollisionTableParams table;
  MctsParams mcts;
  double big_m = 10000.0;  // recorded for fidelity; the enumeration oracle
                           // never builds the big-M inequalities

  std::vector<VehicleState> static_vehicles;
  std::optional<ArrivalConfig> arrivals;

  double sim_replan_interval_s = 1.0;
  int sim_mcts_budget = 2000;
  bool sim_collision_check = true;
  SignalPlan signal = SignalPlan::default_plan();

  bool is_static() const { return !static_vehicles.empty(); }
  void validate() const;
};

ScenarioConfig parse_config(const std::string& json_text);
std::string serialize_config(const ScenarioConfig& cfg);
ScenarioConfig load_config_file(const std::string& path);

/// Table-1 defaults plus the reconstructed six-vehicle static scenario
/// (2 on D, 2 on U, 1 on R, 1 on L).
ScenarioConfig default_config();

}  // namespace crossway
