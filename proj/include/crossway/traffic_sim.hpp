#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crossway/baselines.hpp"
#include "crossway/collision_table.hpp"
#include "crossway/st_planner.hpp"

namespace crossway {

enum class Strategy { Bilevel, Fifo, Signal, CsOracle, OcpOracle };

Strategy parse_strategy(const std::string& name);
std::string strategy_name(Strategy s);

struct ArrivalConfig {
  double rate_per_hour_per_lane = 0.0;
  std::array<double, 3> movement_probs = {0.0, 1.0, 0.0};  // left, straight, right
  double duration_s = 3600.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ArrivalEvent {
  double time = 0.0;
  Approach lane = Approach::D;
  Movement movement = Movement::Straight;
  int seq = 0;
};

/// Per-lane Poisson streams (exponential inter-arrival times, movement drawn
/// per event), merged into one time-ordered list. Deterministic per seed.
std::vector<ArrivalEvent> spawn_arrivals(const ArrivalConfig& cfg);

struct SimMetrics {
  int spawned = 0;  // arrival events within the simulated window
  int served = 0;   // vehicles that exited the coordination area
  int in_system_end = 0;
  int backlog_end = 0;
  double throughput_veh_h_lane = 0.0;
  double mean_delay_s = 0.0;
  double p95_delay_s = 0.0;
  std::array<int, kNumApproaches> max_queue{};
  bool safety_ok = true;
  int overlap_count = 0;
};

struct SimConfig {
  Strategy strategy = Strategy::Bilevel;
  ArrivalConfig arrivals;
  double replan_interval_s = 1.0;
  int mcts_budget = 2000;
  double mcts_epsilon = 1.4142135623730951;
  bool collision_check = true;
  SignalPlan signal = SignalPlan::default_plan();
};

class SimError : public std::runtime_error {
 public:
  SimError(const std::string& what, std::string dump)
      : std::runtime_error(what), scenario_dump(std::move(dump)) {}
  std::string scenario_dump;  // config + arrival list, enough to replay
};

/// Rolling-coordination continuous-traffic loop: arrivals materialize at the
/// next replan trigger (entry gap permitting), get scheduled by the selected
/// strategy against the committed time table, and then follow their planned
/// trajectories unchanged. Deterministic per (config, seed).
SimMetrics run_continuous(const SimConfig& cfg, const std::vector<Path>& paths,
                          const IntersectionGeometry& geom,
                          const CollisionTable& table, const CaIntervals& ca,
                          const VehicleParams& params,
                          const PlannerConfig& planner_cfg);

}  // namespace crossway
