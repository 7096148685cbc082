#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "crossway/collision_table.hpp"
#include "crossway/st_planner.hpp"

namespace crossway {

enum class CollisionModel { CS, OCP };

/// Per-path entry/exit of the central conflict-area square, shared by the
/// collision-set baseline, the FIFO tie-break, and the signal gate.
struct CaIntervals {
  std::array<CollisionRegion, kNumPaths> per_path{};
};

CaIntervals compute_ca_intervals(const std::vector<Path>& paths, const BoxDims& box,
                                 const IntersectionGeometry& geom, double eps);

/// Collision-set variant of the table: every conflicting pair is assigned
/// the ego path's whole conflict-area interval, so conflicting vehicles
/// serialize through the area one at a time.
CollisionTable make_cs_table(const CollisionTable& base, const CaIntervals& ca);

/// Number of lane-FIFO passing orders (multinomial over lane counts).
std::uint64_t count_lane_fifo_orders(const std::vector<VehicleState>& states);

/// Calls fn once per lane-FIFO order (each order is a vector of state
/// indices), in lexicographic lane order. Refuses more than
/// guard_max_vehicles unless override_guard is set.
void for_each_lane_fifo_order(const std::vector<VehicleState>& states,
                              const std::function<void(const std::vector<int>&)>& fn,
                              int guard_max_vehicles = 10,
                              bool override_guard = false);

struct OracleOptions {
  int guard_max_vehicles = 10;
  bool override_guard = false;
  std::string cache_dir;  // empty disables the on-disk cache
};

struct OracleResult {
  std::vector<int> order;
  double t_leave = 0.0;
  SequencePlan plan;
  std::uint64_t orders_evaluated = 0;
  std::uint64_t orders_infeasible = 0;
};

/// Exhaustive order enumeration with sequential planning under the given
/// collision model table; prefixes share their planning work. Ties resolve
/// to the lexicographically first order. Throws when every order is
/// infeasible.
OracleResult centralized_oracle(const std::vector<VehicleState>& states,
                                const std::vector<Path>& paths,
                                const CollisionTable& model_table,
                                const VehicleParams& params,
                                const PlannerConfig& cfg,
                                const OracleOptions& options = {});

/// Arrival order into the coordination area; ties break on distance to the
/// conflict area, then lane order D < R < U < L, then id.
std::vector<int> fifo_order(const std::vector<VehicleState>& states,
                            const CaIntervals& ca);

struct SignalPhase {
  std::vector<PathId> movements;
  double green_s = 15.0;
};

struct SignalPlan {
  std::vector<SignalPhase> phases;

  double cycle() const;
  bool is_green(PathId path, double t) const;
  /// Earliest green start at or after t for the path's movement (returns t
  /// itself when t is already green).
  double next_entry_time(PathId path, double t) const;
  /// Movements within one phase must be pairwise lateral-conflict-free.
  void validate(const CollisionTable& table) const;

  static SignalPlan default_plan();
};

/// Fixed-time signal strategy: vehicles are served in FIFO order with the
/// usual lateral corners plus an entry gate that keeps each vehicle's
/// conflict-area entry inside a green window of its movement. The planning
/// horizon is extended as needed to cover red-phase waits.
SequencePlan plan_signal_sequence(const std::vector<int>& order,
                                  const std::vector<VehicleState>& states,
                                  const std::vector<Path>& paths,
                                  const CollisionTable& collision_table,
                                  const CaIntervals& ca, const SignalPlan& plan,
                                  const VehicleParams& params,
                                  const PlannerConfig& cfg,
                                  const PlanContext* context = nullptr,
                                  bool require_exit = false);

}  // namespace crossway
