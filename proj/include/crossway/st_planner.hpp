#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crossway/collision_table.hpp"
#include "crossway/qp_solver.hpp"
#include "crossway/vehicle.hpp"

namespace crossway {

struct TimeInterval {
  double t_left = 0.0;
  double t_right = 0.0;
};

/// Occupation times of collision regions claimed by already-planned
/// vehicles: (ego_path, conflict_path) -> sorted, merged time intervals
/// during which traffic on conflict_path occupies its mirror region.
class CollisionTimeTable {
 public:
  const std::vector<TimeInterval>& intervals(int ego_idx, int conflict_idx) const {
    return slots_[ego_idx * kNumPaths + conflict_idx];
  }
  /// Inserts keeping the list time-sorted; overlapping or touching
  /// intervals are merged.
  void record(int ego_idx, int conflict_idx, TimeInterval iv);
  /// Drops intervals that ended before t; they can no longer block anyone.
  void prune_before(double t);
  bool empty() const;
  void clear();

  std::string dump() const;  // debug text, one line per non-empty pair

 private:
  std::array<std::vector<TimeInterval>, kNumPaths * kNumPaths> slots_;
};

/// Lower-right corner of one blocked rectangle in the ego S-T graph.
struct Corner {
  double t_right = 0.0;
  double s_low = 0.0;
  int conflict_path = -1;  // provenance, for diagnostics and rendering
};
using CornerSet = std::vector<Corner>;

/// Axis-aligned blocked rectangle in the S-T graph (for rendering/debug).
struct BlockedRegion {
  TimeInterval time;
  CollisionRegion span;
  int conflict_path = -1;
};

class InfeasibleStopError : public std::runtime_error {
 public:
  InfeasibleStopError(std::string vehicle, Corner c, const std::string& what)
      : std::runtime_error(what), vehicle_id(std::move(vehicle)), corner(c) {}
  std::string vehicle_id;
  Corner corner;
};

class HorizonExceededError : public std::runtime_error {
 public:
  HorizonExceededError(Corner c, const std::string& what)
      : std::runtime_error(what), corner(c) {}
  Corner corner;
};

struct PlannerConfig {
  int horizon_slots = 400;  // T
  double dt = 0.1;          // s
  QpSettings qp;
};

/// Rear-end coupling to the nearest vehicle ahead on the same approach.
/// The gap constraint is dropped once the leader is clear_margin past the
/// point where the two routes diverge.
struct PrecedingConstraint {
  const Trajectory* trajectory = nullptr;
  double divergence_s = std::numeric_limits<double>::infinity();
};

/// Eq-12 style corner extraction: one corner per occupation interval of
/// every path conflicting with the ego path.
CornerSet blocked_corners(PathId ego_path, const CollisionTimeTable& time_table,
                          const CollisionTable& collision_table);

/// Blocked rectangles for the ego path (rendering / S-T plots).
std::vector<BlockedRegion> blocked_regions(PathId ego_path,
                                           const CollisionTimeTable& time_table,
                                           const CollisionTable& collision_table);

struct PlanStats {
  int qp_iterations = 0;
  bool polished = false;
  double objective = 0.0;  // sum of squared speed deviations
};

/// Solves the per-vehicle speed-planning QP: minimize the quadratic
/// deviation from v_max subject to dynamics, speed/acceleration bounds,
/// per-slot rear-end gap, and one position constraint per corner.
/// Throws HorizonExceededError / InfeasibleStopError.
Trajectory plan_vehicle(const VehicleState& state, const CornerSet& corners,
                        const PrecedingConstraint* preceding,
                        const VehicleParams& params, const PlannerConfig& cfg,
                        PlanStats* stats = nullptr);

/// plan_vehicle with horizon doubling: retries with a longer horizon when a
/// corner lies beyond it or (when require_path_exit) the vehicle fails to
/// clear the path. Used for red-phase waits and continuous traffic, where
/// occupations must never be cut off by the horizon.
Trajectory plan_vehicle_adaptive(const VehicleState& state, const CornerSet& corners,
                                 const PrecedingConstraint* preceding,
                                 const VehicleParams& params, PlannerConfig cfg,
                                 bool require_path_exit, double path_length,
                                 int max_doublings = 5, PlanStats* stats = nullptr);

/// Squared speed deviation cost of a trajectory (the planner objective).
double speed_deviation_cost(const Trajectory& traj, double v_max);

/// Records the trajectory's occupation of every collision region along its
/// path into the table (under the conflicting path's key). Occupations that
/// never end within the horizon are capped at the horizon end.
void update_time_table(const Trajectory& traj, PathId ego_path,
                       const CollisionTable& collision_table,
                       CollisionTimeTable& time_table);

/// Rear-end chaining context carried across planning batches (committed
/// vehicles from earlier coordination rounds in continuous traffic).
struct LaneTail {
  VehicleState state;
  const Trajectory* trajectory = nullptr;
};

struct PlanContext {
  CollisionTimeTable time_table;
  std::array<std::optional<LaneTail>, kNumApproaches> lane_tails;
};

struct SequencePlan {
  std::vector<std::pair<VehicleState, Trajectory>> trajectories;  // plan order
  std::vector<double> exit_times;  // < 0 when not within horizon
  double t_leave = 0.0;            // +inf when some vehicle never exits
  CollisionTimeTable time_table;   // includes context plus this batch
};

/// True iff, for every approach, the order lists same-approach vehicles
/// front (largest s) first.
bool is_lane_fifo(const std::vector<VehicleState>& order);

/// Plans vehicles in priority order, threading the collision time table and
/// rear-end chains through the batch. The order must be lane-FIFO. With
/// require_exit set, each vehicle's horizon is extended until it clears its
/// path (continuous-traffic mode).
SequencePlan plan_sequence(const std::vector<VehicleState>& order,
                           const std::vector<Path>& paths,
                           const CollisionTable& collision_table,
                           const VehicleParams& params, const PlannerConfig& cfg,
                           const PlanContext* context = nullptr,
                           bool require_exit = false);

}  // namespace crossway
