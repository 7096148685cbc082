#pragma once

#include <array>
#include <limits>
#include <span>
#include <vector>

#include "crossway/collision_table.hpp"
#include "crossway/st_planner.hpp"
#include "crossway/vehicle.hpp"

namespace crossway {

/// Wait-then-cruise straight-line speed profile s = v_max t + b_star used to
/// score passing orders without solving the QP.
struct SimpleProfile {
  double b_star = 0.0;  // m, optimal intercept
  double t_acc = 0.0;   // s, departure time
  double t_end = 0.0;   // s, exit time
};

constexpr double kNoCorner = std::numeric_limits<double>::infinity();

/// Minimum intercept keeping the cruise line below every corner; +inf for an
/// empty set (caller caps it at the start position).
double intercept(const CornerSet& corners, double v_max);

/// Applies the predecessor shift b_pre - L_safe when a preceding profile
/// exists, then caps at s0 so the profile never starts ahead of the vehicle.
double chain(double b, double b_pre_star, bool has_preceding, double s0,
             double safe_gap);

/// Departure and exit times of the profile; requires b_star <= s0.
SimpleProfile profile_times(double b_star, double s0, double s_end, double v_max);

/// Time the cruise line crosses position s (region boundaries use this).
inline double line_crossing_time(double s, double b_star, double v_max) {
  return (s - b_star) / v_max;
}

/// Flattened per-path conflict data for the rollout-hot evaluation loop.
class FastEvalModel {
 public:
  FastEvalModel(const std::vector<Path>& paths, const CollisionTable& table);

  struct Region {
    int other = 0;
    double s_in = 0.0;
    double s_out = 0.0;
  };

  const std::vector<Region>& regions(int path_idx) const { return regions_[path_idx]; }
  double path_length(int path_idx) const { return lengths_[path_idx]; }

 private:
  std::array<std::vector<Region>, kNumPaths> regions_;
  std::array<double, kNumPaths> lengths_{};
};

/// Mutable per-rollout state: the latest blocking time per ordered path pair
/// plus the rear-end chain intercept per approach. Corners of one pair share
/// s_low, so only the largest t_right can bind; keeping the maximum is
/// equivalent to keeping every interval.
struct FastEvalScratch {
  std::array<double, kNumPaths * kNumPaths> latest_block;  // -inf when free
  std::array<double, kNumApproaches> lane_intercept;       // +inf when open road

  FastEvalScratch() { reset(); }
  void reset();
};

/// Snapshot of committed traffic used to seed rollout scratches mid-flow.
struct FastEvalContext {
  std::array<double, kNumPaths * kNumPaths> latest_block;
  std::array<double, kNumApproaches> lane_intercept;

  FastEvalContext();
  static FastEvalContext from_time_table(const CollisionTimeTable& table);
};

/// Sweeps vehicles in order through the simplified profiles and returns the
/// largest exit time (Eq.-18 style order cost). `order` holds indices into
/// `states`. Always feasible by construction.
double evaluate_order(std::span<const int> order,
                      const std::vector<VehicleState>& states,
                      const FastEvalModel& model, const VehicleParams& params,
                      FastEvalScratch& scratch,
                      const FastEvalContext* context = nullptr);

}  // namespace crossway
