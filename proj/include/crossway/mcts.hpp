#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "crossway/fast_eval.hpp"

namespace crossway {

struct MctsParams {
  int iterations = 10000;
  double epsilon = 1.4142135623730951;        // UCT exploration factor
  std::optional<double> time_budget_s;        // alternative stopping rule
};

struct MctsTraceEntry {
  int iteration = 0;
  std::string leaf;  // vehicle id the rollout ran from
  double f = 0.0;    // raw objective (-t_leave)
  double r = 0.0;    // normalized reward credited at the leaf edge
};

struct MctsResult {
  std::vector<int> order;  // indices into the states vector
  std::vector<int> tiers;  // equal-priority tier per order position
  int iterations_run = 0;
  double best_f = 0.0;     // largest raw objective seen during the search
};

/// Front-most not-yet-scheduled vehicle per approach lane; `taken` counts
/// scheduled vehicles per lane against the lane queues.
std::vector<int> legal_children(const std::array<std::vector<int>, kNumApproaches>& lanes,
                                const std::array<int, kNumApproaches>& taken);

/// Lane queues (front first, i.e. descending s) for the given states.
std::array<std::vector<int>, kNumApproaches> build_lane_queues(
    const std::vector<VehicleState>& states);

/// True iff `order` schedules every vehicle once, respecting lane FIFO.
bool validate_order(const std::vector<int>& order,
                    const std::vector<VehicleState>& states);

/// UCT priority scheduler over lane-FIFO passing orders. Deterministic given
/// (states, seed, params). Throws std::invalid_argument on empty input or
/// zero budget.
MctsResult mcts_search(const std::vector<VehicleState>& states,
                       const FastEvalModel& model, const CollisionTable& table,
                       const VehicleParams& params, const MctsParams& mp,
                       std::uint64_t seed,
                       const FastEvalContext* context = nullptr,
                       std::vector<MctsTraceEntry>* trace = nullptr);

/// Groups consecutive, mutually non-conflicting vehicles of an order into
/// equal-priority tiers (returned as a tier index per position).
std::vector<int> priority_tiers(const std::vector<int>& order,
                                const std::vector<VehicleState>& states,
                                const CollisionTable& table);

}  // namespace crossway
