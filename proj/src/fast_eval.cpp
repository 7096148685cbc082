#include "crossway/fast_eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crossway {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double intercept(const CornerSet& corners, double v_max) {
  double b = kNoCorner;
  for (const Corner& c : corners) {
    b = std::min(b, c.s_low - v_max * c.t_right);
  }
  return b;
}

double chain(double b, double b_pre_star, bool has_preceding, double s0,
             double safe_gap) {
  if (has_preceding) b = std::min(b, b_pre_star - safe_gap);
  return std::min(b, s0);
}

SimpleProfile profile_times(double b_star, double s0, double s_end, double v_max) {
  if (b_star > s0 + 1e-12) {
    throw std::invalid_argument("profile intercept ahead of the start position");
  }
  SimpleProfile p;
  p.b_star = b_star;
  p.t_acc = (s0 - b_star) / v_max;
  p.t_end = (s_end - b_star) / v_max;
  return p;
}

FastEvalModel::FastEvalModel(const std::vector<Path>& paths,
                             const CollisionTable& table) {
  for (const Path& p : paths) {
    const int idx = p.id.index();
    lengths_[idx] = p.total_length;
    for (int other : table.conflicting_paths(idx)) {
      const CollisionRegion* r = table.find(idx, other);
      regions_[idx].push_back({other, r->s_in, r->s_out});
    }
  }
}

void FastEvalScratch::reset() {
  latest_block.fill(-kInf);
  lane_intercept.fill(kInf);
}

FastEvalContext::FastEvalContext() {
  latest_block.fill(-kInf);
  lane_intercept.fill(kInf);
}

FastEvalContext FastEvalContext::from_time_table(const CollisionTimeTable& table) {
  FastEvalContext ctx;
  for (int e = 0; e < kNumPaths; ++e) {
    for (int c = 0; c < kNumPaths; ++c) {
      for (const TimeInterval& iv : table.intervals(e, c)) {
        auto& cell = ctx.latest_block[e * kNumPaths + c];
        cell = std::max(cell, iv.t_right);
      }
    }
  }
  return ctx;
}

double evaluate_order(std::span<const int> order,
                      const std::vector<VehicleState>& states,
                      const FastEvalModel& model, const VehicleParams& params,
                      FastEvalScratch& scratch, const FastEvalContext* context) {
  if (context) {
    scratch.latest_block = context->latest_block;
    scratch.lane_intercept = context->lane_intercept;
  } else {
    scratch.reset();
  }
  const double v_max = params.v_max;
  double t_leave = 0.0;
  for (int vi : order) {
    const VehicleState& state = states[vi];
    const int p = state.path.index();
    const int lane = static_cast<int>(state.path.approach);

    double b = kInf;
    for (const FastEvalModel::Region& reg : model.regions(p)) {
      const double tr = scratch.latest_block[p * kNumPaths + reg.other];
      if (tr > -kInf) b = std::min(b, reg.s_in - v_max * tr);
    }
    if (scratch.lane_intercept[lane] < kInf) {
      b = std::min(b, scratch.lane_intercept[lane] - params.safe_gap);
    }
    // Cap so the line never runs ahead of the vehicle's own start point
    // (spawn_time is 0 in static scenarios, the trigger time mid-flow).
    b = std::min(b, state.s - v_max * state.spawn_time);
    scratch.lane_intercept[lane] = b;

    for (const FastEvalModel::Region& reg : model.regions(p)) {
      auto& cell = scratch.latest_block[reg.other * kNumPaths + p];
      cell = std::max(cell, (reg.s_out - b) / v_max);
    }
    t_leave = std::max(t_leave, (model.path_length(p) - b) / v_max);
  }
  return t_leave;
}

}  // namespace crossway
