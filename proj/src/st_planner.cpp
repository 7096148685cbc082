#include "crossway/st_planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace crossway {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Conservative slack on position constraints; absorbs the solver feasibility
// tolerance so planned occupations stay strictly disjoint.
constexpr double kPositionMargin = 1e-3;

}  // namespace

void CollisionTimeTable::record(int ego_idx, int conflict_idx, TimeInterval iv) {
  auto& list = slots_[ego_idx * kNumPaths + conflict_idx];
  auto it = std::lower_bound(
      list.begin(), list.end(), iv,
      [](const TimeInterval& a, const TimeInterval& b) { return a.t_left < b.t_left; });
  it = list.insert(it, iv);
  // Merge with neighbours while they overlap.
  std::size_t i = it - list.begin();
  if (i > 0 && list[i - 1].t_right >= list[i].t_left) {
    list[i - 1].t_right = std::max(list[i - 1].t_right, list[i].t_right);
    list.erase(list.begin() + i);
    --i;
  }
  while (i + 1 < list.size() && list[i].t_right >= list[i + 1].t_left) {
    list[i].t_right = std::max(list[i].t_right, list[i + 1].t_right);
    list.erase(list.begin() + i + 1);
  }
}

void CollisionTimeTable::prune_before(double t) {
  for (auto& list : slots_) {
    std::erase_if(list, [t](const TimeInterval& iv) { return iv.t_right < t; });
  }
}

bool CollisionTimeTable::empty() const {
  for (const auto& l : slots_) {
    if (!l.empty()) return false;
  }
  return true;
}

void CollisionTimeTable::clear() {
  for (auto& l : slots_) l.clear();
}

std::string CollisionTimeTable::dump() const {
  std::string out;
  char buf[96];
  for (int e = 0; e < kNumPaths; ++e) {
    for (int c = 0; c < kNumPaths; ++c) {
      const auto& list = intervals(e, c);
      if (list.empty()) continue;
      out += path_name(PathId::from_index(e)) + " " + path_name(PathId::from_index(c));
      for (const TimeInterval& iv : list) {
        std::snprintf(buf, sizeof(buf), " [%.3f, %.3f]", iv.t_left, iv.t_right);
        out += buf;
      }
      out += '\n';
    }
  }
  return out;
}

CornerSet blocked_corners(PathId ego_path, const CollisionTimeTable& time_table,
                          const CollisionTable& collision_table) {
  CornerSet corners;
  const int ego = ego_path.index();
  for (int conflict = 0; conflict < kNumPaths; ++conflict) {
    const auto& list = time_table.intervals(ego, conflict);
    if (list.empty()) continue;
    const CollisionRegion* region = collision_table.find(ego, conflict);
    if (!region) {
      throw std::invalid_argument("time table entry for unknown pair " +
                                  path_name(ego_path) + "," +
                                  path_name(PathId::from_index(conflict)));
    }
    for (const TimeInterval& iv : list) {
      corners.push_back({iv.t_right, region->s_in, conflict});
    }
  }
  return corners;
}

std::vector<BlockedRegion> blocked_regions(PathId ego_path,
                                           const CollisionTimeTable& time_table,
                                           const CollisionTable& collision_table) {
  std::vector<BlockedRegion> out;
  const int ego = ego_path.index();
  for (int conflict = 0; conflict < kNumPaths; ++conflict) {
    const CollisionRegion* region = collision_table.find(ego, conflict);
    if (!region) continue;
    for (const TimeInterval& iv : time_table.intervals(ego, conflict)) {
      out.push_back({iv, *region, conflict});
    }
  }
  return out;
}

namespace {

// Position of the hardest-braking profile at time t0 + tau: full u_min until
// standstill, then hold. This is itself a feasible trajectory, so it is an
// exact feasibility certificate for the corner and rear-end constraints.
double min_position_after(const VehicleState& state, const VehicleParams& p,
                          double tau) {
  const double t_stop = state.v / -p.u_min;
  if (tau >= t_stop) return state.s + 0.5 * state.v * t_stop;
  return state.s + state.v * tau + 0.5 * p.u_min * tau * tau;
}

// Rear-end rows apply while the leader is within clearance of the shared
// entry straight; past that the routes have physically separated.
bool rear_end_active(double leader_s, double divergence_s, double safe_gap) {
  return leader_s <= divergence_s + 2.0 * safe_gap;
}

}  // namespace

Trajectory plan_vehicle(const VehicleState& state, const CornerSet& corners,
                        const PrecedingConstraint* preceding,
                        const VehicleParams& params, const PlannerConfig& cfg,
                        PlanStats* stats) {
  const int T = cfg.horizon_slots;
  const double dt = cfg.dt;
  const double t0 = state.spawn_time;
  const double t_end = t0 + T * dt;

  for (const Corner& c : corners) {
    if (c.t_right > t_end + 1e-9) {
      throw HorizonExceededError(
          c, "corner at t=" + std::to_string(c.t_right) + " beyond horizon end " +
                 std::to_string(t_end));
    }
    if (min_position_after(state, params, c.t_right - t0) > c.s_low + 1e-9) {
      throw InfeasibleStopError(
          state.id, c,
          "vehicle " + state.id + " cannot brake below s=" + std::to_string(c.s_low) +
              " by t=" + std::to_string(c.t_right));
    }
  }

  // Precompute the leader position per slot and check rear-end feasibility
  // against the same braking certificate.
  std::vector<double> leader_bound(T + 1, kInf);
  if (preceding && preceding->trajectory) {
    for (int k = 0; k <= T; ++k) {
      const double t = t0 + k * dt;
      const double leader_s = preceding->trajectory->position_extrapolated(t);
      if (!rear_end_active(leader_s, preceding->divergence_s, params.safe_gap)) {
        continue;
      }
      leader_bound[k] = leader_s - params.safe_gap;
      if (min_position_after(state, params, k * dt) > leader_bound[k] + 1e-9) {
        throw InfeasibleStopError(
            state.id, Corner{t, leader_bound[k], -1},
            "vehicle " + state.id + " cannot keep the rear-end gap at t=" +
                std::to_string(t));
      }
    }
  }

  // QP over x = [s(0..T), v(0..T), u(0..T-1)].
  const int n = 2 * (T + 1) + T;
  const int off_s = 0, off_v = T + 1, off_u = 2 * (T + 1);

  std::vector<Eigen::Triplet<double>> pt, at;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  for (int k = 1; k <= T; ++k) {
    pt.emplace_back(off_v + k, off_v + k, 2.0);
    q[off_v + k] = -2.0 * params.v_max;
  }

  std::vector<double> lo, hi;
  int row = 0;
  auto add_row = [&](double l, double u) {
    lo.push_back(l);
    hi.push_back(u);
    return row++;
  };

  {  // initial state
    int r = add_row(state.s, state.s);
    at.emplace_back(r, off_s + 0, 1.0);
    r = add_row(state.v, state.v);
    at.emplace_back(r, off_v + 0, 1.0);
  }
  for (int k = 0; k < T; ++k) {  // dynamics
    int r = add_row(0.0, 0.0);  // v[k+1] - v[k] - dt u[k] = 0
    at.emplace_back(r, off_v + k + 1, 1.0);
    at.emplace_back(r, off_v + k, -1.0);
    at.emplace_back(r, off_u + k, -dt);
    r = add_row(0.0, 0.0);  // s[k+1] - s[k] - dt v[k] - dt^2/2 u[k] = 0
    at.emplace_back(r, off_s + k + 1, 1.0);
    at.emplace_back(r, off_s + k, -1.0);
    at.emplace_back(r, off_v + k, -dt);
    at.emplace_back(r, off_u + k, -0.5 * dt * dt);
  }
  for (int k = 1; k <= T; ++k) {  // speed box
    int r = add_row(0.0, params.v_max);
    at.emplace_back(r, off_v + k, 1.0);
  }
  for (int k = 0; k < T; ++k) {  // acceleration box
    int r = add_row(params.u_min, params.u_max);
    at.emplace_back(r, off_u + k, 1.0);
  }
  for (const Corner& c : corners) {
    // Snapping the constraint to the next slot boundary is conservative:
    // s is non-decreasing, so s(slot) <= s_low implies s(t_right) <= s_low.
    const int kc = std::min(
        T, static_cast<int>(std::ceil((c.t_right - t0) / dt - 1e-9)));
    if (kc <= 0) continue;  // constraint expired before the horizon started
    int r = add_row(-kInf, c.s_low - kPositionMargin);
    at.emplace_back(r, off_s + kc, 1.0);
  }
  for (int k = 1; k <= T; ++k) {
    if (leader_bound[k] == kInf) continue;
    int r = add_row(-kInf, leader_bound[k] - kPositionMargin);
    at.emplace_back(r, off_s + k, 1.0);
  }

  Eigen::SparseMatrix<double> P(n, n), A(row, n);
  P.setFromTriplets(pt.begin(), pt.end());
  A.setFromTriplets(at.begin(), at.end());
  Eigen::Map<const Eigen::VectorXd> l(lo.data(), row), u(hi.data(), row);

  // Warm start from the unconstrained optimum: accelerate to v_max and hold.
  Eigen::VectorXd warm(n);
  {
    double s = state.s, v = state.v;
    warm[off_s] = s;
    warm[off_v] = v;
    for (int k = 0; k < T; ++k) {
      const double uk = std::min(params.u_max, (params.v_max - v) / dt);
      warm[off_u + k] = uk;
      s += v * dt + 0.5 * uk * dt * dt;
      v = std::min(params.v_max, v + uk * dt);
      warm[off_s + k + 1] = s;
      warm[off_v + k + 1] = v;
    }
  }

  QpSolver solver(cfg.qp);
  QpResult res = solver.solve(P, q, A, l, u, &warm);
  if (res.status != QpStatus::Solved) {
    throw std::runtime_error("speed planner did not converge for vehicle " +
                             state.id + " (primal residual " +
                             std::to_string(res.primal_residual) + ")");
  }

  // Re-integrate the control sequence exactly, clamping away the solver's
  // residual tolerance so the trajectory invariants hold bit-for-bit.
  std::vector<double> u_seq(T);
  {
    double v = state.v;
    for (int k = 0; k < T; ++k) {
      double uk = std::clamp(res.x[off_u + k], params.u_min, params.u_max);
      uk = std::clamp(uk, -v / dt, (params.v_max - v) / dt);
      u_seq[k] = uk;
      v += uk * dt;
    }
  }
  Trajectory traj = integrate(state, u_seq, dt, params);
  if (stats) {
    stats->qp_iterations = res.iterations;
    stats->polished = res.polished;
    stats->objective = speed_deviation_cost(traj, params.v_max);
  }
  return traj;
}

Trajectory plan_vehicle_adaptive(const VehicleState& state, const CornerSet& corners,
                                 const PrecedingConstraint* preceding,
                                 const VehicleParams& params, PlannerConfig cfg,
                                 bool require_path_exit, double path_length,
                                 int max_doublings, PlanStats* stats) {
  for (int attempt = 0;; ++attempt) {
    try {
      Trajectory traj = plan_vehicle(state, corners, preceding, params, cfg, stats);
      if (!require_path_exit || traj.first_time_at_or_after(path_length) >= 0.0) {
        return traj;
      }
    } catch (const HorizonExceededError&) {
      if (attempt >= max_doublings) throw;
    }
    if (attempt >= max_doublings) {
      throw std::runtime_error("vehicle " + state.id +
                               " cannot clear its path within " +
                               std::to_string(cfg.horizon_slots * cfg.dt) + " s");
    }
    cfg.horizon_slots *= 2;
  }
}

double speed_deviation_cost(const Trajectory& traj, double v_max) {
  double cost = 0.0;
  for (std::size_t k = 1; k < traj.v.size(); ++k) {
    const double d = traj.v[k] - v_max;
    cost += d * d;
  }
  return cost;
}

void update_time_table(const Trajectory& traj, PathId ego_path,
                       const CollisionTable& collision_table,
                       CollisionTimeTable& time_table) {
  const int ego = ego_path.index();
  for (int conflict : collision_table.conflicting_paths(ego)) {
    const CollisionRegion* region = collision_table.find(ego, conflict);
    const double t_in = traj.first_time_at_or_after(region->s_in);
    if (t_in < 0.0) continue;  // never reaches the region
    double t_out = traj.first_time_at_or_after(region->s_out);
    if (t_out < 0.0) t_out = traj.end_time();
    time_table.record(conflict, ego, {t_in, t_out});
  }
}

bool is_lane_fifo(const std::vector<VehicleState>& order) {
  std::array<double, kNumApproaches> last_s;
  last_s.fill(kInf);
  for (const VehicleState& v : order) {
    const int lane = static_cast<int>(v.path.approach);
    if (v.s > last_s[lane]) return false;
    last_s[lane] = v.s;
  }
  return true;
}

SequencePlan plan_sequence(const std::vector<VehicleState>& order,
                           const std::vector<Path>& paths,
                           const CollisionTable& collision_table,
                           const VehicleParams& params, const PlannerConfig& cfg,
                           const PlanContext* context, bool require_exit) {
  if (!is_lane_fifo(order)) {
    throw std::invalid_argument("priority sequence violates lane FIFO");
  }
  SequencePlan plan;
  if (context) plan.time_table = context->time_table;

  struct Tail {
    const VehicleState* state = nullptr;
    const Trajectory* traj = nullptr;
  };
  std::array<Tail, kNumApproaches> tails;
  if (context) {
    for (int lane = 0; lane < kNumApproaches; ++lane) {
      if (context->lane_tails[lane]) {
        tails[lane] = {&context->lane_tails[lane]->state,
                       context->lane_tails[lane]->trajectory};
      }
    }
  }

  plan.trajectories.reserve(order.size());
  double t_leave = 0.0;
  bool all_exit = true;
  for (const VehicleState& state : order) {
    const Path& path = paths[state.path.index()];
    const CornerSet corners =
        blocked_corners(state.path, plan.time_table, collision_table);

    PrecedingConstraint pre;
    const Tail& tail = tails[static_cast<int>(state.path.approach)];
    if (tail.traj != nullptr) {
      pre.trajectory = tail.traj;
      if (tail.state->path == state.path) {
        pre.divergence_s = kInf;
      } else {
        pre.divergence_s =
            std::min(path.entry_straight_length(),
                     paths[tail.state->path.index()].entry_straight_length());
      }
    }

    Trajectory traj =
        require_exit
            ? plan_vehicle_adaptive(state, corners, tail.traj ? &pre : nullptr,
                                    params, cfg, true, path.total_length)
            : plan_vehicle(state, corners, tail.traj ? &pre : nullptr, params, cfg);
    update_time_table(traj, state.path, collision_table, plan.time_table);

    const double exit_t = traj.first_time_at_or_after(path.total_length);
    plan.exit_times.push_back(exit_t);
    if (exit_t < 0.0) all_exit = false;
    else t_leave = std::max(t_leave, exit_t);

    plan.trajectories.emplace_back(state, std::move(traj));
    tails[static_cast<int>(state.path.approach)] = {
        &plan.trajectories.back().first, &plan.trajectories.back().second};
  }
  plan.t_leave = all_exit ? t_leave : kInf;
  return plan;
}

}  // namespace crossway
