#include "crossway/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "crossway/mcts.hpp"
#include "json.hpp"

namespace crossway {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

CaIntervals compute_ca_intervals(const std::vector<Path>& paths, const BoxDims& box,
                                 const IntersectionGeometry& geom, double eps) {
  CaIntervals out;
  for (const Path& p : paths) {
    out.per_path[p.id.index()] =
        conflict_area_interval(p, box, geom.conflict_area_half_extent(), eps);
  }
  return out;
}

CollisionTable make_cs_table(const CollisionTable& base, const CaIntervals& ca) {
  CollisionTable cs;
  for (int e = 0; e < kNumPaths; ++e) {
    for (int c : base.conflicting_paths(e)) {
      cs.insert(PathId::from_index(e), PathId::from_index(c), ca.per_path[e]);
    }
  }
  cs.set_geometry_hash(base.geometry_hash());
  return cs;
}

std::uint64_t count_lane_fifo_orders(const std::vector<VehicleState>& states) {
  std::array<std::uint64_t, kNumApproaches> counts{};
  for (const VehicleState& s : states) {
    ++counts[static_cast<int>(s.path.approach)];
  }
  // Multinomial coefficient as a product of binomials.
  const auto binom = [](std::uint64_t n, std::uint64_t k) {
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  std::uint64_t total = 0, result = 1;
  for (std::uint64_t c : counts) {
    total += c;
    result *= binom(total, c);
  }
  return result;
}

void for_each_lane_fifo_order(const std::vector<VehicleState>& states,
                              const std::function<void(const std::vector<int>&)>& fn,
                              int guard_max_vehicles, bool override_guard) {
  const int n = static_cast<int>(states.size());
  if (n > guard_max_vehicles && !override_guard) {
    throw std::invalid_argument(
        "refusing to enumerate " + std::to_string(n) +
        " vehicles without an explicit override (guard at " +
        std::to_string(guard_max_vehicles) + ")");
  }
  const auto lanes = build_lane_queues(states);
  std::vector<int> symbols;
  for (int lane = 0; lane < kNumApproaches; ++lane) {
    symbols.insert(symbols.end(), lanes[lane].size(), lane);
  }
  std::sort(symbols.begin(), symbols.end());
  std::vector<int> order(n);
  do {
    std::array<int, kNumApproaches> taken{};
    for (int i = 0; i < n; ++i) {
      order[i] = lanes[symbols[i]][taken[symbols[i]]++];
    }
    fn(order);
  } while (std::next_permutation(symbols.begin(), symbols.end()));
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string scenario_key(const std::vector<VehicleState>& states,
                         const CollisionTable& table, const VehicleParams& params,
                         const PlannerConfig& cfg) {
  char buf[160];
  std::string s;
  for (const VehicleState& v : states) {
    std::snprintf(buf, sizeof(buf), "%s|%s|%.9g|%.9g|%.9g;", v.id.c_str(),
                  path_name(v.path).c_str(), v.s, v.v, v.spawn_time);
    s += buf;
  }
  std::snprintf(buf, sizeof(buf), "tbl=%016llx;vmax=%.9g;T=%d;dt=%.9g",
                static_cast<unsigned long long>(table.geometry_hash()),
                params.v_max, cfg.horizon_slots, cfg.dt);
  s += buf;
  // The CS table carries the base hash; fold the actual regions in too so
  // the two models never share a cache entry.
  s += table.serialize();
  char hex[24];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a(s)));
  return hex;
}

struct DfsState {
  const std::vector<VehicleState>* states;
  const std::vector<Path>* paths;
  const CollisionTable* table;
  const VehicleParams* params;
  const PlannerConfig* cfg;
  std::array<std::vector<int>, kNumApproaches> lanes;
  int n = 0;

  std::vector<Trajectory> traj_stack;  // one slot per depth
  std::vector<int> prefix;
  std::vector<double> exits;

  std::vector<int> best_order;
  double best_t = kInf;
  bool have_best = false;
  std::uint64_t evaluated = 0;
  std::uint64_t infeasible = 0;

  std::uint64_t completions(const std::array<int, kNumApproaches>& taken) const {
    std::uint64_t total = 0, result = 1;
    const auto binom = [](std::uint64_t nn, std::uint64_t kk) {
      std::uint64_t r = 1;
      for (std::uint64_t i = 1; i <= kk; ++i) r = r * (nn - kk + i) / i;
      return r;
    };
    for (int lane = 0; lane < kNumApproaches; ++lane) {
      const std::uint64_t left = lanes[lane].size() - taken[lane];
      total += left;
      result *= binom(total, left);
    }
    return result;
  }

  struct Tail {
    const VehicleState* state = nullptr;
    const Trajectory* traj = nullptr;
  };

  void dfs(int depth, std::array<int, kNumApproaches>& taken,
           const CollisionTimeTable& table_state,
           const std::array<Tail, kNumApproaches>& tails) {
    if (depth == n) {
      ++evaluated;
      double t = 0.0;
      for (double e : exits) {
        if (e < 0.0) {
          t = kInf;
          break;
        }
        t = std::max(t, e);
      }
      if (!have_best || t < best_t) {
        have_best = true;
        best_t = t;
        best_order = prefix;
      }
      return;
    }
    for (int lane = 0; lane < kNumApproaches; ++lane) {
      if (taken[lane] >= static_cast<int>(lanes[lane].size())) continue;
      const int vi = lanes[lane][taken[lane]];
      const VehicleState& state = (*states)[vi];
      const Path& path = (*paths)[state.path.index()];

      PrecedingConstraint pre;
      const Tail& tail = tails[lane];
      if (tail.traj) {
        pre.trajectory = tail.traj;
        pre.divergence_s =
            tail.state->path == state.path
                ? kInf
                : std::min(path.entry_straight_length(),
                           (*paths)[tail.state->path.index()].entry_straight_length());
      }
      const CornerSet corners = blocked_corners(state.path, table_state, *table);
      Trajectory traj;
      try {
        traj = plan_vehicle(state, corners, tail.traj ? &pre : nullptr, *params,
                            *cfg);
      } catch (const InfeasibleStopError&) {
        auto t2 = taken;
        ++t2[lane];
        infeasible += completions(t2);
        continue;
      }
      traj_stack[depth] = std::move(traj);

      CollisionTimeTable next_table = table_state;
      update_time_table(traj_stack[depth], state.path, *table, next_table);
      auto next_tails = tails;
      next_tails[lane] = {&state, &traj_stack[depth]};

      prefix.push_back(vi);
      exits.push_back(traj_stack[depth].first_time_at_or_after(path.total_length));
      ++taken[lane];
      dfs(depth + 1, taken, next_table, next_tails);
      --taken[lane];
      prefix.pop_back();
      exits.pop_back();
    }
  }
};

}  // namespace

OracleResult centralized_oracle(const std::vector<VehicleState>& states,
                                const std::vector<Path>& paths,
                                const CollisionTable& model_table,
                                const VehicleParams& params,
                                const PlannerConfig& cfg,
                                const OracleOptions& options) {
  const int n = static_cast<int>(states.size());
  if (n == 0) throw std::invalid_argument("oracle needs at least one vehicle");
  if (n > options.guard_max_vehicles && !options.override_guard) {
    throw std::invalid_argument(
        "refusing oracle enumeration of " + std::to_string(n) +
        " vehicles without an explicit override");
  }

  std::string cache_file;
  if (!options.cache_dir.empty()) {
    cache_file = options.cache_dir + "/oracle_" +
                 scenario_key(states, model_table, params, cfg) + ".json";
    std::ifstream in(cache_file);
    if (in) {
      nlohmann::json j;
      in >> j;
      if (j.value("complete", false)) {
        OracleResult res;
        for (const auto& id : j.at("order")) {
          for (int i = 0; i < n; ++i) {
            if (states[i].id == id.get<std::string>()) {
              res.order.push_back(i);
              break;
            }
          }
        }
        if (static_cast<int>(res.order.size()) == n) {
          res.orders_evaluated = j.value("orders_evaluated", 0ull);
          res.orders_infeasible = j.value("orders_infeasible", 0ull);
          std::vector<VehicleState> ordered;
          for (int i : res.order) ordered.push_back(states[i]);
          res.plan = plan_sequence(ordered, paths, model_table, params, cfg);
          res.t_leave = res.plan.t_leave;
          return res;
        }
      }
    }
  }

  DfsState dfs;
  dfs.states = &states;
  dfs.paths = &paths;
  dfs.table = &model_table;
  dfs.params = &params;
  dfs.cfg = &cfg;
  dfs.lanes = build_lane_queues(states);
  dfs.n = n;
  dfs.traj_stack.resize(n);

  std::array<int, kNumApproaches> taken{};
  dfs.dfs(0, taken, CollisionTimeTable{}, {});

  if (!dfs.have_best) {
    throw std::runtime_error("every passing order is infeasible");
  }

  OracleResult res;
  res.order = dfs.best_order;
  res.orders_evaluated = dfs.evaluated;
  res.orders_infeasible = dfs.infeasible;
  std::vector<VehicleState> ordered;
  for (int i : res.order) ordered.push_back(states[i]);
  res.plan = plan_sequence(ordered, paths, model_table, params, cfg);
  res.t_leave = res.plan.t_leave;

  if (!cache_file.empty()) {
    std::filesystem::create_directories(options.cache_dir);
    nlohmann::json j;
    j["complete"] = true;
    j["t_leave"] = res.t_leave;
    j["orders_evaluated"] = res.orders_evaluated;
    j["orders_infeasible"] = res.orders_infeasible;
    auto ids = nlohmann::json::array();
    for (int i : res.order) ids.push_back(states[i].id);
    j["order"] = ids;
    std::ofstream out(cache_file);
    out << j.dump(2) << '\n';
  }
  return res;
}

std::vector<int> fifo_order(const std::vector<VehicleState>& states,
                            const CaIntervals& ca) {
  std::vector<int> order(states.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const VehicleState& va = states[a];
    const VehicleState& vb = states[b];
    if (va.spawn_time != vb.spawn_time) return va.spawn_time < vb.spawn_time;
    const double da = ca.per_path[va.path.index()].s_in - va.s;
    const double db = ca.per_path[vb.path.index()].s_in - vb.s;
    if (da != db) return da < db;
    if (va.path.approach != vb.path.approach) {
      return static_cast<int>(va.path.approach) < static_cast<int>(vb.path.approach);
    }
    return va.id < vb.id;
  });
  return order;
}

double SignalPlan::cycle() const {
  double c = 0.0;
  for (const SignalPhase& p : phases) c += p.green_s;
  return c;
}

bool SignalPlan::is_green(PathId path, double t) const {
  const double c = cycle();
  double phase_start = 0.0;
  double tc = std::fmod(t, c);
  if (tc < 0.0) tc += c;
  for (const SignalPhase& p : phases) {
    if (tc >= phase_start && tc < phase_start + p.green_s) {
      for (PathId m : p.movements) {
        if (m == path) return true;
      }
      return false;
    }
    phase_start += p.green_s;
  }
  return false;
}

double SignalPlan::next_entry_time(PathId path, double t) const {
  if (is_green(path, t)) return t;
  const double c = cycle();
  double tc = std::fmod(t, c);
  if (tc < 0.0) tc += c;
  const double cycle_base = t - tc;
  double best = kInf;
  double phase_start = 0.0;
  for (const SignalPhase& p : phases) {
    const bool covers = std::any_of(p.movements.begin(), p.movements.end(),
                                    [&](PathId m) { return m == path; });
    if (covers) {
      double start = cycle_base + phase_start;
      if (start < t) start += c;
      best = std::min(best, start);
    }
    phase_start += p.green_s;
  }
  if (best == kInf) {
    throw std::invalid_argument("movement " + path_name(path) +
                                " has no green phase");
  }
  return best;
}

void SignalPlan::validate(const CollisionTable& table) const {
  if (phases.empty()) throw std::invalid_argument("signal plan has no phases");
  std::array<bool, kNumPaths> covered{};
  for (const SignalPhase& p : phases) {
    if (p.green_s <= 0.0) throw std::invalid_argument("green duration must be positive");
    for (std::size_t i = 0; i < p.movements.size(); ++i) {
      covered[p.movements[i].index()] = true;
      for (std::size_t j = i + 1; j < p.movements.size(); ++j) {
        const PathId a = p.movements[i], b = p.movements[j];
        if (a.approach != b.approach && table.conflicts(a, b)) {
          throw std::invalid_argument("phase pairs conflicting movements " +
                                      path_name(a) + " and " + path_name(b));
        }
      }
    }
  }
  for (int i = 0; i < kNumPaths; ++i) {
    if (!covered[i]) {
      throw std::invalid_argument("movement " + path_name(PathId::from_index(i)) +
                                  " is never green");
    }
  }
}

SignalPlan SignalPlan::default_plan() {
  // Protected straight+right phases per axis; the four left turns run
  // one-by-one because opposing left-turn arcs cross under this geometry.
  const auto p = [](const char* name) { return parse_path_name(name); };
  SignalPlan plan;
  plan.phases.push_back({{p("DU"), p("DR"), p("UD"), p("UL")}, 15.0});
  plan.phases.push_back({{p("DL")}, 8.0});
  plan.phases.push_back({{p("UR")}, 8.0});
  plan.phases.push_back({{p("RL"), p("RU"), p("LR"), p("LD")}, 15.0});
  plan.phases.push_back({{p("RD")}, 8.0});
  plan.phases.push_back({{p("LU")}, 8.0});
  return plan;
}

SequencePlan plan_signal_sequence(const std::vector<int>& order,
                                  const std::vector<VehicleState>& states,
                                  const std::vector<Path>& paths,
                                  const CollisionTable& collision_table,
                                  const CaIntervals& ca, const SignalPlan& plan,
                                  const VehicleParams& params,
                                  const PlannerConfig& cfg,
                                  const PlanContext* context, bool require_exit) {
  SequencePlan result;
  if (context) result.time_table = context->time_table;

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

  result.trajectories.reserve(order.size());
  double t_leave = 0.0;
  bool all_exit = true;
  for (int vi : order) {
    const VehicleState& state = states[vi];
    const Path& path = paths[state.path.index()];
    const double gate_s = ca.per_path[state.path.index()].s_in;

    PrecedingConstraint pre;
    const Tail& tail = tails[static_cast<int>(state.path.approach)];
    if (tail.traj) {
      pre.trajectory = tail.traj;
      pre.divergence_s =
          tail.state->path == state.path
              ? kInf
              : std::min(path.entry_straight_length(),
                         paths[tail.state->path.index()].entry_straight_length());
    }

    const CornerSet base_corners =
        blocked_corners(state.path, result.time_table, collision_table);
    double gate_t = -kInf;
    Trajectory traj;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 64) {
        throw std::runtime_error("signal gate failed to converge for " + state.id);
      }
      CornerSet corners = base_corners;
      if (gate_t > -kInf) corners.push_back({gate_t, gate_s, -1});
      traj = plan_vehicle_adaptive(state, corners, tail.traj ? &pre : nullptr,
                                   params, cfg, require_exit, path.total_length);
      const double t_cross = traj.first_time_at_or_after(gate_s);
      if (t_cross < 0.0) break;  // never reaches the area within the horizon
      if (plan.is_green(state.path, t_cross)) break;
      gate_t = plan.next_entry_time(state.path, t_cross);
    }
    update_time_table(traj, state.path, collision_table, result.time_table);

    const double exit_t = traj.first_time_at_or_after(path.total_length);
    result.exit_times.push_back(exit_t);
    if (exit_t < 0.0) all_exit = false;
    else t_leave = std::max(t_leave, exit_t);

    result.trajectories.emplace_back(state, std::move(traj));
    tails[static_cast<int>(state.path.approach)] = {
        &result.trajectories.back().first, &result.trajectories.back().second};
  }
  result.t_leave = all_exit ? t_leave : kInf;
  return result;
}

}  // namespace crossway
