#include "crossway/traffic_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>

#include "crossway/fast_eval.hpp"
#include "crossway/mcts.hpp"

namespace crossway {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSpawnGapMargin = 0.05;  // m beyond L_safe required to spawn
}  // namespace

Strategy parse_strategy(const std::string& name) {
  if (name == "bilevel") return Strategy::Bilevel;
  if (name == "fifo") return Strategy::Fifo;
  if (name == "signal") return Strategy::Signal;
  if (name == "cs-oracle") return Strategy::CsOracle;
  if (name == "ocp-oracle") return Strategy::OcpOracle;
  throw std::invalid_argument("unknown strategy: " + name);
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Bilevel: return "bilevel";
    case Strategy::Fifo: return "fifo";
    case Strategy::Signal: return "signal";
    case Strategy::CsOracle: return "cs-oracle";
    case Strategy::OcpOracle: return "ocp-oracle";
  }
  throw std::logic_error("bad strategy");
}

void ArrivalConfig::validate() const {
  if (rate_per_hour_per_lane < 0.0) {
    throw std::invalid_argument("arrival rate must be nonnegative");
  }
  if (duration_s <= 0.0) throw std::invalid_argument("duration must be positive");
  double sum = 0.0;
  for (double p : movement_probs) {
    if (p < 0.0) throw std::invalid_argument("movement probabilities must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("movement probabilities must sum to 1");
  }
}

std::vector<ArrivalEvent> spawn_arrivals(const ArrivalConfig& cfg) {
  cfg.validate();
  std::vector<ArrivalEvent> events;
  if (cfg.rate_per_hour_per_lane <= 0.0) return events;
  const double mean_gap = 3600.0 / cfg.rate_per_hour_per_lane;
  int seq = 0;
  for (int lane = 0; lane < kNumApproaches; ++lane) {
    // Independent substream per lane so one lane's draws never perturb
    // another's.
    std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ull + lane + 1);
    std::exponential_distribution<double> gap(1.0 / mean_gap);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double t = gap(rng);
    while (t <= cfg.duration_s) {
      const double m = unif(rng);
      Movement movement = Movement::Right;
      if (m < cfg.movement_probs[0]) {
        movement = Movement::Left;
      } else if (m < cfg.movement_probs[0] + cfg.movement_probs[1]) {
        movement = Movement::Straight;
      }
      events.push_back({t, static_cast<Approach>(lane), movement, seq++});
      t += gap(rng);
    }
  }
  std::sort(events.begin(), events.end(), [](const ArrivalEvent& a, const ArrivalEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.seq < b.seq;
  });
  return events;
}

namespace {

struct SimVehicle {
  VehicleState state;        // at materialization
  Trajectory traj;
  double arrival_time = 0.0; // Poisson event time
  double exit_time = 0.0;
  bool released = false;     // trajectory arrays freed

  double position(double t) const { return traj.position_extrapolated(t); }
};

std::string dump_scenario(const SimConfig& cfg,
                          const std::vector<ArrivalEvent>& arrivals) {
  char buf[160];
  std::string out = "strategy=" + strategy_name(cfg.strategy) + "\n";
  std::snprintf(buf, sizeof(buf),
                "rate=%.6f probs=%.6f,%.6f,%.6f duration=%.3f seed=%llu\n",
                cfg.arrivals.rate_per_hour_per_lane, cfg.arrivals.movement_probs[0],
                cfg.arrivals.movement_probs[1], cfg.arrivals.movement_probs[2],
                cfg.arrivals.duration_s,
                static_cast<unsigned long long>(cfg.arrivals.seed));
  out += buf;
  for (const ArrivalEvent& e : arrivals) {
    std::snprintf(buf, sizeof(buf), "%.6f %c %d\n", e.time,
                  approach_letter(e.lane), static_cast<int>(e.movement));
    out += buf;
  }
  return out;
}

}  // namespace

SimMetrics run_continuous(const SimConfig& cfg, const std::vector<Path>& paths,
                          const IntersectionGeometry& geom,
                          const CollisionTable& table, const CaIntervals& ca,
                          const VehicleParams& params,
                          const PlannerConfig& planner_cfg) {
  if (cfg.strategy != Strategy::Bilevel && cfg.strategy != Strategy::Fifo &&
      cfg.strategy != Strategy::Signal) {
    throw std::invalid_argument("continuous simulation supports bilevel/fifo/signal");
  }
  if (cfg.strategy == Strategy::Signal) cfg.signal.validate(table);

  const std::vector<ArrivalEvent> arrivals = spawn_arrivals(cfg.arrivals);
  const double dt = planner_cfg.dt;
  const int total_slots = static_cast<int>(std::ceil(cfg.arrivals.duration_s / dt));
  const int replan_slots =
      std::max(1, static_cast<int>(std::llround(cfg.replan_interval_s / dt)));

  const FastEvalModel fast_model(paths, table);
  const BoxDims box{params.box_length, params.box_width};

  std::deque<SimVehicle> fleet;
  std::array<std::deque<ArrivalEvent>, kNumApproaches> backlog;
  std::array<int, kNumApproaches> tail_index;  // newest vehicle per lane
  tail_index.fill(-1);
  std::vector<int> alive;  // indices into fleet, still on the map
  CollisionTimeTable time_table;
  std::size_t next_arrival = 0;
  int lane_spawn_counter = 0;

  SimMetrics metrics;
  std::vector<double> delays;

  const auto materialize_and_plan = [&](double t, int trigger_index) {
    while (next_arrival < arrivals.size() && arrivals[next_arrival].time <= t) {
      backlog[static_cast<int>(arrivals[next_arrival].lane)].push_back(
          arrivals[next_arrival]);
      ++next_arrival;
    }

    std::vector<VehicleState> batch;
    std::vector<double> batch_arrival;
    for (int lane = 0; lane < kNumApproaches; ++lane) {
      if (backlog[lane].empty()) continue;
      double gap = kInf;
      if (tail_index[lane] >= 0) {
        gap = fleet[tail_index[lane]].position(t);
      }
      if (gap < params.safe_gap + kSpawnGapMargin) continue;  // no room yet
      const ArrivalEvent ev = backlog[lane].front();
      // Entry speed that can always brake out behind the (worst-case
      // stopping) lane tail.
      double v0 = params.v_max;
      if (gap < kInf) {
        v0 = std::min(params.v_max,
                      0.999 * std::sqrt(2.0 * -params.u_min *
                                        (gap - params.safe_gap - kSpawnGapMargin)));
      }
      backlog[lane].pop_front();
      VehicleState st;
      st.id = std::string(1, approach_letter(ev.lane)) + "#" +
              std::to_string(++lane_spawn_counter);
      st.path = PathId{ev.lane, ev.movement};
      st.s = 0.0;
      st.v = v0;
      st.spawn_time = t;
      batch.push_back(st);
      batch_arrival.push_back(ev.time);
    }
    if (batch.empty()) return;

    // Order the batch by the active strategy.
    std::vector<int> order_idx;
    if (cfg.strategy == Strategy::Bilevel && batch.size() > 1) {
      FastEvalContext ctx = FastEvalContext::from_time_table(time_table);
      for (int lane = 0; lane < kNumApproaches; ++lane) {
        if (tail_index[lane] < 0) continue;
        const SimVehicle& tail = fleet[tail_index[lane]];
        ctx.lane_intercept[lane] =
            paths[tail.state.path.index()].total_length -
            params.v_max * tail.exit_time;
      }
      MctsParams mp;
      mp.iterations = cfg.mcts_budget;
      mp.epsilon = cfg.mcts_epsilon;
      const std::uint64_t seed =
          cfg.arrivals.seed ^ (0x517cc1b727220a95ull * (trigger_index + 1));
      order_idx = mcts_search(batch, fast_model, table, params, mp, seed, &ctx).order;
    } else {
      order_idx = fifo_order(batch, ca);
    }

    PlanContext context;
    context.time_table = time_table;
    std::array<std::optional<LaneTail>, kNumApproaches> tails;
    for (int lane = 0; lane < kNumApproaches; ++lane) {
      if (tail_index[lane] < 0) continue;
      const SimVehicle& tail = fleet[tail_index[lane]];
      context.lane_tails[lane] = LaneTail{tail.state, &tail.traj};
    }

    SequencePlan plan;
    if (cfg.strategy == Strategy::Signal) {
      plan = plan_signal_sequence(order_idx, batch, paths, table, ca, cfg.signal,
                                  params, planner_cfg, &context, true);
    } else {
      std::vector<VehicleState> ordered;
      ordered.reserve(order_idx.size());
      for (int i : order_idx) ordered.push_back(batch[i]);
      plan = plan_sequence(ordered, paths, table, params, planner_cfg, &context,
                           true);
    }

    time_table = std::move(plan.time_table);
    time_table.prune_before(t - 1.0);
    for (std::size_t i = 0; i < plan.trajectories.size(); ++i) {
      auto& [state, traj] = plan.trajectories[i];
      SimVehicle v;
      v.state = state;
      v.traj = std::move(traj);
      v.exit_time =
          v.traj.first_time_at_or_after(paths[state.path.index()].total_length);
      // Find the matching batch arrival time (ids are unique per batch).
      for (std::size_t b = 0; b < batch.size(); ++b) {
        if (batch[b].id == state.id) {
          v.arrival_time = batch_arrival[b];
          break;
        }
      }
      fleet.push_back(std::move(v));
      const int idx = static_cast<int>(fleet.size()) - 1;
      tail_index[static_cast<int>(state.path.approach)] = idx;
      alive.push_back(idx);
    }

    // Trajectories of vehicles that are long gone and no longer chain any
    // rear-end constraint can be dropped.
    for (SimVehicle& v : fleet) {
      if (v.released || v.exit_time > t - 2.0) continue;
      bool is_tail = false;
      for (int lane = 0; lane < kNumApproaches; ++lane) {
        if (tail_index[lane] >= 0 && &fleet[tail_index[lane]] == &v) is_tail = true;
      }
      if (is_tail) continue;
      v.traj.s = {v.traj.s.back(), v.traj.s.back()};
      v.traj.v = {v.traj.v.back(), v.traj.v.back()};
      v.traj.u = {0.0, 0.0};
      v.traj.t0 = v.exit_time;
      v.released = true;
    }
  };

  try {
    for (int slot = 0; slot <= total_slots; ++slot) {
      const double t = slot * dt;
      if (slot % replan_slots == 0) {
        materialize_and_plan(t, slot / replan_slots);
      }

      // Drop exited vehicles from the live set.
      for (std::size_t i = 0; i < alive.size();) {
        if (fleet[alive[i]].exit_time <= t) {
          alive[i] = alive.back();
          alive.pop_back();
        } else {
          ++i;
        }
      }

      if (cfg.collision_check) {
        for (std::size_t i = 0; i < alive.size(); ++i) {
          const SimVehicle& a = fleet[alive[i]];
          if (t < a.state.spawn_time) continue;
          const Path& pa = paths[a.state.path.index()];
          const double sa = std::clamp(a.position(t), 0.0, pa.total_length);
          const OrientedBox ba{pa.pose_at(sa), params.box_length / 2.0,
                               params.box_width / 2.0};
          for (std::size_t j = i + 1; j < alive.size(); ++j) {
            const SimVehicle& b = fleet[alive[j]];
            if (t < b.state.spawn_time) continue;
            const Path& pb = paths[b.state.path.index()];
            const double sb = std::clamp(b.position(t), 0.0, pb.total_length);
            const OrientedBox bb{pb.pose_at(sb), params.box_length / 2.0,
                                 params.box_width / 2.0};
            if (boxes_overlap(ba, bb)) {
              metrics.safety_ok = false;
              ++metrics.overlap_count;
            }
          }
        }
      }

      if (slot % 10 == 0) {  // queue metric sampled at 1 Hz
        std::array<int, kNumApproaches> q{};
        for (int lane = 0; lane < kNumApproaches; ++lane) {
          q[lane] = static_cast<int>(backlog[lane].size());
        }
        for (int idx : alive) {
          const SimVehicle& v = fleet[idx];
          if (t < v.state.spawn_time) continue;
          const int lane = static_cast<int>(v.state.path.approach);
          const double s = v.position(t);
          if (s < ca.per_path[v.state.path.index()].s_in &&
              v.traj.speed_at(std::min(t, v.traj.end_time())) < 0.2) {
            ++q[lane];
          }
        }
        for (int lane = 0; lane < kNumApproaches; ++lane) {
          metrics.max_queue[lane] = std::max(metrics.max_queue[lane], q[lane]);
        }
      }
    }
  } catch (const SimError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw SimError(std::string("planner failure mid-flow: ") + e.what(),
                   dump_scenario(cfg, arrivals));
  }

  metrics.spawned = static_cast<int>(arrivals.size());
  const double free_flow_denominator = params.v_max;
  for (const SimVehicle& v : fleet) {
    if (v.exit_time <= cfg.arrivals.duration_s) {
      ++metrics.served;
      const double free_flow =
          paths[v.state.path.index()].total_length / free_flow_denominator;
      delays.push_back(v.exit_time - v.arrival_time - free_flow);
    }
  }
  metrics.in_system_end = static_cast<int>(fleet.size()) - metrics.served;
  for (const auto& lane : backlog) {
    metrics.backlog_end += static_cast<int>(lane.size());
  }
  metrics.throughput_veh_h_lane = metrics.served /
                                  (cfg.arrivals.duration_s / 3600.0) /
                                  kNumApproaches;
  if (!delays.empty()) {
    double sum = 0.0;
    for (double d : delays) sum += d;
    metrics.mean_delay_s = sum / delays.size();
    std::sort(delays.begin(), delays.end());
    std::size_t p95 = static_cast<std::size_t>(std::ceil(0.95 * delays.size()));
    p95 = p95 > 0 ? p95 - 1 : 0;
    metrics.p95_delay_s = delays[std::min(p95, delays.size() - 1)];
  }
  return metrics;
}

}  // namespace crossway
