#include "crossway/mcts.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace crossway {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  int vehicle = -1;  // -1 at the root
  int parent = -1;
  int depth = 0;
  double reward_sum = 0.0;  // R_c
  int visits = 0;           // n_c
  bool bounds_init = false;
  double f_min = 0.0;
  double f_max = 0.0;
  std::vector<int> children;  // node indices
  std::vector<int> untried;   // vehicle indices not yet expanded
};

int lane_of(const VehicleState& s) { return static_cast<int>(s.path.approach); }

// Deterministic bounded draw; the tiny modulo bias is irrelevant here.
std::uint64_t draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

}  // namespace

std::array<std::vector<int>, kNumApproaches> build_lane_queues(
    const std::vector<VehicleState>& states) {
  std::array<std::vector<int>, kNumApproaches> lanes;
  for (int i = 0; i < static_cast<int>(states.size()); ++i) {
    lanes[lane_of(states[i])].push_back(i);
  }
  for (auto& lane : lanes) {
    std::sort(lane.begin(), lane.end(), [&](int a, int b) {
      if (states[a].s != states[b].s) return states[a].s > states[b].s;
      return states[a].id < states[b].id;
    });
  }
  return lanes;
}

std::vector<int> legal_children(
    const std::array<std::vector<int>, kNumApproaches>& lanes,
    const std::array<int, kNumApproaches>& taken) {
  std::vector<int> out;
  for (int lane = 0; lane < kNumApproaches; ++lane) {
    if (taken[lane] < static_cast<int>(lanes[lane].size())) {
      out.push_back(lanes[lane][taken[lane]]);
    }
  }
  return out;
}

bool validate_order(const std::vector<int>& order,
                    const std::vector<VehicleState>& states) {
  if (order.size() != states.size()) return false;
  const auto lanes = build_lane_queues(states);
  std::array<int, kNumApproaches> taken{};
  std::vector<bool> seen(states.size(), false);
  for (int vi : order) {
    if (vi < 0 || vi >= static_cast<int>(states.size()) || seen[vi]) return false;
    seen[vi] = true;
    const int lane = lane_of(states[vi]);
    if (taken[lane] >= static_cast<int>(lanes[lane].size()) ||
        lanes[lane][taken[lane]] != vi) {
      return false;
    }
    ++taken[lane];
  }
  return true;
}

namespace {

// Uniform over completions: picking a lane with probability proportional to
// its remaining count makes every legal completion equally likely.
void random_completion(const std::array<std::vector<int>, kNumApproaches>& lanes,
                       std::array<int, kNumApproaches> taken, int remaining,
                       std::mt19937_64& rng, std::vector<int>& order) {
  while (remaining > 0) {
    std::uint64_t pick = draw(rng, static_cast<std::uint64_t>(remaining));
    for (int lane = 0; lane < kNumApproaches; ++lane) {
      const std::uint64_t left = lanes[lane].size() - taken[lane];
      if (pick < left) {
        order.push_back(lanes[lane][taken[lane]]);
        ++taken[lane];
        break;
      }
      pick -= left;
    }
    --remaining;
  }
}

}  // namespace

MctsResult mcts_search(const std::vector<VehicleState>& states,
                       const FastEvalModel& model, const CollisionTable& table,
                       const VehicleParams& params, const MctsParams& mp,
                       std::uint64_t seed, const FastEvalContext* context,
                       std::vector<MctsTraceEntry>* trace) {
  if (states.empty()) throw std::invalid_argument("no vehicles to schedule");
  if (mp.iterations <= 0 && !mp.time_budget_s) {
    throw std::invalid_argument("search budget must be positive");
  }
  const int N = static_cast<int>(states.size());
  const auto lanes = build_lane_queues(states);

  std::mt19937_64 rng(seed);
  std::vector<Node> arena;
  arena.reserve(1024);
  arena.push_back({});
  arena[0].untried = legal_children(lanes, {});

  std::vector<int> path_prefix;       // vehicle indices root -> current
  std::vector<int> node_path;         // node indices root -> current
  std::vector<int> rollout_order;
  FastEvalScratch scratch;
  double best_f = -kInf;

  const auto start_clock = std::chrono::steady_clock::now();
  const auto out_of_time = [&]() {
    if (!mp.time_budget_s) return false;
    const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start_clock;
    return el.count() >= *mp.time_budget_s;
  };
  const int max_iter = mp.time_budget_s ? std::numeric_limits<int>::max()
                                        : mp.iterations;

  int it = 0;
  for (; it < max_iter && !out_of_time(); ++it) {
    // Selection + one expansion.
    int node = 0;
    std::array<int, kNumApproaches> taken{};
    node_path.assign(1, 0);
    path_prefix.clear();
    while (true) {
      Node& cur = arena[node];
      if (cur.depth == N) break;  // terminal: simulate the full order itself
      if (!cur.untried.empty()) {
        const std::size_t pick = draw(rng, cur.untried.size());
        const int vehicle = cur.untried[pick];
        cur.untried[pick] = cur.untried.back();
        cur.untried.pop_back();

        Node child;
        child.vehicle = vehicle;
        child.parent = node;
        child.depth = cur.depth + 1;
        ++taken[lane_of(states[vehicle])];
        path_prefix.push_back(vehicle);
        if (child.depth < N) {
          auto t2 = taken;
          child.untried = legal_children(lanes, t2);
        }
        arena.push_back(std::move(child));
        const int child_idx = static_cast<int>(arena.size()) - 1;
        arena[node].children.push_back(child_idx);
        node = child_idx;
        node_path.push_back(node);
        break;
      }
      if (cur.children.empty()) break;  // fully expanded leaf (shouldn't happen)
      // UCT (Eq.-19 form); children are scanned in creation order and ties
      // fall to the smaller lane index.
      double best_score = -kInf;
      int best_child = -1, best_lane = kNumApproaches;
      for (int ci : cur.children) {
        const Node& ch = arena[ci];
        const double score = ch.reward_sum / ch.visits +
                             mp.epsilon * std::sqrt(std::log(static_cast<double>(
                                              cur.visits)) /
                                          ch.visits);
        const int lane = lane_of(states[ch.vehicle]);
        if (score > best_score ||
            (score == best_score && lane < best_lane)) {
          best_score = score;
          best_child = ci;
          best_lane = lane;
        }
      }
      node = best_child;
      ++taken[lane_of(states[arena[node].vehicle])];
      path_prefix.push_back(arena[node].vehicle);
      node_path.push_back(node);
    }

    // Simulation.
    rollout_order.assign(path_prefix.begin(), path_prefix.end());
    random_completion(lanes, taken, N - static_cast<int>(rollout_order.size()), rng,
                      rollout_order);
    const double t_leave =
        evaluate_order(rollout_order, states, model, params, scratch, context);
    const double f = -t_leave;
    best_f = std::max(best_f, f);

    // Backpropagation: each edge normalizes against its own parent's
    // running bounds (first touch pins them to f, giving r = 1/2).
    double leaf_r = 0.5;
    for (std::size_t i = node_path.size(); i-- > 0;) {
      const int ni = node_path[i];
      Node& n = arena[ni];
      ++n.visits;
      if (ni == 0) continue;
      Node& parent = arena[n.parent];
      if (!parent.bounds_init) {
        parent.bounds_init = true;
        parent.f_min = parent.f_max = f;
      } else {
        parent.f_min = std::min(parent.f_min, f);
        parent.f_max = std::max(parent.f_max, f);
      }
      const double span = parent.f_max - parent.f_min;
      const double r = span > 0.0 ? (f - parent.f_min) / span : 0.5;
      n.reward_sum += r;
      if (i + 1 == node_path.size()) leaf_r = r;
    }
    if (trace) {
      const Node& leaf = arena[node_path.back()];
      trace->push_back({it, leaf.vehicle >= 0 ? states[leaf.vehicle].id : "root",
                        f, leaf_r});
    }
  }

  // Extraction: epsilon = 0 greedy descent over visited children; fall back
  // to a random completion wherever statistics are missing.
  MctsResult result;
  result.iterations_run = it;
  result.best_f = best_f;
  int node = 0;
  std::array<int, kNumApproaches> taken{};
  while (static_cast<int>(result.order.size()) < N) {
    const Node& cur = arena[node];
    int best_child = -1, best_lane = kNumApproaches;
    double best_score = -kInf;
    for (int ci : cur.children) {
      const Node& ch = arena[ci];
      if (ch.visits == 0) continue;
      const double score = ch.reward_sum / ch.visits;
      const int lane = lane_of(states[ch.vehicle]);
      if (score > best_score || (score == best_score && lane < best_lane)) {
        best_score = score;
        best_child = ci;
        best_lane = lane;
      }
    }
    if (best_child < 0) {
      random_completion(lanes, taken, N - static_cast<int>(result.order.size()),
                        rng, result.order);
      break;
    }
    result.order.push_back(arena[best_child].vehicle);
    ++taken[lane_of(states[arena[best_child].vehicle])];
    node = best_child;
  }
  result.tiers = priority_tiers(result.order, states, table);
  return result;
}

std::vector<int> priority_tiers(const std::vector<int>& order,
                                const std::vector<VehicleState>& states,
                                const CollisionTable& table) {
  std::vector<int> tiers(order.size(), 0);
  int tier = 0;
  std::vector<int> members;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const VehicleState& v = states[order[i]];
    bool join = !members.empty();
    for (int m : members) {
      const VehicleState& w = states[m];
      if (w.path.approach == v.path.approach || table.conflicts(v.path, w.path)) {
        join = false;
        break;
      }
    }
    if (!join && !members.empty()) {
      ++tier;
      members.clear();
    }
    members.push_back(order[i]);
    tiers[i] = tier;
  }
  return tiers;
}

}  // namespace crossway
