#include "crossway/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace crossway {

namespace {

using Json = nlohmann::ordered_json;

void require_keys(const Json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

double num(const Json& obj, const std::string& where, const std::string& key,
           std::optional<double> fallback = {}) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing key '" + key + "' in " + where);
  }
  if (!obj[key].is_number()) {
    throw ConfigError("key '" + key + "' in " + where + " must be a number");
  }
  return obj[key].get<double>();
}

}  // namespace

void ScenarioConfig::validate() const {
  if (schema_version != 1) {
    throw ConfigError("unsupported schema_version " + std::to_string(schema_version));
  }
  geometry.validate();
  vehicle.validate();
  if (planner.horizon_slots <= 0 || planner.dt <= 0.0) {
    throw ConfigError("planner horizon and dt must be positive");
  }
  if (table.eps <= 0.0 || table.sweep_step <= 0.0 || table.scan_step <= 0.0) {
    throw ConfigError("table eps/sweep_step/scan_step must be positive");
  }
  if (mcts.iterations <= 0) throw ConfigError("mcts budget must be positive");
  if (static_vehicles.empty() == !arrivals.has_value()) {
    throw ConfigError("config needs exactly one of scenario.vehicles / scenario.arrivals");
  }
  if (arrivals) arrivals->validate();
  std::set<std::string> ids;
  for (const VehicleState& v : static_vehicles) {
    if (!ids.insert(v.id).second) throw ConfigError("duplicate vehicle id " + v.id);
    if (v.s < 0.0 || v.v < 0.0 || v.v > vehicle.v_max) {
      throw ConfigError("vehicle " + v.id + " starts outside its state bounds");
    }
  }
}

ScenarioConfig parse_config(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_keys(j, "config",
               {"schema_version", "seed", "strategy", "geometry", "vehicle",
                "planner", "table", "mcts", "big_m", "scenario", "sim", "signal"});

  ScenarioConfig cfg;
  cfg.schema_version = static_cast<int>(num(j, "config", "schema_version", 1.0));
  cfg.seed = static_cast<std::uint64_t>(num(j, "config", "seed", 0.0));
  if (j.contains("strategy")) {
    cfg.strategy = parse_strategy(j["strategy"].get<std::string>());
  }
  cfg.big_m = num(j, "config", "big_m", 10000.0);

  if (j.contains("geometry")) {
    const Json& g = j["geometry"];
    require_keys(g, "geometry",
                 {"coordination_radius", "lane_width", "left_turn_radius",
                  "right_turn_radius"});
    cfg.geometry.coordination_radius = num(g, "geometry", "coordination_radius", 100.0);
    cfg.geometry.lane_width = num(g, "geometry", "lane_width", 10.0);
    cfg.geometry.left_turn_radius = num(g, "geometry", "left_turn_radius", 15.0);
    cfg.geometry.right_turn_radius = num(g, "geometry", "right_turn_radius", 10.0);
  }
  if (j.contains("vehicle")) {
    const Json& v = j["vehicle"];
    require_keys(v, "vehicle",
                 {"v_max", "u_min", "u_max", "safe_gap", "body_length",
                  "body_width", "box_length", "box_width"});
    cfg.vehicle.v_max = num(v, "vehicle", "v_max", 15.0);
    cfg.vehicle.u_min = num(v, "vehicle", "u_min", -5.0);
    cfg.vehicle.u_max = num(v, "vehicle", "u_max", 5.0);
    cfg.vehicle.safe_gap = num(v, "vehicle", "safe_gap", 8.0);
    cfg.vehicle.body_length = num(v, "vehicle", "body_length", 4.0);
    cfg.vehicle.body_width = num(v, "vehicle", "body_width", 2.0);
    cfg.vehicle.box_length = num(v, "vehicle", "box_length", 8.0);
    cfg.vehicle.box_width = num(v, "vehicle", "box_width", 4.0);
  }
  if (j.contains("planner")) {
    const Json& p = j["planner"];
    require_keys(p, "planner",
                 {"horizon_slots", "dt", "qp_eps_feas", "qp_eps_dual",
                  "qp_max_iterations"});
    cfg.planner.horizon_slots = static_cast<int>(num(p, "planner", "horizon_slots", 400.0));
    cfg.planner.dt = num(p, "planner", "dt", 0.1);
    cfg.planner.qp.eps_feas = num(p, "planner", "qp_eps_feas", 1e-4);
    cfg.planner.qp.eps_dual = num(p, "planner", "qp_eps_dual", 1e-4);
    cfg.planner.qp.max_iterations =
        static_cast<int>(num(p, "planner", "qp_max_iterations", 20000.0));
  }
  if (j.contains("table")) {
    const Json& t = j["table"];
    require_keys(t, "table", {"eps", "sweep_step", "scan_step"});
    cfg.table.eps = num(t, "table", "eps", 0.01);
    cfg.table.sweep_step = num(t, "table", "sweep_step", 0.1);
    cfg.table.scan_step = num(t, "table", "scan_step", 1.0);
  }
  if (j.contains("mcts")) {
    const Json& m = j["mcts"];
    require_keys(m, "mcts", {"budget", "epsilon", "time_budget_s"});
    cfg.mcts.iterations = static_cast<int>(num(m, "mcts", "budget", 10000.0));
    cfg.mcts.epsilon = num(m, "mcts", "epsilon", 1.4142135623730951);
    if (m.contains("time_budget_s") && !m["time_budget_s"].is_null()) {
      cfg.mcts.time_budget_s = m["time_budget_s"].get<double>();
    }
  }
  if (!j.contains("scenario")) throw ConfigError("config is missing 'scenario'");
  {
    const Json& sc = j["scenario"];
    require_keys(sc, "scenario", {"vehicles", "arrivals"});
    if (sc.contains("vehicles") == sc.contains("arrivals")) {
      throw ConfigError("scenario needs exactly one of vehicles / arrivals");
    }
    if (sc.contains("vehicles")) {
      for (const Json& v : sc["vehicles"]) {
        require_keys(v, "scenario.vehicles[]", {"id", "path", "s", "v"});
        VehicleState st;
        st.id = v.at("id").get<std::string>();
        st.path = parse_path_name(v.at("path").get<std::string>());
        st.s = num(v, "vehicle entry", "s");
        st.v = num(v, "vehicle entry", "v");
        cfg.static_vehicles.push_back(st);
      }
    } else {
      const Json& a = sc["arrivals"];
      require_keys(a, "scenario.arrivals",
                   {"rate_per_hour_per_lane", "movement_probs", "duration_s"});
      ArrivalConfig ac;
      ac.rate_per_hour_per_lane = num(a, "arrivals", "rate_per_hour_per_lane");
      ac.duration_s = num(a, "arrivals", "duration_s", 3600.0);
      if (a.contains("movement_probs")) {
        const Json& mp = a["movement_probs"];
        if (!mp.is_array() || mp.size() != 3) {
          throw ConfigError("movement_probs must be [left, straight, right]");
        }
        for (int i = 0; i < 3; ++i) ac.movement_probs[i] = mp[i].get<double>();
      }
      ac.seed = cfg.seed;
      cfg.arrivals = ac;
    }
  }
  if (j.contains("sim")) {
    const Json& s = j["sim"];
    require_keys(s, "sim", {"replan_interval_s", "mcts_budget", "collision_check"});
    cfg.sim_replan_interval_s = num(s, "sim", "replan_interval_s", 1.0);
    cfg.sim_mcts_budget = static_cast<int>(num(s, "sim", "mcts_budget", 2000.0));
    if (s.contains("collision_check")) {
      cfg.sim_collision_check = s["collision_check"].get<bool>();
    }
  }
  if (j.contains("signal")) {
    const Json& sg = j["signal"];
    require_keys(sg, "signal", {"phases"});
    SignalPlan plan;
    for (const Json& ph : sg.at("phases")) {
      require_keys(ph, "signal.phases[]", {"movements", "green_s"});
      SignalPhase phase;
      phase.green_s = num(ph, "signal phase", "green_s");
      for (const Json& m : ph.at("movements")) {
        phase.movements.push_back(parse_path_name(m.get<std::string>()));
      }
      plan.phases.push_back(std::move(phase));
    }
    cfg.signal = std::move(plan);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::string serialize_config(const ScenarioConfig& cfg) {
  Json j;
  j["schema_version"] = cfg.schema_version;
  j["seed"] = cfg.seed;
  j["strategy"] = strategy_name(cfg.strategy);
  j["geometry"] = {{"coordination_radius", cfg.geometry.coordination_radius},
                   {"lane_width", cfg.geometry.lane_width},
                   {"left_turn_radius", cfg.geometry.left_turn_radius},
                   {"right_turn_radius", cfg.geometry.right_turn_radius}};
  j["vehicle"] = {{"v_max", cfg.vehicle.v_max},       {"u_min", cfg.vehicle.u_min},
                  {"u_max", cfg.vehicle.u_max},       {"safe_gap", cfg.vehicle.safe_gap},
                  {"body_length", cfg.vehicle.body_length},
                  {"body_width", cfg.vehicle.body_width},
                  {"box_length", cfg.vehicle.box_length},
                  {"box_width", cfg.vehicle.box_width}};
  j["planner"] = {{"horizon_slots", cfg.planner.horizon_slots},
                  {"dt", cfg.planner.dt},
                  {"qp_eps_feas", cfg.planner.qp.eps_feas},
                  {"qp_eps_dual", cfg.planner.qp.eps_dual},
                  {"qp_max_iterations", cfg.planner.qp.max_iterations}};
  j["table"] = {{"eps", cfg.table.eps},
                {"sweep_step", cfg.table.sweep_step},
                {"scan_step", cfg.table.scan_step}};
  j["mcts"] = {{"budget", cfg.mcts.iterations}, {"epsilon", cfg.mcts.epsilon}};
  if (cfg.mcts.time_budget_s) j["mcts"]["time_budget_s"] = *cfg.mcts.time_budget_s;
  j["big_m"] = cfg.big_m;
  if (cfg.is_static()) {
    auto vehicles = Json::array();
    for (const VehicleState& v : cfg.static_vehicles) {
      vehicles.push_back({{"id", v.id},
                          {"path", path_name(v.path)},
                          {"s", v.s},
                          {"v", v.v}});
    }
    j["scenario"] = {{"vehicles", vehicles}};
  } else {
    j["scenario"] = {
        {"arrivals",
         {{"rate_per_hour_per_lane", cfg.arrivals->rate_per_hour_per_lane},
          {"movement_probs", cfg.arrivals->movement_probs},
          {"duration_s", cfg.arrivals->duration_s}}}};
  }
  j["sim"] = {{"replan_interval_s", cfg.sim_replan_interval_s},
              {"mcts_budget", cfg.sim_mcts_budget},
              {"collision_check", cfg.sim_collision_check}};
  auto phases = Json::array();
  for (const SignalPhase& ph : cfg.signal.phases) {
    auto movements = Json::array();
    for (PathId m : ph.movements) movements.push_back(path_name(m));
    phases.push_back({{"movements", movements}, {"green_s", ph.green_s}});
  }
  j["signal"] = {{"phases", phases}};
  return j.dump(2) + "\n";
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ScenarioConfig default_config() {
  ScenarioConfig cfg;
  // Reconstruction of the six-vehicle static scenario: two per inner lane
  // (D, U), one on each of R and L; movements follow the worked example
  // (D1 turns left, R1 merges with L1 toward the down arm, U1 goes straight).
  const auto veh = [&](const char* id, const char* path, double s, double v) {
    VehicleState st;
    st.id = id;
    st.path = parse_path_name(path);
    st.s = s;
    st.v = v;
    cfg.static_vehicles.push_back(st);
  };
  veh("L1", "LD", 35.0, 15.0);
  veh("R1", "RD", 24.0, 15.0);
  veh("U1", "UD", 30.0, 15.0);
  veh("D1", "DL", 26.0, 15.0);
  veh("U2", "UD", 14.0, 15.0);
  veh("D2", "DU", 10.0, 15.0);
  return cfg;
}

}  // namespace crossway
