#include "crossway/vehicle.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace crossway {

void VehicleParams::validate() const {
  if (!(u_min < 0.0 && 0.0 < u_max)) {
    throw std::invalid_argument("acceleration bounds must straddle zero");
  }
  if (v_max <= 0.0) throw std::invalid_argument("v_max must be positive");
  if (safe_gap < box_length) {
    throw std::invalid_argument("safe gap must cover the safety box length");
  }
  if (box_length < body_length || box_width < body_width) {
    throw std::invalid_argument("safety box must enclose the vehicle body");
  }
}

namespace {

int slot_for_time(const Trajectory& traj, double t) {
  const double rel = (t - traj.t0) / traj.dt;
  int k = static_cast<int>(std::floor(rel + 1e-12));
  return std::max(0, std::min(k, traj.slots() - 1));
}

}  // namespace

double Trajectory::position_at(double t) const {
  if (t < t0 - 1e-9 || t > end_time() + 1e-9) {
    throw std::out_of_range("time outside trajectory horizon");
  }
  return position_extrapolated(t);
}

double Trajectory::position_extrapolated(double t) const {
  if (slots() <= 0) throw std::logic_error("empty trajectory");
  if (t <= t0) return s.front();
  if (t >= end_time()) return s.back() + v.back() * (t - end_time());
  const int k = slot_for_time(*this, t);
  const double tau = t - (t0 + k * dt);
  return s[k] + v[k] * tau + 0.5 * u[k] * tau * tau;
}

double Trajectory::speed_at(double t) const {
  if (t < t0 - 1e-9 || t > end_time() + 1e-9) {
    throw std::out_of_range("time outside trajectory horizon");
  }
  if (t <= t0) return v.front();
  if (t >= end_time()) return v.back();
  const int k = slot_for_time(*this, t);
  return v[k] + u[k] * (t - (t0 + k * dt));
}

double Trajectory::first_time_at_or_after(double target_s) const {
  if (s.empty()) return -1.0;
  if (s.front() >= target_s) return t0;
  for (int k = 0; k < slots(); ++k) {
    if (s[k + 1] < target_s) continue;
    // Solve s[k] + v tau + u tau^2 / 2 = target within [0, dt].
    const double c = s[k] - target_s;
    const double b = v[k];
    const double a = 0.5 * u[k];
    double tau;
    if (std::abs(a) < 1e-12) {
      tau = (b > 1e-12) ? -c / b : dt;
    } else {
      const double disc = b * b - 4.0 * a * c;
      if (disc < 0.0) {
        tau = dt;
      } else {
        const double root = std::sqrt(disc);
        // Smallest non-negative root.
        const double r1 = (-b + root) / (2.0 * a);
        const double r2 = (-b - root) / (2.0 * a);
        tau = dt;
        if (r1 >= -1e-12 && r1 < tau) tau = std::max(0.0, r1);
        if (r2 >= -1e-12 && r2 < tau) tau = std::max(0.0, r2);
      }
    }
    return t0 + k * dt + std::min(std::max(tau, 0.0), dt);
  }
  return -1.0;
}

Trajectory integrate(const VehicleState& initial, std::span<const double> u_seq,
                     double dt, const VehicleParams& params) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  const std::size_t n = u_seq.size();
  Trajectory traj;
  traj.dt = dt;
  traj.t0 = initial.spawn_time;
  traj.s.reserve(n + 1);
  traj.v.reserve(n + 1);
  traj.u.reserve(n + 1);
  traj.s.push_back(initial.s);
  traj.v.push_back(initial.v);
  constexpr double kBoundTol = 1e-9;
  for (std::size_t k = 0; k < n; ++k) {
    const double uk = u_seq[k];
    if (uk < params.u_min - kBoundTol || uk > params.u_max + kBoundTol) {
      throw IntegrationError({static_cast<int>(k), uk},
                             "acceleration out of bounds at slot " + std::to_string(k));
    }
    const double vk = traj.v.back();
    const double vn = vk + uk * dt;
    if (vn < -kBoundTol || vn > params.v_max + kBoundTol) {
      throw IntegrationError(
          {static_cast<int>(k) + 1, vn},
          "speed bound violated at slot " + std::to_string(k + 1) + " (v = " +
              std::to_string(vn) + ")");
    }
    traj.s.push_back(traj.s.back() + vk * dt + 0.5 * uk * dt * dt);
    traj.v.push_back(vn);
    traj.u.push_back(uk);
  }
  traj.u.push_back(0.0);
  return traj;
}

std::string trajectories_to_csv(
    const std::vector<std::pair<VehicleState, Trajectory>>& rows) {
  std::string out = "t,s,v,u,path_id,vehicle_id\n";
  char line[160];
  for (const auto& [state, traj] : rows) {
    const std::string path = path_name(state.path);
    for (int k = 0; k <= traj.slots(); ++k) {
      std::snprintf(line, sizeof(line), "%.4f,%.4f,%.4f,%.4f,%s,%s\n",
                    traj.t0 + k * traj.dt, traj.s[k], traj.v[k], traj.u[k],
                    path.c_str(), state.id.c_str());
      out += line;
    }
  }
  return out;
}

}  // namespace crossway
