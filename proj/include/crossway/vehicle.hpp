#pragma once

#include <span>
#include <string>
#include <vector>

#include "crossway/geometry.hpp"

namespace crossway {

struct VehicleParams {
  double v_max = 15.0;        // m/s
  double u_min = -5.0;        // m/s^2
  double u_max = 5.0;         // m/s^2
  double safe_gap = 8.0;      // m, rear-end gap L_safe
  double body_length = 4.0;   // m
  double body_width = 2.0;    // m
  double box_length = 8.0;    // m, safety box
  double box_width = 4.0;     // m

  void validate() const;
};

struct VehicleState {
  std::string id;
  PathId path;
  double s = 0.0;           // m along path
  double v = 0.0;           // m/s
  double u = 0.0;           // m/s^2
  double spawn_time = 0.0;  // s
};

/// Discretized (s, v, u) profile. All three arrays have T + 1 entries where
/// T is the number of slots; u[k] is the acceleration held over
/// [t_k, t_{k+1}) and u.back() is a zero pad. States obey the semi-implicit
/// kinematic update s[k+1] = s[k] + v[k] dt + u[k] dt^2 / 2.
struct Trajectory {
  double dt = 0.1;
  double t0 = 0.0;
  std::vector<double> s;
  std::vector<double> v;
  std::vector<double> u;

  int slots() const { return static_cast<int>(s.size()) - 1; }
  double end_time() const { return t0 + slots() * dt; }

  /// Position at time t via the piecewise-quadratic profile; throws
  /// std::out_of_range outside [t0, end_time()].
  double position_at(double t) const;
  /// Like position_at but holds the final speed past the horizon and the
  /// initial state before t0. Used against committed neighbours whose
  /// horizon ended earlier.
  double position_extrapolated(double t) const;
  double speed_at(double t) const;

  /// First time s(t) >= target, solved per-slot in closed form; returns
  /// negative when the trajectory never reaches target within the horizon.
  double first_time_at_or_after(double target_s) const;
};

struct SpeedBoundViolation {
  int slot = 0;
  double v = 0.0;
};

/// Forward-integrates u_seq from the initial state. Speed-bound violations
/// are errors (IntegrationError), never clamped.
Trajectory integrate(const VehicleState& initial, std::span<const double> u_seq,
                     double dt, const VehicleParams& params);

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const SpeedBoundViolation& v, const std::string& what)
      : std::runtime_error(what), violation(v) {}
  SpeedBoundViolation violation;
};

/// Writes trajectories as CSV (t, s, v, u, path_id, vehicle_id), 4 decimals.
std::string trajectories_to_csv(
    const std::vector<std::pair<VehicleState, Trajectory>>& rows);

}  // namespace crossway
