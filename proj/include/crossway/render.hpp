#pragma once

#include <string>
#include <vector>

#include "crossway/st_planner.hpp"
#include "crossway/vehicle.hpp"

namespace crossway {

struct RenderOptions {
  double fps = 10.0;
  double margin = 8.0;        // m of breathing room around the coordination circle
  double pixels_per_meter = 4.0;
};

/// One top-down frame: coordination circle, conflict-area square, the twelve
/// routes, and every vehicle's safety box.
std::string render_frame_svg(
    const std::vector<std::pair<VehicleState, Trajectory>>& rows,
    const std::vector<Path>& paths, const IntersectionGeometry& geom,
    const BoxDims& box, double t, const RenderOptions& opts);

/// Writes frame_%05d.svg files plus an index.json listing them; returns the
/// frame count (0 for an empty trajectory set, with an empty index).
int render_frames(const std::vector<std::pair<VehicleState, Trajectory>>& rows,
                  const std::vector<Path>& paths, const IntersectionGeometry& geom,
                  const BoxDims& box, const RenderOptions& opts,
                  const std::string& out_dir);

/// S-T graph for one vehicle: blocked rectangles (class="blocked", with
/// data-* attributes carrying the raw interval) and the planned profile.
/// The root svg element carries the axis transform as data-* attributes so
/// the geometry can be inverted by tooling.
std::string render_st_svg(const VehicleState& state, const Trajectory& traj,
                          const std::vector<BlockedRegion>& blocked,
                          double path_length);

/// Parses the CSV written by trajectories_to_csv back into per-vehicle rows.
std::vector<std::pair<VehicleState, Trajectory>> parse_trajectories_csv(
    const std::string& text);

}  // namespace crossway
