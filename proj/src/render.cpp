#include "crossway/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace crossway {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

const char* lane_color(Approach a) {
  switch (a) {
    case Approach::D: return "#d62728";
    case Approach::R: return "#1f77b4";
    case Approach::U: return "#2ca02c";
    case Approach::L: return "#9467bd";
  }
  return "#000000";
}

}  // namespace

std::string render_frame_svg(
    const std::vector<std::pair<VehicleState, Trajectory>>& rows,
    const std::vector<Path>& paths, const IntersectionGeometry& geom,
    const BoxDims& box, double t, const RenderOptions& opts) {
  const double extent = geom.coordination_radius + opts.margin;
  const double scale = opts.pixels_per_meter;
  const double size = 2.0 * extent * scale;
  // World (x up-right) to SVG (y down): y flips.
  const auto X = [&](double x) { return (x + extent) * scale; };
  const auto Y = [&](double y) { return (extent - y) * scale; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size
      << "\" height=\"" << size << "\" viewBox=\"0 0 " << size << " " << size
      << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>\n";
  svg << "<circle cx=\"" << fmt(X(0)) << "\" cy=\"" << fmt(Y(0)) << "\" r=\""
      << fmt(geom.coordination_radius * scale)
      << "\" fill=\"none\" stroke=\"#888\" stroke-dasharray=\"6 4\"/>\n";
  const double ca = geom.conflict_area_half_extent();
  svg << "<rect x=\"" << fmt(X(-ca)) << "\" y=\"" << fmt(Y(ca)) << "\" width=\""
      << fmt(2 * ca * scale) << "\" height=\"" << fmt(2 * ca * scale)
      << "\" fill=\"#dce6f2\" stroke=\"#6688aa\"/>\n";
  for (const Path& p : paths) {
    svg << "<polyline fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\" points=\"";
    const int steps = 60;
    for (int i = 0; i <= steps; ++i) {
      const Pose2D pose = p.pose_at(p.total_length * i / steps);
      svg << fmt(X(pose.x)) << "," << fmt(Y(pose.y)) << " ";
    }
    svg << "\"/>\n";
  }
  for (const auto& [state, traj] : rows) {
    if (t < traj.t0 - 1e-9) continue;
    const Path& path = paths[state.path.index()];
    double s = traj.position_extrapolated(t);
    if (s > path.total_length) continue;  // already exited
    s = std::clamp(s, 0.0, path.total_length);
    const Pose2D pose = path.pose_at(s);
    const double deg = -pose.heading * 180.0 / kPi;
    svg << "<g transform=\"translate(" << fmt(X(pose.x)) << "," << fmt(Y(pose.y))
        << ") rotate(" << fmt(deg) << ")\">"
        << "<rect x=\"" << fmt(-box.length / 2 * scale) << "\" y=\""
        << fmt(-box.width / 2 * scale) << "\" width=\"" << fmt(box.length * scale)
        << "\" height=\"" << fmt(box.width * scale) << "\" fill=\""
        << lane_color(state.path.approach)
        << "\" fill-opacity=\"0.75\" stroke=\"#333\"/>"
        << "</g>\n";
    svg << "<text x=\"" << fmt(X(pose.x) + 6) << "\" y=\"" << fmt(Y(pose.y) - 6)
        << "\" font-size=\"11\">" << state.id << "</text>\n";
  }
  svg << "<text x=\"8\" y=\"16\" font-size=\"13\">t = " << fmt(t) << " s</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

int render_frames(const std::vector<std::pair<VehicleState, Trajectory>>& rows,
                  const std::vector<Path>& paths, const IntersectionGeometry& geom,
                  const BoxDims& box, const RenderOptions& opts,
                  const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  double t_begin = 0.0, t_end = 0.0;
  if (!rows.empty()) {
    t_begin = rows.front().second.t0;
    for (const auto& [state, traj] : rows) {
      t_begin = std::min(t_begin, traj.t0);
      t_end = std::max(t_end, traj.end_time());
    }
  }
  const int frames =
      rows.empty() ? 0
                   : static_cast<int>(std::ceil((t_end - t_begin) * opts.fps));
  std::ofstream index(out_dir + "/index.json");
  index << "[\n";
  for (int f = 0; f < frames; ++f) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05d.svg", f);
    const double t = t_begin + f / opts.fps;
    std::ofstream out(out_dir + "/" + name);
    out << render_frame_svg(rows, paths, geom, box, t, opts);
    index << "  {\"frame\": " << f << ", \"t\": " << fmt(t) << ", \"file\": \""
          << name << "\"}" << (f + 1 < frames ? "," : "") << "\n";
  }
  index << "]\n";
  return frames;
}

std::string render_st_svg(const VehicleState& state, const Trajectory& traj,
                          const std::vector<BlockedRegion>& blocked,
                          double path_length) {
  const double t0 = traj.t0, t1 = traj.end_time();
  const double width = 640.0, height = 420.0, pad = 48.0;
  const double tspan = std::max(1e-9, t1 - t0);
  const double sspan = std::max(1e-9, path_length);
  const double tx = (width - 2 * pad) / tspan;   // px per second
  const double sy = (height - 2 * pad) / sspan;  // px per meter
  const auto X = [&](double t) { return pad + (t - t0) * tx; };
  const auto Y = [&](double s) { return height - pad - s * sy; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" data-t0=\"" << fmt(t0)
      << "\" data-t-scale=\"" << fmt(tx) << "\" data-s-scale=\"" << fmt(sy)
      << "\" data-pad=\"" << fmt(pad) << "\" data-height=\"" << fmt(height)
      << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << fmt(pad) << "\" y1=\"" << fmt(height - pad) << "\" x2=\""
      << fmt(width - pad) << "\" y2=\"" << fmt(height - pad)
      << "\" stroke=\"#000\"/>\n";
  svg << "<line x1=\"" << fmt(pad) << "\" y1=\"" << fmt(height - pad) << "\" x2=\""
      << fmt(pad) << "\" y2=\"" << fmt(pad) << "\" stroke=\"#000\"/>\n";
  for (const BlockedRegion& b : blocked) {
    const double tl = std::max(b.time.t_left, t0);
    const double tr = std::min(b.time.t_right, t1);
    if (tr <= tl) continue;
    const double s_hi = std::min(b.span.s_out, path_length);
    svg << "<rect class=\"blocked\" data-t-left=\"" << fmt(b.time.t_left)
        << "\" data-t-right=\"" << fmt(b.time.t_right) << "\" data-s-low=\""
        << fmt(b.span.s_in) << "\" data-s-high=\"" << fmt(b.span.s_out)
        << "\" data-conflict=\""
        << (b.conflict_path >= 0 ? path_name(PathId::from_index(b.conflict_path))
                                 : std::string("-"))
        << "\" x=\"" << fmt(X(tl)) << "\" y=\"" << fmt(Y(s_hi)) << "\" width=\""
        << fmt((tr - tl) * tx) << "\" height=\"" << fmt((s_hi - b.span.s_in) * sy)
        << "\" fill=\"#cc3333\" fill-opacity=\"0.35\" stroke=\"#992222\"/>\n";
  }
  svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (int k = 0; k <= traj.slots(); ++k) {
    const double s = std::min(traj.s[k], path_length);
    svg << fmt(X(traj.t0 + k * traj.dt)) << "," << fmt(Y(s)) << " ";
  }
  svg << "\"/>\n";
  svg << "<text x=\"" << fmt(width / 2) << "\" y=\"" << fmt(height - 12)
      << "\" font-size=\"12\" text-anchor=\"middle\">t (s)</text>\n";
  svg << "<text x=\"14\" y=\"" << fmt(height / 2)
      << "\" font-size=\"12\" transform=\"rotate(-90 14 " << fmt(height / 2)
      << ")\">s (m)</text>\n";
  svg << "<text x=\"" << fmt(pad) << "\" y=\"" << fmt(pad - 10)
      << "\" font-size=\"13\">" << state.id << " (" << path_name(state.path)
      << ")</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::vector<std::pair<VehicleState, Trajectory>> parse_trajectories_csv(
    const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trajectory CSV");
  if (line.rfind("t,s,v,u", 0) != 0) {
    throw std::runtime_error("unexpected trajectory CSV header: " + line);
  }
  struct Row {
    double t, s, v, u;
    std::string path, id;
  };
  std::map<std::string, std::vector<Row>> by_vehicle;
  std::vector<std::string> vehicle_order;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row r;
    char path[16], id[64];
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%15[^,],%63s", &r.t, &r.s, &r.v,
                    &r.u, path, id) != 6) {
      throw std::runtime_error("malformed trajectory CSV line: " + line);
    }
    r.path = path;
    r.id = id;
    if (!by_vehicle.count(r.id)) vehicle_order.push_back(r.id);
    by_vehicle[r.id].push_back(r);
  }
  std::vector<std::pair<VehicleState, Trajectory>> rows;
  for (const std::string& id : vehicle_order) {
    const auto& rs = by_vehicle[id];
    if (rs.size() < 2) throw std::runtime_error("vehicle " + id + " has < 2 samples");
    VehicleState st;
    st.id = id;
    st.path = parse_path_name(rs.front().path);
    st.s = rs.front().s;
    st.v = rs.front().v;
    st.spawn_time = rs.front().t;
    Trajectory traj;
    traj.t0 = rs.front().t;
    traj.dt = rs[1].t - rs[0].t;
    for (const Row& r : rs) {
      traj.s.push_back(r.s);
      traj.v.push_back(r.v);
      traj.u.push_back(r.u);
    }
    rows.emplace_back(st, std::move(traj));
  }
  return rows;
}

}  // namespace crossway
