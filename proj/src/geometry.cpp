#include "crossway/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace crossway {

double normalize_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

PathId PathId::from_index(int idx) {
  if (idx < 0 || idx >= kNumPaths) throw std::out_of_range("path index");
  return PathId{static_cast<Approach>(idx / kNumMovements),
                static_cast<Movement>(idx % kNumMovements)};
}

char approach_letter(Approach a) {
  static constexpr char letters[] = {'D', 'R', 'U', 'L'};
  return letters[static_cast<int>(a)];
}

Approach exit_arm(PathId id) {
  // Approaches are indexed CCW (D, R, U, L). Straight exits the opposite
  // arm, a left turn the arm CCW of it, a right turn the arm CW of it.
  const int a = static_cast<int>(id.approach);
  switch (id.movement) {
    case Movement::Straight:
      return static_cast<Approach>((a + 2) % 4);
    case Movement::Left:
      return static_cast<Approach>((a + 3) % 4);
    case Movement::Right:
      return static_cast<Approach>((a + 1) % 4);
  }
  throw std::logic_error("bad movement");
}

std::string path_name(PathId id) {
  return std::string{approach_letter(id.approach), approach_letter(exit_arm(id))};
}

PathId parse_path_name(const std::string& name) {
  for (int i = 0; i < kNumPaths; ++i) {
    PathId id = PathId::from_index(i);
    if (path_name(id) == name) return id;
  }
  throw std::invalid_argument("unknown path name: " + name);
}

Pose2D PathSegment::pose_at(double s) const {
  Pose2D p;
  if (kind == Kind::Straight) {
    p.x = start.x + s * std::cos(start.heading);
    p.y = start.y + s * std::sin(start.heading);
    p.heading = start.heading;
  } else {
    const double th0 = start.heading;
    const double th = th0 + curvature * s;
    p.x = start.x + (std::sin(th) - std::sin(th0)) / curvature;
    p.y = start.y - (std::cos(th) - std::cos(th0)) / curvature;
    p.heading = normalize_angle(th);
  }
  return p;
}

Pose2D Path::pose_at(double s) const {
  if (s < -1e-9 || s > total_length + 1e-9) {
    throw std::out_of_range("path position " + std::to_string(s) +
                            " outside [0, " + std::to_string(total_length) + "]");
  }
  s = std::max(0.0, std::min(s, total_length));
  for (const auto& seg : segments) {
    if (s <= seg.length || &seg == &segments.back()) {
      return seg.pose_at(std::min(s, seg.length));
    }
    s -= seg.length;
  }
  throw std::logic_error("empty path");
}

double Path::entry_straight_length() const {
  if (segments.empty()) return 0.0;
  if (segments.size() == 1) return segments.front().length;  // straight route
  return segments.front().length;
}

double OrientedBox::bounding_radius() const {
  return std::hypot(half_length, half_width);
}

namespace {

// Projects box b onto the given unit axis and checks separation against
// box a's own extent on that axis (axis is one of a's edge normals).
bool separated_on_axis(const OrientedBox& a, const OrientedBox& b, double ax,
                       double ay, double a_extent) {
  const double dc = (b.center.x - a.center.x) * ax + (b.center.y - a.center.y) * ay;
  const double cb = std::cos(b.center.heading), sb = std::sin(b.center.heading);
  const double b_extent = std::abs((cb * ax + sb * ay)) * b.half_length +
                          std::abs((-sb * ax + cb * ay)) * b.half_width;
  return std::abs(dc) > a_extent + b_extent;
}

}  // namespace

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  // Cheap rejection: bounding circles.
  const double dx = b.center.x - a.center.x, dy = b.center.y - a.center.y;
  const double rr = a.bounding_radius() + b.bounding_radius();
  if (dx * dx + dy * dy > rr * rr) return false;

  const double ca = std::cos(a.center.heading), sa = std::sin(a.center.heading);
  const double cb = std::cos(b.center.heading), sb = std::sin(b.center.heading);
  if (separated_on_axis(a, b, ca, sa, a.half_length)) return false;
  if (separated_on_axis(a, b, -sa, ca, a.half_width)) return false;
  if (separated_on_axis(b, a, cb, sb, b.half_length)) return false;
  if (separated_on_axis(b, a, -sb, cb, b.half_width)) return false;
  return true;
}

void IntersectionGeometry::validate() const {
  if (coordination_radius <= 0 || lane_width <= 0 || left_turn_radius <= 0 ||
      right_turn_radius <= 0) {
    throw std::invalid_argument("intersection geometry fields must be positive");
  }
  if (left_turn_radius <= right_turn_radius) {
    throw std::invalid_argument("left turn radius must exceed right turn radius");
  }
  const double w2 = lane_width / 2.0;
  // The turn arcs must leave room for positive straight lead-in/lead-out
  // segments inside the coordination area.
  if (right_turn_radius + w2 >= coordination_radius ||
      left_turn_radius - w2 >= coordination_radius) {
    throw std::invalid_argument("turn arc does not fit inside the coordination area");
  }
}

namespace {

Pose2D rotate_pose(const Pose2D& p, int quarter_turns) {
  Pose2D out = p;
  for (int i = 0; i < quarter_turns; ++i) {
    const double x = -out.y, y = out.x;
    out.x = x;
    out.y = y;
    out.heading = normalize_angle(out.heading + kPi / 2.0);
  }
  return out;
}

// Builds the three movements for the D approach (entering from -y heading
// +y on the lane x = +w/2); the other approaches are 90-degree rotations.
std::vector<Path> build_base_paths(const IntersectionGeometry& g) {
  const double R = g.coordination_radius;
  const double w2 = g.lane_width / 2.0;
  std::vector<Path> out;

  // Straight: one segment through the whole area.
  {
    Path p;
    p.id = {Approach::D, Movement::Straight};
    p.segments.push_back({PathSegment::Kind::Straight, {w2, -R, kPi / 2.0}, 2.0 * R, 0.0});
    p.total_length = 2.0 * R;
    out.push_back(std::move(p));
  }
  // Left: lead-in, CCW quarter arc, lead-out. The arc is tangent to the
  // entry lane x = +w/2 and the exit lane y = +w/2, so its center sits at
  // (w/2 - r, w/2 - r) and the tangent points at y = w/2 - r and x = w/2 - r.
  {
    const double r = g.left_turn_radius;
    const double lead = R + (w2 - r);  // distance from entry to the tangent point
    Path p;
    p.id = {Approach::D, Movement::Left};
    p.segments.push_back({PathSegment::Kind::Straight, {w2, -R, kPi / 2.0}, lead, 0.0});
    p.segments.push_back(
        {PathSegment::Kind::Arc, {w2, w2 - r, kPi / 2.0}, kPi / 2.0 * r, 1.0 / r});
    p.segments.push_back({PathSegment::Kind::Straight, {w2 - r, w2, kPi}, lead, 0.0});
    p.total_length = 2.0 * lead + kPi / 2.0 * r;
    out.push_back(std::move(p));
  }
  // Right: lead-in, CW quarter arc tangent to x = +w/2 and y = -w/2,
  // center (w/2 + r, -w/2 - r).
  {
    const double r = g.right_turn_radius;
    const double lead = R - (w2 + r);
    Path p;
    p.id = {Approach::D, Movement::Right};
    p.segments.push_back({PathSegment::Kind::Straight, {w2, -R, kPi / 2.0}, lead, 0.0});
    p.segments.push_back(
        {PathSegment::Kind::Arc, {w2, -w2 - r, kPi / 2.0}, kPi / 2.0 * r, -1.0 / r});
    p.segments.push_back({PathSegment::Kind::Straight, {w2 + r, -w2, 0.0}, lead, 0.0});
    p.total_length = 2.0 * lead + kPi / 2.0 * r;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<Path> build_paths(const IntersectionGeometry& geom) {
  geom.validate();
  std::vector<Path> paths;
  paths.reserve(kNumPaths);
  const std::vector<Path> base = build_base_paths(geom);
  for (int a = 0; a < kNumApproaches; ++a) {
    for (const Path& b : base) {
      Path p;
      p.id = {static_cast<Approach>(a), b.id.movement};
      p.total_length = b.total_length;
      for (const PathSegment& seg : b.segments) {
        PathSegment s = seg;
        s.start = rotate_pose(seg.start, a);
        if (s.kind == PathSegment::Kind::Arc) s.curvature = seg.curvature;
        p.segments.push_back(s);
      }
      paths.push_back(std::move(p));
    }
  }
  // Construction sanity: segment junctions must be continuous.
  for (const Path& p : paths) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < p.segments.size(); ++i) {
      acc += p.segments[i].length;
      const Pose2D end = p.segments[i].pose_at(p.segments[i].length);
      const Pose2D next = p.segments[i + 1].start;
      if (std::abs(end.x - next.x) > 1e-9 || std::abs(end.y - next.y) > 1e-9 ||
          std::abs(normalize_angle(end.heading - next.heading)) > 1e-9) {
        throw std::logic_error("discontinuous path construction: " + path_name(p.id));
      }
    }
  }
  // Sort into dense index order so paths[id.index()] is valid.
  std::vector<Path> ordered(kNumPaths);
  for (Path& p : paths) ordered[p.id.index()] = std::move(p);
  return ordered;
}

}  // namespace crossway
