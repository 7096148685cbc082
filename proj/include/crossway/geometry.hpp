#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace crossway {

constexpr double kPi = 3.14159265358979323846;

/// Normalize an angle to (-pi, pi].
double normalize_angle(double a);

struct Pose2D {
  double x = 0.0;        // m
  double y = 0.0;        // m
  double heading = 0.0;  // rad, CCW from +x, normalized to (-pi, pi]
};

enum class Approach : std::uint8_t { D = 0, R = 1, U = 2, L = 3 };
enum class Movement : std::uint8_t { Straight = 0, Left = 1, Right = 2 };

constexpr int kNumApproaches = 4;
constexpr int kNumMovements = 3;
constexpr int kNumPaths = kNumApproaches * kNumMovements;

/// Dense path index in [0, 12): approach-major, movement-minor.
struct PathId {
  Approach approach = Approach::D;
  Movement movement = Movement::Straight;

  int index() const {
    return static_cast<int>(approach) * kNumMovements + static_cast<int>(movement);
  }
  static PathId from_index(int idx);
  bool operator==(const PathId&) const = default;
};

/// Short name like "DL" (approach, exit arm), matching the usual
/// origin-destination naming: D->L is a left turn from the down road.
std::string path_name(PathId id);
/// Inverse of path_name. Throws std::invalid_argument on unknown names.
PathId parse_path_name(const std::string& name);

char approach_letter(Approach a);
/// Arm the path exits to, e.g. D + Left -> L.
Approach exit_arm(PathId id);

struct PathSegment {
  enum class Kind { Straight, Arc } kind = Kind::Straight;
  Pose2D start;
  double length = 0.0;     // m, > 0
  double curvature = 0.0;  // 1/m, signed (CCW positive); 0 for straight

  Pose2D pose_at(double s) const;
};

/// One of the 12 fixed routes through the intersection. s is arc length of
/// the vehicle center, s = 0 at the coordination-area entry boundary.
struct Path {
  PathId id;
  std::vector<PathSegment> segments;
  double total_length = 0.0;

  Pose2D pose_at(double s) const;  // requires 0 <= s <= total_length
  /// Length of the initial straight lead-in (the shared entry lane).
  double entry_straight_length() const;
};

struct OrientedBox {
  Pose2D center;
  double half_length = 0.0;  // m, along heading
  double half_width = 0.0;   // m

  /// Radius of the circumscribed circle, for cheap rejection tests.
  double bounding_radius() const;
};

/// Exact overlap test for two oriented rectangles (closed sets), using the
/// four candidate separating axes.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

struct IntersectionGeometry {
  double coordination_radius = 100.0;  // m
  double lane_width = 10.0;            // m
  double left_turn_radius = 15.0;      // m
  double right_turn_radius = 10.0;     // m

  /// Throws std::invalid_argument when the layout is inconsistent
  /// (non-positive fields, turn arcs that do not fit, left <= right radius).
  void validate() const;

  /// Half-extent of the central conflict-area square (the overlap of the
  /// two road corridors).
  double conflict_area_half_extent() const { return lane_width; }
};

/// Builds the 12 paths (3 movements per approach). Straight paths are single
/// line segments of length 2 * coordination_radius; turns are line-arc-line
/// with tangent continuity. Validates the geometry first.
std::vector<Path> build_paths(const IntersectionGeometry& geom);

}  // namespace crossway
