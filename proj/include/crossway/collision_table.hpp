#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crossway/geometry.hpp"

namespace crossway {

/// Longitudinal interval on the ego path inside which a collision with a
/// vehicle somewhere on the conflicting path is possible.
struct CollisionRegion {
  double s_in = 0.0;   // m
  double s_out = 0.0;  // m
};

struct BoxDims {
  double length = 8.0;  // m
  double width = 4.0;   // m
};

struct CollisionTableParams {
  double eps = 0.01;        // m, bisection termination
  double sweep_step = 0.1;  // m, conflict-path sampling step
  double scan_step = 1.0;   // m, coarse ego scan locating collision runs
  bool validate_single_interval = true;
};

/// Precomputed conflict regions for all ordered pairs of distinct paths.
/// Absent pair <=> the paths never conflict laterally. Same-approach pairs
/// whose overlap is confined to the shared entry straight are handled by the
/// rear-end constraint instead and carry no entry here.
class CollisionTable {
 public:
  CollisionTable() : regions_(kNumPaths * kNumPaths), neighbors_(kNumPaths) {}

  const CollisionRegion* find(PathId ego, PathId conflict) const {
    const auto& r = regions_[ego.index() * kNumPaths + conflict.index()];
    return r ? &*r : nullptr;
  }
  const CollisionRegion* find(int ego_idx, int conflict_idx) const {
    const auto& r = regions_[ego_idx * kNumPaths + conflict_idx];
    return r ? &*r : nullptr;
  }
  bool conflicts(PathId a, PathId b) const { return find(a, b) != nullptr; }

  /// Indices of paths conflicting with the given ego path, ascending.
  const std::vector<int>& conflicting_paths(int ego_idx) const {
    return neighbors_[ego_idx];
  }

  void insert(PathId ego, PathId conflict, CollisionRegion region);
  int pair_count() const;

  std::uint64_t geometry_hash() const { return geometry_hash_; }
  void set_geometry_hash(std::uint64_t h) { geometry_hash_ = h; }

  /// Text form: a hash header plus one "ego conflict s_in s_out" record per
  /// ordered pair, 6-decimal meters, ordered by (ego, conflict) index.
  std::string serialize() const;
  static CollisionTable deserialize(const std::string& text);

 private:
  std::vector<std::optional<CollisionRegion>> regions_;
  std::vector<std::vector<int>> neighbors_;
  std::uint64_t geometry_hash_ = 0;
};

/// Hash pinning a table to the geometry and sweep parameters it was built
/// from; stale tables are rejected by comparing this value.
std::uint64_t geometry_hash(const IntersectionGeometry& geom, const BoxDims& box,
                            const CollisionTableParams& params);

/// True iff the ego safety box fixed at s_ego overlaps the conflicting box at
/// any sampled position s in [0, conflict length], stepped by sweep_step
/// (endpoints included).
bool sweep_collides(const Path& ego_path, double s_ego, const Path& conflict_path,
                    double sweep_step, const BoxDims& box);

/// Bisects the collision boundary on the ego path against the conflicting
/// path, refining the run located by a coarse scan. Returns nullopt when no
/// ego position collides (or the pair is rear-end only, for same-approach
/// pairs). Throws std::runtime_error when validation detects a
/// non-single-interval collision set.
std::optional<CollisionRegion> find_boundaries(const Path& ego_path,
                                               const Path& conflict_path,
                                               const BoxDims& box,
                                               const CollisionTableParams& params);

/// Runs find_boundaries over all ordered pairs of distinct paths and stamps
/// the geometry hash. Deterministic.
CollisionTable generate_collision_table(const std::vector<Path>& paths,
                                        const IntersectionGeometry& geom,
                                        const BoxDims& box,
                                        const CollisionTableParams& params);

/// First/last s at which the safety box overlaps the central conflict-area
/// square (half extent per IntersectionGeometry). Used by the collision-set
/// baseline and the signal controller.
CollisionRegion conflict_area_interval(const Path& path, const BoxDims& box,
                                       double ca_half_extent, double eps);

}  // namespace crossway
