#include "crossway/collision_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace crossway {

void CollisionTable::insert(PathId ego, PathId conflict, CollisionRegion region) {
  if (ego == conflict) throw std::invalid_argument("self-pair in collision table");
  if (!(region.s_in < region.s_out)) {
    throw std::invalid_argument("collision region boundaries out of order");
  }
  auto& slot = regions_[ego.index() * kNumPaths + conflict.index()];
  if (!slot) {
    auto& nb = neighbors_[ego.index()];
    nb.insert(std::lower_bound(nb.begin(), nb.end(), conflict.index()),
              conflict.index());
  }
  slot = region;
}

int CollisionTable::pair_count() const {
  int n = 0;
  for (const auto& r : regions_) n += r.has_value() ? 1 : 0;
  return n;
}

std::string CollisionTable::serialize() const {
  char buf[128];
  std::string out;
  std::snprintf(buf, sizeof(buf), "# crossway collision table v1\n# geometry_hash %016llx\n",
                static_cast<unsigned long long>(geometry_hash_));
  out += buf;
  for (int e = 0; e < kNumPaths; ++e) {
    for (int c = 0; c < kNumPaths; ++c) {
      const CollisionRegion* r = find(e, c);
      if (!r) continue;
      std::snprintf(buf, sizeof(buf), "%s %s %.6f %.6f\n",
                    path_name(PathId::from_index(e)).c_str(),
                    path_name(PathId::from_index(c)).c_str(), r->s_in, r->s_out);
      out += buf;
    }
  }
  return out;
}

CollisionTable CollisionTable::deserialize(const std::string& text) {
  CollisionTable table;
  std::istringstream in(text);
  std::string line;
  bool have_hash = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line);
      std::string hash_tag, key;
      ls >> hash_tag >> key;
      if (key == "geometry_hash") {
        std::string hex;
        ls >> hex;
        table.geometry_hash_ = std::stoull(hex, nullptr, 16);
        have_hash = true;
      }
      continue;
    }
    std::istringstream ls(line);
    std::string ego, conflict;
    double s_in = 0.0, s_out = 0.0;
    if (!(ls >> ego >> conflict >> s_in >> s_out)) {
      throw std::runtime_error("malformed collision table record: " + line);
    }
    table.insert(parse_path_name(ego), parse_path_name(conflict), {s_in, s_out});
  }
  if (!have_hash) throw std::runtime_error("collision table missing geometry hash");
  return table;
}

std::uint64_t geometry_hash(const IntersectionGeometry& geom, const BoxDims& box,
                            const CollisionTableParams& params) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "r=%.9g;w=%.9g;lt=%.9g;rt=%.9g;bl=%.9g;bw=%.9g;eps=%.9g;step=%.9g",
                geom.coordination_radius, geom.lane_width, geom.left_turn_radius,
                geom.right_turn_radius, box.length, box.width, params.eps,
                params.sweep_step);
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (const char* p = buf; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

OrientedBox box_at(const Path& path, double s, const BoxDims& dims) {
  return OrientedBox{path.pose_at(s), dims.length / 2.0, dims.width / 2.0};
}

// Conflict-path footprints at a fixed sampling step, shared by all the
// sweeps of one ordered pair.
struct SweptPath {
  std::vector<OrientedBox> boxes;

  SweptPath(const Path& path, double step, const BoxDims& dims) {
    const int n = static_cast<int>(std::ceil(path.total_length / step));
    boxes.reserve(n + 1);
    for (int i = 0; i < n; ++i) boxes.push_back(box_at(path, i * step, dims));
    boxes.push_back(box_at(path, path.total_length, dims));
  }

  bool collides_with(const OrientedBox& ego) const {
    for (const OrientedBox& b : boxes) {
      if (boxes_overlap(ego, b)) return true;
    }
    return false;
  }
};

struct ScanRun {
  double first = 0.0;  // first colliding sample
  double last = 0.0;   // last colliding sample
};

// Coarse ego scan; consecutive colliding samples are merged into runs.
std::vector<ScanRun> scan_runs(const Path& ego_path, const SweptPath& swept,
                               const BoxDims& dims, double scan_step) {
  std::vector<ScanRun> runs;
  const int n = static_cast<int>(std::ceil(ego_path.total_length / scan_step));
  bool prev = false;
  for (int i = 0; i <= n; ++i) {
    const double s = std::min(i * scan_step, ego_path.total_length);
    const bool hit = swept.collides_with(box_at(ego_path, s, dims));
    if (hit && !prev) runs.push_back({s, s});
    if (hit) runs.back().last = s;
    prev = hit;
  }
  return runs;
}

}  // namespace

bool sweep_collides(const Path& ego_path, double s_ego, const Path& conflict_path,
                    double sweep_step, const BoxDims& box) {
  if (sweep_step <= 0.0) throw std::invalid_argument("sweep step must be positive");
  const OrientedBox ego = box_at(ego_path, s_ego, box);
  const int n = static_cast<int>(std::ceil(conflict_path.total_length / sweep_step));
  for (int i = 0; i < n; ++i) {
    if (boxes_overlap(ego, box_at(conflict_path, i * sweep_step, box))) return true;
  }
  return boxes_overlap(ego, box_at(conflict_path, conflict_path.total_length, box));
}

std::optional<CollisionRegion> find_boundaries(const Path& ego_path,
                                               const Path& conflict_path,
                                               const BoxDims& box,
                                               const CollisionTableParams& params) {
  if (ego_path.id == conflict_path.id) {
    throw std::invalid_argument("self-pair has no collision region");
  }
  if (params.eps <= 0.0) throw std::invalid_argument("eps must be positive");

  const SweptPath swept(conflict_path, params.sweep_step, box);
  const auto collide = [&](double s) {
    return swept.collides_with(box_at(ego_path, s, box));
  };

  std::vector<ScanRun> runs = scan_runs(ego_path, swept, box, params.scan_step);
  if (runs.empty()) return std::nullopt;

  const bool same_approach = ego_path.id.approach == conflict_path.id.approach;
  if (same_approach && runs.front().first <= params.scan_step) {
    // Overlap along the shared entry straight; that run is rear-end traffic,
    // not a lateral conflict. A later run means the paths re-converge.
    runs.erase(runs.begin());
    if (runs.empty()) return std::nullopt;
  }
  if (params.validate_single_interval && runs.size() > 1) {
    throw std::runtime_error("collision set of pair " + path_name(ego_path.id) + "," +
                             path_name(conflict_path.id) +
                             " is not a single interval");
  }
  const ScanRun run = runs.front();

  // Entry boundary: bisect between the last collision-free position below
  // the run and the first colliding sample, keeping a on the free side.
  double s_in = 0.0;
  if (run.first <= 0.0) {
    s_in = 0.0;
  } else {
    double a = std::max(0.0, run.first - params.scan_step), b = run.first;
    if (collide(a)) {
      s_in = a;
    } else {
      while (std::abs(a - b) >= params.eps) {
        const double c = 0.5 * (a + b);
        if (collide(c)) b = c;
        else a = c;
      }
      s_in = a;
    }
  }

  // Exit boundary: mirror-image bisection from the far side.
  double s_out = ego_path.total_length;
  if (run.last < ego_path.total_length) {
    double a = std::min(ego_path.total_length, run.last + params.scan_step);
    double b = run.last;
    if (collide(a)) {
      s_out = a;
    } else {
      while (std::abs(a - b) >= params.eps) {
        const double c = 0.5 * (a + b);
        if (collide(c)) b = c;
        else a = c;
      }
      s_out = a;
    }
  }
  return CollisionRegion{s_in, s_out};
}

CollisionTable generate_collision_table(const std::vector<Path>& paths,
                                        const IntersectionGeometry& geom,
                                        const BoxDims& box,
                                        const CollisionTableParams& params) {
  CollisionTable table;
  for (const Path& ego : paths) {
    for (const Path& conflict : paths) {
      if (ego.id == conflict.id) continue;
      if (auto region = find_boundaries(ego, conflict, box, params)) {
        table.insert(ego.id, conflict.id, *region);
      }
    }
  }
  // Presence must be mutual; a one-sided entry indicates a scan artifact.
  for (int a = 0; a < kNumPaths; ++a) {
    for (int b = 0; b < kNumPaths; ++b) {
      if (a != b && (table.find(a, b) != nullptr) != (table.find(b, a) != nullptr)) {
        throw std::runtime_error("asymmetric collision table presence for pair " +
                                 path_name(PathId::from_index(a)) + "," +
                                 path_name(PathId::from_index(b)));
      }
    }
  }
  table.set_geometry_hash(geometry_hash(geom, box, params));
  return table;
}

CollisionRegion conflict_area_interval(const Path& path, const BoxDims& box,
                                       double ca_half_extent, double eps) {
  const OrientedBox square{Pose2D{0.0, 0.0, 0.0}, ca_half_extent, ca_half_extent};
  const auto inside = [&](double s) {
    return boxes_overlap(box_at(path, s, box), square);
  };
  // Every route passes through the central square; bracket by coarse scan.
  const double step = 1.0;
  double first_hit = -1.0, last_hit = -1.0;
  for (double s = 0.0; s <= path.total_length + 1e-9; s += step) {
    const double sc = std::min(s, path.total_length);
    if (inside(sc)) {
      if (first_hit < 0.0) first_hit = sc;
      last_hit = sc;
    }
  }
  if (first_hit < 0.0) {
    throw std::logic_error("path never enters the conflict area: " + path_name(path.id));
  }
  double lo = std::max(0.0, first_hit - step), hi = first_hit;
  while (hi - lo >= eps && !inside(lo)) {
    const double c = 0.5 * (lo + hi);
    if (inside(c)) hi = c;
    else lo = c;
  }
  const double s_in = lo;
  lo = last_hit;
  hi = std::min(path.total_length, last_hit + step);
  while (hi - lo >= eps && !inside(hi)) {
    const double c = 0.5 * (lo + hi);
    if (inside(c)) lo = c;
    else hi = c;
  }
  return {s_in, hi};
}

}  // namespace crossway
