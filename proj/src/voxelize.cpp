#include "litege/voxelize.hpp"

#include <algorithm>
#include <cmath>

namespace litege {

bool operator==(const VoxelGridSpec& a, const VoxelGridSpec& b) {
  return a.resolution == b.resolution && a.extent.min == b.extent.min &&
         a.extent.max == b.extent.max;
}

void validate_grid(const VoxelGridSpec& grid) {
  if (grid.resolution < 2 || grid.resolution > 1024)
    fail_invalid("voxel grid resolution must be in [2, 1024], got " +
                 std::to_string(grid.resolution));
  Vec3 span = grid.extent.max - grid.extent.min;
  if (!span.allFinite() || !(span.minCoeff() > 0))
    fail_invalid("voxel grid extent must have positive span on every axis");
}

std::size_t OccupancyGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), true));
}

OccupancyGrid voxelize_occupancy(const PointCloud& points, const VoxelGridSpec& grid) {
  validate_grid(grid);
  validate_cloud(points);

  OccupancyGrid out;
  out.grid = grid;
  out.occupied.assign(grid.voxel_count(), false);

  const Vec3 lo = grid.extent.min, hi = grid.extent.max;
  const Vec3 cell = grid.cell();
  const std::uint32_t res = grid.resolution;
  for (const Vec3& p : points.points) {
    if ((p.array() < lo.array()).any() || (p.array() > hi.array()).any()) {
      ++out.dropped;
      continue;
    }
    std::uint32_t idx[3];
    for (int a = 0; a < 3; ++a) {
      // Points exactly on the max face belong to the last voxel.
      auto i = static_cast<std::int64_t>(std::floor((p[a] - lo[a]) / cell[a]));
      idx[a] = static_cast<std::uint32_t>(std::clamp<std::int64_t>(i, 0, res - 1));
    }
    out.occupied[idx[0] + res * idx[1] + res * res * idx[2]] = true;
  }
  if (out.dropped == points.points.size())
    fail_invalid("voxelize: all points fall outside the grid extent");
  return out;
}

}  // namespace litege
