#pragma once

#include <cstdint>
#include <vector>

#include "litege/geometry.hpp"

namespace litege {

// Axis-aligned voxel grid; linear id = ix + resolution*iy + resolution^2*iz.
struct VoxelGridSpec {
  std::uint32_t resolution = 128;
  AxisBox extent = {Vec3(-1.5, -1.5, -1.5), Vec3(1.5, 1.5, 1.5)};

  std::uint32_t voxel_count() const { return resolution * resolution * resolution; }
  Vec3 cell() const { return (extent.max - extent.min) / double(resolution); }
  Vec3 center(std::uint32_t id) const {
    std::uint32_t ix = id % resolution;
    std::uint32_t iy = (id / resolution) % resolution;
    std::uint32_t iz = id / (resolution * resolution);
    Vec3 c = cell();
    return extent.min + Vec3((ix + 0.5) * c.x(), (iy + 0.5) * c.y(), (iz + 0.5) * c.z());
  }
};

bool operator==(const VoxelGridSpec& a, const VoxelGridSpec& b);

// Throws Error(invalid_input) unless 2 <= resolution <= 1024 and the extent
// has positive span on every axis.
void validate_grid(const VoxelGridSpec& grid);

struct OccupancyGrid {
  VoxelGridSpec grid;
  std::vector<bool> occupied;  // resolution^3 entries
  std::size_t dropped = 0;     // points outside the extent

  std::size_t occupied_count() const;
};

// A voxel is set iff at least one point falls in it; points outside the
// extent are dropped and counted. All points outside is an error.
OccupancyGrid voxelize_occupancy(const PointCloud& points, const VoxelGridSpec& grid);

}  // namespace litege
