#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "litege/geometry.hpp"

namespace litege {

// Exact k-d tree over a fixed point set. Results are the true m nearest
// neighbors ordered by (distance, index), so ties resolve to the lower index
// and the ordering is unique regardless of traversal order.
class SpatialIndex {
 public:
  explicit SpatialIndex(const PointCloud& cloud);
  explicit SpatialIndex(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }
  const std::vector<Vec3>& points() const { return points_; }

  void nearest(const Vec3& query, std::size_t m,
               std::vector<std::uint32_t>& indices,
               std::vector<double>& distances) const;
  std::pair<std::uint32_t, double> nearest_one(const Vec3& query) const;

 private:
  struct Node {
    Vec3 box_min, box_max;
    std::uint32_t begin, end;
    std::uint32_t left = 0;   // 0 marks a leaf
    std::uint32_t right = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::uint32_t node_id, const Vec3& query, std::size_t m,
              std::vector<std::pair<double, std::uint32_t>>& heap) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;  // permutation into points_
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;

  static constexpr std::uint32_t kLeafSize = 8;
};

SpatialIndex build_spatial_index(const PointCloud& cloud);

}  // namespace litege
