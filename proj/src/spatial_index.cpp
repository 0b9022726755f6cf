#include "litege/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace litege {

namespace {

double box_dist_sq(const Vec3& bmin, const Vec3& bmax, const Vec3& q) {
  double d = 0.0;
  for (int a = 0; a < 3; ++a) {
    double lo = bmin[a] - q[a];
    double hi = q[a] - bmax[a];
    double t = std::max({lo, hi, 0.0});
    d += t * t;
  }
  return d;
}

}  // namespace

SpatialIndex::SpatialIndex(const PointCloud& cloud) : SpatialIndex(cloud.points) {}

SpatialIndex::SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) fail_invalid("spatial index: empty point set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<std::uint32_t>(points_.size()));
}

std::uint32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.box_min = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.box_max = -node.box_min;
  for (std::uint32_t i = begin; i < end; ++i) {
    const Vec3& p = points_[order_[i]];
    node.box_min = node.box_min.cwiseMin(p);
    node.box_max = node.box_max.cwiseMax(p);
  }
  std::uint32_t id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin > kLeafSize) {
    Vec3 extent = node.box_max - node.box_min;
    int axis = 0;
    if (extent.y() > extent.x()) axis = 1;
    if (extent.z() > extent[axis]) axis = 2;
    std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       double ca = points_[a][axis], cb = points_[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    std::uint32_t left = build(begin, mid);
    std::uint32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
  }
  return id;
}

void SpatialIndex::search(std::uint32_t node_id, const Vec3& query,
                          std::size_t m,
                          std::vector<std::pair<double, std::uint32_t>>& heap) const {
  const Node& node = nodes_[node_id];
  if (heap.size() == m &&
      box_dist_sq(node.box_min, node.box_max, query) > heap.front().first)
    return;
  if (node.left == 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      std::uint32_t idx = order_[i];
      double d = (points_[idx] - query).squaredNorm();
      std::pair<double, std::uint32_t> cand{d, idx};
      if (heap.size() < m) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  double dl = box_dist_sq(nodes_[node.left].box_min, nodes_[node.left].box_max, query);
  double dr = box_dist_sq(nodes_[node.right].box_min, nodes_[node.right].box_max, query);
  if (dl <= dr) {
    search(node.left, query, m, heap);
    search(node.right, query, m, heap);
  } else {
    search(node.right, query, m, heap);
    search(node.left, query, m, heap);
  }
}

void SpatialIndex::nearest(const Vec3& query, std::size_t m,
                           std::vector<std::uint32_t>& indices,
                           std::vector<double>& distances) const {
  if (m == 0) fail_invalid("nearest: m must be positive");
  if (m > points_.size())
    fail_invalid("nearest: m=" + std::to_string(m) + " exceeds point count " +
                 std::to_string(points_.size()));
  std::vector<std::pair<double, std::uint32_t>> heap;
  heap.reserve(m);
  search(root_, query, m, heap);
  std::sort(heap.begin(), heap.end());
  indices.resize(m);
  distances.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    indices[i] = heap[i].second;
    distances[i] = std::sqrt(heap[i].first);
  }
}

std::pair<std::uint32_t, double> SpatialIndex::nearest_one(const Vec3& query) const {
  std::pair<double, std::uint32_t> best{std::numeric_limits<double>::infinity(), 0};
  // Iterative traversal, nearer child first; small explicit stack.
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = root_;
  while (top > 0) {
    std::uint32_t node_id = stack[--top];
    const Node& node = nodes_[node_id];
    if (box_dist_sq(node.box_min, node.box_max, query) > best.first) continue;
    if (node.left == 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        std::uint32_t idx = order_[i];
        double d = (points_[idx] - query).squaredNorm();
        std::pair<double, std::uint32_t> cand{d, idx};
        if (cand < best) best = cand;
      }
      continue;
    }
    double dl = box_dist_sq(nodes_[node.left].box_min, nodes_[node.left].box_max, query);
    double dr = box_dist_sq(nodes_[node.right].box_min, nodes_[node.right].box_max, query);
    // Push the farther child first so the nearer one is explored first.
    if (dl <= dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
  return {best.second, std::sqrt(best.first)};
}

SpatialIndex build_spatial_index(const PointCloud& cloud) {
  return SpatialIndex(cloud);
}

}  // namespace litege
