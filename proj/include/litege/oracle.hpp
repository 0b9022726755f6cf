#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "litege/geometry.hpp"
#include "litege/spatial_index.hpp"

namespace litege {

struct GeodesicSample {
  std::uint32_t shape_id = 0;
  Vec3 src = Vec3::Zero();
  Vec3 dst = Vec3::Zero();
  double distance = 0.0;
};

// Graph geodesics: Dijkstra over mesh vertices plus per-edge Steiner points
// (subdivision level 0..2 places 2^level - 1 points per edge), with in-face
// connections between boundary nodes of each triangle. Disconnected nodes
// report +inf.
class GeodesicSolver {
 public:
  GeodesicSolver(const TriangleMesh& mesh, int subdivision);

  // Distances from a mesh vertex to every mesh vertex (graph metric).
  std::vector<double> distances_from_vertex(std::uint32_t src_vertex) const;
  // Distances from any graph node to every graph node.
  std::vector<double> distances_from_node(std::uint32_t node) const;

  // Precomputed field for many queries against one source point.
  struct PointField {
    std::uint32_t node = 0;
    double gap = 0.0;  // snap distance, added to every evaluation
    std::vector<double> node_dist;
  };
  PointField field_from_point(const Vec3& p) const;
  double eval_field(const PointField& field, const Vec3& q) const;

  // Snapped graph distance: gap(p) + d(node(p), node(q)) + gap(q).
  double between_points(const Vec3& p, const Vec3& q) const;

  // Nearest graph node and its distance; errors if the gap exceeds
  // 3x the mean mesh edge length.
  std::pair<std::uint32_t, double> snap_point(const Vec3& p) const;

  double mean_edge_length() const { return mean_edge_length_; }
  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t node_count() const { return positions_.size(); }
  const Vec3& node_position(std::uint32_t node) const { return positions_[node]; }
  int subdivision() const { return subdivision_; }

 private:
  std::vector<double> dijkstra(std::uint32_t source) const;

  int subdivision_;
  std::size_t vertex_count_;
  double mean_edge_length_;
  std::vector<Vec3> positions_;       // vertices first, then Steiner points
  std::vector<std::uint32_t> row_;    // CSR adjacency
  std::vector<std::uint32_t> col_;
  std::vector<double> weight_;
  std::unique_ptr<SpatialIndex> node_index_;
};

std::vector<double> edge_graph_geodesic(const TriangleMesh& mesh,
                                        std::uint32_t src_vertex, int subdivision);
double geodesic_between_points(const TriangleMesh& mesh, const Vec3& p,
                               const Vec3& q, int subdivision);

struct GeodesicDataset {
  std::vector<GeodesicSample> samples;
  std::size_t skipped_disconnected = 0;
};

// Per mesh: num_sources source vertices without replacement, each paired
// with num_dests destination vertices drawn with replacement. Disconnected
// pairs are skipped and counted.
GeodesicDataset build_geodesic_dataset(const std::vector<TriangleMesh>& meshes,
                                       std::size_t num_sources,
                                       std::size_t num_dests, std::uint64_t seed,
                                       int subdivision = 1);

// Same vertex pairs on every mesh: requires a shared vertex count, samples
// the pair list once, and drops a pair everywhere if it is disconnected on
// any mesh. Every shape then holds the same number of samples in the same
// pair order, so sample t of two shapes is the same vertex pair.
GeodesicDataset build_shared_geodesic_dataset(
    const std::vector<TriangleMesh>& meshes, std::size_t num_sources,
    std::size_t num_dests, std::uint64_t seed, int subdivision = 1);

void apply_gt_scaling(std::vector<GeodesicSample>& samples, double factor = 1.42);

struct EvalStats {
  double scale = 0.0;  // 100 / mean(gt)
  std::vector<double> gt_scaled;
  std::vector<double> pred_scaled;
  double mean_l1 = 0.0;
  double median_l1 = 0.0;
};

// Rescales so the ground truth has mean 100, then reports L1 error stats.
EvalStats normalize_for_eval(const std::vector<double>& gt,
                             const std::vector<double>& pred);

}  // namespace litege
