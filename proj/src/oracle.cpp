#include "litege/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

#include "litege/prng.hpp"

namespace litege {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

GeodesicSolver::GeodesicSolver(const TriangleMesh& mesh, int subdivision)
    : subdivision_(subdivision), vertex_count_(mesh.vertices.size()) {
  validate_mesh(mesh);
  if (subdivision < 0 || subdivision > 2)
    fail_invalid("geodesic solver: subdivision level must be 0, 1, or 2");

  // Unique undirected edges, ordered by (min, max) vertex pair.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> edge_ids;
  for (const auto& f : mesh.faces) {
    for (int c = 0; c < 3; ++c) {
      std::uint32_t a = f[c], b = f[(c + 1) % 3];
      auto key = std::make_pair(std::min(a, b), std::max(a, b));
      edge_ids.emplace(key, 0);
    }
  }
  std::uint32_t next_id = 0;
  double edge_total = 0;
  for (auto& [key, id] : edge_ids) {
    id = next_id++;
    edge_total += (mesh.vertices[key.first] - mesh.vertices[key.second]).norm();
  }
  mean_edge_length_ = edge_total / static_cast<double>(edge_ids.size());

  // Dyadic placement: level L puts 2^L - 1 points per edge, so each level's
  // node set contains the previous one and refinement never lengthens paths.
  const std::uint32_t s = (1u << subdivision) - 1;
  positions_ = mesh.vertices;
  positions_.resize(vertex_count_ + edge_ids.size() * s);
  for (const auto& [key, id] : edge_ids) {
    const Vec3& a = mesh.vertices[key.first];
    const Vec3& b = mesh.vertices[key.second];
    for (std::uint32_t j = 0; j < s; ++j) {
      double t = double(j + 1) / double(s + 1);
      positions_[vertex_count_ + std::size_t{id} * s + j] = a + (b - a) * t;
    }
  }

  auto steiner_node = [&](std::uint32_t edge, std::uint32_t j) {
    return static_cast<std::uint32_t>(vertex_count_ + std::size_t{edge} * s + j);
  };

  std::vector<std::pair<std::uint32_t, std::uint32_t>> arcs;
  auto add_edge = [&](std::uint32_t u, std::uint32_t v) {
    arcs.emplace_back(u, v);
    arcs.emplace_back(v, u);
  };

  // Chains along each mesh edge through its Steiner points.
  for (const auto& [key, id] : edge_ids) {
    std::uint32_t prev = key.first;
    for (std::uint32_t j = 0; j < s; ++j) {
      add_edge(prev, steiner_node(id, j));
      prev = steiner_node(id, j);
    }
    add_edge(prev, key.second);
  }

  // Within each face: all boundary-node pairs not lying on a common mesh edge.
  if (s > 0) {
    for (const auto& f : mesh.faces) {
      struct BoundaryNode {
        std::uint32_t node;
        std::uint32_t e0, e1;  // incident face edges (e1 == e0 for Steiner)
      };
      std::uint32_t face_edges[3];
      for (int c = 0; c < 3; ++c) {
        std::uint32_t a = f[c], b = f[(c + 1) % 3];
        face_edges[c] =
            edge_ids.at(std::make_pair(std::min(a, b), std::max(a, b)));
      }
      std::vector<BoundaryNode> nodes;
      for (int c = 0; c < 3; ++c)
        nodes.push_back({f[c], face_edges[c], face_edges[(c + 2) % 3]});
      for (int c = 0; c < 3; ++c)
        for (std::uint32_t j = 0; j < s; ++j)
          nodes.push_back({steiner_node(face_edges[c], j), face_edges[c],
                           face_edges[c]});
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
          bool same_edge = nodes[i].e0 == nodes[j].e0 || nodes[i].e0 == nodes[j].e1 ||
                           nodes[i].e1 == nodes[j].e0 || nodes[i].e1 == nodes[j].e1;
          if (!same_edge) add_edge(nodes[i].node, nodes[j].node);
        }
      }
    }
  }

  row_.assign(positions_.size() + 1, 0);
  for (const auto& [u, v] : arcs) ++row_[u + 1];
  for (std::size_t i = 1; i < row_.size(); ++i) row_[i] += row_[i - 1];
  col_.resize(arcs.size());
  weight_.resize(arcs.size());
  std::vector<std::uint32_t> fill(positions_.size(), 0);
  for (const auto& [u, v] : arcs) {
    std::uint32_t at = row_[u] + fill[u]++;
    col_[at] = v;
    weight_[at] = (positions_[u] - positions_[v]).norm();
  }

  node_index_ = std::make_unique<SpatialIndex>(positions_);
}

std::vector<double> GeodesicSolver::dijkstra(std::uint32_t source) const {
  std::vector<double> dist(positions_.size(), kInf);
  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  dist[source] = 0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (std::uint32_t at = row_[u]; at < row_[u + 1]; ++at) {
      double nd = d + weight_[at];
      if (nd < dist[col_[at]]) {
        dist[col_[at]] = nd;
        heap.emplace(nd, col_[at]);
      }
    }
  }
  return dist;
}

std::vector<double> GeodesicSolver::distances_from_node(std::uint32_t node) const {
  if (node >= positions_.size()) fail_invalid("geodesic solver: node out of range");
  return dijkstra(node);
}

std::vector<double> GeodesicSolver::distances_from_vertex(std::uint32_t src_vertex) const {
  if (src_vertex >= vertex_count_)
    fail_invalid("geodesic solver: vertex out of range");
  std::vector<double> dist = dijkstra(src_vertex);
  dist.resize(vertex_count_);
  return dist;
}

std::pair<std::uint32_t, double> GeodesicSolver::snap_point(const Vec3& p) const {
  auto [node, gap] = node_index_->nearest_one(p);
  if (gap > 3.0 * mean_edge_length_)
    fail_invalid("geodesic query point lies " + std::to_string(gap) +
                 " from the surface (limit 3x mean edge length)");
  return {node, gap};
}

GeodesicSolver::PointField GeodesicSolver::field_from_point(const Vec3& p) const {
  PointField field;
  std::tie(field.node, field.gap) = snap_point(p);
  field.node_dist = dijkstra(field.node);
  return field;
}

double GeodesicSolver::eval_field(const PointField& field, const Vec3& q) const {
  auto [node, gap] = snap_point(q);
  return field.gap + field.node_dist[node] + gap;
}

double GeodesicSolver::between_points(const Vec3& p, const Vec3& q) const {
  return eval_field(field_from_point(p), q);
}

std::vector<double> edge_graph_geodesic(const TriangleMesh& mesh,
                                        std::uint32_t src_vertex, int subdivision) {
  return GeodesicSolver(mesh, subdivision).distances_from_vertex(src_vertex);
}

double geodesic_between_points(const TriangleMesh& mesh, const Vec3& p,
                               const Vec3& q, int subdivision) {
  return GeodesicSolver(mesh, subdivision).between_points(p, q);
}

GeodesicDataset build_geodesic_dataset(const std::vector<TriangleMesh>& meshes,
                                       std::size_t num_sources,
                                       std::size_t num_dests, std::uint64_t seed,
                                       int subdivision) {
  GeodesicDataset out;
  Rng root(seed);
  for (std::size_t m = 0; m < meshes.size(); ++m) {
    const TriangleMesh& mesh = meshes[m];
    auto v = static_cast<std::uint32_t>(mesh.vertices.size());
    if (num_sources > v)
      fail_invalid("geodesic dataset: mesh " + std::to_string(m) + " has " +
                   std::to_string(v) + " vertices, fewer than " +
                   std::to_string(num_sources) + " sources");
    GeodesicSolver solver(mesh, subdivision);
    Rng rng = root.split(m);
    std::vector<std::uint32_t> sources =
        rng.sample_without_replacement(v, static_cast<std::uint32_t>(num_sources));
    for (std::uint32_t src : sources) {
      std::vector<double> dist = solver.distances_from_vertex(src);
      for (std::size_t j = 0; j < num_dests; ++j) {
        std::uint32_t dst = rng.next_below(v);
        if (!std::isfinite(dist[dst])) {
          ++out.skipped_disconnected;
          continue;
        }
        out.samples.push_back({static_cast<std::uint32_t>(m), mesh.vertices[src],
                               mesh.vertices[dst], dist[dst]});
      }
    }
  }
  return out;
}

GeodesicDataset build_shared_geodesic_dataset(
    const std::vector<TriangleMesh>& meshes, std::size_t num_sources,
    std::size_t num_dests, std::uint64_t seed, int subdivision) {
  if (meshes.empty()) fail_invalid("geodesic dataset: no meshes");
  const auto v = static_cast<std::uint32_t>(meshes[0].vertices.size());
  for (std::size_t m = 1; m < meshes.size(); ++m)
    if (meshes[m].vertices.size() != v)
      fail_invalid("geodesic dataset: shared pairs need equal vertex counts, "
                   "mesh " + std::to_string(m) + " differs");
  if (num_sources > v)
    fail_invalid("geodesic dataset: fewer than " +
                 std::to_string(num_sources) + " vertices");

  Rng rng(seed);
  std::vector<std::uint32_t> sources =
      rng.sample_without_replacement(v, static_cast<std::uint32_t>(num_sources));
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(num_sources * num_dests);
  for (std::uint32_t src : sources)
    for (std::size_t j = 0; j < num_dests; ++j)
      pairs.push_back({src, rng.next_below(v)});

  // All distances first, then pairs finite on every mesh.
  std::vector<std::vector<double>> dist(meshes.size());
  for (std::size_t m = 0; m < meshes.size(); ++m) {
    GeodesicSolver solver(meshes[m], subdivision);
    dist[m].reserve(pairs.size());
    std::uint32_t last_src = v;
    std::vector<double> field;
    for (const auto& [src, dst] : pairs) {
      if (src != last_src) {
        field = solver.distances_from_vertex(src);
        last_src = src;
      }
      dist[m].push_back(field[dst]);
    }
  }

  GeodesicDataset out;
  std::vector<std::size_t> kept;
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    bool finite = true;
    for (std::size_t m = 0; m < meshes.size() && finite; ++m)
      finite = std::isfinite(dist[m][t]);
    if (finite)
      kept.push_back(t);
    else
      ++out.skipped_disconnected;
  }
  for (std::size_t m = 0; m < meshes.size(); ++m)
    for (std::size_t t : kept)
      out.samples.push_back({static_cast<std::uint32_t>(m),
                             meshes[m].vertices[pairs[t].first],
                             meshes[m].vertices[pairs[t].second],
                             dist[m][t]});
  return out;
}

void apply_gt_scaling(std::vector<GeodesicSample>& samples, double factor) {
  if (!(factor > 0)) fail_invalid("gt scaling factor must be positive");
  for (GeodesicSample& s : samples) s.distance *= factor;
}

EvalStats normalize_for_eval(const std::vector<double>& gt,
                             const std::vector<double>& pred) {
  if (gt.empty()) fail_invalid("normalize_for_eval: empty ground truth");
  if (gt.size() != pred.size())
    fail_invalid("normalize_for_eval: gt/pred length mismatch");
  double mean = 0;
  for (double g : gt) mean += g;
  mean /= static_cast<double>(gt.size());
  if (!(mean > 0)) fail_invalid("normalize_for_eval: ground-truth mean must be positive");

  EvalStats stats;
  stats.scale = 100.0 / mean;
  stats.gt_scaled.reserve(gt.size());
  stats.pred_scaled.reserve(gt.size());
  std::vector<double> errors;
  errors.reserve(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    stats.gt_scaled.push_back(gt[i] * stats.scale);
    stats.pred_scaled.push_back(pred[i] * stats.scale);
    errors.push_back(std::abs(stats.gt_scaled.back() - stats.pred_scaled.back()));
    stats.mean_l1 += errors.back();
  }
  stats.mean_l1 /= static_cast<double>(errors.size());
  std::sort(errors.begin(), errors.end());
  std::size_t mid = errors.size() / 2;
  stats.median_l1 = (errors.size() % 2) ? errors[mid]
                                        : (errors[mid - 1] + errors[mid]) / 2.0;
  return stats;
}

}  // namespace litege
