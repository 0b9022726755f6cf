#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "litege/geometry.hpp"
#include "litege/nn_models.hpp"
#include "litege/spatial_index.hpp"

namespace litege {

struct TraceConfig {
  double eta = 0.35;       // gradient step size, > 0
  double eps = 0.05;       // convergence threshold on predicted distance, >= 0
  std::size_t max_iters = 500;
  std::size_t patience = 5;  // stop after this many steps without a new best
};

// Step size tuned by shape resolution: sparse clouds need longer steps to
// escape their own sample spacing.
double default_eta(std::size_t point_count);

enum class TraceStop { converged, stalled, max_iters };
std::string to_string(TraceStop reason);

struct TracedPath {
  std::vector<Vec3> points;      // every projected point, start included
  std::vector<double> distances; // predicted distance to source per point
  TraceStop reason = TraceStop::max_iters;
  std::size_t best_index = 0;    // first index attaining the minimum distance
};

// Walks from dst toward src by projected gradient descent on the predicted
// geodesic distance: d <- project(d - eta * grad_d G(src, d)), where project
// snaps to the nearest point of shape_index. Both endpoints are snapped to
// the shape first. Records every projected point with its predicted distance.
TracedPath trace(const Vec3& src, const Vec3& dst, GeodesicNet& net,
                 const Eigen::VectorXd& descriptor, const CoordStats& stats,
                 const SpatialIndex& shape_index, const TraceConfig& config);

// Snaps each path point to its nearest dense sample and collapses runs of
// consecutive duplicates, keeping the first of each run.
TracedPath project_to_mesh_samples(const TracedPath& path,
                                   const SpatialIndex& dense_index);

}  // namespace litege
