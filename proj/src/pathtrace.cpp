#include "litege/pathtrace.hpp"

#include "litege/error.hpp"

namespace litege {

double default_eta(std::size_t point_count) {
  if (point_count <= 1000) return 0.66;
  if (point_count <= 8000) return 0.35;
  return 0.25;
}

std::string to_string(TraceStop reason) {
  switch (reason) {
    case TraceStop::converged: return "converged";
    case TraceStop::stalled: return "stalled";
    case TraceStop::max_iters: return "max_iters";
  }
  fail_invalid("trace: unknown stop reason");
}

TracedPath trace(const Vec3& src, const Vec3& dst, GeodesicNet& net,
                 const Eigen::VectorXd& descriptor, const CoordStats& stats,
                 const SpatialIndex& shape_index, const TraceConfig& config) {
  if (!(config.eta > 0.0)) fail_invalid("trace: eta must be positive");
  if (!(config.eps >= 0.0)) fail_invalid("trace: eps must be non-negative");
  if (config.max_iters == 0) fail_invalid("trace: max_iters must be positive");
  if (config.patience == 0) fail_invalid("trace: patience must be positive");
  if (shape_index.size() == 0) fail_invalid("trace: empty shape index");

  const Vec3 s = shape_index.point(shape_index.nearest_one(src).first);
  Vec3 cur = shape_index.point(shape_index.nearest_one(dst).first);

  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  auto value = [&](const Vec3& p) {
    return net.forward(descriptor, descriptor, s, p, stats, RunMode::eval)[0];
  };

  TracedPath path;
  path.points.push_back(cur);
  path.distances.push_back(value(cur));
  path.reason = TraceStop::max_iters;
  if (path.distances[0] < config.eps) {
    path.reason = TraceStop::converged;
    return path;
  }

  std::size_t since_best = 0;
  while (path.points.size() - 1 < config.max_iters) {
    // The last forward evaluated the current point, so the cached state is
    // positioned for its gradient.
    const Vec3 grad = net.backward(one).d_dst.col(0);
    if (grad.squaredNorm() == 0.0) {
      path.reason = TraceStop::stalled;
      return path;
    }
    cur = shape_index.point(
        shape_index.nearest_one(cur - config.eta * grad).first);
    const double d = value(cur);
    path.points.push_back(cur);
    path.distances.push_back(d);
    if (d < path.distances[path.best_index]) {
      path.best_index = path.points.size() - 1;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (d < config.eps) {
      path.reason = TraceStop::converged;
      return path;
    }
    if (since_best >= config.patience) {
      path.reason = TraceStop::stalled;
      return path;
    }
  }
  return path;
}

TracedPath project_to_mesh_samples(const TracedPath& path,
                                   const SpatialIndex& dense_index) {
  if (path.points.empty()) fail_invalid("trace projection: empty path");
  if (dense_index.size() == 0) fail_invalid("trace projection: empty samples");
  TracedPath out;
  out.reason = path.reason;
  std::uint32_t last_id = 0;
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const std::uint32_t id = dense_index.nearest_one(path.points[i]).first;
    if (i > 0 && id == last_id) continue;
    out.points.push_back(dense_index.point(id));
    out.distances.push_back(path.distances[i]);
    last_id = id;
  }
  out.best_index = 0;
  for (std::size_t i = 1; i < out.distances.size(); ++i)
    if (out.distances[i] < out.distances[out.best_index]) out.best_index = i;
  return out;
}

}  // namespace litege
