#include "litege/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "litege/prng.hpp"
#include "litege/spatial_index.hpp"

namespace litege {

PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n,
                          std::uint64_t seed,
                          std::vector<std::uint32_t>* face_ids) {
  if (n == 0) fail_invalid("sample_surface: n must be positive");
  validate_mesh(mesh);
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    total += triangle_area(mesh.vertices[face[0]], mesh.vertices[face[1]],
                           mesh.vertices[face[2]]);
    cumulative[f] = total;
  }
  if (total <= 0.0) fail_invalid("sample_surface: mesh has zero surface area");

  Rng rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n);
  if (face_ids) {
    face_ids->clear();
    face_ids->reserve(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.next_double() * total;
    std::size_t f = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) -
        cumulative.begin());
    if (f >= mesh.faces.size()) f = mesh.faces.size() - 1;
    const auto& face = mesh.faces[f];
    double su = std::sqrt(rng.next_double());
    double v = rng.next_double();
    double b0 = 1.0 - su;
    double b1 = su * (1.0 - v);
    double b2 = su * v;
    cloud.points.push_back(b0 * mesh.vertices[face[0]] +
                           b1 * mesh.vertices[face[1]] +
                           b2 * mesh.vertices[face[2]]);
    if (face_ids) face_ids->push_back(static_cast<std::uint32_t>(f));
  }
  return cloud;
}

namespace {

struct CrowdProfile {
  double d1 = std::numeric_limits<double>::infinity();  // squared
  double d2 = std::numeric_limits<double>::infinity();  // squared
  std::uint32_t n1 = 0;
  std::uint32_t n2 = 0;
};

// Two nearest alive points to i, by (squared distance, index).
CrowdProfile recompute_profile(const std::vector<Vec3>& pts,
                               const std::vector<char>& alive,
                               std::uint32_t i) {
  CrowdProfile p;
  std::pair<double, std::uint32_t> best1{p.d1, 0}, best2{p.d2, 0};
  for (std::uint32_t j = 0; j < pts.size(); ++j) {
    if (!alive[j] || j == i) continue;
    std::pair<double, std::uint32_t> cand{(pts[j] - pts[i]).squaredNorm(), j};
    if (cand < best1) {
      best2 = best1;
      best1 = cand;
    } else if (cand < best2) {
      best2 = cand;
    }
  }
  p.d1 = best1.first;
  p.n1 = best1.second;
  p.d2 = best2.first;
  p.n2 = best2.second;
  return p;
}

}  // namespace

std::vector<std::uint32_t> poisson_disk_indices(const PointCloud& points,
                                                std::size_t k,
                                                std::uint64_t /*seed*/) {
  const std::vector<Vec3>& pts = points.points;
  std::size_t n = pts.size();
  if (k > n)
    fail_invalid("poisson_disk_sample: k=" + std::to_string(k) +
                 " exceeds point count " + std::to_string(n));
  std::vector<std::uint32_t> result;
  if (k == n) {
    result.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) result[i] = i;
    return result;
  }
  if (k == 0) return result;

  std::vector<char> alive(n, 1);
  std::vector<CrowdProfile> profiles(n);
  {
    SpatialIndex index(pts);
    std::size_t m = std::min<std::size_t>(3, n);
    std::vector<std::uint32_t> idx;
    std::vector<double> dist;
    for (std::uint32_t i = 0; i < n; ++i) {
      index.nearest(pts[i], m, idx, dist);
      CrowdProfile p;
      int got = 0;
      for (std::size_t t = 0; t < m && got < 2; ++t) {
        if (idx[t] == i) continue;
        double dsq = (pts[idx[t]] - pts[i]).squaredNorm();
        if (got == 0) {
          p.d1 = dsq;
          p.n1 = idx[t];
        } else {
          p.d2 = dsq;
          p.n2 = idx[t];
        }
        ++got;
      }
      // Self may be absent from the m results under exact duplicates; the
      // loop above then filled both slots correctly anyway.
      profiles[i] = p;
    }
  }

  std::size_t remaining = n;
  while (remaining > k) {
    std::uint32_t victim = 0;
    std::array<double, 2> best{std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity()};
    bool found = false;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      const CrowdProfile& p = profiles[i];
      if (!found || p.d1 < best[0] ||
          (p.d1 == best[0] && (p.d2 < best[1] || (p.d2 == best[1] && i < victim)))) {
        best = {p.d1, p.d2};
        victim = i;
        found = true;
      }
    }
    alive[victim] = 0;
    --remaining;
    if (remaining <= 1) continue;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      if (profiles[i].n1 == victim || profiles[i].n2 == victim)
        profiles[i] = recompute_profile(pts, alive, i);
    }
  }

  for (std::uint32_t i = 0; i < n; ++i)
    if (alive[i]) result.push_back(i);
  return result;
}

PointCloud poisson_disk_sample(const PointCloud& points, std::size_t k,
                               std::uint64_t seed) {
  std::vector<std::uint32_t> keep = poisson_disk_indices(points, k, seed);
  PointCloud out;
  out.points.reserve(keep.size());
  for (std::uint32_t i : keep) out.points.push_back(points.points[i]);
  return out;
}

double mean_nn_distance(const PointCloud& points) {
  if (points.points.size() < 2)
    fail_invalid("mean_nn_distance: need at least 2 points");
  SpatialIndex index(points);
  std::vector<std::uint32_t> idx;
  std::vector<double> dist;
  double sum = 0.0;
  for (std::size_t i = 0; i < points.points.size(); ++i) {
    index.nearest(points.points[i], 2, idx, dist);
    sum += idx[0] == i ? dist[1] : dist[0];
  }
  return sum / static_cast<double>(points.points.size());
}

}  // namespace litege
