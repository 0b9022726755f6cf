#include "litege/matching.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "litege/binio.hpp"
#include "litege/error.hpp"
#include "litege/fileio.hpp"
#include "litege/prng.hpp"

namespace litege {
namespace {

constexpr std::uint32_t kCacheVersion = 1;

void validate_config(const TierConfig& config, std::uint32_t point_count) {
  const std::size_t k = config.tier_sizes.size();
  if (k == 0) fail_invalid("tier config: need at least one tier");
  if (config.neighbor_counts.size() + 1 != k)
    fail_invalid("tier config: need exactly one neighbor count per tier edge");
  for (std::size_t i = 0; i < k; ++i) {
    if (config.tier_sizes[i] == 0)
      fail_invalid("tier config: tier sizes must be positive");
    if (i > 0 && config.tier_sizes[i] <= config.tier_sizes[i - 1])
      fail_invalid("tier config: tier sizes must be strictly increasing");
  }
  if (config.tier_sizes.back() > point_count)
    fail_invalid("tier config: largest tier exceeds point count " +
                 std::to_string(point_count));
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (config.neighbor_counts[i] == 0)
      fail_invalid("tier config: neighbor counts must be positive");
    if (config.neighbor_counts[i] > config.tier_sizes[i + 1])
      fail_invalid("tier config: neighbor count exceeds next tier size");
  }
}

// Greedy farthest-point coverage: start at index 0, then repeatedly add the
// point with the largest distance to the chosen set, ties to the lowest index.
std::vector<std::uint32_t> farthest_point_indices(const PointCloud& cloud,
                                                  std::uint32_t k) {
  const std::vector<Vec3>& pts = cloud.points;
  const std::uint32_t n = static_cast<std::uint32_t>(pts.size());
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::uint32_t> chosen;
  chosen.reserve(k);
  std::uint32_t next = 0;
  for (std::uint32_t step = 0; step < k; ++step) {
    chosen.push_back(next);
    const Vec3 p = pts[next];
    std::uint32_t best = 0;
    double best_dist = -1.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      dist[i] = std::min(dist[i], (pts[i] - p).norm());
      if (dist[i] > best_dist) {
        best_dist = dist[i];
        best = i;
      }
    }
    next = best;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

TierConfig default_tier_config(std::uint32_t point_count) {
  if (point_count <= 650)
    fail_invalid("default tier config needs more than 650 points, got " +
                 std::to_string(point_count));
  TierConfig config;
  config.tier_sizes = {60, 650, point_count};
  config.neighbor_counts = {65, 60};
  return config;
}

std::size_t evaluation_budget(const TierConfig& config) {
  if (config.tier_sizes.empty()) fail_invalid("tier config: empty");
  std::size_t total = config.tier_sizes.front();
  for (std::uint32_t m : config.neighbor_counts) total += m;
  return total;
}

NNCache build_cache(const PointCloud& points, const TierConfig& config,
                    std::uint64_t seed, bool farthest_point) {
  const std::uint32_t n = static_cast<std::uint32_t>(points.points.size());
  validate_config(config, n);
  const std::size_t k = config.tier_sizes.size();

  NNCache cache;
  cache.config = config;
  cache.seed = seed;
  cache.point_count = n;
  cache.farthest_point = farthest_point;
  cache.tiers.resize(k);
  Rng rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint32_t size = config.tier_sizes[i];
    if (size == n) {
      cache.tiers[i].resize(n);
      std::iota(cache.tiers[i].begin(), cache.tiers[i].end(), 0u);
    } else if (farthest_point) {
      cache.tiers[i] = farthest_point_indices(points, size);
    } else {
      cache.tiers[i] =
          rng.split(i + 1).sample_without_replacement(n, size);
    }
  }

  cache.neighbors.resize(k > 0 ? k - 1 : 0);
  std::vector<std::uint32_t> nn_ids;
  std::vector<double> nn_dists;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const std::vector<std::uint32_t>& next = cache.tiers[i + 1];
    std::vector<Vec3> next_points(next.size());
    for (std::size_t j = 0; j < next.size(); ++j)
      next_points[j] = points.points[next[j]];
    SpatialIndex index(std::move(next_points));
    const std::uint32_t m = config.neighbor_counts[i];
    std::vector<std::uint32_t>& flat = cache.neighbors[i];
    flat.reserve(static_cast<std::size_t>(cache.tiers[i].size()) * m);
    for (std::uint32_t id : cache.tiers[i]) {
      index.nearest(points.points[id], m, nn_ids, nn_dists);
      flat.insert(flat.end(), nn_ids.begin(), nn_ids.end());
    }
  }
  return cache;
}

void validate_cache(const NNCache& cache, std::uint32_t point_count) {
  if (cache.point_count != point_count)
    fail_invalid("cache: built for " + std::to_string(cache.point_count) +
                 " points, shape has " + std::to_string(point_count));
  validate_config(cache.config, point_count);
  const std::size_t k = cache.config.tier_sizes.size();
  if (cache.tiers.size() != k) fail_invalid("cache: tier count mismatch");
  if (cache.neighbors.size() + 1 != k)
    fail_invalid("cache: neighbor table count mismatch");
  for (std::size_t i = 0; i < k; ++i) {
    if (cache.tiers[i].size() != cache.config.tier_sizes[i])
      fail_invalid("cache: tier " + std::to_string(i + 1) + " size mismatch");
    for (std::uint32_t id : cache.tiers[i])
      if (id >= point_count) fail_invalid("cache: tier index out of range");
  }
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const std::size_t expect =
        static_cast<std::size_t>(cache.config.tier_sizes[i]) *
        cache.config.neighbor_counts[i];
    if (cache.neighbors[i].size() != expect)
      fail_invalid("cache: neighbor table " + std::to_string(i + 1) +
                   " size mismatch");
    for (std::uint32_t pos : cache.neighbors[i])
      if (pos >= cache.config.tier_sizes[i + 1])
        fail_invalid("cache: neighbor position out of range");
  }
}

void save_cache(const std::string& path, const NNCache& cache) {
  validate_cache(cache, cache.point_count);
  ByteWriter w;
  w.magic("NNC1");
  w.u32(kCacheVersion);
  w.u64(cache.seed);
  w.u32(cache.point_count);
  w.u8(cache.farthest_point ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(cache.config.tier_sizes.size()));
  for (std::uint32_t s : cache.config.tier_sizes) w.u32(s);
  for (std::uint32_t m : cache.config.neighbor_counts) w.u32(m);
  for (const std::vector<std::uint32_t>& tier : cache.tiers)
    for (std::uint32_t id : tier) w.u32(id);
  for (const std::vector<std::uint32_t>& flat : cache.neighbors)
    for (std::uint32_t pos : flat) w.u32(pos);
  write_file_atomic(path, w.str());
}

NNCache load_cache(const std::string& path) {
  const std::string data = read_file(path);
  ByteReader r(data, path);
  r.magic("NNC1");
  const std::uint32_t version = r.u32();
  if (version != kCacheVersion)
    fail_invalid(path + ": unsupported cache version " +
                 std::to_string(version));
  NNCache cache;
  cache.seed = r.u64();
  cache.point_count = r.u32();
  cache.farthest_point = r.u8() != 0;
  const std::uint32_t k = r.u32();
  if (k == 0 || k > 16) fail_invalid(path + ": implausible tier count");
  cache.config.tier_sizes.resize(k);
  for (std::uint32_t& s : cache.config.tier_sizes) s = r.u32();
  cache.config.neighbor_counts.resize(k - 1);
  for (std::uint32_t& m : cache.config.neighbor_counts) m = r.u32();
  validate_config(cache.config, cache.point_count);
  cache.tiers.resize(k);
  for (std::uint32_t i = 0; i < k; ++i) {
    cache.tiers[i].resize(cache.config.tier_sizes[i]);
    for (std::uint32_t& id : cache.tiers[i]) id = r.u32();
  }
  cache.neighbors.resize(k - 1);
  for (std::uint32_t i = 0; i + 1 < k; ++i) {
    cache.neighbors[i].resize(
        static_cast<std::size_t>(cache.config.tier_sizes[i]) *
        cache.config.neighbor_counts[i]);
    for (std::uint32_t& pos : cache.neighbors[i]) pos = r.u32();
  }
  r.expect_done();
  validate_cache(cache, cache.point_count);
  return cache;
}

MatchResult match_point(const Vec3& query, const PointCloud& points,
                        const NNCache& cache, const ScoreFn& scorer) {
  validate_cache(cache, static_cast<std::uint32_t>(points.points.size()));
  const std::size_t k = cache.tiers.size();

  MatchResult result;
  result.query = query;
  result.tier_argmin.reserve(k);

  // Candidate positions within the current tier; tier 1 starts in full.
  std::vector<std::uint32_t> positions(cache.tiers[0].size());
  std::iota(positions.begin(), positions.end(), 0u);
  std::vector<std::uint32_t> ids;
  std::vector<double> scores;
  for (std::size_t i = 0; i < k; ++i) {
    ids.resize(positions.size());
    for (std::size_t j = 0; j < positions.size(); ++j)
      ids[j] = cache.tiers[i][positions[j]];
    scorer(query, ids, scores);
    if (scores.size() != ids.size())
      fail_invalid("match: scorer returned wrong count");
    result.evaluations += ids.size();

    std::size_t best = 0;
    for (std::size_t j = 1; j < ids.size(); ++j) {
      const bool better = scores[j] < scores[best] ||
                          (scores[j] == scores[best] && ids[j] < ids[best]);
      if (better) best = j;
    }
    result.tier_argmin.push_back(ids[best]);
    if (i + 1 < k) {
      const std::uint32_t m = cache.config.neighbor_counts[i];
      const std::size_t row =
          static_cast<std::size_t>(positions[best]) * m;
      positions.assign(cache.neighbors[i].begin() + row,
                       cache.neighbors[i].begin() + row + m);
    } else {
      result.matched_index = ids[best];
      result.matched_position = points.points[ids[best]];
    }
  }
  return result;
}

std::vector<MatchResult> match_batch(const std::vector<Vec3>& queries,
                                     const PointCloud& points,
                                     const NNCache& cache,
                                     const ScoreFn& scorer) {
  std::vector<MatchResult> results;
  results.reserve(queries.size());
  for (const Vec3& q : queries)
    results.push_back(match_point(q, points, cache, scorer));
  return results;
}

MatcherSession::MatcherSession(GeodesicNet& net, const CoordStats& stats,
                               const Eigen::VectorXd& descriptor_query,
                               const Eigen::VectorXd& descriptor_target,
                               const PointCloud& target_points)
    : net_(net), stats_(stats), target_points_(target_points) {
  const std::vector<Vec3>& pts = target_points.points;
  if (pts.empty()) fail_invalid("matcher session: no target points");
  shape_query_ = net_.shape_embedding(descriptor_query, RunMode::eval);
  const Eigen::MatrixXd shape_target =
      net_.shape_embedding(descriptor_target, RunMode::eval);
  Eigen::MatrixXd coords(3, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i)
    coords.col(static_cast<Eigen::Index>(i)) = pts[i];
  target_embed_ =
      net_.point_embedding(coords, shape_target, stats_, RunMode::eval);
}

ScoreFn MatcherSession::scorer() {
  return [this](const Vec3& query, const std::vector<std::uint32_t>& ids,
                std::vector<double>& out) {
    if (!(query.array() == last_query_.array()).all()) {
      Eigen::MatrixXd coord(3, 1);
      coord.col(0) = query;
      query_embed_ =
          net_.point_embedding(coord, shape_query_, stats_, RunMode::eval);
      last_query_ = query;
    }
    const Eigen::Index b = static_cast<Eigen::Index>(ids.size());
    if (b == 0) fail_invalid("matcher session: empty candidate list");
    Eigen::MatrixXd e_dst(query_embed_.rows(), b);
    Eigen::MatrixXd dst(3, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const std::uint32_t id = ids[static_cast<std::size_t>(j)];
      if (id >= target_points_.points.size())
        fail_invalid("matcher session: candidate index out of range");
      e_dst.col(j) = target_embed_.col(id);
      dst.col(j) = target_points_.points[id];
    }
    const Eigen::VectorXd vals =
        net_.pair_value(query_embed_.replicate(1, b), e_dst,
                        Eigen::MatrixXd(query).replicate(1, b), dst,
                        RunMode::eval);
    out.assign(vals.data(), vals.data() + b);
  };
}

double geodesic_error(const GeodesicSolver& solver, const Vec3& matched,
                      const Vec3& truth) {
  return 100.0 * solver.between_points(matched, truth);
}

double area_under_curve(const std::vector<double>& errors, double threshold) {
  if (errors.empty()) fail_invalid("auc: no errors given");
  if (!(threshold > 0.0)) fail_invalid("auc: threshold must be positive");
  constexpr int kGrid = 100;
  double area = 0.0;
  double prev_t = 0.0, prev_f = 0.0;
  for (int j = 0; j < kGrid; ++j) {
    const double t = threshold * j / (kGrid - 1);
    std::size_t hits = 0;
    for (double e : errors)
      if (e <= t) ++hits;
    const double f = static_cast<double>(hits) / errors.size();
    if (j > 0) area += 0.5 * (f + prev_f) * (t - prev_t);
    prev_t = t;
    prev_f = f;
  }
  return area / threshold;
}

}  // namespace litege
