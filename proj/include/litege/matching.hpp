#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "litege/geometry.hpp"
#include "litege/nn_models.hpp"
#include "litege/oracle.hpp"
#include "litege/spatial_index.hpp"

namespace litege {

// Coarse-to-fine candidate structure over a target point set. Tier i holds
// N_i point indices with N_1 < N_2 < ... < N_K, and every tier-i point stores
// its M_i nearest neighbors drawn from tier i+1, so a match query scores
// exactly N_1 + sum(M_i) candidates regardless of the full set size.
struct TierConfig {
  std::vector<std::uint32_t> tier_sizes;       // N_1..N_K, strictly increasing
  std::vector<std::uint32_t> neighbor_counts;  // M_1..M_{K-1}, M_i <= N_{i+1}
};

// Three-tier default: 60 coarse seeds, 650 mid refinements of the best seed,
// full set on the bottom. Evaluation budget 60 + 65 + 60 = 185.
TierConfig default_tier_config(std::uint32_t point_count);

std::size_t evaluation_budget(const TierConfig& config);

struct NNCache {
  TierConfig config;
  std::uint64_t seed = 0;
  std::uint32_t point_count = 0;
  bool farthest_point = false;
  // tiers[i]: global point indices of tier i, ascending for subsampled tiers.
  std::vector<std::vector<std::uint32_t>> tiers;
  // neighbors[i]: flat [N_i x M_i] positions into tiers[i+1], each row ordered
  // by (distance, index) from the corresponding tier-i point.
  std::vector<std::vector<std::uint32_t>> neighbors;
};

// Subsampling is uniform without replacement by default; farthest_point
// switches to greedy farthest-point coverage (seed then unused).
NNCache build_cache(const PointCloud& points, const TierConfig& config,
                    std::uint64_t seed, bool farthest_point = false);

void validate_cache(const NNCache& cache, std::uint32_t point_count);

void save_cache(const std::string& path, const NNCache& cache);
NNCache load_cache(const std::string& path);

struct MatchResult {
  Vec3 query = Vec3::Zero();
  std::uint32_t matched_index = 0;
  Vec3 matched_position = Vec3::Zero();
  std::vector<std::uint32_t> tier_argmin;  // global index of each tier's best
  std::size_t evaluations = 0;
};

// Scores a batch of candidate target points against one query. ids are global
// indices into the cached point set; out receives one score per id. Each id
// counts as one evaluation whether or not the implementation batches.
using ScoreFn = std::function<void(
    const Vec3& query, const std::vector<std::uint32_t>& ids,
    std::vector<double>& out)>;

// Descends the tiers: score tier 1 in full, then score the cached neighbor
// list of the current best until the bottom tier. Ties take the lowest global
// index, so results are unique regardless of candidate order.
MatchResult match_point(const Vec3& query, const PointCloud& points,
                        const NNCache& cache, const ScoreFn& scorer);

std::vector<MatchResult> match_batch(const std::vector<Vec3>& queries,
                                     const PointCloud& points,
                                     const NNCache& cache,
                                     const ScoreFn& scorer);

// Shared state for matcher-network scoring: shape embeddings and per-point
// target embeddings are computed once, each query point once, and only the
// pair head runs per candidate list. Identical candidate lists always score
// identically, so batch and sequential matching agree bit for bit.
class MatcherSession {
 public:
  MatcherSession(GeodesicNet& net, const CoordStats& stats,
                 const Eigen::VectorXd& descriptor_query,
                 const Eigen::VectorXd& descriptor_target,
                 const PointCloud& target_points);

  ScoreFn scorer();

 private:
  GeodesicNet& net_;
  CoordStats stats_;
  Eigen::MatrixXd shape_query_;    // width x 1
  Eigen::MatrixXd target_embed_;   // width x |target|
  PointCloud target_points_;
  Vec3 last_query_ = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
  Eigen::MatrixXd query_embed_;    // width x 1, cached per query point
};

// Correspondence error in descriptor units: 100x the surface geodesic
// distance between the matched point and the ground-truth point.
double geodesic_error(const GeodesicSolver& solver, const Vec3& matched,
                      const Vec3& truth);

// Area under fraction(error <= t) for t on a fixed 100-point grid spanning
// [0, threshold], trapezoid rule, normalized by threshold so the result lies
// in [0, 1]. Errors must be non-empty and threshold positive.
double area_under_curve(const std::vector<double>& errors, double threshold);

}  // namespace litege
