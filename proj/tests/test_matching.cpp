#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <set>
#include <vector>

#include "litege/error.hpp"
#include "litege/fileio.hpp"
#include "litege/matching.hpp"
#include "litege/oracle.hpp"
#include "litege/prng.hpp"

#include "test_helpers.hpp"

using namespace litege;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  PointCloud cloud;
  Rng rng(seed);
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    cloud.points.push_back(
        {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
  return cloud;
}

ScoreFn euclidean_scorer_for(const PointCloud& cloud) {
  return [&cloud](const Vec3& query, const std::vector<std::uint32_t>& ids,
                  std::vector<double>& out) {
    out.resize(ids.size());
    for (std::size_t j = 0; j < ids.size(); ++j)
      out[j] = (cloud.points[ids[j]] - query).norm();
  };
}

std::uint32_t brute_argmin(const Vec3& query, const PointCloud& cloud) {
  std::uint32_t best = 0;
  double best_d = (cloud.points[0] - query).norm();
  for (std::uint32_t i = 1; i < cloud.points.size(); ++i) {
    const double d = (cloud.points[i] - query).norm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

bool same_result(const MatchResult& a, const MatchResult& b) {
  return a.matched_index == b.matched_index &&
         (a.matched_position.array() == b.matched_position.array()).all() &&
         a.tier_argmin == b.tier_argmin && a.evaluations == b.evaluations &&
         (a.query.array() == b.query.array()).all();
}

}  // namespace

TEST_CASE("default tier config uses the 60/650/full layout") {
  const TierConfig config = default_tier_config(5000);
  CHECK(config.tier_sizes == std::vector<std::uint32_t>{60, 650, 5000});
  CHECK(config.neighbor_counts == std::vector<std::uint32_t>{65, 60});
  CHECK(evaluation_budget(config) == 185);
  CHECK_THROWS_AS(default_tier_config(650), Error);
}

TEST_CASE("cache construction rejects malformed tier configs") {
  const PointCloud cloud = random_cloud(100, 7);
  CHECK_THROWS_AS(build_cache(cloud, {{}, {}}, 1), Error);
  CHECK_THROWS_AS(build_cache(cloud, {{10, 10}, {5}}, 1),
                  Error);
  CHECK_THROWS_AS(build_cache(cloud, {{20, 10}, {5}}, 1),
                  Error);
  CHECK_THROWS_AS(build_cache(cloud, {{10, 101}, {5}}, 1),
                  Error);
  CHECK_THROWS_AS(build_cache(cloud, {{10, 50}, {51}}, 1),
                  Error);
  CHECK_THROWS_AS(build_cache(cloud, {{10, 50}, {0}}, 1),
                  Error);
  CHECK_THROWS_AS(build_cache(cloud, {{10, 50}, {5, 5}}, 1),
                  Error);
  CHECK_THROWS_AS(build_cache(cloud, {{0, 50}, {5}}, 1), Error);
}

TEST_CASE("cache tiers are unique, in range, and full on the bottom") {
  const PointCloud cloud = random_cloud(800, 11);
  const NNCache cache = build_cache(cloud, {{30, 200, 800}, {40, 25}}, 5);
  REQUIRE(cache.tiers.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& tier = cache.tiers[i];
    CHECK(tier.size() == cache.config.tier_sizes[i]);
    CHECK(std::is_sorted(tier.begin(), tier.end()));
    CHECK(std::adjacent_find(tier.begin(), tier.end()) == tier.end());
    CHECK(tier.back() < 800);
  }
  for (std::uint32_t i = 0; i < 800; ++i) CHECK(cache.tiers[2][i] == i);
  validate_cache(cache, 800);
  CHECK_THROWS_AS(validate_cache(cache, 801), Error);
}

TEST_CASE("cached neighbor rows match brute-force nearest neighbors") {
  const PointCloud cloud = random_cloud(300, 13);
  const NNCache cache = build_cache(cloud, {{20, 90, 300}, {25, 30}}, 9);
  for (std::size_t level = 0; level < 2; ++level) {
    const std::uint32_t m = cache.config.neighbor_counts[level];
    const auto& next = cache.tiers[level + 1];
    for (std::size_t row = 0; row < cache.tiers[level].size(); ++row) {
      const Vec3 p = cloud.points[cache.tiers[level][row]];
      // Brute-force m nearest by (distance, position) over the next tier.
      std::vector<std::pair<double, std::uint32_t>> all;
      for (std::uint32_t pos = 0; pos < next.size(); ++pos)
        all.push_back({(cloud.points[next[pos]] - p).norm(), pos});
      std::sort(all.begin(), all.end());
      for (std::uint32_t j = 0; j < m; ++j)
        CHECK(cache.neighbors[level][row * m + j] == all[j].second);
    }
  }
}

TEST_CASE("single-tier matching equals the brute-force global argmin") {
  const PointCloud cloud = random_cloud(400, 17);
  const NNCache cache = build_cache(cloud, {{400}, {}}, 1);
  const ScoreFn scorer = euclidean_scorer_for(cloud);
  Rng rng(23);
  for (int t = 0; t < 20; ++t) {
    const Vec3 q{rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2),
                 rng.uniform(-1.2, 1.2)};
    const MatchResult r = match_point(q, cloud, cache, scorer);
    CHECK(r.matched_index == brute_argmin(q, cloud));
    CHECK(r.evaluations == 400);
    CHECK(r.tier_argmin == std::vector<std::uint32_t>{r.matched_index});
  }
}

TEST_CASE("a one-seed cache whose neighbor list spans everything is exact") {
  const PointCloud cloud = random_cloud(120, 19);
  const NNCache cache = build_cache(cloud, {{1, 120}, {120}}, 3);
  const ScoreFn scorer = euclidean_scorer_for(cloud);
  const Vec3 q{0.3, -0.4, 0.9};
  const MatchResult r = match_point(q, cloud, cache, scorer);
  CHECK(r.matched_index == brute_argmin(q, cloud));
  CHECK(r.evaluations == 121);
  CHECK(r.evaluations == evaluation_budget(cache.config));
}

TEST_CASE("matching spends exactly the configured evaluation budget") {
  const PointCloud cloud = random_cloud(5000, 29);
  const NNCache cache = build_cache(cloud, default_tier_config(5000), 7);
  const ScoreFn scorer = euclidean_scorer_for(cloud);
  const MatchResult r = match_point({0.1, 0.2, 0.3}, cloud, cache, scorer);
  CHECK(r.evaluations == 185);
  CHECK(r.tier_argmin.size() == 3);
  CHECK(r.matched_index < 5000);
}

TEST_CASE("tier descent with a smooth scorer recovers the global argmin") {
  const PointCloud cloud = random_cloud(700, 31);
  const NNCache cache = build_cache(cloud, {{60, 300, 700}, {65, 60}}, 11);
  const ScoreFn scorer = euclidean_scorer_for(cloud);
  Rng rng(37);
  int hits = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    const Vec3 q{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                 rng.uniform(-1.0, 1.0)};
    const MatchResult r = match_point(q, cloud, cache, scorer);
    if (r.matched_index == brute_argmin(q, cloud)) ++hits;
  }
  CHECK(hits >= 45);
}

TEST_CASE("score ties resolve to the lowest global index") {
  const PointCloud cloud = random_cloud(200, 41);
  const NNCache cache = build_cache(cloud, {{15, 80, 200}, {20, 10}}, 13);
  const ScoreFn constant = [](const Vec3&, const std::vector<std::uint32_t>& ids,
                              std::vector<double>& out) {
    out.assign(ids.size(), 1.0);
  };
  const MatchResult r = match_point({0, 0, 0}, cloud, cache, constant);
  CHECK(r.tier_argmin[0] ==
        *std::min_element(cache.tiers[0].begin(), cache.tiers[0].end()));
  // Each later tier argmin is the lowest id in the previous best's list.
  std::uint32_t pos0 = static_cast<std::uint32_t>(
      std::min_element(cache.tiers[0].begin(), cache.tiers[0].end()) -
      cache.tiers[0].begin());
  std::uint32_t prev_pos = pos0;
  for (std::size_t level = 0; level + 1 < cache.tiers.size(); ++level) {
    const std::uint32_t m = cache.config.neighbor_counts[level];
    const auto begin = cache.neighbors[level].begin() + prev_pos * m;
    std::uint32_t best_pos = *begin;
    std::uint32_t best_id = cache.tiers[level + 1][best_pos];
    for (auto it = begin; it != begin + m; ++it) {
      const std::uint32_t id = cache.tiers[level + 1][*it];
      if (id < best_id) {
        best_id = id;
        best_pos = *it;
      }
    }
    CHECK(r.tier_argmin[level + 1] == best_id);
    prev_pos = best_pos;
  }
  CHECK(r.matched_index == r.tier_argmin.back());
}

TEST_CASE("batch matching is element-wise identical to sequential calls") {
  const PointCloud cloud = random_cloud(900, 43);
  const NNCache cache = build_cache(cloud, {{40, 250, 900}, {50, 45}}, 17);
  const ScoreFn scorer = euclidean_scorer_for(cloud);
  Rng rng(47);
  std::vector<Vec3> queries;
  for (int t = 0; t < 12; ++t)
    queries.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                       rng.uniform(-1.0, 1.0)});
  const std::vector<MatchResult> batch =
      match_batch(queries, cloud, cache, scorer);
  REQUIRE(batch.size() == queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    CHECK(same_result(batch[i], match_point(queries[i], cloud, cache, scorer)));

  // Permuting the queries permutes the results.
  std::vector<Vec3> reversed(queries.rbegin(), queries.rend());
  const std::vector<MatchResult> rev =
      match_batch(reversed, cloud, cache, scorer);
  for (std::size_t i = 0; i < queries.size(); ++i)
    CHECK(same_result(rev[i], batch[queries.size() - 1 - i]));
}

TEST_CASE("cache construction is reproducible and seed-sensitive") {
  const PointCloud cloud = random_cloud(600, 53);
  const TierConfig config{{25, 150, 600}, {30, 20}};
  const NNCache a = build_cache(cloud, config, 99);
  const NNCache b = build_cache(cloud, config, 99);
  CHECK(a.tiers == b.tiers);
  CHECK(a.neighbors == b.neighbors);
  const NNCache c = build_cache(cloud, config, 100);
  CHECK(a.tiers[0] != c.tiers[0]);
}

TEST_CASE("farthest-point tiers spread further than random ones") {
  const PointCloud cloud = random_cloud(500, 59);
  const TierConfig config{{20, 500}, {10}};
  const NNCache fps = build_cache(cloud, config, 1, true);
  const NNCache rnd = build_cache(cloud, config, 1, false);
  CHECK(fps.farthest_point);
  CHECK(std::is_sorted(fps.tiers[0].begin(), fps.tiers[0].end()));
  const NNCache fps2 = build_cache(cloud, config, 2, true);
  CHECK(fps.tiers[0] == fps2.tiers[0]);  // seed free

  auto min_gap = [&](const std::vector<std::uint32_t>& tier) {
    double best = 1e9;
    for (std::size_t i = 0; i < tier.size(); ++i)
      for (std::size_t j = i + 1; j < tier.size(); ++j)
        best = std::min(best,
                        (cloud.points[tier[i]] - cloud.points[tier[j]]).norm());
    return best;
  };
  CHECK(min_gap(fps.tiers[0]) > min_gap(rnd.tiers[0]));
}

TEST_CASE("cache files round-trip and reject corruption") {
  const PointCloud cloud = random_cloud(400, 61);
  const NNCache cache = build_cache(cloud, {{30, 120, 400}, {35, 25}}, 21);
  const auto dir = std::filesystem::temp_directory_path() / "litege_nncache";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "cache.bin").string();
  save_cache(path, cache);

  const NNCache loaded = load_cache(path);
  CHECK(loaded.seed == cache.seed);
  CHECK(loaded.point_count == cache.point_count);
  CHECK(loaded.farthest_point == cache.farthest_point);
  CHECK(loaded.config.tier_sizes == cache.config.tier_sizes);
  CHECK(loaded.config.neighbor_counts == cache.config.neighbor_counts);
  CHECK(loaded.tiers == cache.tiers);
  CHECK(loaded.neighbors == cache.neighbors);

  const std::string data = read_file(path);
  const std::string bad_magic_path = (dir / "bad_magic.bin").string();
  std::string bad = data;
  bad[0] = 'X';
  write_file_atomic(bad_magic_path, bad);
  CHECK_THROWS_AS(load_cache(bad_magic_path), Error);

  const std::string trunc_path = (dir / "trunc.bin").string();
  write_file_atomic(trunc_path, data.substr(0, data.size() / 2));
  CHECK_THROWS_AS(load_cache(trunc_path), Error);

  const std::string trail_path = (dir / "trail.bin").string();
  write_file_atomic(trail_path, data + "zz");
  CHECK_THROWS_AS(load_cache(trail_path), Error);

  // Corrupt one bottom-tier index to an out-of-range value.
  std::string oob = data;
  const std::size_t header = 4 + 4 + 8 + 4 + 1 + 4 + 3 * 4 + 2 * 4;
  std::uint32_t huge = 1u << 30;
  std::memcpy(oob.data() + header, &huge, 4);
  const std::string oob_path = (dir / "oob.bin").string();
  write_file_atomic(oob_path, oob);
  CHECK_THROWS_AS(load_cache(oob_path), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("geodesic error is one hundred times the surface distance") {
  TriangleMesh mesh;
  mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  mesh.faces = {{0, 1, 2}, {0, 2, 3}};
  const GeodesicSolver solver(mesh, 2);
  const double e = geodesic_error(solver, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0});
  CHECK(e == doctest::Approx(100.0).epsilon(0.02));
  CHECK(geodesic_error(solver, {0.5, 0.5, 0.0}, {0.5, 0.5, 0.0}) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("area under the error curve matches closed-form cases") {
  CHECK_THROWS_AS(area_under_curve({}, 0.2), Error);
  CHECK_THROWS_AS(area_under_curve({0.1}, 0.0), Error);
  CHECK_THROWS_AS(area_under_curve({0.1}, -1.0), Error);

  CHECK(area_under_curve({0.0, 0.0, 0.0}, 0.2) == doctest::Approx(1.0));
  CHECK(area_under_curve({5.0, 9.0, 7.5}, 0.2) == doctest::Approx(0.0));

  // Uniformly spread errors cover half the area.
  std::vector<double> uniform;
  for (int i = 0; i < 2000; ++i) uniform.push_back(0.2 * (i + 0.5) / 2000);
  CHECK(area_under_curve(uniform, 0.2) == doctest::Approx(0.5).epsilon(0.05));
  const double auc_uniform = area_under_curve(uniform, 0.2);
  CHECK(std::abs(auc_uniform - 0.5) <= 0.01);

  // Smaller errors can only raise the area.
  std::vector<double> mixed = {0.05, 0.15, 0.4};
  std::vector<double> improved = {0.01, 0.15, 0.4};
  CHECK(area_under_curve(improved, 0.2) >= area_under_curve(mixed, 0.2));
  CHECK(area_under_curve({0.1}, 0.2) > 0.0);
  CHECK(area_under_curve({0.1}, 0.2) < 1.0);
}

TEST_CASE("matcher sessions reuse embeddings without changing scores") {
  const std::size_t n = 40;
  PointCloud cloud = random_cloud(n, 67);
  GeodesicNet net = make_matcher_net(16, 3);
  CoordStats stats;
  stats.mean = Vec3::Zero();
  stats.std = Vec3::Ones();

  // One training-mode pass seeds the normalization statistics eval needs.
  Rng rng(71);
  Eigen::MatrixXd desc_a(16, 8), desc_b(16, 8), xs(3, 8), ys(3, 8);
  for (Eigen::Index c = 0; c < 8; ++c) {
    for (Eigen::Index r = 0; r < 16; ++r) {
      desc_a(r, c) = rng.normal();
      desc_b(r, c) = rng.normal();
    }
    for (Eigen::Index r = 0; r < 3; ++r) {
      xs(r, c) = rng.normal();
      ys(r, c) = rng.normal();
    }
  }
  net.forward(desc_a, desc_b, xs, ys, stats, RunMode::train);

  Eigen::VectorXd dq(16), dt(16);
  for (Eigen::Index r = 0; r < 16; ++r) {
    dq[r] = rng.normal();
    dt[r] = rng.normal();
  }
  MatcherSession session(net, stats, dq, dt, cloud);
  ScoreFn scorer = session.scorer();

  const Vec3 q{0.2, -0.3, 0.5};
  std::vector<std::uint32_t> ids = {0, 5, 11, 17, 39};
  std::vector<double> scores, scores2;
  scorer(q, ids, scores);
  scorer(q, ids, scores2);
  REQUIRE(scores.size() == ids.size());
  CHECK(scores == scores2);  // repeated identical calls are bitwise stable

  // Session scores agree with fresh full forwards to float round-off.
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const double direct = net.predict(dq, dt, q, cloud.points[ids[j]], stats);
    CHECK(scores[j] == doctest::Approx(direct).epsilon(1e-9));
  }

  // Matching through a session is deterministic end to end.
  const NNCache cache = build_cache(cloud, {{5, 40}, {8}}, 3);
  const MatchResult r1 = match_point(q, cloud, cache, scorer);
  const MatchResult r2 = match_point(q, cloud, cache, scorer);
  CHECK(same_result(r1, r2));
  CHECK(r1.evaluations == 13);
  CHECK_THROWS_AS(
      [&] {
        std::vector<std::uint32_t> bad = {static_cast<std::uint32_t>(n)};
        std::vector<double> out;
        scorer(q, bad, out);
      }(),
      Error);
}
