#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <memory>

#include "cli/commands.hpp"
#include "cli/helpers.hpp"
#include "litege/descriptor.hpp"
#include "litege/error.hpp"
#include "litege/fileio.hpp"
#include "litege/lgnn_io.hpp"
#include "litege/matching.hpp"
#include "litege/mesh_io.hpp"
#include "litege/oracle.hpp"
#include "litege/pathtrace.hpp"
#include "litege/prng.hpp"
#include "litege/sampling.hpp"
#include "litege/upca_io.hpp"

namespace litege::cli {
namespace {

using ordered = nlohmann::ordered_json;

struct LoadedModel {
  DescriptorSpace space;
  std::uint64_t space_hash = 0;
  SavedPairNet saved;
};

LoadedModel load_model_with_space(const std::string& space_path,
                                  const std::string& model_path,
                                  bool force_basis) {
  if (space_path.empty()) fail_invalid("space is required");
  if (model_path.empty()) fail_invalid("model is required");
  DescriptorSpace space = load_descriptor_space(space_path);
  std::uint64_t hash = descriptor_space_hash(space);
  SavedPairNet saved = load_pair_net(model_path, hash, force_basis);
  return LoadedModel{std::move(space), hash, std::move(saved)};
}

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

ordered vec3_json(const Vec3& v) {
  return ordered::array({v.x(), v.y(), v.z()});
}

}  // namespace

void cmd_infer(const RunConfig& config) {
  const InferSection& s = config.infer;
  if (s.shape.empty() || s.queries.empty() || s.out.empty())
    fail_invalid("infer: shape, queries, and out are required");
  LoadedModel m = load_model_with_space(s.space, s.model, s.force_basis);

  PointCloud cloud{shape_points(load_shape(s.shape))};
  ShapeDescriptor desc = describe(m.space, cloud);
  std::vector<QueryRow> queries =
      parse_query_rows(read_file(s.queries), s.queries);
  if (queries.empty()) fail_invalid(s.queries + ": no query rows");

  Eigen::Index b = static_cast<Eigen::Index>(queries.size());
  Eigen::MatrixXd desc_cols = desc.replicate(1, b);
  Eigen::MatrixXd src(3, b), dst(3, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    src.col(i) = queries[static_cast<std::size_t>(i)].src;
    dst.col(i) = queries[static_cast<std::size_t>(i)].dst;
  }
  Eigen::VectorXd pred = m.saved.net.forward(desc_cols, desc_cols, src, dst,
                                             m.saved.stats, RunMode::eval);

  std::string out;
  for (Eigen::Index i = 0; i < b; ++i) out += fmt_double(pred[i]) + "\n";
  ensure_parent_dir(s.out);
  write_file_atomic(s.out, out);
  emit_run_config(config, s.out, false);
}

void cmd_match(const RunConfig& config) {
  const MatchSection& s = config.match;
  if (s.source.empty() || s.target.empty() || s.out.empty())
    fail_invalid("match: source, target, and out are required");
  if (s.gt != "index" && s.gt != "none")
    fail_invalid("match: gt must be 'index' or 'none'");
  LoadedModel m = load_model_with_space(s.space, s.model, s.force_basis);

  Shape source_shape = load_shape(s.source);
  Shape target_shape = load_shape(s.target);
  PointCloud source{shape_points(source_shape)};
  PointCloud target{shape_points(target_shape)};
  ShapeDescriptor desc_source = describe(m.space, source);
  ShapeDescriptor desc_target = describe(m.space, target);

  TierConfig tiers;
  tiers.tier_sizes = s.tier_sizes;
  for (std::uint32_t& n : tiers.tier_sizes)
    if (n == 0) n = static_cast<std::uint32_t>(target.points.size());
  tiers.neighbor_counts = s.neighbor_counts;

  NNCache cache;
  std::error_code ec;
  if (!s.cache.empty() && std::filesystem::exists(s.cache, ec)) {
    cache = load_cache(s.cache);
    validate_cache(cache, static_cast<std::uint32_t>(target.points.size()));
    if (cache.config.tier_sizes != tiers.tier_sizes ||
        cache.config.neighbor_counts != tiers.neighbor_counts)
      fail_invalid(s.cache + ": cached tier layout differs from the config");
  } else {
    cache = build_cache(target, tiers, config.seed, s.farthest_point);
    if (!s.cache.empty()) {
      ensure_parent_dir(s.cache);
      save_cache(s.cache, cache);
    }
  }

  std::uint32_t n_src = static_cast<std::uint32_t>(source.points.size());
  std::uint32_t want = s.num_queries == 0 ? n_src : s.num_queries;
  if (want > n_src)
    fail_invalid("match: num_queries " + std::to_string(want) +
                 " exceeds source point count " + std::to_string(n_src));
  std::vector<std::uint32_t> query_ids =
      Rng(config.seed).split(0xA11C).sample_without_replacement(n_src, want);
  if (query_ids.empty()) fail_invalid("match: no queries selected");

  bool with_gt = s.gt == "index";
  std::unique_ptr<GeodesicSolver> solver;
  if (with_gt) {
    if (source.points.size() != target.points.size())
      fail_invalid(
          "match: gt 'index' needs source and target with equal point "
          "counts");
    if (!is_mesh(target_shape))
      fail_invalid("match: gt 'index' needs a target mesh for geodesics");
    solver = std::make_unique<GeodesicSolver>(as_mesh(target_shape), 1);
  }

  MatcherSession session(m.saved.net, m.saved.stats, desc_source, desc_target,
                         target);
  ScoreFn scorer = session.scorer();

  std::string csv = "query,matched,mx,my,mz,error,evaluations\n";
  std::vector<double> errors;
  std::size_t evaluations = 0;
  for (std::uint32_t q : query_ids) {
    MatchResult r = match_point(source.points[q], target, cache, scorer);
    double err = std::numeric_limits<double>::quiet_NaN();
    if (with_gt)
      err = geodesic_error(*solver, r.matched_position, target.points[q]);
    if (with_gt) errors.push_back(err);
    evaluations = r.evaluations;
    csv += std::to_string(q) + "," + std::to_string(r.matched_index) + "," +
           fmt_double(r.matched_position.x()) + "," +
           fmt_double(r.matched_position.y()) + "," +
           fmt_double(r.matched_position.z()) + "," + fmt_double(err) + "," +
           std::to_string(r.evaluations) + "\n";
  }
  ensure_parent_dir(s.out);
  write_file_atomic(s.out, csv);

  ordered summary;
  summary["queries"] = query_ids.size();
  summary["evaluations_per_query"] = evaluations;
  summary["tier_sizes"] = tiers.tier_sizes;
  summary["neighbor_counts"] = tiers.neighbor_counts;
  if (with_gt) {
    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (double e : errors) mean += e;
    mean /= static_cast<double>(errors.size());
    double median = sorted[sorted.size() / 2];
    if (sorted.size() % 2 == 0)
      median = 0.5 * (median + sorted[sorted.size() / 2 - 1]);
    summary["mean_error"] = mean;
    summary["median_error"] = median;
    ordered auc = ordered::object();
    for (double t : s.auc_thresholds) {
      if (!(t > 0.0)) fail_invalid("match: auc_thresholds must be positive");
      // Thresholds are fractions of the mean-100 scale the errors live on.
      auc[fmt_double_shortest(t)] = area_under_curve(errors, t * 100.0);
    }
    summary["auc"] = auc;
  }
  write_file_atomic(s.out + ".summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  emit_run_config(config, s.out, false);
}

void cmd_trace(const RunConfig& config) {
  const TraceSection& s = config.trace;
  if (s.shape.empty() || s.out.empty())
    fail_invalid("trace: shape and out are required");
  bool inline_pair = !s.src.empty() || !s.dst.empty();
  if (inline_pair && (s.src.size() != 3 || s.dst.size() != 3))
    fail_invalid("trace: src and dst each need exactly 3 coordinates");
  if (inline_pair == !s.pairs.empty())
    fail_invalid("trace: give either pairs or src/dst, not both or neither");
  LoadedModel m = load_model_with_space(s.space, s.model, s.force_basis);

  PointCloud cloud{shape_points(load_shape(s.shape))};
  ShapeDescriptor desc = describe(m.space, cloud);
  SpatialIndex index(cloud);

  std::vector<QueryRow> pairs;
  if (inline_pair) {
    pairs.push_back({Vec3(s.src[0], s.src[1], s.src[2]),
                     Vec3(s.dst[0], s.dst[1], s.dst[2])});
  } else {
    pairs = parse_query_rows(read_file(s.pairs), s.pairs);
    if (pairs.empty()) fail_invalid(s.pairs + ": no trace pairs");
  }

  TraceConfig tc;
  tc.eta = s.eta > 0.0 ? s.eta : default_eta(cloud.points.size());
  tc.eps = s.eps;
  tc.max_iters = s.max_iters;
  tc.patience = s.patience;

  std::unique_ptr<SpatialIndex> dense;
  if (!s.project_dense.empty())
    dense = std::make_unique<SpatialIndex>(
        PointCloud{shape_points(load_shape(s.project_dense))});

  ordered traces = ordered::array();
  for (const QueryRow& pair : pairs) {
    TracedPath path =
        trace(pair.src, pair.dst, m.saved.net, desc, m.saved.stats, index, tc);
    if (dense) path = project_to_mesh_samples(path, *dense);
    ordered t;
    t["src"] = vec3_json(pair.src);
    t["dst"] = vec3_json(pair.dst);
    t["reason"] = to_string(path.reason);
    t["best_index"] = path.best_index;
    ordered points = ordered::array();
    for (const Vec3& p : path.points) points.push_back(vec3_json(p));
    t["points"] = points;
    t["distances"] = path.distances;
    traces.push_back(t);
  }

  ordered out;
  out["eta"] = tc.eta;
  out["eps"] = tc.eps;
  out["max_iters"] = tc.max_iters;
  out["patience"] = tc.patience;
  out["traces"] = traces;
  ensure_parent_dir(s.out);
  write_file_atomic(s.out, out.dump(2) + "\n");
  emit_run_config(config, s.out, false);
}

void cmd_eval(const RunConfig& config) {
  const EvalSection& s = config.eval;
  if (s.pred.empty() || s.gt.empty() || s.out.empty())
    fail_invalid("eval: pred, gt, and out are required");

  std::vector<double> pred = parse_number_lines(read_file(s.pred), s.pred);
  std::vector<double> gt = parse_number_lines(read_file(s.gt), s.gt);
  EvalStats stats = normalize_for_eval(gt, pred);

  std::vector<double> errors(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i)
    errors[i] = std::abs(stats.pred_scaled[i] - stats.gt_scaled[i]);

  ordered report;
  report["count"] = gt.size();
  report["scale"] = stats.scale;
  report["mean_l1"] = stats.mean_l1;
  report["median_l1"] = stats.median_l1;
  ordered auc = ordered::object();
  for (double t : s.auc_thresholds) {
    if (!(t > 0.0)) fail_invalid("eval: auc_thresholds must be positive");
    auc[fmt_double_shortest(t)] = area_under_curve(errors, t * 100.0);
  }
  report["auc"] = auc;
  ensure_parent_dir(s.out);
  write_file_atomic(s.out, report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  emit_run_config(config, s.out, false);
}

void cmd_bench(const RunConfig& config) {
  const BenchSection& s = config.bench;
  if (s.shape.empty() || s.out.empty())
    fail_invalid("bench: shape and out are required");
  if (s.repeats == 0) fail_invalid("bench: repeats must be positive");
  LoadedModel m = load_model_with_space(s.space, s.model, s.force_basis);

  Shape shape = load_shape(s.shape);
  PointCloud bench_cloud;
  if (is_mesh(shape)) {
    bench_cloud = sample_surface(as_mesh(shape), 2000, config.seed);
  } else {
    const PointCloud& cloud = as_cloud(shape);
    if (cloud.points.size() < 2000)
      fail_invalid("bench: shape needs at least 2000 points");
    std::vector<std::uint32_t> keep =
        Rng(config.seed).split(0xBE7C).sample_without_replacement(
            static_cast<std::uint32_t>(cloud.points.size()), 2000);
    for (std::uint32_t i : keep) bench_cloud.points.push_back(cloud.points[i]);
  }

  std::string csv = "stage,iterations,total_ms,per_call_ms,peak_rss_mb\n";
  double sink = 0.0;

  ShapeDescriptor desc = describe(m.space, bench_cloud);
  auto start = std::chrono::steady_clock::now();
  for (std::uint32_t i = 0; i < s.repeats; ++i) {
    ShapeDescriptor d = describe(m.space, bench_cloud);
    sink += d[0];
  }
  double total = ms_since(start);
  csv += "descriptor," + std::to_string(s.repeats) + "," + fmt_double(total) +
         "," + fmt_double(total / s.repeats) + "," +
         fmt_double(peak_rss_mb()) + "\n";

  const Vec3& a = bench_cloud.points[0];
  const Vec3& b = bench_cloud.points[1];
  sink += m.saved.net.predict(desc, desc, a, b, m.saved.stats);
  start = std::chrono::steady_clock::now();
  for (std::uint32_t i = 0; i < s.repeats; ++i)
    sink += m.saved.net.predict(desc, desc, a, b, m.saved.stats);
  total = ms_since(start);
  csv += "inference," + std::to_string(s.repeats) + "," + fmt_double(total) +
         "," + fmt_double(total / s.repeats) + "," +
         fmt_double(peak_rss_mb()) + "\n";

  if (!std::isfinite(sink)) fail_runtime("bench: non-finite results");
  ensure_parent_dir(s.out);
  write_file_atomic(s.out, csv);
  std::cout << csv;
  emit_run_config(config, s.out, false);
}

}  // namespace litege::cli
