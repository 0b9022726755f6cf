#include "cli/run_config.hpp"

#include <json.hpp>
#include <set>

#include "litege/error.hpp"
#include "litege/fileio.hpp"

namespace litege::cli {
namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

// Tracks which keys of one JSON object were consumed; leftovers are errors.
class Section {
 public:
  Section(const json* obj, std::string path)
      : obj_(obj), path_(std::move(path)) {}

  const json* find(const char* key) {
    seen_.insert(key);
    if (!obj_) return nullptr;
    auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  void get(const char* key, std::string& v) {
    if (const json* j = find(key)) {
      if (!j->is_string()) type_error(key, "a string");
      v = j->get<std::string>();
    }
  }
  void get(const char* key, bool& v) {
    if (const json* j = find(key)) {
      if (!j->is_boolean()) type_error(key, "a boolean");
      v = j->get<bool>();
    }
  }
  void get(const char* key, double& v) {
    if (const json* j = find(key)) {
      if (!j->is_number()) type_error(key, "a number");
      v = j->get<double>();
    }
  }
  void get(const char* key, std::uint32_t& v) {
    if (const json* j = find(key)) {
      if (!j->is_number_integer() || j->get<std::int64_t>() < 0 ||
          j->get<std::int64_t>() > 0xFFFFFFFFll)
        type_error(key, "a non-negative integer");
      v = static_cast<std::uint32_t>(j->get<std::int64_t>());
    }
  }
  void get(const char* key, std::uint64_t& v) {
    if (const json* j = find(key)) {
      bool ok = j->is_number_unsigned() ||
                (j->is_number_integer() && j->get<std::int64_t>() >= 0);
      if (!ok) type_error(key, "a non-negative integer");
      v = j->get<std::uint64_t>();
    }
  }
  void get(const char* key, std::vector<std::uint32_t>& v) {
    if (const json* j = find(key)) {
      if (!j->is_array()) type_error(key, "an array of integers");
      std::vector<std::uint32_t> parsed;
      for (const json& e : *j) {
        if (!e.is_number_integer() || e.get<std::int64_t>() < 0)
          type_error(key, "an array of non-negative integers");
        parsed.push_back(static_cast<std::uint32_t>(e.get<std::int64_t>()));
      }
      v = std::move(parsed);
    }
  }
  void get(const char* key, std::vector<double>& v) {
    if (const json* j = find(key)) {
      if (!j->is_array()) type_error(key, "an array of numbers");
      std::vector<double> parsed;
      for (const json& e : *j) {
        if (!e.is_number()) type_error(key, "an array of numbers");
        parsed.push_back(e.get<double>());
      }
      v = std::move(parsed);
    }
  }

  Section section(const char* key) {
    const json* j = find(key);
    if (j && !j->is_object())
      type_error(key, "an object");
    return Section(j, path_ + key + ".");
  }

  void finish() {
    if (!obj_) return;
    for (auto it = obj_->begin(); it != obj_->end(); ++it) {
      if (!seen_.count(it.key()))
        fail_invalid("config: unknown key '" + path_ + it.key() + "'");
    }
  }

 private:
  [[noreturn]] void type_error(const char* key, const char* expect) {
    fail_invalid("config: key '" + path_ + key + "' must be " + expect);
  }

  const json* obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void merge(RunConfig& c, const json& root) {
  Section top(&root, "");
  top.get("seed", c.seed);
  top.get("threads", c.threads);

  Section family = top.section("family");
  family.get("count", c.family.count);
  family.get("subdivision", c.family.subdivision);
  family.get("out_dir", c.family.out_dir);
  family.finish();

  Section geod = top.section("geodesics");
  geod.get("shapes_dir", c.geodesics.shapes_dir);
  geod.get("out", c.geodesics.out);
  geod.get("num_sources", c.geodesics.num_sources);
  geod.get("num_dests", c.geodesics.num_dests);
  geod.get("subdivision", c.geodesics.subdivision);
  geod.get("gt_scaling", c.geodesics.gt_scaling);
  geod.get("shared_pairs", c.geodesics.shared_pairs);
  geod.finish();

  Section canon = top.section("canonicalize");
  canon.get("in", c.canonicalize.in);
  canon.get("out", c.canonicalize.out);
  canon.get("mode", c.canonicalize.mode);
  canon.get("tnet_model", c.canonicalize.tnet_model);
  canon.get("bbox_target_area", c.canonicalize.bbox_target_area);
  canon.get("regression_samples", c.canonicalize.regression_samples);
  canon.get("matched_nn_k", c.canonicalize.matched_nn_k);
  canon.get("matched_nn_target", c.canonicalize.matched_nn_target);
  canon.get("tnet_points", c.canonicalize.tnet_points);
  canon.get("emit_mesh", c.canonicalize.emit_mesh);
  canon.finish();

  Section vox = top.section("voxels");
  vox.get("canonical_dir", c.voxels.canonical_dir);
  vox.get("out", c.voxels.out);
  vox.get("resolution", c.voxels.resolution);
  vox.get("extent", c.voxels.extent);
  vox.get("epsilon", c.voxels.epsilon);
  vox.finish();

  Section pca = top.section("pca");
  pca.get("canonical_dir", c.pca.canonical_dir);
  pca.get("selection", c.pca.selection);
  pca.get("out", c.pca.out);
  pca.get("k", c.pca.k);
  pca.finish();

  Section desc = top.section("describe");
  desc.get("in", c.describe.in);
  desc.get("space", c.describe.space);
  desc.get("out", c.describe.out);
  desc.finish();

  Section tg = top.section("train-geodesic");
  tg.get("descriptors", c.train_geodesic.descriptors);
  tg.get("geodesics", c.train_geodesic.geodesics);
  tg.get("space", c.train_geodesic.space);
  tg.get("out", c.train_geodesic.out);
  tg.get("epochs", c.train_geodesic.epochs);
  tg.get("batch_size", c.train_geodesic.batch_size);
  tg.get("lr_start", c.train_geodesic.lr_start);
  tg.get("lr_end", c.train_geodesic.lr_end);
  tg.get("patience", c.train_geodesic.patience);
  tg.get("val_fraction", c.train_geodesic.val_fraction);
  tg.get("symmetrize", c.train_geodesic.symmetrize);
  tg.finish();

  Section tm = top.section("train-matcher");
  tm.get("descriptors", c.train_matcher.descriptors);
  tm.get("geodesics", c.train_matcher.geodesics);
  tm.get("space", c.train_matcher.space);
  tm.get("out", c.train_matcher.out);
  tm.get("alignment_errors", c.train_matcher.alignment_errors);
  tm.get("epochs", c.train_matcher.epochs);
  tm.get("batch_size", c.train_matcher.batch_size);
  tm.get("lr_start", c.train_matcher.lr_start);
  tm.get("lr_end", c.train_matcher.lr_end);
  tm.get("patience", c.train_matcher.patience);
  tm.get("val_fraction", c.train_matcher.val_fraction);
  tm.get("alignment_filter", c.train_matcher.alignment_filter);
  tm.get("restarts", c.train_matcher.restarts);
  tm.get("num_shape_pairs", c.train_matcher.num_shape_pairs);
  tm.finish();

  Section tt = top.section("train-tnet");
  tt.get("canonical_dir", c.train_tnet.canonical_dir);
  tt.get("out", c.train_tnet.out);
  tt.get("point_widths", c.train_tnet.point_widths);
  tt.get("head_widths", c.train_tnet.head_widths);
  tt.get("epochs", c.train_tnet.epochs);
  tt.get("batch_size", c.train_tnet.batch_size);
  tt.get("lr_start", c.train_tnet.lr_start);
  tt.get("lr_end", c.train_tnet.lr_end);
  tt.get("patience", c.train_tnet.patience);
  tt.get("val_fraction", c.train_tnet.val_fraction);
  tt.get("rotations_per_cloud", c.train_tnet.rotations_per_cloud);
  tt.get("points_per_cloud", c.train_tnet.points_per_cloud);
  tt.finish();

  Section infer = top.section("infer");
  infer.get("model", c.infer.model);
  infer.get("space", c.infer.space);
  infer.get("shape", c.infer.shape);
  infer.get("queries", c.infer.queries);
  infer.get("out", c.infer.out);
  infer.get("force_basis", c.infer.force_basis);
  infer.finish();

  Section match = top.section("match");
  match.get("model", c.match.model);
  match.get("space", c.match.space);
  match.get("source", c.match.source);
  match.get("target", c.match.target);
  match.get("out", c.match.out);
  match.get("cache", c.match.cache);
  match.get("tier_sizes", c.match.tier_sizes);
  match.get("neighbor_counts", c.match.neighbor_counts);
  match.get("farthest_point", c.match.farthest_point);
  match.get("num_queries", c.match.num_queries);
  match.get("auc_thresholds", c.match.auc_thresholds);
  match.get("gt", c.match.gt);
  match.get("force_basis", c.match.force_basis);
  match.finish();

  Section trace = top.section("trace");
  trace.get("model", c.trace.model);
  trace.get("space", c.trace.space);
  trace.get("shape", c.trace.shape);
  trace.get("pairs", c.trace.pairs);
  trace.get("out", c.trace.out);
  trace.get("project_dense", c.trace.project_dense);
  trace.get("src", c.trace.src);
  trace.get("dst", c.trace.dst);
  trace.get("eta", c.trace.eta);
  trace.get("eps", c.trace.eps);
  trace.get("max_iters", c.trace.max_iters);
  trace.get("patience", c.trace.patience);
  trace.get("force_basis", c.trace.force_basis);
  trace.finish();

  Section eval = top.section("eval");
  eval.get("pred", c.eval.pred);
  eval.get("gt", c.eval.gt);
  eval.get("out", c.eval.out);
  eval.get("auc_thresholds", c.eval.auc_thresholds);
  eval.finish();

  Section bench = top.section("bench");
  bench.get("space", c.bench.space);
  bench.get("model", c.bench.model);
  bench.get("shape", c.bench.shape);
  bench.get("out", c.bench.out);
  bench.get("repeats", c.bench.repeats);
  bench.get("force_basis", c.bench.force_basis);
  bench.finish();

  top.finish();
}

}  // namespace

void merge_config_text(RunConfig& config, const std::string& text,
                       const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail_invalid(origin + ": " + e.what());
  }
  if (!root.is_object()) fail_invalid(origin + ": config must be an object");
  merge(config, root);
}

void merge_config_file(RunConfig& config, const std::string& path) {
  merge_config_text(config, read_file(path), path);
}

std::string resolved_config_json(const RunConfig& c) {
  ordered root;
  root["seed"] = c.seed;
  root["threads"] = c.threads;
  root["family"] = {{"count", c.family.count},
                    {"subdivision", c.family.subdivision},
                    {"out_dir", c.family.out_dir}};
  root["geodesics"] = {{"shapes_dir", c.geodesics.shapes_dir},
                       {"out", c.geodesics.out},
                       {"num_sources", c.geodesics.num_sources},
                       {"num_dests", c.geodesics.num_dests},
                       {"subdivision", c.geodesics.subdivision},
                       {"gt_scaling", c.geodesics.gt_scaling},
                       {"shared_pairs", c.geodesics.shared_pairs}};
  root["canonicalize"] = {{"in", c.canonicalize.in},
                          {"out", c.canonicalize.out},
                          {"mode", c.canonicalize.mode},
                          {"tnet_model", c.canonicalize.tnet_model},
                          {"bbox_target_area", c.canonicalize.bbox_target_area},
                          {"regression_samples", c.canonicalize.regression_samples},
                          {"matched_nn_k", c.canonicalize.matched_nn_k},
                          {"matched_nn_target", c.canonicalize.matched_nn_target},
                          {"tnet_points", c.canonicalize.tnet_points},
                          {"emit_mesh", c.canonicalize.emit_mesh}};
  root["voxels"] = {{"canonical_dir", c.voxels.canonical_dir},
                    {"out", c.voxels.out},
                    {"resolution", c.voxels.resolution},
                    {"extent", c.voxels.extent},
                    {"epsilon", c.voxels.epsilon}};
  root["pca"] = {{"canonical_dir", c.pca.canonical_dir},
                 {"selection", c.pca.selection},
                 {"out", c.pca.out},
                 {"k", c.pca.k}};
  root["describe"] = {{"in", c.describe.in},
                      {"space", c.describe.space},
                      {"out", c.describe.out}};
  root["train-geodesic"] = {{"descriptors", c.train_geodesic.descriptors},
                            {"geodesics", c.train_geodesic.geodesics},
                            {"space", c.train_geodesic.space},
                            {"out", c.train_geodesic.out},
                            {"epochs", c.train_geodesic.epochs},
                            {"batch_size", c.train_geodesic.batch_size},
                            {"lr_start", c.train_geodesic.lr_start},
                            {"lr_end", c.train_geodesic.lr_end},
                            {"patience", c.train_geodesic.patience},
                            {"val_fraction", c.train_geodesic.val_fraction},
                            {"symmetrize", c.train_geodesic.symmetrize}};
  root["train-matcher"] = {{"descriptors", c.train_matcher.descriptors},
                           {"geodesics", c.train_matcher.geodesics},
                           {"space", c.train_matcher.space},
                           {"out", c.train_matcher.out},
                           {"alignment_errors", c.train_matcher.alignment_errors},
                           {"epochs", c.train_matcher.epochs},
                           {"batch_size", c.train_matcher.batch_size},
                           {"lr_start", c.train_matcher.lr_start},
                           {"lr_end", c.train_matcher.lr_end},
                           {"patience", c.train_matcher.patience},
                           {"val_fraction", c.train_matcher.val_fraction},
                           {"alignment_filter", c.train_matcher.alignment_filter},
                           {"restarts", c.train_matcher.restarts},
                           {"num_shape_pairs", c.train_matcher.num_shape_pairs}};
  root["train-tnet"] = {{"canonical_dir", c.train_tnet.canonical_dir},
                        {"out", c.train_tnet.out},
                        {"point_widths", c.train_tnet.point_widths},
                        {"head_widths", c.train_tnet.head_widths},
                        {"epochs", c.train_tnet.epochs},
                        {"batch_size", c.train_tnet.batch_size},
                        {"lr_start", c.train_tnet.lr_start},
                        {"lr_end", c.train_tnet.lr_end},
                        {"patience", c.train_tnet.patience},
                        {"val_fraction", c.train_tnet.val_fraction},
                        {"rotations_per_cloud", c.train_tnet.rotations_per_cloud},
                        {"points_per_cloud", c.train_tnet.points_per_cloud}};
  root["infer"] = {{"model", c.infer.model},
                   {"space", c.infer.space},
                   {"shape", c.infer.shape},
                   {"queries", c.infer.queries},
                   {"out", c.infer.out},
                   {"force_basis", c.infer.force_basis}};
  root["match"] = {{"model", c.match.model},
                   {"space", c.match.space},
                   {"source", c.match.source},
                   {"target", c.match.target},
                   {"out", c.match.out},
                   {"cache", c.match.cache},
                   {"tier_sizes", c.match.tier_sizes},
                   {"neighbor_counts", c.match.neighbor_counts},
                   {"farthest_point", c.match.farthest_point},
                   {"num_queries", c.match.num_queries},
                   {"auc_thresholds", c.match.auc_thresholds},
                   {"gt", c.match.gt},
                   {"force_basis", c.match.force_basis}};
  root["trace"] = {{"model", c.trace.model},
                   {"space", c.trace.space},
                   {"shape", c.trace.shape},
                   {"pairs", c.trace.pairs},
                   {"out", c.trace.out},
                   {"project_dense", c.trace.project_dense},
                   {"src", c.trace.src},
                   {"dst", c.trace.dst},
                   {"eta", c.trace.eta},
                   {"eps", c.trace.eps},
                   {"max_iters", c.trace.max_iters},
                   {"patience", c.trace.patience},
                   {"force_basis", c.trace.force_basis}};
  root["eval"] = {{"pred", c.eval.pred},
                  {"gt", c.eval.gt},
                  {"out", c.eval.out},
                  {"auc_thresholds", c.eval.auc_thresholds}};
  root["bench"] = {{"space", c.bench.space},
                   {"model", c.bench.model},
                   {"shape", c.bench.shape},
                   {"out", c.bench.out},
                   {"repeats", c.bench.repeats},
                   {"force_basis", c.bench.force_basis}};
  return root.dump(2) + "\n";
}

}  // namespace litege::cli
