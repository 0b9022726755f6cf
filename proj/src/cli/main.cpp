#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>

#include "cli/commands.hpp"
#include "cli/run_config.hpp"
#include "litege/error.hpp"

namespace {

using litege::cli::RunConfig;

// The config file is applied before CLI11 binds flags, so flags override
// file values and file values override defaults.
std::string config_path_from_args(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if ((arg == "--config" || arg == "-c") && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  const char* env = std::getenv("LITEGE_CONFIG");
  return env ? env : "";
}

bool help_requested(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--help" || arg == "-h") return true;
  }
  return false;
}

void add_vec(CLI::Option* opt) { opt->delimiter(','); }

void build_app(CLI::App& app, RunConfig& c) {
  app.fallthrough(true);
  app.require_subcommand(1);
  static std::string config_flag;
  app.add_option("--config,-c", config_flag,
                 "JSON config file; flags override its values "
                 "(default from $LITEGE_CONFIG)");
  app.add_option("--seed", c.seed, "global RNG seed")->capture_default_str();
  app.add_option("--threads", c.threads,
                 "worker thread cap, 0 = all logical cores (stages run "
                 "sequentially, so this bounds rather than raises them)")
      ->capture_default_str();

  CLI::App* fam = app.add_subcommand(
      "gen-family", "Generate a synthetic deformation family of meshes");
  fam->add_option("--count", c.family.count, "number of shapes")
      ->capture_default_str();
  fam->add_option("--subdivision", c.family.subdivision,
                  "icosphere subdivision level")
      ->capture_default_str();
  fam->add_option("--out-dir", c.family.out_dir, "output directory");

  CLI::App* geo = app.add_subcommand(
      "gen-geodesics", "Sample ground-truth geodesic distances on meshes");
  geo->add_option("--shapes-dir", c.geodesics.shapes_dir,
                  "directory of .obj meshes");
  geo->add_option("--out", c.geodesics.out, "output dataset file");
  geo->add_option("--num-sources", c.geodesics.num_sources,
                  "source vertices per mesh")
      ->capture_default_str();
  geo->add_option("--num-dests", c.geodesics.num_dests,
                  "destinations per source")
      ->capture_default_str();
  geo->add_option("--subdivision", c.geodesics.subdivision,
                  "edge Steiner subdivision level (0-2)")
      ->capture_default_str();
  geo->add_option("--gt-scaling", c.geodesics.gt_scaling,
                  "factor applied to every distance")
      ->capture_default_str();
  geo->add_flag("--shared-pairs,!--no-shared-pairs", c.geodesics.shared_pairs,
                "use the same vertex pairs on every mesh");

  CLI::App* canon = app.add_subcommand(
      "canonicalize", "Center, scale, and orient shapes into canonical pose");
  canon->add_option("--in", c.canonicalize.in, "shape file or directory");
  canon->add_option("--out", c.canonicalize.out,
                    "output file (single shape) or directory");
  canon->add_option("--mode", c.canonicalize.mode,
                    "regression | matching_mesh | matching_pointcloud")
      ->capture_default_str();
  canon->add_option("--tnet-model", c.canonicalize.tnet_model,
                    "learned orienter model (matching modes)");
  canon->add_option("--bbox-target-area", c.canonicalize.bbox_target_area,
                    "bounding-box area target (regression mode)")
      ->capture_default_str();
  canon->add_option("--regression-samples", c.canonicalize.regression_samples,
                    "surface samples per mesh (regression mode)")
      ->capture_default_str();
  canon->add_option("--matched-nn-k", c.canonicalize.matched_nn_k,
                    "subset size for matched NN scaling")
      ->capture_default_str();
  canon->add_option("--matched-nn-target", c.canonicalize.matched_nn_target,
                    "target mean NN distance for clouds")
      ->capture_default_str();
  canon->add_option("--tnet-points", c.canonicalize.tnet_points,
                    "points fed to the learned orienter")
      ->capture_default_str();
  canon->add_flag("--emit-mesh,!--no-emit-mesh", c.canonicalize.emit_mesh,
                  "also write the transformed mesh next to the cloud");

  CLI::App* vox = app.add_subcommand(
      "select-voxels", "Pick informative voxels over canonical clouds");
  vox->add_option("--canonical-dir", c.voxels.canonical_dir,
                  "directory of canonical .xyz clouds");
  vox->add_option("--out", c.voxels.out, "output selection file");
  vox->add_option("--resolution", c.voxels.resolution, "grid resolution")
      ->capture_default_str();
  vox->add_option("--extent", c.voxels.extent, "half-extent of the grid cube")
      ->capture_default_str();
  vox->add_option("--epsilon", c.voxels.epsilon,
                  "occupancy variance threshold")
      ->capture_default_str();

  CLI::App* pca = app.add_subcommand(
      "fit-pca", "Fit the descriptor basis over canonical clouds");
  pca->add_option("--canonical-dir", c.pca.canonical_dir,
                  "directory of canonical .xyz clouds");
  pca->add_option("--selection", c.pca.selection, "voxel selection file");
  pca->add_option("--out", c.pca.out, "output descriptor-space file");
  pca->add_option("--k", c.pca.k, "number of principal components")
      ->capture_default_str();

  CLI::App* desc = app.add_subcommand(
      "describe", "Project canonical shapes into the descriptor space");
  desc->add_option("--in", c.describe.in, "shape file or directory");
  desc->add_option("--space", c.describe.space, "descriptor-space file");
  desc->add_option("--out", c.describe.out, "output CSV");

  CLI::App* tg = app.add_subcommand(
      "train-geodesic", "Train the geodesic-distance regressor");
  tg->add_option("--descriptors", c.train_geodesic.descriptors,
                 "descriptor CSV from describe");
  tg->add_option("--geodesics", c.train_geodesic.geodesics,
                 "geodesic dataset file");
  tg->add_option("--space", c.train_geodesic.space, "descriptor-space file");
  tg->add_option("--out", c.train_geodesic.out, "output model file");
  tg->add_option("--epochs", c.train_geodesic.epochs, "training epochs")
      ->capture_default_str();
  tg->add_option("--batch-size", c.train_geodesic.batch_size, "batch size")
      ->capture_default_str();
  tg->add_option("--lr-start", c.train_geodesic.lr_start,
                 "initial learning rate")
      ->capture_default_str();
  tg->add_option("--lr-end", c.train_geodesic.lr_end, "final learning rate")
      ->capture_default_str();
  tg->add_option("--patience", c.train_geodesic.patience,
                 "epochs without val improvement before stopping")
      ->capture_default_str();
  tg->add_option("--val-fraction", c.train_geodesic.val_fraction,
                 "validation split fraction")
      ->capture_default_str();
  tg->add_flag("--symmetrize,!--no-symmetrize", c.train_geodesic.symmetrize,
               "append swapped copies of the training pairs");

  CLI::App* tm = app.add_subcommand(
      "train-matcher", "Train the cross-shape correspondence scorer");
  tm->add_option("--descriptors", c.train_matcher.descriptors,
                 "descriptor CSV from describe");
  tm->add_option("--geodesics", c.train_matcher.geodesics,
                 "shared-pair geodesic dataset file");
  tm->add_option("--space", c.train_matcher.space, "descriptor-space file");
  tm->add_option("--out", c.train_matcher.out, "output model file");
  tm->add_option("--alignment-errors", c.train_matcher.alignment_errors,
                 "JSON {stem: radians} of per-shape orientation errors");
  tm->add_option("--epochs", c.train_matcher.epochs, "training epochs")
      ->capture_default_str();
  tm->add_option("--batch-size", c.train_matcher.batch_size, "batch size")
      ->capture_default_str();
  tm->add_option("--lr-start", c.train_matcher.lr_start,
                 "initial learning rate")
      ->capture_default_str();
  tm->add_option("--lr-end", c.train_matcher.lr_end, "final learning rate")
      ->capture_default_str();
  tm->add_option("--patience", c.train_matcher.patience,
                 "epochs without val improvement before stopping")
      ->capture_default_str();
  tm->add_option("--val-fraction", c.train_matcher.val_fraction,
                 "validation split fraction")
      ->capture_default_str();
  tm->add_option("--alignment-filter", c.train_matcher.alignment_filter,
                 "drop pairs whose orientation error exceeds this (radians)")
      ->capture_default_str();
  tm->add_option("--restarts", c.train_matcher.restarts,
                 "independent first-epoch initializations")
      ->capture_default_str();
  tm->add_option("--num-shape-pairs", c.train_matcher.num_shape_pairs,
                 "unordered shape pairs to sample, 0 = all")
      ->capture_default_str();

  CLI::App* tt =
      app.add_subcommand("train-tnet", "Train the learned orienter");
  tt->add_option("--canonical-dir", c.train_tnet.canonical_dir,
                 "directory of canonical .xyz clouds");
  tt->add_option("--out", c.train_tnet.out, "output model file");
  add_vec(tt->add_option("--point-widths", c.train_tnet.point_widths,
                         "per-point MLP widths"));
  add_vec(tt->add_option("--head-widths", c.train_tnet.head_widths,
                         "head MLP widths"));
  tt->add_option("--epochs", c.train_tnet.epochs, "training epochs")
      ->capture_default_str();
  tt->add_option("--batch-size", c.train_tnet.batch_size, "batch size")
      ->capture_default_str();
  tt->add_option("--lr-start", c.train_tnet.lr_start, "initial learning rate")
      ->capture_default_str();
  tt->add_option("--lr-end", c.train_tnet.lr_end, "final learning rate")
      ->capture_default_str();
  tt->add_option("--patience", c.train_tnet.patience,
                 "epochs without val improvement before stopping")
      ->capture_default_str();
  tt->add_option("--val-fraction", c.train_tnet.val_fraction,
                 "validation split fraction")
      ->capture_default_str();
  tt->add_option("--rotations-per-cloud", c.train_tnet.rotations_per_cloud,
                 "random rotations per base cloud")
      ->capture_default_str();
  tt->add_option("--points-per-cloud", c.train_tnet.points_per_cloud,
                 "points sampled from each cloud")
      ->capture_default_str();

  CLI::App* inf = app.add_subcommand(
      "infer", "Predict geodesic distances for query point pairs");
  inf->add_option("--model", c.infer.model, "pair-distance model file");
  inf->add_option("--space", c.infer.space, "descriptor-space file");
  inf->add_option("--shape", c.infer.shape, "canonical shape file");
  inf->add_option("--queries", c.infer.queries,
                  "CSV of sx,sy,sz,dx,dy,dz rows");
  inf->add_option("--out", c.infer.out, "output predictions, one per line");
  inf->add_flag("--force-basis,!--no-force-basis", c.infer.force_basis,
                "accept a model trained against a different space");

  CLI::App* mat = app.add_subcommand(
      "match", "Coarse-to-fine correspondence from source to target");
  mat->add_option("--model", c.match.model, "matcher model file");
  mat->add_option("--space", c.match.space, "descriptor-space file");
  mat->add_option("--source", c.match.source, "source canonical shape");
  mat->add_option("--target", c.match.target, "target canonical shape");
  mat->add_option("--out", c.match.out, "output per-query CSV");
  mat->add_option("--cache", c.match.cache,
                  "tier cache file, reused when present");
  add_vec(mat->add_option("--tier-sizes", c.match.tier_sizes,
                          "tier sizes, 0 = every target point"));
  add_vec(mat->add_option("--neighbor-counts", c.match.neighbor_counts,
                          "cached neighbors per tier"));
  mat->add_flag("--farthest-point,!--no-farthest-point",
                c.match.farthest_point,
                "build tiers by farthest-point sampling");
  mat->add_option("--num-queries", c.match.num_queries,
                  "source vertices to match, 0 = all")
      ->capture_default_str();
  add_vec(mat->add_option("--auc-thresholds", c.match.auc_thresholds,
                          "AUC thresholds as fractions of the error scale"));
  mat->add_option("--gt", c.match.gt,
                  "ground truth: index (same vertex order) | none")
      ->capture_default_str();
  mat->add_flag("--force-basis,!--no-force-basis", c.match.force_basis,
                "accept a model trained against a different space");

  CLI::App* tr = app.add_subcommand(
      "trace", "Trace a path by descending the predicted distance field");
  tr->add_option("--model", c.trace.model, "pair-distance model file");
  tr->add_option("--space", c.trace.space, "descriptor-space file");
  tr->add_option("--shape", c.trace.shape, "canonical shape file");
  tr->add_option("--pairs", c.trace.pairs, "CSV of sx,sy,sz,dx,dy,dz rows");
  tr->add_option("--out", c.trace.out, "output JSON");
  tr->add_option("--project-dense", c.trace.project_dense,
                 "dense sample cloud to snap the path onto");
  add_vec(tr->add_option("--src", c.trace.src, "single source point x,y,z"));
  add_vec(tr->add_option("--dst", c.trace.dst, "single start point x,y,z"));
  tr->add_option("--eta", c.trace.eta,
                 "gradient step size, 0 = pick by point count")
      ->capture_default_str();
  tr->add_option("--eps", c.trace.eps, "convergence distance threshold")
      ->capture_default_str();
  tr->add_option("--max-iters", c.trace.max_iters, "iteration cap")
      ->capture_default_str();
  tr->add_option("--patience", c.trace.patience,
                 "steps without a new best before stalling")
      ->capture_default_str();
  tr->add_flag("--force-basis,!--no-force-basis", c.trace.force_basis,
               "accept a model trained against a different space");

  CLI::App* ev = app.add_subcommand(
      "eval", "Score predictions against ground truth at mean-100 scale");
  ev->add_option("--pred", c.eval.pred, "predictions, one number per line");
  ev->add_option("--gt", c.eval.gt, "ground truth, one number per line");
  ev->add_option("--out", c.eval.out, "output JSON report");
  add_vec(ev->add_option("--auc-thresholds", c.eval.auc_thresholds,
                         "AUC thresholds as fractions of the error scale"));

  CLI::App* be = app.add_subcommand(
      "bench", "Time pipeline stages and report peak memory");
  be->add_option("--space", c.bench.space, "descriptor-space file");
  be->add_option("--model", c.bench.model, "pair-distance model file");
  be->add_option("--shape", c.bench.shape, "shape file");
  be->add_option("--out", c.bench.out, "output CSV");
  be->add_option("--repeats", c.bench.repeats, "iterations per stage")
      ->capture_default_str();
  be->add_flag("--force-basis,!--no-force-basis", c.bench.force_basis,
               "accept a model trained against a different space");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig config;
  try {
    std::string config_path = config_path_from_args(argc, argv);
    if (!config_path.empty() && !help_requested(argc, argv))
      litege::cli::merge_config_file(config, config_path);
  } catch (const litege::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == litege::ErrorKind::invalid_input ? 2 : 1;
  }

  CLI::App app{
      "Shape descriptors, learned geodesic distances, and non-isometric "
      "correspondence. Config keys map 1:1 to flags: section names match "
      "subcommands, keys swap '_' for '-'."};
  build_app(app, config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "gen-family") litege::cli::cmd_gen_family(config);
    else if (name == "gen-geodesics") litege::cli::cmd_gen_geodesics(config);
    else if (name == "canonicalize") litege::cli::cmd_canonicalize(config);
    else if (name == "select-voxels") litege::cli::cmd_select_voxels(config);
    else if (name == "fit-pca") litege::cli::cmd_fit_pca(config);
    else if (name == "describe") litege::cli::cmd_describe(config);
    else if (name == "train-geodesic") litege::cli::cmd_train_geodesic(config);
    else if (name == "train-matcher") litege::cli::cmd_train_matcher(config);
    else if (name == "train-tnet") litege::cli::cmd_train_tnet(config);
    else if (name == "infer") litege::cli::cmd_infer(config);
    else if (name == "match") litege::cli::cmd_match(config);
    else if (name == "trace") litege::cli::cmd_trace(config);
    else if (name == "eval") litege::cli::cmd_eval(config);
    else if (name == "bench") litege::cli::cmd_bench(config);
    else litege::fail_runtime("unhandled subcommand " + name);
  } catch (const litege::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == litege::ErrorKind::invalid_input ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
