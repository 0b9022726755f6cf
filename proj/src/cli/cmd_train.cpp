#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <numeric>

#include "cli/commands.hpp"
#include "cli/helpers.hpp"
#include "litege/error.hpp"
#include "litege/fileio.hpp"
#include "litege/geod_io.hpp"
#include "litege/lgnn_io.hpp"
#include "litege/mesh_io.hpp"
#include "litege/nn_train.hpp"
#include "litege/prng.hpp"
#include "litege/upca_io.hpp"

namespace litege::cli {
namespace {

using ordered = nlohmann::ordered_json;

// Descriptor columns ordered to match the dataset's shape list.
Eigen::MatrixXd descriptor_matrix(const std::vector<DescriptorRow>& rows,
                                  const std::vector<std::string>& shapes,
                                  const std::string& origin) {
  if (rows.empty()) fail_invalid(origin + ": no descriptor rows");
  std::map<std::string, const DescriptorRow*> by_stem;
  for (const DescriptorRow& row : rows) {
    if (row.stem.empty())
      fail_invalid(origin + ": descriptor rows must carry shape stems");
    if (!by_stem.emplace(row.stem, &row).second)
      fail_invalid(origin + ": duplicate descriptor stem '" + row.stem + "'");
  }
  Eigen::Index k = rows.front().values.size();
  Eigen::MatrixXd desc(k, static_cast<Eigen::Index>(shapes.size()));
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    auto it = by_stem.find(shapes[i]);
    if (it == by_stem.end())
      fail_invalid(origin + ": no descriptor row for shape '" + shapes[i] +
                   "'");
    desc.col(static_cast<Eigen::Index>(i)) = it->second->values;
  }
  return desc;
}

TrainConfig train_config_from(std::uint32_t epochs, std::uint32_t batch_size,
                              double lr_start, double lr_end,
                              std::uint32_t patience, double val_fraction,
                              std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = static_cast<Eigen::Index>(batch_size);
  tc.lr_start = lr_start;
  tc.lr_end = lr_end;
  tc.patience = patience;
  tc.val_fraction = val_fraction;
  tc.seed = seed;
  return tc;
}

ordered history_json(const TrainHistory& history, std::size_t pairs,
                     std::uint64_t space_hash) {
  ordered j;
  j["train_loss"] = history.train_loss;
  j["val_loss"] = history.val_loss;
  j["best_epoch"] = history.best_epoch;
  j["best_val"] = std::isfinite(history.best_val)
                      ? ordered(history.best_val)
                      : ordered(nullptr);
  j["restart_winner"] = history.restart_winner;
  j["pairs_filtered"] = history.pairs_filtered;
  j["pairs"] = pairs;
  j["space_hash"] = hex64(space_hash);
  return j;
}

// The descriptor CSV must have been produced against the same space the
// model will be bound to; the sidecar written by `describe` carries that
// fingerprint.
void check_descriptor_provenance(const std::string& descriptors_path,
                                 std::uint64_t space_hash,
                                 const std::string& command) {
  std::uint64_t sidecar = read_space_sidecar(descriptors_path);
  if (sidecar != space_hash)
    fail_invalid(command +
                 ": descriptors were computed with a different descriptor "
                 "space (sidecar " +
                 hex64(sidecar) + ", space " + hex64(space_hash) + ")");
}

std::vector<double> alignment_errors_for(const std::string& path,
                                         const std::vector<std::string>& shapes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail_invalid(path + ": " + e.what());
  }
  if (!j.is_object()) fail_invalid(path + ": expected {stem: radians}");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(shapes.begin(), shapes.end(), it.key()) == shapes.end())
      fail_invalid(path + ": unknown shape stem '" + it.key() + "'");
  }
  std::vector<double> errors;
  for (const std::string& stem : shapes) {
    auto it = j.find(stem);
    if (it == j.end())
      fail_invalid(path + ": missing alignment error for '" + stem + "'");
    if (!it->is_number() || it->get<double>() < 0.0)
      fail_invalid(path + ": alignment error for '" + stem +
                   "' must be a non-negative number");
    errors.push_back(it->get<double>());
  }
  return errors;
}

}  // namespace

void cmd_train_geodesic(const RunConfig& config) {
  const TrainGeodesicSection& s = config.train_geodesic;
  if (s.descriptors.empty() || s.geodesics.empty() || s.space.empty() ||
      s.out.empty())
    fail_invalid(
        "train-geodesic: descriptors, geodesics, space, and out are required");

  auto [samples, meta] = load_geodesic_dataset(s.geodesics);
  DescriptorSpace space = load_descriptor_space(s.space);
  std::uint64_t space_hash = descriptor_space_hash(space);
  check_descriptor_provenance(s.descriptors, space_hash, "train-geodesic");

  std::vector<DescriptorRow> rows =
      parse_descriptor_rows(read_file(s.descriptors), s.descriptors);
  Eigen::MatrixXd desc = descriptor_matrix(rows, meta.shapes, s.descriptors);
  if (desc.rows() != space.basis.k())
    fail_invalid("train-geodesic: descriptor length " +
                 std::to_string(desc.rows()) + " does not match basis k " +
                 std::to_string(space.basis.k()));

  PairDataset data = regression_pairs(desc, samples);
  if (s.symmetrize) symmetrize_pairs(data);
  TrainConfig tc =
      train_config_from(s.epochs, s.batch_size, s.lr_start, s.lr_end,
                        s.patience, s.val_fraction, config.seed);
  TrainedPairNet trained = train_regressor(data, tc);

  ensure_parent_dir(s.out);
  save_pair_net(s.out, trained.net, trained.stats, space_hash);
  write_file_atomic(
      s.out + ".history.json",
      history_json(trained.history, data.pairs.size(), space_hash).dump(2) +
          "\n");
  emit_run_config(config, s.out, false);
}

void cmd_train_matcher(const RunConfig& config) {
  const TrainMatcherSection& s = config.train_matcher;
  if (s.descriptors.empty() || s.geodesics.empty() || s.space.empty() ||
      s.out.empty())
    fail_invalid(
        "train-matcher: descriptors, geodesics, space, and out are required");

  auto [samples, meta] = load_geodesic_dataset(s.geodesics);
  if (!meta.shared_pairs)
    fail_invalid(
        "train-matcher: the geodesic dataset must be built with shared "
        "vertex pairs (gen-geodesics --shared-pairs)");
  DescriptorSpace space = load_descriptor_space(s.space);
  std::uint64_t space_hash = descriptor_space_hash(space);
  check_descriptor_provenance(s.descriptors, space_hash, "train-matcher");

  std::vector<DescriptorRow> rows =
      parse_descriptor_rows(read_file(s.descriptors), s.descriptors);
  Eigen::MatrixXd desc = descriptor_matrix(rows, meta.shapes, s.descriptors);
  if (desc.rows() != space.basis.k())
    fail_invalid("train-matcher: descriptor length " +
                 std::to_string(desc.rows()) + " does not match basis k " +
                 std::to_string(space.basis.k()));

  std::vector<double> align;
  const std::vector<double>* align_ptr = nullptr;
  if (!s.alignment_errors.empty()) {
    align = alignment_errors_for(s.alignment_errors, meta.shapes);
    align_ptr = &align;
  }

  PairDataset data =
      matcher_pairs(desc, samples, s.num_shape_pairs, config.seed, align_ptr);
  symmetrize_pairs(data);
  TrainConfig tc =
      train_config_from(s.epochs, s.batch_size, s.lr_start, s.lr_end,
                        s.patience, s.val_fraction, config.seed);
  TrainedPairNet trained =
      train_matcher(data, tc, s.alignment_filter, s.restarts);

  ensure_parent_dir(s.out);
  save_pair_net(s.out, trained.net, trained.stats, space_hash);
  write_file_atomic(
      s.out + ".history.json",
      history_json(trained.history, data.pairs.size(), space_hash).dump(2) +
          "\n");
  emit_run_config(config, s.out, false);
}

void cmd_train_tnet(const RunConfig& config) {
  const TrainTnetSection& s = config.train_tnet;
  if (s.canonical_dir.empty() || s.out.empty())
    fail_invalid("train-tnet: canonical_dir and out are required");
  if (s.point_widths.empty() || s.head_widths.empty())
    fail_invalid("train-tnet: point_widths and head_widths must be non-empty");
  if (s.points_per_cloud == 0)
    fail_invalid("train-tnet: points_per_cloud must be positive");

  std::vector<std::string> files = list_dir(s.canonical_dir, ".xyz");
  if (files.empty()) fail_invalid("no .xyz clouds in " + s.canonical_dir);

  Rng subsample_root = Rng(config.seed).split(0x5AB5);
  std::vector<Eigen::MatrixXd> base;
  for (std::size_t i = 0; i < files.size(); ++i) {
    PointCloud cloud{shape_points(load_shape(files[i]))};
    std::size_t n = cloud.points.size();
    if (n < s.points_per_cloud)
      fail_invalid(files[i] + ": cloud has " + std::to_string(n) +
                   " points, need " + std::to_string(s.points_per_cloud));
    std::vector<std::uint32_t> keep;
    if (n == s.points_per_cloud) {
      keep.resize(n);
      std::iota(keep.begin(), keep.end(), 0u);
    } else {
      Rng rng = subsample_root.split(i + 1);
      keep = rng.sample_without_replacement(static_cast<std::uint32_t>(n),
                                            s.points_per_cloud);
    }
    Eigen::MatrixXd points(3, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
      points.col(static_cast<Eigen::Index>(j)) = cloud.points[keep[j]];
    points.colwise() -= Eigen::Vector3d(points.rowwise().mean());
    base.push_back(std::move(points));
  }

  TNetDataset data = augment_tnet_clouds(base, s.rotations_per_cloud,
                                         Rng(config.seed).split(0x7E47).seed());
  TNetConfig arch;
  arch.point_widths.assign(s.point_widths.begin(), s.point_widths.end());
  arch.head_widths.assign(s.head_widths.begin(), s.head_widths.end());
  TrainConfig tc =
      train_config_from(s.epochs, s.batch_size, s.lr_start, s.lr_end,
                        s.patience, s.val_fraction, config.seed);
  TrainedTNet trained = train_tnet(data, arch, tc);

  ensure_parent_dir(s.out);
  save_tnet(s.out, trained.net);
  ordered history;
  history["train_loss"] = trained.history.train_loss;
  history["val_loss"] = trained.history.val_loss;
  history["best_epoch"] = trained.history.best_epoch;
  history["best_val"] = std::isfinite(trained.history.best_val)
                            ? ordered(trained.history.best_val)
                            : ordered(nullptr);
  history["clouds"] = data.clouds.size();
  write_file_atomic(s.out + ".history.json", history.dump(2) + "\n");
  emit_run_config(config, s.out, false);
}

}  // namespace litege::cli
