#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <set>

#include "cli/commands.hpp"
#include "cli/helpers.hpp"
#include "litege/canonicalize.hpp"
#include "litege/descriptor.hpp"
#include "litege/error.hpp"
#include "litege/family.hpp"
#include "litege/fileio.hpp"
#include "litege/geod_io.hpp"
#include "litege/hashing.hpp"
#include "litege/lgnn_io.hpp"
#include "litege/mesh_io.hpp"
#include "litege/prng.hpp"
#include "litege/upca_io.hpp"

namespace litege::cli {
namespace {

namespace fs = std::filesystem;
using ordered = nlohmann::ordered_json;

std::string strip_ext(const std::string& path) {
  return fs::path(path).replace_extension("").string();
}

std::vector<std::string> shape_inputs(const std::string& in) {
  if (in.empty()) fail_invalid("no input path given");
  std::error_code ec;
  if (fs::is_directory(in, ec)) {
    std::vector<std::string> files;
    for (const char* ext : {".obj", ".ply", ".xyz"})
      for (std::string& f : list_dir(in, ext)) files.push_back(std::move(f));
    std::sort(files.begin(), files.end());
    if (files.empty()) fail_invalid("no .obj/.ply/.xyz files in " + in);
    std::set<std::string> stems;
    for (const std::string& f : files)
      if (!stems.insert(stem_of(f)).second)
        fail_invalid("duplicate shape stem '" + stem_of(f) + "' in " + in);
    return files;
  }
  return {in};
}

}  // namespace

void emit_run_config(const RunConfig& config, const std::string& primary_output,
                     bool output_is_dir) {
  std::string path = output_is_dir ? join_path(primary_output, "run.json")
                                   : primary_output + ".run.json";
  write_file_atomic(path, resolved_config_json(config));
}

void cmd_gen_family(const RunConfig& config) {
  const FamilySection& s = config.family;
  if (s.out_dir.empty()) fail_invalid("gen-family: out_dir is required");
  if (s.count == 0) fail_invalid("gen-family: count must be positive");
  ensure_dir(s.out_dir);

  Rng root(config.seed);
  std::vector<std::string> files;
  for (std::uint32_t i = 0; i < s.count; ++i) {
    Rng rng = root.split(i + 1);
    FamilyParams params =
        sample_family_params(rng, static_cast<int>(s.subdivision));
    TriangleMesh mesh = gen_synthetic_family(params, rng.next_u64());
    char name[32];
    std::snprintf(name, sizeof(name), "shape_%04u.obj", i);
    save_shape(join_path(s.out_dir, name), Shape(mesh));
    files.emplace_back(name);
  }

  ordered manifest;
  manifest["count"] = s.count;
  manifest["subdivision"] = s.subdivision;
  manifest["seed"] = config.seed;
  manifest["files"] = files;
  write_file_atomic(join_path(s.out_dir, "family.json"),
                    manifest.dump(2) + "\n");
  emit_run_config(config, s.out_dir, true);
}

void cmd_gen_geodesics(const RunConfig& config) {
  const GeodesicsSection& s = config.geodesics;
  if (s.shapes_dir.empty())
    fail_invalid("gen-geodesics: shapes_dir is required");
  if (s.out.empty()) fail_invalid("gen-geodesics: out is required");
  if (s.num_sources == 0 || s.num_dests == 0)
    fail_invalid("gen-geodesics: num_sources and num_dests must be positive");
  if (!(s.gt_scaling > 0.0))
    fail_invalid("gen-geodesics: gt_scaling must be positive");

  std::vector<std::string> files = list_dir(s.shapes_dir, ".obj");
  if (files.empty()) fail_invalid("no .obj meshes in " + s.shapes_dir);
  std::vector<TriangleMesh> meshes;
  std::vector<std::string> stems;
  for (const std::string& f : files) {
    Shape shape = load_shape(f);
    if (!is_mesh(shape))
      fail_invalid(f + ": geodesic sampling needs meshes with faces");
    meshes.push_back(as_mesh(shape));
    stems.push_back(stem_of(f));
  }

  GeodesicDataset data =
      s.shared_pairs
          ? build_shared_geodesic_dataset(meshes, s.num_sources, s.num_dests,
                                          config.seed,
                                          static_cast<int>(s.subdivision))
          : build_geodesic_dataset(meshes, s.num_sources, s.num_dests,
                                   config.seed,
                                   static_cast<int>(s.subdivision));
  apply_gt_scaling(data.samples, s.gt_scaling);

  GeodesicDatasetMeta meta;
  meta.shapes = stems;
  meta.seed = config.seed;
  meta.subdivision = static_cast<int>(s.subdivision);
  meta.scaling_factor = s.gt_scaling;
  meta.num_sources = s.num_sources;
  meta.num_dests = s.num_dests;
  meta.skipped_disconnected = data.skipped_disconnected;
  meta.shared_pairs = s.shared_pairs;
  ensure_parent_dir(s.out);
  save_geodesic_dataset(s.out, data.samples, meta);
  emit_run_config(config, s.out, false);
}

void cmd_canonicalize(const RunConfig& config) {
  const CanonicalizeSection& s = config.canonicalize;
  if (s.out.empty()) fail_invalid("canonicalize: out is required");
  CanonMode mode = canon_mode_from_string(s.mode);

  std::vector<std::string> files = shape_inputs(s.in);
  bool dir_mode = files.size() > 1 || fs::is_directory(s.in);

  std::optional<TNet> tnet;
  RotationPredictor orient;
  if (mode != CanonMode::regression) {
    if (s.tnet_model.empty())
      fail_invalid("canonicalize: matching modes need tnet_model");
    tnet.emplace(load_tnet(s.tnet_model));
    orient = [&tnet](const PointCloud& centered) {
      return tnet->rotation(centered);
    };
  }

  CanonParams params;
  params.bbox_target_area = s.bbox_target_area;
  params.regression_samples = s.regression_samples;
  params.matched_nn_k = s.matched_nn_k;
  params.matched_nn_target = s.matched_nn_target;
  params.tnet_points = s.tnet_points;

  if (dir_mode) ensure_dir(s.out);
  Rng root(config.seed);
  for (std::size_t i = 0; i < files.size(); ++i) {
    Shape input = load_shape(files[i]);
    params.seed = root.split(i + 1).seed();
    CanonicalShape canonical = canonicalize(input, mode, params, orient);

    std::string shape_out, base;
    if (dir_mode) {
      base = join_path(s.out, stem_of(files[i]));
      shape_out = base + (is_mesh(canonical.shape) ? ".obj" : ".xyz");
    } else {
      base = strip_ext(s.out);
      shape_out = s.out;
    }
    ensure_parent_dir(shape_out);
    save_shape(shape_out, canonical.shape);
    if (!is_mesh(canonical.shape) && s.emit_mesh && is_mesh(input)) {
      std::string mesh_out = base + ".obj";
      if (mesh_out != shape_out)
        save_shape(mesh_out,
                   Shape(apply_transform(as_mesh(input), canonical.transform)));
    }
    save_transform(base + ".transform.json", canonical.transform);
  }
  emit_run_config(config, s.out, dir_mode);
}

void cmd_select_voxels(const RunConfig& config) {
  const VoxelsSection& s = config.voxels;
  if (s.canonical_dir.empty())
    fail_invalid("select-voxels: canonical_dir is required");
  if (s.out.empty()) fail_invalid("select-voxels: out is required");

  VoxelGridSpec grid;
  grid.resolution = s.resolution;
  grid.extent = {Vec3(-s.extent, -s.extent, -s.extent),
                 Vec3(s.extent, s.extent, s.extent)};
  validate_grid(grid);

  std::vector<std::string> files = list_dir(s.canonical_dir, ".xyz");
  if (files.size() < 2)
    fail_invalid("select-voxels: need at least 2 canonical clouds, found " +
                 std::to_string(files.size()));
  std::vector<OccupancyGrid> occupancies;
  std::size_t dropped = 0;
  for (const std::string& f : files) {
    occupancies.push_back(voxelize_occupancy(as_cloud(load_shape(f)), grid));
    dropped += occupancies.back().dropped;
  }
  VoxelSelection selection = select_informative_voxels(occupancies, s.epsilon);
  ensure_parent_dir(s.out);
  save_selection(s.out, selection);

  ordered report;
  report["inputs"] = files.size();
  report["dim"] = selection.dim();
  report["epsilon"] = s.epsilon;
  report["resolution"] = s.resolution;
  report["extent"] = s.extent;
  report["dropped_points"] = dropped;
  write_file_atomic(s.out + ".report.json", report.dump(2) + "\n");
  emit_run_config(config, s.out, false);
}

void cmd_fit_pca(const RunConfig& config) {
  const PcaSection& s = config.pca;
  if (s.canonical_dir.empty())
    fail_invalid("fit-pca: canonical_dir is required");
  if (s.selection.empty()) fail_invalid("fit-pca: selection is required");
  if (s.out.empty()) fail_invalid("fit-pca: out is required");

  VoxelSelection selection = load_selection(s.selection);
  std::vector<std::string> files = list_dir(s.canonical_dir, ".xyz");
  if (files.empty()) fail_invalid("no .xyz clouds in " + s.canonical_dir);
  Eigen::MatrixXd udf(static_cast<Eigen::Index>(files.size()),
                      static_cast<Eigen::Index>(selection.dim()));
  for (std::size_t i = 0; i < files.size(); ++i)
    udf.row(static_cast<Eigen::Index>(i)) =
        compute_udf(as_cloud(load_shape(files[i])), selection).transpose();

  PcaBasis basis = fit_pca(udf, static_cast<Eigen::Index>(s.k));
  DescriptorSpace space{std::move(selection), std::move(basis)};
  ensure_parent_dir(s.out);
  save_descriptor_space(s.out, space);

  ordered report;
  report["shapes"] = files.size();
  report["dim"] = space.selection.dim();
  report["k"] = s.k;
  report["explained_variance_curve"] = explained_variance_curve(space.basis);
  report["effective_rank"] = effective_rank(space.basis);
  report["space_hash"] = hex64(descriptor_space_hash(space));
  write_file_atomic(s.out + ".report.json", report.dump(2) + "\n");
  emit_run_config(config, s.out, false);
}

void cmd_describe(const RunConfig& config) {
  const DescribeSection& s = config.describe;
  if (s.space.empty()) fail_invalid("describe: space is required");
  if (s.out.empty()) fail_invalid("describe: out is required");

  DescriptorSpace space = load_descriptor_space(s.space);
  std::vector<DescriptorRow> rows;
  std::error_code ec;
  if (fs::is_directory(s.in, ec)) {
    std::vector<std::string> files = list_dir(s.in, ".xyz");
    if (files.empty()) fail_invalid("no .xyz clouds in " + s.in);
    for (const std::string& f : files) {
      PointCloud cloud{shape_points(load_shape(f))};
      rows.push_back({stem_of(f), describe(space, cloud)});
    }
  } else {
    PointCloud cloud{shape_points(load_shape(s.in))};
    rows.push_back({"", describe(space, cloud)});
  }
  ensure_parent_dir(s.out);
  write_file_atomic(s.out, serialize_descriptor_rows(rows));
  write_space_sidecar(s.out, descriptor_space_hash(space));
  emit_run_config(config, s.out, false);
}

}  // namespace litege::cli
