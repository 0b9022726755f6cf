#include "litege/upca_io.hpp"

#include "litege/binio.hpp"
#include "litege/fileio.hpp"

namespace litege {

namespace {

constexpr std::uint32_t kVersion = 1;

void write_grid(ByteWriter& w, const VoxelGridSpec& grid) {
  w.u32(grid.resolution);
  for (int a = 0; a < 3; ++a) w.f64(grid.extent.min[a]);
  for (int a = 0; a < 3; ++a) w.f64(grid.extent.max[a]);
}

VoxelGridSpec read_grid(ByteReader& r) {
  VoxelGridSpec grid;
  grid.resolution = r.u32();
  for (int a = 0; a < 3; ++a) grid.extent.min[a] = r.f64();
  for (int a = 0; a < 3; ++a) grid.extent.max[a] = r.f64();
  validate_grid(grid);
  return grid;
}

void check_version(ByteReader& r, const std::string& origin) {
  std::uint32_t version = r.u32();
  if (version != kVersion)
    fail_invalid(origin + ": unsupported version " + std::to_string(version));
}

}  // namespace

std::string serialize_selection(const VoxelSelection& selection) {
  validate_selection(selection);
  ByteWriter w;
  w.magic("UVOX");
  w.u32(kVersion);
  write_grid(w, selection.grid);
  w.u32(static_cast<std::uint32_t>(selection.voxel_ids.size()));
  for (std::uint32_t id : selection.voxel_ids) w.u32(id);
  w.f64(selection.epsilon);
  return w.str();
}

VoxelSelection deserialize_selection(const std::string& data, const std::string& origin) {
  ByteReader r(data, origin);
  r.magic("UVOX");
  check_version(r, origin);
  VoxelGridSpec grid = read_grid(r);
  std::uint32_t count = r.u32();
  std::vector<std::uint32_t> ids(count);
  for (std::uint32_t& id : ids) id = r.u32();
  double epsilon = r.f64();
  r.expect_done();
  return make_selection(grid, std::move(ids), epsilon);
}

void save_selection(const std::string& path, const VoxelSelection& selection) {
  write_file_atomic(path, serialize_selection(selection));
}

VoxelSelection load_selection(const std::string& path) {
  return deserialize_selection(read_file(path), path);
}

std::string serialize_descriptor_space(const DescriptorSpace& space) {
  validate_selection(space.selection);
  validate_basis(space.basis);
  if (space.basis.dim() != static_cast<Eigen::Index>(space.selection.dim()))
    fail_invalid("descriptor space: basis dimension does not match selection size");

  const PcaBasis& b = space.basis;
  auto d = static_cast<std::uint32_t>(b.dim());
  auto k = static_cast<std::uint32_t>(b.k());
  ByteWriter w;
  w.magic("UPCA");
  w.u32(kVersion);
  w.u32(d);
  w.u32(k);
  for (std::uint32_t j = 0; j < d; ++j) w.f64(b.mean[j]);
  for (std::uint32_t i = 0; i < k; ++i)
    for (std::uint32_t j = 0; j < d; ++j) w.f64(b.components(i, j));
  for (std::uint32_t i = 0; i < k; ++i) w.f64(b.explained_variance[i]);
  w.f64(b.total_variance);
  write_grid(w, space.selection.grid);
  for (std::uint32_t id : space.selection.voxel_ids) w.u32(id);
  w.f64(space.selection.epsilon);
  return w.str();
}

DescriptorSpace deserialize_descriptor_space(const std::string& data,
                                             const std::string& origin) {
  ByteReader r(data, origin);
  r.magic("UPCA");
  check_version(r, origin);
  std::uint32_t d = r.u32();
  std::uint32_t k = r.u32();
  if (d == 0 || k == 0) fail_invalid(origin + ": empty basis");

  DescriptorSpace space;
  PcaBasis& b = space.basis;
  b.mean.resize(d);
  for (std::uint32_t j = 0; j < d; ++j) b.mean[j] = r.f64();
  b.components.resize(k, d);
  for (std::uint32_t i = 0; i < k; ++i)
    for (std::uint32_t j = 0; j < d; ++j) b.components(i, j) = r.f64();
  b.explained_variance.resize(k);
  for (std::uint32_t i = 0; i < k; ++i) b.explained_variance[i] = r.f64();
  b.total_variance = r.f64();

  VoxelGridSpec grid = read_grid(r);
  std::vector<std::uint32_t> ids(d);
  for (std::uint32_t& id : ids) id = r.u32();
  double epsilon = r.f64();
  r.expect_done();

  space.selection = make_selection(grid, std::move(ids), epsilon);
  validate_basis(b);
  return space;
}

void save_descriptor_space(const std::string& path, const DescriptorSpace& space) {
  write_file_atomic(path, serialize_descriptor_space(space));
}

DescriptorSpace load_descriptor_space(const std::string& path) {
  return deserialize_descriptor_space(read_file(path), path);
}

}  // namespace litege
