#include "litege/lgnn_io.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "litege/binio.hpp"
#include "litege/fileio.hpp"
#include "litege/hashing.hpp"
#include "litege/upca_io.hpp"

namespace litege {

namespace {

constexpr char kMagic[4] = {'L', 'G', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

void write_dim_list(ByteWriter& w, const std::vector<Eigen::Index>& dims) {
  w.u32(static_cast<std::uint32_t>(dims.size()));
  for (Eigen::Index d : dims) {
    w.u32(static_cast<std::uint32_t>(d));
  }
}

std::vector<Eigen::Index> read_dim_list(ByteReader& r,
                                        const std::string& origin) {
  const std::uint32_t n = r.u32();
  if (n > 64) {
    fail_invalid(origin + ": unreasonable dimension list length");
  }
  std::vector<Eigen::Index> dims(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t d = r.u32();
    if (d < 1) {
      fail_invalid(origin + ": dimensions must be positive");
    }
    dims[i] = static_cast<Eigen::Index>(d);
  }
  return dims;
}

void write_vector(ByteWriter& w, const Eigen::VectorXd& v) {
  w.u64(static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    w.f64(v[i]);
  }
}

Eigen::VectorXd read_vector(ByteReader& r, Eigen::Index expected,
                            const std::string& origin, const char* what) {
  const std::uint64_t n = r.u64();
  if (n != static_cast<std::uint64_t>(expected)) {
    fail_invalid(origin + ": " + what + " length does not match architecture");
  }
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    v[i] = r.f64();
    if (!std::isfinite(v[i])) {
      fail_invalid(origin + std::string(": non-finite ") + what);
    }
  }
  return v;
}

void write_stats(ByteWriter& w, const CoordStats& stats) {
  for (int i = 0; i < 3; ++i) {
    w.f64(stats.mean[i]);
  }
  for (int i = 0; i < 3; ++i) {
    w.f64(stats.std[i]);
  }
}

CoordStats read_stats(ByteReader& r, const std::string& origin) {
  CoordStats stats;
  for (int i = 0; i < 3; ++i) {
    stats.mean[i] = r.f64();
  }
  for (int i = 0; i < 3; ++i) {
    stats.std[i] = r.f64();
    if (!(std::isfinite(stats.std[i]) && stats.std[i] > 0.0)) {
      fail_invalid(origin + ": coordinate std must be positive and finite");
    }
    if (!std::isfinite(stats.mean[i])) {
      fail_invalid(origin + ": non-finite coordinate mean");
    }
  }
  return stats;
}

}  // namespace

std::uint64_t descriptor_space_hash(const DescriptorSpace& space) {
  return fnv1a64(serialize_descriptor_space(space));
}

std::string serialize_pair_net(const GeodesicNet& net, const CoordStats& stats,
                               std::uint64_t basis_hash) {
  ByteWriter w;
  w.magic(kMagic);
  w.u32(kVersion);
  w.u32(net.width_multiplier() == 1 ? 0u : 1u);
  write_dim_list(w, {net.descriptor_dim()});
  write_dim_list(w, {});
  write_stats(w, stats);
  w.u64(basis_hash);
  Eigen::VectorXd flat;
  net.copy_params(flat);
  write_vector(w, flat);
  net.copy_buffers(flat);
  write_vector(w, flat);
  return w.str();
}

SavedPairNet deserialize_pair_net(const std::string& data,
                                  const std::string& origin) {
  ByteReader r(data, origin);
  r.magic(kMagic);
  if (r.u32() != kVersion) {
    fail_invalid(origin + ": unsupported model version");
  }
  const std::uint32_t arch = r.u32();
  if (arch > 1) {
    fail_invalid(origin + ": not a pair-distance model");
  }
  const std::vector<Eigen::Index> dims = read_dim_list(r, origin);
  const std::vector<Eigen::Index> extra = read_dim_list(r, origin);
  if (dims.size() != 1 || !extra.empty()) {
    fail_invalid(origin + ": malformed pair-net dimension lists");
  }
  const CoordStats stats = read_stats(r, origin);
  const std::uint64_t basis_hash = r.u64();

  GeodesicNet net(dims[0], arch == 0 ? 1 : 2, 0);
  net.load_params(read_vector(r, net.param_count(), origin, "parameters"));
  net.load_buffers(read_vector(r, net.buffer_count(), origin, "buffers"));
  r.expect_done();
  return SavedPairNet{std::move(net), stats, basis_hash};
}

void save_pair_net(const std::string& path, const GeodesicNet& net,
                   const CoordStats& stats, std::uint64_t basis_hash) {
  write_file_atomic(path, serialize_pair_net(net, stats, basis_hash));
}

SavedPairNet load_pair_net(const std::string& path,
                           std::uint64_t expected_basis_hash, bool force) {
  SavedPairNet saved = deserialize_pair_net(read_file(path), path);
  if (expected_basis_hash != 0 && saved.basis_hash != expected_basis_hash &&
      !force) {
    fail_invalid(path +
                 ": model was trained against a different descriptor space "
                 "(pass force to override)");
  }
  return saved;
}

std::string serialize_tnet(const TNet& net) {
  ByteWriter w;
  w.magic(kMagic);
  w.u32(kVersion);
  w.u32(2u);
  write_dim_list(w, net.config().point_widths);
  write_dim_list(w, net.config().head_widths);
  write_stats(w, CoordStats{});
  w.u64(0);
  Eigen::VectorXd flat;
  net.copy_params(flat);
  write_vector(w, flat);
  net.copy_buffers(flat);
  write_vector(w, flat);
  return w.str();
}

TNet deserialize_tnet(const std::string& data, const std::string& origin) {
  ByteReader r(data, origin);
  r.magic(kMagic);
  if (r.u32() != kVersion) {
    fail_invalid(origin + ": unsupported model version");
  }
  if (r.u32() != 2) {
    fail_invalid(origin + ": not an orientation model");
  }
  TNetConfig config;
  config.point_widths = read_dim_list(r, origin);
  config.head_widths = read_dim_list(r, origin);
  read_stats(r, origin);
  r.u64();

  TNet net(config, 0);
  net.load_params(read_vector(r, net.param_count(), origin, "parameters"));
  net.load_buffers(read_vector(r, net.buffer_count(), origin, "buffers"));
  r.expect_done();
  return net;
}

void save_tnet(const std::string& path, const TNet& net) {
  write_file_atomic(path, serialize_tnet(net));
}

TNet load_tnet(const std::string& path) {
  return deserialize_tnet(read_file(path), path);
}

}  // namespace litege
