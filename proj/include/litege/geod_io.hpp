#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "litege/oracle.hpp"

namespace litege {

struct GeodesicDatasetMeta {
  std::vector<std::string> shapes;
  std::uint64_t seed = 0;
  int subdivision = 1;
  double scaling_factor = 1.0;
  std::size_t num_sources = 0;
  std::size_t num_dests = 0;
  std::size_t skipped_disconnected = 0;
  // True when every shape holds the same vertex pairs in the same order.
  bool shared_pairs = false;
};

// "GEOD": magic, version u32, count u32, then 32-byte records
// (shape_id u32, src f32 x3, dst f32 x3, distance f32). A JSON manifest with
// the meta fields is written next to the file at path + ".json".
std::string serialize_geodesic_samples(const std::vector<GeodesicSample>& samples);
std::vector<GeodesicSample> deserialize_geodesic_samples(const std::string& data,
                                                         const std::string& origin);

void save_geodesic_dataset(const std::string& path,
                           const std::vector<GeodesicSample>& samples,
                           const GeodesicDatasetMeta& meta);
std::pair<std::vector<GeodesicSample>, GeodesicDatasetMeta> load_geodesic_dataset(
    const std::string& path);

}  // namespace litege
