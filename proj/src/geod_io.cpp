#include "litege/geod_io.hpp"

#include <json.hpp>

#include "litege/binio.hpp"
#include "litege/fileio.hpp"

namespace litege {

namespace {

constexpr std::uint32_t kVersion = 1;

}  // namespace

std::string serialize_geodesic_samples(const std::vector<GeodesicSample>& samples) {
  ByteWriter w;
  w.magic("GEOD");
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(samples.size()));
  for (const GeodesicSample& s : samples) {
    w.u32(s.shape_id);
    for (int a = 0; a < 3; ++a) w.f32(static_cast<float>(s.src[a]));
    for (int a = 0; a < 3; ++a) w.f32(static_cast<float>(s.dst[a]));
    w.f32(static_cast<float>(s.distance));
  }
  return w.str();
}

std::vector<GeodesicSample> deserialize_geodesic_samples(const std::string& data,
                                                         const std::string& origin) {
  ByteReader r(data, origin);
  r.magic("GEOD");
  std::uint32_t version = r.u32();
  if (version != kVersion)
    fail_invalid(origin + ": unsupported version " + std::to_string(version));
  std::uint32_t count = r.u32();
  std::vector<GeodesicSample> samples(count);
  for (GeodesicSample& s : samples) {
    s.shape_id = r.u32();
    for (int a = 0; a < 3; ++a) s.src[a] = r.f32();
    for (int a = 0; a < 3; ++a) s.dst[a] = r.f32();
    s.distance = r.f32();
    if (!(s.distance >= 0) || !s.src.allFinite() || !s.dst.allFinite())
      fail_invalid(origin + ": corrupt sample record");
  }
  r.expect_done();
  return samples;
}

void save_geodesic_dataset(const std::string& path,
                           const std::vector<GeodesicSample>& samples,
                           const GeodesicDatasetMeta& meta) {
  write_file_atomic(path, serialize_geodesic_samples(samples));
  nlohmann::json j;
  j["shapes"] = meta.shapes;
  j["seed"] = meta.seed;
  j["subdivision"] = meta.subdivision;
  j["scaling_factor"] = meta.scaling_factor;
  j["num_sources"] = meta.num_sources;
  j["num_dests"] = meta.num_dests;
  j["skipped_disconnected"] = meta.skipped_disconnected;
  j["shared_pairs"] = meta.shared_pairs;
  j["record_count"] = samples.size();
  write_file_atomic(path + ".json", j.dump(2) + "\n");
}

std::pair<std::vector<GeodesicSample>, GeodesicDatasetMeta> load_geodesic_dataset(
    const std::string& path) {
  std::vector<GeodesicSample> samples =
      deserialize_geodesic_samples(read_file(path), path);
  GeodesicDatasetMeta meta;
  const std::string manifest_path = path + ".json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    fail_invalid(manifest_path + ": bad JSON: " + e.what());
  }
  try {
    meta.shapes = j.at("shapes").get<std::vector<std::string>>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.subdivision = j.at("subdivision").get<int>();
    meta.scaling_factor = j.at("scaling_factor").get<double>();
    meta.num_sources = j.at("num_sources").get<std::size_t>();
    meta.num_dests = j.at("num_dests").get<std::size_t>();
    meta.skipped_disconnected = j.at("skipped_disconnected").get<std::size_t>();
    meta.shared_pairs = j.value("shared_pairs", false);
  } catch (const nlohmann::json::exception& e) {
    fail_invalid(manifest_path + ": missing or mistyped field: " + e.what());
  }
  if (j.at("record_count").get<std::size_t>() != samples.size())
    fail_invalid(manifest_path + ": record_count disagrees with data file");
  return {std::move(samples), meta};
}

}  // namespace litege
