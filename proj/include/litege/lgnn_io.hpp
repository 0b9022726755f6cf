#pragma once

#include <cstdint>
#include <string>

#include "litege/descriptor.hpp"
#include "litege/nn_models.hpp"

namespace litege {

// Fingerprint of the serialized descriptor space a pair net was trained
// against; stored in the model file and checked at load time.
std::uint64_t descriptor_space_hash(const DescriptorSpace& space);

struct SavedPairNet {
  GeodesicNet net;
  CoordStats stats;
  std::uint64_t basis_hash = 0;
};

// "LGNN": magic, version u32, arch u32 (0 regressor, 1 matcher, 2 tnet),
// two length-prefixed u32 dimension lists, coordinate stats 6*f64, basis
// hash u64, then length-prefixed parameter and buffer f64 vectors.
std::string serialize_pair_net(const GeodesicNet& net, const CoordStats& stats,
                               std::uint64_t basis_hash);
SavedPairNet deserialize_pair_net(const std::string& data,
                                  const std::string& origin);
void save_pair_net(const std::string& path, const GeodesicNet& net,
                   const CoordStats& stats, std::uint64_t basis_hash);
// expected_basis_hash 0 skips the check; a mismatch fails unless forced.
SavedPairNet load_pair_net(const std::string& path,
                           std::uint64_t expected_basis_hash = 0,
                           bool force = false);

std::string serialize_tnet(const TNet& net);
TNet deserialize_tnet(const std::string& data, const std::string& origin);
void save_tnet(const std::string& path, const TNet& net);
TNet load_tnet(const std::string& path);

}  // namespace litege
