#pragma once

#include <string>

#include "litege/descriptor.hpp"

namespace litege {

// "UVOX": the frozen voxel selection alone (pre-PCA pipeline stage).
std::string serialize_selection(const VoxelSelection& selection);
VoxelSelection deserialize_selection(const std::string& data, const std::string& origin);
void save_selection(const std::string& path, const VoxelSelection& selection);
VoxelSelection load_selection(const std::string& path);

// "UPCA": selection + fitted basis, little-endian: magic, version u32, d u32,
// k u32, mean d*f64, components k*d f64 row-major, explained_variance k*f64,
// total_variance f64, grid spec (resolution u32, min 3*f64, max 3*f64),
// voxel_ids d*u32, epsilon f64.
std::string serialize_descriptor_space(const DescriptorSpace& space);
DescriptorSpace deserialize_descriptor_space(const std::string& data,
                                             const std::string& origin);
void save_descriptor_space(const std::string& path, const DescriptorSpace& space);
DescriptorSpace load_descriptor_space(const std::string& path);

}  // namespace litege
