#pragma once

#include <cstdint>
#include <vector>

#include "litege/geometry.hpp"

namespace litege {

// Area-weighted uniform surface sampling, reproducible for a fixed seed.
// face_ids, when given, receives the source face of each sample.
PointCloud sample_surface(const TriangleMesh& mesh, std::size_t n,
                          std::uint64_t seed,
                          std::vector<std::uint32_t>* face_ids = nullptr);

// Greedy sample elimination: repeatedly drop the most crowded point (smallest
// 1-NN distance, ties by 2-NN distance then index) until k remain. The
// procedure is fully deterministic; seed is accepted for interface stability
// and does not affect the result.
std::vector<std::uint32_t> poisson_disk_indices(const PointCloud& points,
                                                std::size_t k,
                                                std::uint64_t seed);
PointCloud poisson_disk_sample(const PointCloud& points, std::size_t k,
                               std::uint64_t seed);

// Mean over all points of the distance to their nearest other point.
double mean_nn_distance(const PointCloud& points);

}  // namespace litege
