#pragma once

#include <cstdint>

#include "litege/geometry.hpp"
#include "litege/prng.hpp"

namespace litege {

// Parametric deformation family: a superellipsoid radial profile times a set
// of smooth directional lobes, evaluated on an icosphere. All parameters move
// vertex positions continuously; defaults give the unit sphere.
//
// Valid ranges (validate_family_params): semi-axes [0.5, 2], exponent
// [1.2, 6], base_radius (0, 10], lobe amplitudes [0, 0.8], sharpness [1, 20],
// noise_lobes [0, 16], noise_amp [0, 0.5], subdivision [0, 7].
struct FamilyParams {
  double ax = 1.0, ay = 1.0, az = 1.0;
  double exponent = 2.0;
  double base_radius = 1.0;
  // Fixed lobe directions +x, +y, normalize(1,1,1). Disjoint sampling ranges
  // for the three amplitudes keep the canonical orientation identifiable.
  double lobe_amp[3] = {0.0, 0.0, 0.0};
  double lobe_sharp[3] = {8.0, 8.0, 8.0};
  // Extra seeded lobes in random directions; amplitude 0 disables them.
  int noise_lobes = 0;
  double noise_amp = 0.0;
  double noise_sharp_min = 4.0;
  double noise_sharp_max = 12.0;
  int subdivision = 4;
};

void validate_family_params(const FamilyParams& params);

// Unit icosphere, 10*4^s + 2 vertices, 20*4^s faces, outward orientation.
TriangleMesh make_icosphere(int subdivision);

TriangleMesh gen_synthetic_family(const FamilyParams& params,
                                  std::uint64_t seed);

// Draws parameters from the documented acceptance-family ranges.
FamilyParams sample_family_params(Rng& rng, int subdivision = 4);

}  // namespace litege
