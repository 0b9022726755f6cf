#include "litege/family.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace litege {

namespace {

void check_range(double v, double lo, double hi, const std::string& name) {
  if (!(v >= lo && v <= hi))
    fail_invalid("family params: " + name + "=" + std::to_string(v) +
                 " outside [" + std::to_string(lo) + ", " + std::to_string(hi) +
                 "]");
}

}  // namespace

void validate_family_params(const FamilyParams& p) {
  check_range(p.ax, 0.5, 2.0, "ax");
  check_range(p.ay, 0.5, 2.0, "ay");
  check_range(p.az, 0.5, 2.0, "az");
  check_range(p.exponent, 1.2, 6.0, "exponent");
  if (!(p.base_radius > 0.0 && p.base_radius <= 10.0))
    fail_invalid("family params: base_radius outside (0, 10]");
  for (int i = 0; i < 3; ++i) {
    check_range(p.lobe_amp[i], 0.0, 0.8, "lobe_amp");
    check_range(p.lobe_sharp[i], 1.0, 20.0, "lobe_sharp");
  }
  if (p.noise_lobes < 0 || p.noise_lobes > 16)
    fail_invalid("family params: noise_lobes outside [0, 16]");
  check_range(p.noise_amp, 0.0, 0.5, "noise_amp");
  check_range(p.noise_sharp_min, 1.0, 20.0, "noise_sharp_min");
  check_range(p.noise_sharp_max, p.noise_sharp_min, 20.0, "noise_sharp_max");
  if (p.subdivision < 0 || p.subdivision > 7)
    fail_invalid("family params: subdivision outside [0, 7]");
}

TriangleMesh make_icosphere(int subdivision) {
  if (subdivision < 0 || subdivision > 7)
    fail_invalid("icosphere: subdivision outside [0, 7]");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh mesh;
  mesh.vertices = {
      {-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1},
  };
  for (Vec3& v : mesh.vertices) v.normalize();
  mesh.faces = {
      {0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };
  for (int level = 0; level < subdivision; ++level) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) -> std::uint32_t {
      auto key = std::make_pair(std::min(a, b), std::max(a, b));
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 m = (mesh.vertices[a] + mesh.vertices[b]).normalized();
      std::uint32_t id = static_cast<std::uint32_t>(mesh.vertices.size());
      mesh.vertices.push_back(m);
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<std::uint32_t, 3>> faces;
    faces.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
      std::uint32_t m01 = mid(f[0], f[1]);
      std::uint32_t m12 = mid(f[1], f[2]);
      std::uint32_t m20 = mid(f[2], f[0]);
      faces.push_back({f[0], m01, m20});
      faces.push_back({f[1], m12, m01});
      faces.push_back({f[2], m20, m12});
      faces.push_back({m01, m12, m20});
    }
    mesh.faces = std::move(faces);
  }
  return mesh;
}

TriangleMesh gen_synthetic_family(const FamilyParams& params,
                                  std::uint64_t seed) {
  validate_family_params(params);
  TriangleMesh mesh = make_icosphere(params.subdivision);

  const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
  std::vector<Vec3> lobe_dirs = {
      Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(inv_sqrt3, inv_sqrt3, inv_sqrt3)};
  std::vector<double> lobe_amps(params.lobe_amp, params.lobe_amp + 3);
  std::vector<double> lobe_sharps(params.lobe_sharp, params.lobe_sharp + 3);

  Rng rng = Rng(seed).split(0x6c6f6265);
  for (int i = 0; i < params.noise_lobes; ++i) {
    Vec3 d(rng.normal(), rng.normal(), rng.normal());
    while (d.norm() < 1e-6) d = Vec3(rng.normal(), rng.normal(), rng.normal());
    lobe_dirs.push_back(d.normalized());
    lobe_amps.push_back(rng.uniform(0.0, params.noise_amp));
    lobe_sharps.push_back(rng.uniform(params.noise_sharp_min, params.noise_sharp_max));
  }

  const double m = params.exponent;
  for (Vec3& v : mesh.vertices) {
    Vec3 u = v;  // unit direction
    double se = std::pow(std::pow(std::abs(u.x() / params.ax), m) +
                             std::pow(std::abs(u.y() / params.ay), m) +
                             std::pow(std::abs(u.z() / params.az), m),
                         -1.0 / m);
    double lobes = 1.0;
    for (std::size_t i = 0; i < lobe_dirs.size(); ++i) {
      if (lobe_amps[i] == 0.0) continue;
      lobes += lobe_amps[i] * std::exp(lobe_sharps[i] * (u.dot(lobe_dirs[i]) - 1.0));
    }
    v = u * (params.base_radius * se * lobes);
  }
  return mesh;
}

FamilyParams sample_family_params(Rng& rng, int subdivision) {
  FamilyParams p;
  p.subdivision = subdivision;
  p.ax = rng.uniform(0.7, 1.4);
  p.ay = rng.uniform(0.7, 1.4);
  p.az = rng.uniform(0.7, 1.4);
  p.exponent = rng.uniform(1.7, 3.5);
  // Disjoint amplitude bands: lobe 0 always strongest, lobe 2 weakest.
  p.lobe_amp[0] = rng.uniform(0.25, 0.5);
  p.lobe_amp[1] = rng.uniform(0.12, 0.25);
  p.lobe_amp[2] = rng.uniform(0.0, 0.1);
  for (int i = 0; i < 3; ++i) p.lobe_sharp[i] = rng.uniform(5.0, 10.0);
  return p;
}

}  // namespace litege
