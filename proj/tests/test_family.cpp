#include <doctest.h>

#include <cmath>

#include "litege/error.hpp"
#include "litege/family.hpp"
#include "test_helpers.hpp"

using namespace litege;

TEST_CASE("default parameters give the base-radius sphere") {
  FamilyParams p;
  p.subdivision = 2;
  p.base_radius = 1.5;
  TriangleMesh mesh = gen_synthetic_family(p, 0);
  CHECK(mesh.vertices.size() == 162);
  for (const Vec3& v : mesh.vertices)
    CHECK(std::abs(v.norm() - 1.5) < 1e-12);
}

TEST_CASE("same params and seed produce identical meshes") {
  Rng rng(5);
  FamilyParams p = sample_family_params(rng, 3);
  p.noise_lobes = 4;
  p.noise_amp = 0.1;
  TriangleMesh a = gen_synthetic_family(p, 42);
  TriangleMesh b = gen_synthetic_family(p, 42);
  REQUIRE(a.vertices.size() == b.vertices.size());
  for (std::size_t i = 0; i < a.vertices.size(); ++i)
    CHECK(a.vertices[i] == b.vertices[i]);
  CHECK(a.faces == b.faces);

  TriangleMesh c = gen_synthetic_family(p, 43);
  bool all_equal = true;
  for (std::size_t i = 0; i < a.vertices.size(); ++i)
    if (a.vertices[i] != c.vertices[i]) all_equal = false;
  CHECK(!all_equal);
}

TEST_CASE("family meshes are watertight and deform continuously") {
  Rng rng(9);
  FamilyParams p = sample_family_params(rng, 3);
  TriangleMesh a = gen_synthetic_family(p, 0);
  CHECK(litege_test::is_watertight(a));

  FamilyParams q = p;
  q.ax += 1e-6;
  q.lobe_amp[0] += 1e-6;
  TriangleMesh b = gen_synthetic_family(q, 0);
  double max_move = 0.0;
  for (std::size_t i = 0; i < a.vertices.size(); ++i)
    max_move = std::max(max_move, (a.vertices[i] - b.vertices[i]).norm());
  CHECK(max_move < 1e-4);
  CHECK(max_move > 0.0);
}

TEST_CASE("sampled parameters are valid and keep the lobe hierarchy") {
  Rng rng(77);
  for (int i = 0; i < 50; ++i) {
    FamilyParams p = sample_family_params(rng, 4);
    CHECK_NOTHROW(validate_family_params(p));
    CHECK(p.lobe_amp[0] > p.lobe_amp[1]);
    CHECK(p.lobe_amp[1] > p.lobe_amp[2]);
  }
}

TEST_CASE("out-of-range parameters are rejected") {
  FamilyParams p;
  p.exponent = 0.5;
  CHECK_THROWS_AS((void)gen_synthetic_family(p, 0), Error);
  FamilyParams q;
  q.subdivision = 9;
  CHECK_THROWS_AS((void)gen_synthetic_family(q, 0), Error);
}

TEST_CASE("icosphere vertex counts follow 10*4^s + 2") {
  CHECK(make_icosphere(0).vertices.size() == 12);
  CHECK(make_icosphere(1).vertices.size() == 42);
  CHECK(make_icosphere(2).vertices.size() == 162);
  CHECK(litege_test::is_watertight(make_icosphere(2)));
}
