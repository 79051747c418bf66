#include <doctest.h>

#include <cmath>
#include <set>

#include "sifem/errors.hpp"
#include "sifem/harness.hpp"
#include "sifem/mesh.hpp"

using namespace sifem;

TEST_CASE("grid construction and counts") {
  const StructuredQuadMesh m2 = build_grid(2, Box{Vec2(0, 0), Vec2(1, 1)});
  CHECK(m2.nodes().size() == 9);
  CHECK(m2.quads().size() == 4);
  CHECK(m2.facets().size() == 12);
  int interior = 0;
  for (const auto& f : m2.facets()) {
    if (!f.boundary) ++interior;
  }
  CHECK(interior == 4);

  const StructuredQuadMesh m20 = build_grid(20);
  CHECK(m20.hx() == doctest::Approx(0.05));

  const StructuredQuadMesh m3 = build_grid(3);
  int interior3 = 0;
  for (const auto& f : m3.facets()) {
    if (!f.boundary) ++interior3;
  }
  CHECK(interior3 == 12);  // 2 n (n-1)

  CHECK_THROWS_AS(build_grid(1), ConfigError);
}

TEST_CASE("element connectivity is counterclockwise with positive area") {
  const StructuredQuadMesh m = build_grid(4);
  for (const auto& q : m.quads()) {
    double area = 0.0;
    for (int a = 0; a < 4; ++a) {
      const Vec2& p0 = m.nodes()[q[a]];
      const Vec2& p1 = m.nodes()[q[(a + 1) % 4]];
      area += p0.x() * p1.y() - p1.x() * p0.y();
    }
    CHECK(area > 0.0);
  }
}

TEST_CASE("offset vertical crack selects one facet column") {
  const CaseSpec spec = builtin_case("offset", 20, EnforcementMode::Weak);
  const CrackCurve curve = make_crack(spec.cracks[0]);
  const StructuredQuadMesh grid = build_grid(20, spec.domain);
  const SurrogateInterface surr = select_surrogate(grid, curve);
  CHECK(surr.facets.size() == 20);
  for (const auto& f : surr.facets) {
    // Vertical facets: both endpoints share x; the normal is horizontal.
    CHECK(grid.nodes()[f.nodes[0]].x() == doctest::Approx(grid.nodes()[f.nodes[1]].x()));
    CHECK(std::abs(f.normal.y()) < 1e-14);
  }
  CHECK(surr.reaches_boundary[0]);
  CHECK(surr.reaches_boundary[1]);
}

TEST_CASE("aligned horizontal crack has unit cos phi") {
  // Crack exactly on the midline mesh row of an n=4 grid.
  CrackSpec cs;
  cs.kind = "segment";
  cs.center = Vec2(0.0, 0.0);
  cs.length = 1.0;
  cs.angle = 0.0;
  const CrackCurve curve = make_crack(cs);
  const StructuredQuadMesh grid = build_grid(4);
  const SurrogateInterface surr = select_surrogate(grid, curve);
  CHECK(surr.facets.size() == 4);
  const SplitMesh mesh = split_along(grid, {surr});
  const ShiftData shift = shift_data(mesh, 0, curve);
  for (const auto& f : shift.facets) {
    for (const auto& smp : f.quad) {
      CHECK(smp.cos_phi == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(smp.n_perp.norm() < 1e-14);
    }
  }
}

TEST_CASE("angled boundary crack forms a monotone staircase") {
  const CaseSpec spec = builtin_case("angled_boundary", 20, EnforcementMode::Weak);
  const CrackCurve curve = make_crack(spec.cracks[0]);
  const StructuredQuadMesh grid = build_grid(20, spec.domain);
  const SurrogateInterface surr = select_surrogate(grid, curve);
  CHECK(surr.facets.size() >= 20);
  CHECK(surr.facets.size() <= 40);
  int vertical = 0, horizontal = 0;
  for (const auto& f : surr.facets) {
    if (std::abs(f.normal.y()) < 1e-14) {
      ++vertical;
    } else {
      ++horizontal;
    }
  }
  CHECK(vertical > 0);
  CHECK(horizontal > 0);
  CHECK(surr.reaches_boundary[0]);
  CHECK(surr.reaches_boundary[1]);

  // cos phi magnitudes of the two facet orientations.
  const SplitMesh mesh = split_along(grid, {surr});
  const ShiftData shift = shift_data(mesh, 0, curve);
  for (std::size_t f = 0; f < shift.facets.size(); ++f) {
    const bool is_vertical = std::abs(surr.facets[f].normal.y()) < 1e-14;
    for (const auto& smp : shift.facets[f].quad) {
      const double expect = is_vertical ? 0.6 / std::sqrt(1.36) : 1.0 / std::sqrt(1.36);
      CHECK(std::abs(smp.cos_phi) == doctest::Approx(expect).epsilon(1e-10));
      CHECK(smp.cos_phi > 0.0);
      CHECK(std::abs(smp.n_perp.dot(smp.normal)) < 1e-12);
      CHECK(smp.cos_phi * smp.cos_phi + smp.n_perp.squaredNorm() ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("surrogate length approximates crack length for straight cracks") {
  const CaseSpec spec = builtin_case("angled_boundary", 20, EnforcementMode::Weak);
  const CrackCurve curve = make_crack(spec.cracks[0]);
  const StructuredQuadMesh grid = build_grid(20, spec.domain);
  const SurrogateInterface surr = select_surrogate(grid, curve);
  const SplitMesh mesh = split_along(grid, {surr});
  const ShiftData shift = shift_data(mesh, 0, curve);
  double mapped = 0.0;
  for (const auto& f : shift.facets) {
    mapped += f.length * 0.5 * (f.quad[0].cos_phi + f.quad[1].cos_phi);
  }
  const double L = curve.total_length();
  CHECK(std::abs(mapped - L) < 2.0 * grid.hx() * L);
}

TEST_CASE("empty and out-of-domain cracks raise configuration errors") {
  const StructuredQuadMesh grid = build_grid(8);
  const CrackCurve outside = make_segment(Vec2(5.0, 5.0), 1.0, 0.0);
  CHECK_THROWS_AS(select_surrogate(grid, outside), ConfigError);
}

TEST_CASE("split duplicates path nodes with side-consistent patches") {
  const CaseSpec spec = builtin_case("angled_embedded", 20, EnforcementMode::Weak);
  const CrackCurve curve = make_crack(spec.cracks[0]);
  const StructuredQuadMesh grid = build_grid(20, spec.domain);
  const SurrogateInterface surr = select_surrogate(grid, curve);
  const SplitMesh mesh = split_along(grid, {surr});

  const int n_path = static_cast<int>(surr.path_nodes.size());
  const int dup = static_cast<int>(mesh.duplicated_nodes().size());
  // Embedded: all path nodes except the two tips are duplicated.
  CHECK(dup == n_path - 2);
  CHECK(static_cast<int>(mesh.nodes().size()) == mesh.base_node_count() + dup);

  // Tips single-valued.
  const CrackTopology& topo = mesh.cracks()[0];
  CHECK(topo.path_plus.front() == topo.path_minus.front());
  CHECK(topo.path_plus.back() == topo.path_minus.back());

  // Every duplicated node appears in at least one element on each side and
  // the plus/minus ids never share an element.
  for (const auto& d : mesh.duplicated_nodes()) {
    int plus_count = 0, minus_count = 0;
    for (const auto& q : mesh.quads()) {
      bool has_plus = false, has_minus = false;
      for (int v : q) {
        if (v == d[1]) has_plus = true;
        if (v == d[2]) has_minus = true;
      }
      CHECK(!(has_plus && has_minus));
      plus_count += has_plus;
      minus_count += has_minus;
    }
    CHECK(plus_count >= 1);
    CHECK(minus_count >= 1);
  }
}

TEST_CASE("boundary-reaching split duplicates the endpoint nodes") {
  const CaseSpec spec = builtin_case("offset", 20, EnforcementMode::Weak);
  const CrackCurve curve = make_crack(spec.cracks[0]);
  const StructuredQuadMesh grid = build_grid(20, spec.domain);
  const SurrogateInterface surr = select_surrogate(grid, curve);
  const SplitMesh mesh = split_along(grid, {surr});
  // 20 facets -> 21 path nodes, all duplicated.
  CHECK(mesh.duplicated_nodes().size() == 21);
}

TEST_CASE("empty surrogate list leaves the mesh unchanged") {
  const StructuredQuadMesh grid = build_grid(5);
  const SplitMesh mesh = split_along(grid, {});
  CHECK(mesh.nodes().size() == grid.nodes().size());
  CHECK(mesh.quads() == grid.quads());
  CHECK(mesh.path_node_count() == 0);
}

TEST_CASE("overlapping surrogates are rejected") {
  const StructuredQuadMesh grid = build_grid(8);
  const CrackCurve c1 = make_segment(Vec2(0.01, 0.0), 0.5, M_PI / 2.0);
  const SurrogateInterface s1 = select_surrogate(grid, c1);
  CHECK_THROWS_AS(split_along(grid, {s1, s1}), ConfigError);
}

TEST_CASE("offset crack shift data is constant and horizontal") {
  const CaseSpec spec = builtin_case("offset", 20, EnforcementMode::Weak);
  const CrackCurve curve = make_crack(spec.cracks[0]);
  const StructuredQuadMesh grid = build_grid(20, spec.domain);
  const SurrogateInterface surr = select_surrogate(grid, curve);
  const SplitMesh mesh = split_along(grid, {surr});
  const ShiftData shift = shift_data(mesh, 0, curve);

  const double x_crack = spec.cracks[0].center.x();
  const double x_facet = grid.nodes()[surr.facets[0].nodes[0]].x();
  for (const auto& f : shift.facets) {
    for (const auto& smp : f.quad) {
      CHECK(smp.gap.x() == doctest::Approx(x_crack - x_facet).epsilon(1e-12));
      CHECK(std::abs(smp.gap.y()) < 1e-12);
      CHECK(smp.cos_phi == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("zero-gap aligned crack has zero shift") {
  CrackSpec cs;
  cs.kind = "segment";
  cs.center = Vec2(0.0, 0.0);
  cs.length = 1.0;
  cs.angle = 0.0;
  const CrackCurve curve = make_crack(cs);
  const StructuredQuadMesh grid = build_grid(4);
  const SurrogateInterface surr = select_surrogate(grid, curve);
  const SplitMesh mesh = split_along(grid, {surr});
  const ShiftData shift = shift_data(mesh, 0, curve);
  for (const auto& f : shift.facets) {
    for (const auto& smp : f.quad) CHECK(smp.gap.norm() < 1e-14);
  }
}

TEST_CASE("multicrack surrogates build cleanly at n=40") {
  const CaseSpec spec = builtin_case("multicrack", 40, EnforcementMode::Weak);
  const StructuredQuadMesh grid = build_grid(40, spec.domain);
  std::vector<SurrogateInterface> surrogates;
  for (const auto& cs : spec.cracks) {
    surrogates.push_back(select_surrogate(grid, make_crack(cs)));
  }
  const SplitMesh mesh = split_along(grid, surrogates);
  CHECK(mesh.cracks().size() == 4);
  for (std::size_t c = 0; c < 4; ++c) {
    const ShiftData shift = shift_data(mesh, static_cast<int>(c), make_crack(spec.cracks[c]));
    CHECK(!shift.any_flagged);
  }
}
