#include <doctest.h>

#include <cmath>
#include <random>

#include "sifem/fem.hpp"
#include "sifem/harness.hpp"
#include "sifem/mesh.hpp"

using namespace sifem;

TEST_CASE("Q1 nodal interpolation and partition of unity") {
  const BasisEval at_corner = eval_basis(BasisFamily::Q1, -1.0, -1.0);
  CHECK(at_corner.value[0] == doctest::Approx(1.0));
  CHECK(at_corner.value[1] == doctest::Approx(0.0));
  CHECK(at_corner.value[2] == doctest::Approx(0.0));
  CHECK(at_corner.value[3] == doctest::Approx(0.0));

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double xi = dist(rng), eta = dist(rng);
    const BasisEval ev = eval_basis(BasisFamily::Q1, xi, eta);
    double sum = 0.0;
    Vec2 gsum = Vec2::Zero();
    for (int a = 0; a < 4; ++a) {
      sum += ev.value[a];
      gsum += ev.grad[a];
    }
    CHECK(std::abs(sum - 1.0) < 1e-14);
    CHECK(gsum.norm() < 1e-14);
  }
}

TEST_CASE("bubble vanishes on all four reference edges") {
  for (double t = -1.0; t <= 1.0; t += 0.125) {
    for (const Vec2 p : {Vec2(t, -1.0), Vec2(t, 1.0), Vec2(-1.0, t), Vec2(1.0, t)}) {
      const BasisEval ev = eval_basis(BasisFamily::Q1Bubble, p.x(), p.y());
      CHECK(std::abs(ev.value[4]) < 1e-14);
    }
  }
  const BasisEval center = eval_basis(BasisFamily::Q1Bubble, 0.0, 0.0);
  CHECK(center.value[4] == doctest::Approx(1.0));
}

TEST_CASE("Q1 gradient at the reference center") {
  const BasisEval ev = eval_basis(BasisFamily::Q1, 0.0, 0.0);
  CHECK(ev.grad[0].x() == doctest::Approx(-0.25));
  CHECK(ev.grad[0].y() == doctest::Approx(-0.25));
}

TEST_CASE("basis gradients match finite differences") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-0.9, 0.9);
  const double eps = 1e-6;
  for (int i = 0; i < 20; ++i) {
    const double xi = dist(rng), eta = dist(rng);
    const BasisEval ev = eval_basis(BasisFamily::Q1Bubble, xi, eta);
    const BasisEval exp = eval_basis(BasisFamily::Q1Bubble, xi + eps, eta);
    const BasisEval exm = eval_basis(BasisFamily::Q1Bubble, xi - eps, eta);
    const BasisEval eyp = eval_basis(BasisFamily::Q1Bubble, xi, eta + eps);
    const BasisEval eym = eval_basis(BasisFamily::Q1Bubble, xi, eta - eps);
    for (int a = 0; a < 5; ++a) {
      CHECK(ev.grad[a].x() ==
            doctest::Approx((exp.value[a] - exm.value[a]) / (2 * eps)).epsilon(1e-6));
      CHECK(ev.grad[a].y() ==
            doctest::Approx((eyp.value[a] - eym.value[a]) / (2 * eps)).epsilon(1e-6));
      CHECK(ev.hessian[a](0, 1) ==
            doctest::Approx((exp.grad[a].y() - exm.grad[a].y()) / (2 * eps))
                .epsilon(1e-6));
    }
  }
}

TEST_CASE("Q1 reproduces bilinear fields at quadrature points") {
  // f = 2 + 3 xi - eta + 0.5 xi eta interpolated from corner values.
  auto f = [](double xi, double eta) { return 2.0 + 3.0 * xi - eta + 0.5 * xi * eta; };
  const std::array<Vec2, 4> corners{Vec2(-1, -1), Vec2(1, -1), Vec2(1, 1), Vec2(-1, 1)};
  const QuadRule2D rule = gauss_2d(3);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const BasisEval ev =
        eval_basis(BasisFamily::Q1, rule.points[q].x(), rule.points[q].y());
    double interp = 0.0;
    for (int a = 0; a < 4; ++a) interp += ev.value[a] * f(corners[a].x(), corners[a].y());
    CHECK(std::abs(interp - f(rule.points[q].x(), rule.points[q].y())) < 1e-13);
  }
}

TEST_CASE("gauss rules integrate polynomials exactly") {
  const QuadRule1D g2 = gauss_1d(2);
  double acc = 0.0;
  for (std::size_t i = 0; i < g2.points.size(); ++i) {
    acc += g2.weights[i] * std::pow(g2.points[i], 3);
  }
  CHECK(std::abs(acc) < 1e-15);  // odd
  acc = 0.0;
  for (std::size_t i = 0; i < g2.points.size(); ++i) {
    acc += g2.weights[i] * g2.points[i] * g2.points[i];
  }
  CHECK(acc == doctest::Approx(2.0 / 3.0));

  const QuadRule2D g3 = gauss_2d(3);
  acc = 0.0;
  for (std::size_t i = 0; i < g3.points.size(); ++i) {
    acc += g3.weights[i] * std::pow(g3.points[i].x(), 4) * std::pow(g3.points[i].y(), 2);
  }
  CHECK(acc == doctest::Approx((2.0 / 5.0) * (2.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("dof counts for a crackless mesh") {
  const StructuredQuadMesh grid = build_grid(2, Box{Vec2(0, 0), Vec2(1, 1)});
  const SplitMesh mesh = split_along(grid, {});
  const DofMap weak(mesh, EnforcementMode::Weak);
  CHECK(weak.n_pressure() == 9);
  CHECK(weak.n_displacement() == 26);
  CHECK(weak.n_interface() == 0);

  const DofMap strong(mesh, EnforcementMode::Strong);
  CHECK(strong.n_interface() == 0);
}

TEST_CASE("dof counts for an embedded path") {
  // 5-facet embedded path: 6 path nodes, 4 interior duplicated, 2 tips single.
  const CaseSpec spec = builtin_case("angled_embedded", 12, EnforcementMode::Strong);
  const CrackCurve curve = make_crack(spec.cracks[0]);
  const StructuredQuadMesh grid = build_grid(12, spec.domain);
  const SurrogateInterface surr = select_surrogate(grid, curve);
  const SplitMesh mesh = split_along(grid, {surr});
  const DofMap dofs(mesh, EnforcementMode::Strong);
  const int n_path = static_cast<int>(surr.path_nodes.size());
  CHECK(dofs.n_interface() == 6 * n_path);
  CHECK(mesh.path_node_count() == n_path);

  // Dof layout is contiguous and grouped by kind.
  CHECK(dofs.lambda_flux_dof(0, +1) == 0);
  CHECK(dofs.lambda_flux_dof(0, -1) == n_path);
  CHECK(dofs.lambda_traction_dof(0, +1, 0) == 2 * n_path);
  CHECK(dofs.lambda_traction_dof(0, -1, 1) == 4 * n_path + 1);
}
