#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "sifem/errors.hpp"
#include "sifem/harness.hpp"
#include "sifem/postproc.hpp"

using namespace sifem;

namespace {

struct Built {
  std::shared_ptr<SplitMesh> mesh;
  std::shared_ptr<DofMap> dofs;
  std::vector<ShiftData> shifts;
  std::vector<InterfaceLaw> laws;
};

Built build_mesh(const CaseSpec& spec) {
  Built b;
  std::vector<CrackCurve> curves;
  for (const auto& c : spec.cracks) {
    curves.push_back(make_crack(c));
    b.laws.push_back(c.law);
  }
  const StructuredQuadMesh grid = build_grid(spec.n, spec.domain);
  std::vector<SurrogateInterface> surrogates;
  for (const auto& curve : curves) surrogates.push_back(select_surrogate(grid, curve));
  b.mesh = std::make_shared<SplitMesh>(split_along(grid, surrogates));
  for (std::size_t c = 0; c < curves.size(); ++c) {
    b.shifts.push_back(shift_data(*b.mesh, static_cast<int>(c), curves[c]));
  }
  b.dofs = std::make_shared<DofMap>(*b.mesh, spec.mode);
  return b;
}

CaseSpec aligned_spec(int n, double T_n = 0.0) {
  CaseSpec spec;
  spec.n = n;
  CrackSpec c;
  c.kind = "segment";
  c.center = Vec2(0.0, 0.0);
  c.length = 1.0;
  c.angle = 0.0;
  c.law.transmissivity = T_n;
  c.law.k_n = c.law.k_t = 1.0e8;
  spec.cracks.push_back(c);
  return spec;
}

/// Nodal state with p = fp(x), u = fu(x) at every split-mesh node and zero
/// bubbles.
Eigen::VectorXd nodal_state(const Built& b,
                            const std::function<double(const Vec2&)>& fp,
                            const std::function<Vec2(const Vec2&)>& fu) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(b.dofs->n_bulk());
  for (int v = 0; v < static_cast<int>(b.mesh->nodes().size()); ++v) {
    const Vec2& x = b.mesh->nodes()[v];
    z[b.dofs->pressure_dof(v)] = fp(x);
    const Vec2 u = fu(x);
    z[b.dofs->displacement_dof(v, 0)] = u.x();
    z[b.dofs->displacement_dof(v, 1)] = u.y();
  }
  return z;
}

}  // namespace

TEST_CASE("gradient recovery is exact for linear fields") {
  const Built b = build_mesh(aligned_spec(8));
  const Eigen::VectorXd z = nodal_state(
      b, [](const Vec2& x) { return 2.0 * x.x() + 3.0 * x.y(); },
      [](const Vec2& x) { return Vec2(0.5 * x.x() - x.y(), 4.0 * x.y()); });
  const RecoveredGradients g = recover_gradients(*b.mesh, *b.dofs, z);
  for (int v = 0; v < static_cast<int>(b.mesh->nodes().size()); ++v) {
    CHECK(std::abs(g.p_x[v] - 2.0) < 1e-12);
    CHECK(std::abs(g.p_y[v] - 3.0) < 1e-12);
    CHECK(std::abs(g.u_grad[0][0][v] - 0.5) < 1e-12);
    CHECK(std::abs(g.u_grad[0][1][v] + 1.0) < 1e-12);
    CHECK(std::abs(g.u_grad[1][0][v]) < 1e-12);
    CHECK(std::abs(g.u_grad[1][1][v] - 4.0) < 1e-12);
  }
}

TEST_CASE("gradient recovery of a constant field vanishes") {
  const Built b = build_mesh(aligned_spec(4));
  const Eigen::VectorXd z = nodal_state(
      b, [](const Vec2&) { return 7.5; }, [](const Vec2&) { return Vec2(1.0, -2.0); });
  const RecoveredGradients g = recover_gradients(*b.mesh, *b.dofs, z);
  CHECK(g.p_x.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(g.p_y.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("quadratic recovery is superconvergent at interior nodes") {
  auto interior_error = [](int n) {
    CaseSpec spec;
    spec.n = n;
    const Built b = build_mesh(spec);
    const Eigen::VectorXd z = nodal_state(
        b, [](const Vec2& x) { return x.x() * x.x(); },
        [](const Vec2&) { return Vec2::Zero(); });
    const RecoveredGradients g = recover_gradients(*b.mesh, *b.dofs, z);
    double worst = 0.0;
    const Box& box = b.mesh->domain();
    for (int v = 0; v < static_cast<int>(b.mesh->nodes().size()); ++v) {
      const Vec2& x = b.mesh->nodes()[v];
      const double margin = 0.2;  // fixed physical band: boundary pollution
                                  // of the mass solve decays per node layer
      if (x.x() < box.lo.x() + margin || x.x() > box.hi.x() - margin ||
          x.y() < box.lo.y() + margin || x.y() > box.hi.y() - margin) {
        continue;
      }
      worst = std::max(worst, std::abs(g.p_x[v] - 2.0 * x.x()));
    }
    return worst;
  };
  const double e8 = interior_error(8);
  const double e16 = interior_error(16);
  CHECK(e16 < 0.25 * e8);  // better than O(h^2) once boundary layers detach
}

TEST_CASE("taylor transfer") {
  SUBCASE("zero gap is the identity") {
    const Built b = build_mesh(aligned_spec(4));
    const Eigen::VectorXd z = nodal_state(
        b, [](const Vec2& x) { return std::sin(x.x()); },
        [](const Vec2& x) { return Vec2(x.y(), x.x()); });
    const RecoveredGradients g = recover_gradients(*b.mesh, *b.dofs, z);
    const CrackLineValues vals =
        transfer_to_true_crack(*b.mesh, *b.dofs, z, g, b.shifts[0], 0);
    const CrackTopology& topo = b.mesh->cracks()[0];
    for (std::size_t k = 0; k < topo.path_plus.size(); ++k) {
      CHECK(vals.p_plus[k] ==
            doctest::Approx(z[b.dofs->pressure_dof(topo.path_plus[k])]).epsilon(1e-14));
      CHECK(vals.p_minus[k] ==
            doctest::Approx(z[b.dofs->pressure_dof(topo.path_minus[k])]).epsilon(1e-14));
    }
  }
  SUBCASE("linear fields transfer exactly") {
    CaseSpec spec = builtin_case("offset", 10, EnforcementMode::Weak);
    const Built b = build_mesh(spec);
    const Eigen::VectorXd z = nodal_state(
        b, [](const Vec2& x) { return 5.0 * x.x(); },
        [](const Vec2& x) { return Vec2(2.0 * x.y(), -x.x()); });
    const RecoveredGradients g = recover_gradients(*b.mesh, *b.dofs, z);
    const CrackLineValues vals =
        transfer_to_true_crack(*b.mesh, *b.dofs, z, g, b.shifts[0], 0);
    const CrackTopology& topo = b.mesh->cracks()[0];
    for (std::size_t k = 0; k < topo.path_plus.size(); ++k) {
      const Vec2 xhat = topo.path_coords[k] + b.shifts[0].path_nodes[k].gap;
      CHECK(vals.p_plus[k] == doctest::Approx(5.0 * xhat.x()).epsilon(1e-11));
      CHECK(vals.u_minus[k].x() == doctest::Approx(2.0 * xhat.y()).epsilon(1e-11));
    }
  }
  SUBCASE("quadratic transfer error is second order") {
    auto max_err = [](int n) {
      CaseSpec spec = builtin_case("angled_embedded", n, EnforcementMode::Weak);
      const Built b = build_mesh(spec);
      const Eigen::VectorXd z = nodal_state(
          b, [](const Vec2& x) { return x.x() * x.x() + 0.5 * x.y() * x.y(); },
          [](const Vec2&) { return Vec2::Zero(); });
      const RecoveredGradients g = recover_gradients(*b.mesh, *b.dofs, z);
      const CrackLineValues vals =
          transfer_to_true_crack(*b.mesh, *b.dofs, z, g, b.shifts[0], 0);
      const CrackTopology& topo = b.mesh->cracks()[0];
      double worst = 0.0;
      for (std::size_t k = 0; k < topo.path_plus.size(); ++k) {
        const Vec2 xhat = topo.path_coords[k] + b.shifts[0].path_nodes[k].gap;
        const double exact = xhat.x() * xhat.x() + 0.5 * xhat.y() * xhat.y();
        worst = std::max(worst, std::abs(vals.p_plus[k] - exact));
      }
      return worst;
    };
    const double e10 = max_err(10);
    const double e20 = max_err(20);
    CHECK(e20 < 0.4 * e10);
  }
}

TEST_CASE("jump-average traction identities on random tensors") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    Mat2 sp, sm;
    sp << dist(rng), dist(rng), dist(rng), dist(rng);
    sm << dist(rng), dist(rng), dist(rng), dist(rng);
    const double a = dist(rng);
    const Vec2 n(std::cos(a), std::sin(a));
    // One-sided tractions through face-specific normals +-n.
    const Vec2 t_plus = sp * n;
    const Vec2 t_minus = sm * (-n);
    const Vec2 jump_sn = (sp - sm) * n;
    const Vec2 avg_sn = 0.5 * (sp + sm) * n;
    CHECK((jump_sn - (t_plus + t_minus)).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((avg_sn - 0.5 * (t_plus - t_minus)).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("manufactured continuous state: balance residuals vanish") {
  const Built b = build_mesh(aligned_spec(8, 0.0));
  // Identical one-sided fields: globally linear, no jumps anywhere.
  const Eigen::VectorXd z = nodal_state(
      b, [](const Vec2& x) { return 2.0 * x.x() + 3.0 * x.y(); },
      [](const Vec2& x) { return Vec2(1e-4 * x.x(), -2e-4 * x.y()); });
  State st;
  st.z = z;
  st.zdot = Eigen::VectorXd::Zero(z.size());
  MaterialParams mat;
  const RecoveredGradients g = recover_gradients(*b.mesh, *b.dofs, z);
  const auto profiles =
      residual_profiles(*b.mesh, *b.dofs, b.shifts, b.laws, mat, st, g);

  for (const auto& prof : profiles) {
    if (prof.kind == ResidualKind::FluxBalance ||
        prof.kind == ResidualKind::TractionBalanceN ||
        prof.kind == ResidualKind::TractionBalanceM) {
      for (double v : prof.value) CHECK(std::abs(v) < 1e-9);
    }
    if (prof.kind == ResidualKind::FluxConstitutive) {
      // T_n = 0: residual equals <q>.n = -gamma dp/dy on the y=0 crack.
      for (double v : prof.value) {
        CHECK(v == doctest::Approx(-mat.mobility * 3.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("zero-gap profiles equal an unshifted hand computation") {
  const Built b = build_mesh(aligned_spec(6, 0.0));
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(b.dofs->n_bulk());
  for (int i = 0; i < z.size(); ++i) z[i] = dist(rng);
  State st;
  st.z = z;
  st.zdot = Eigen::VectorXd::Zero(z.size());
  MaterialParams mat;
  const RecoveredGradients g = recover_gradients(*b.mesh, *b.dofs, z);
  const auto profiles =
      residual_profiles(*b.mesh, *b.dofs, b.shifts, b.laws, mat, st, g);

  // Hand recomputation without any shift machinery: facet normal frame,
  // plain traces, no Taylor terms.
  const CrackTopology& topo = b.mesh->cracks()[0];
  const double ga = 1.0 / std::sqrt(3.0);
  std::size_t sample = 0;
  const ResidualProfile* rq = nullptr;
  for (const auto& prof : profiles) {
    if (prof.kind == ResidualKind::FluxBalance) rq = &prof;
  }
  REQUIRE(rq != nullptr);
  for (std::size_t f = 0; f < topo.facets.size(); ++f) {
    const auto& rec = topo.facets[f];
    for (double xi : {-ga, ga}) {
      const double t = 0.5 * (xi + 1.0);
      auto trace = [&](const std::array<int, 2>& nodes, const Eigen::VectorXd& field) {
        return (1.0 - t) * field[nodes[0]] + t * field[nodes[1]];
      };
      const Vec2 qp = -mat.mobility *
                      Vec2(trace({rec.plus_nodes[0], rec.plus_nodes[1]}, g.p_x),
                           trace({rec.plus_nodes[0], rec.plus_nodes[1]}, g.p_y));
      const Vec2 qm = -mat.mobility *
                      Vec2(trace({rec.minus_nodes[0], rec.minus_nodes[1]}, g.p_x),
                           trace({rec.minus_nodes[0], rec.minus_nodes[1]}, g.p_y));
      const double expect = (qp - qm).dot(rec.normal);
      CHECK(rq->value[sample] == doctest::Approx(expect).epsilon(1e-12));
      ++sample;
    }
  }
  CHECK(sample == rq->value.size());
}

TEST_CASE("trimmed norms") {
  ResidualProfile prof;
  prof.crack_length = 2.0;
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    prof.s.push_back((i + 0.5) * 2.0 / n);
    prof.value.push_back(3.0);
    prof.weight.push_back(2.0 / n);
  }

  CHECK(trimmed_norm(prof, 0.0) == doctest::Approx(3.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(trimmed_norm(prof, 0.25) ==
        doctest::Approx(3.0 * std::sqrt(0.5 * 2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(trimmed_norm(prof, 0.5), ConfigError);
  CHECK_THROWS_AS(trimmed_norm(prof, -0.1), ConfigError);

  SUBCASE("monotone non-increasing in eps") {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (auto& v : prof.value) v = dist(rng);
    double prev = trimmed_norm(prof, 0.0);
    for (double eps : {0.05, 0.1, 0.2, 0.3, 0.45}) {
      const double cur = trimmed_norm(prof, eps);
      CHECK(cur <= prev + 1e-15);
      prev = cur;
    }
  }
  SUBCASE("support trimmed away") {
    ResidualProfile tip;
    tip.crack_length = 1.0;
    tip.s = {0.002, 0.006};
    tip.value = {10.0, 20.0};
    tip.weight = {0.005, 0.005};
    CHECK(trimmed_norm(tip, 0.02) == 0.0);
  }
}

TEST_CASE("self-convergence error") {
  CaseSpec coarse_spec = builtin_case("offset", 8, EnforcementMode::Weak);
  CaseSpec fine_spec = builtin_case("offset", 16, EnforcementMode::Weak);
  const Built bc = build_mesh(coarse_spec);
  const Built bf = build_mesh(fine_spec);

  SUBCASE("identical constant fields give zero") {
    const Eigen::VectorXd zc = nodal_state(
        bc, [](const Vec2&) { return 4.0; }, [](const Vec2&) { return Vec2(1, 2); });
    const Eigen::VectorXd zf = nodal_state(
        bf, [](const Vec2&) { return 4.0; }, [](const Vec2&) { return Vec2(1, 2); });
    CHECK(self_convergence_error(*bc.mesh, *bc.dofs, zc, *bf.mesh, *bf.dofs, zf,
                                 FieldTag::Pressure) == doctest::Approx(0.0));
    CHECK(self_convergence_error(*bc.mesh, *bc.dofs, zc, *bf.mesh, *bf.dofs, zf,
                                 FieldTag::Displacement) == doctest::Approx(0.0));
  }
  SUBCASE("doubled constant gives one half") {
    const Eigen::VectorXd zc = nodal_state(
        bc, [](const Vec2&) { return 1.0; }, [](const Vec2&) { return Vec2::Zero(); });
    const Eigen::VectorXd zf = nodal_state(
        bf, [](const Vec2&) { return 2.0; }, [](const Vec2&) { return Vec2::Zero(); });
    CHECK(self_convergence_error(*bc.mesh, *bc.dofs, zc, *bf.mesh, *bf.dofs, zf,
                                 FieldTag::Pressure) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("non-nested pair is rejected") {
    CaseSpec odd = builtin_case("offset", 12, EnforcementMode::Weak);
    const Built bo = build_mesh(odd);
    const Eigen::VectorXd zc = Eigen::VectorXd::Zero(bc.dofs->n_bulk());
    const Eigen::VectorXd zo = Eigen::VectorXd::Zero(bo.dofs->n_bulk());
    CHECK_THROWS_AS(self_convergence_error(*bc.mesh, *bc.dofs, zc, *bo.mesh, *bo.dofs,
                                           zo, FieldTag::Pressure),
                    ConfigError);
  }
}

TEST_CASE("vtk export writes projected crack coordinates") {
  CaseSpec spec = builtin_case("offset", 6, EnforcementMode::Weak);
  const Built b = build_mesh(spec);
  State st;
  st.z = Eigen::VectorXd::Zero(b.dofs->n_bulk());
  st.zdot = st.z;
  const RecoveredGradients g = recover_gradients(*b.mesh, *b.dofs, st.z);
  MaterialParams mat;

  const std::string path = "/tmp/sifem_test_fields.vtk";
  write_vtk(path, *b.mesh, *b.dofs, st, g, mat, b.shifts, true);

  std::ifstream is(path);
  REQUIRE(is.good());
  std::string line;
  std::getline(is, line);
  CHECK(line == "# vtk DataFile Version 3.0");
  std::getline(is, line);  // title
  std::getline(is, line);
  CHECK(line == "ASCII");
  std::getline(is, line);
  CHECK(line == "DATASET UNSTRUCTURED_GRID");
  std::getline(is, line);
  std::istringstream header(line);
  std::string tag, type;
  int n_pts = 0;
  header >> tag >> n_pts >> type;
  CHECK(tag == "POINTS");
  CHECK(n_pts == static_cast<int>(b.mesh->nodes().size()));

  std::vector<Vec2> pts(n_pts);
  for (int i = 0; i < n_pts; ++i) {
    double x, y, zz;
    is >> x >> y >> zz;
    pts[i] = Vec2(x, y);
  }
  const double x_crack = spec.cracks[0].center.x();
  const CrackTopology& topo = b.mesh->cracks()[0];
  for (std::size_t k = 0; k < topo.path_plus.size(); ++k) {
    CHECK(std::abs(pts[topo.path_plus[k]].x() - x_crack) < 1e-12);
    CHECK(std::abs(pts[topo.path_minus[k]].x() - x_crack) < 1e-12);
  }
}
