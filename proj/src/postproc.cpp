#include "sifem/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sifem/errors.hpp"

namespace sifem {

namespace {

const std::array<Vec2, 4> kCornerRef{Vec2{-1.0, -1.0}, Vec2{1.0, -1.0},
                                     Vec2{1.0, 1.0}, Vec2{-1.0, 1.0}};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

GradientProjector::GradientProjector(const SplitMesh& mesh) : mesh_(&mesh) {
  const int n_nodes = static_cast<int>(mesh.nodes().size());
  const QuadRule2D rule = gauss_2d(3);
  const double jac = 0.25 * mesh.hx() * mesh.hy();

  std::vector<Eigen::Triplet<double>> trip;
  for (int e = 0; e < static_cast<int>(mesh.quads().size()); ++e) {
    const auto& q = mesh.quads()[e];
    for (std::size_t g = 0; g < rule.points.size(); ++g) {
      const BasisEval ev =
          eval_basis(BasisFamily::Q1, rule.points[g].x(), rule.points[g].y());
      const double w = rule.weights[g] * jac;
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          trip.emplace_back(q[a], q[b], w * ev.value[a] * ev.value[b]);
        }
      }
    }
  }
  mass_.resize(n_nodes, n_nodes);
  mass_.setFromTriplets(trip.begin(), trip.end());
  mass_ldlt_.compute(mass_);
  if (mass_ldlt_.info() != Eigen::Success) {
    throw NumericalError("mass matrix factorization failed");
  }
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> GradientProjector::recover(
    const Eigen::VectorXd& nodal, const Eigen::VectorXd* bubble) const {
  const SplitMesh& mesh = *mesh_;
  const int n_nodes = static_cast<int>(mesh.nodes().size());
  const QuadRule2D rule = gauss_2d(3);
  const double jac = 0.25 * mesh.hx() * mesh.hy();
  const double sx = 2.0 / mesh.hx(), sy = 2.0 / mesh.hy();

  Eigen::VectorXd bx = Eigen::VectorXd::Zero(n_nodes);
  Eigen::VectorXd by = Eigen::VectorXd::Zero(n_nodes);
  for (int e = 0; e < static_cast<int>(mesh.quads().size()); ++e) {
    const auto& q = mesh.quads()[e];
    for (std::size_t g = 0; g < rule.points.size(); ++g) {
      const BasisEval ev = eval_basis(BasisFamily::Q1Bubble, rule.points[g].x(),
                                      rule.points[g].y());
      const double w = rule.weights[g] * jac;
      double gx = 0.0, gy = 0.0;
      for (int a = 0; a < 4; ++a) {
        gx += nodal[q[a]] * sx * ev.grad[a].x();
        gy += nodal[q[a]] * sy * ev.grad[a].y();
      }
      if (bubble != nullptr) {
        gx += (*bubble)[e] * sx * ev.grad[4].x();
        gy += (*bubble)[e] * sy * ev.grad[4].y();
      }
      for (int a = 0; a < 4; ++a) {
        bx[q[a]] += w * ev.value[a] * gx;
        by[q[a]] += w * ev.value[a] * gy;
      }
    }
  }
  return {mass_ldlt_.solve(bx), mass_ldlt_.solve(by)};
}

RecoveredGradients recover_gradients(const SplitMesh& mesh, const DofMap& dofs,
                                     const Eigen::VectorXd& z) {
  const GradientProjector proj(mesh);
  const int n_nodes = static_cast<int>(mesh.nodes().size());
  const int n_elems = static_cast<int>(mesh.quads().size());

  RecoveredGradients out;
  Eigen::VectorXd field(n_nodes);
  for (int v = 0; v < n_nodes; ++v) field[v] = z[dofs.pressure_dof(v)];
  std::tie(out.p_x, out.p_y) = proj.recover(field);

  for (int comp = 0; comp < 2; ++comp) {
    Eigen::VectorXd nodal(n_nodes), bub(n_elems);
    for (int v = 0; v < n_nodes; ++v) nodal[v] = z[dofs.displacement_dof(v, comp)];
    for (int e = 0; e < n_elems; ++e) bub[e] = z[dofs.bubble_dof(e, comp)];
    auto [gx, gy] = proj.recover(nodal, &bub);
    out.u_grad[comp][0] = std::move(gx);
    out.u_grad[comp][1] = std::move(gy);
  }
  return out;
}

namespace {

struct SideTrace {
  double p;
  Vec2 grad_p;
  Vec2 u;
  Mat2 grad_u;
};

SideTrace side_trace(const DofMap& dofs, const Eigen::VectorXd& z,
                     const RecoveredGradients& g, int n0, int n1, double t) {
  SideTrace tr;
  auto p_of = [&](int v) { return z[dofs.pressure_dof(v)]; };
  tr.p = (1.0 - t) * p_of(n0) + t * p_of(n1);
  tr.grad_p = Vec2((1.0 - t) * g.p_x[n0] + t * g.p_x[n1],
                   (1.0 - t) * g.p_y[n0] + t * g.p_y[n1]);
  for (int i = 0; i < 2; ++i) {
    tr.u(i) = (1.0 - t) * z[dofs.displacement_dof(n0, i)] +
              t * z[dofs.displacement_dof(n1, i)];
    for (int j = 0; j < 2; ++j) {
      tr.grad_u(i, j) = (1.0 - t) * g.u_grad[i][j][n0] + t * g.u_grad[i][j][n1];
    }
  }
  return tr;
}

Mat2 effective_stress(const Mat2& grad_u, const MaterialParams& mat) {
  const Mat2 eps = 0.5 * (grad_u + grad_u.transpose());
  return mat.lame_lambda() * eps.trace() * Mat2::Identity() +
         2.0 * mat.shear_modulus * eps;
}

/// Shifted nodal jump of the primary fields at one path node, with the
/// gradients taken from the owning surrogate-facet element traces
/// (averaged when a corner node has two owners on a side).
struct NodalJumps {
  double p;
  Vec2 u;
  Vec2 udot;
};

NodalJumps nodal_shifted_jumps(const SplitMesh& mesh, const DofMap& dofs,
                               const Eigen::VectorXd& z, const Eigen::VectorXd& zdot,
                               int crack, int path_k, const ShiftSample& smp) {
  const CrackTopology& topo = mesh.cracks()[crack];
  NodalJumps out{0.0, Vec2::Zero(), Vec2::Zero()};
  for (int s = 0; s < 2; ++s) {
    const double sgn = (s == 0) ? 1.0 : -1.0;
    const int node = (s == 0) ? topo.path_plus[path_k] : topo.path_minus[path_k];
    out.p += sgn * z[dofs.pressure_dof(node)];
    for (int i = 0; i < 2; ++i) {
      out.u(i) += sgn * z[dofs.displacement_dof(node, i)];
      out.udot(i) += sgn * zdot[dofs.displacement_dof(node, i)];
    }

    std::vector<int> owners;
    for (int f : {path_k - 1, path_k}) {
      if (f < 0 || f >= static_cast<int>(topo.facets.size())) continue;
      const int e = (s == 0) ? topo.facets[f].elem_plus : topo.facets[f].elem_minus;
      if (std::find(owners.begin(), owners.end(), e) == owners.end()) {
        owners.push_back(e);
      }
    }
    const double wavg = 1.0 / static_cast<double>(owners.size());
    const double sxs = 2.0 / mesh.hx(), sys = 2.0 / mesh.hy();
    for (int e : owners) {
      const auto& quad = mesh.quads()[e];
      int corner = -1;
      for (int a = 0; a < 4; ++a) {
        if (quad[a] == node) corner = a;
      }
      if (corner < 0) throw NumericalError("path node missing from owner element");
      const BasisEval ev = eval_basis(BasisFamily::Q1Bubble, kCornerRef[corner].x(),
                                      kCornerRef[corner].y());
      double dp = 0.0;
      Vec2 du = Vec2::Zero(), dud = Vec2::Zero();
      for (int a = 0; a < 5; ++a) {
        const Vec2 g(sxs * ev.grad[a].x(), sys * ev.grad[a].y());
        const double gd = smp.gap.dot(g);
        if (gd == 0.0) continue;
        if (a < 4) {
          dp += gd * z[dofs.pressure_dof(quad[a])];
          for (int i = 0; i < 2; ++i) {
            du(i) += gd * z[dofs.displacement_dof(quad[a], i)];
            dud(i) += gd * zdot[dofs.displacement_dof(quad[a], i)];
          }
        } else {
          for (int i = 0; i < 2; ++i) {
            du(i) += gd * z[dofs.bubble_dof(e, i)];
            dud(i) += gd * zdot[dofs.bubble_dof(e, i)];
          }
        }
      }
      out.p += sgn * wavg * dp;
      out.u += sgn * wavg * du;
      out.udot += sgn * wavg * dud;
    }
  }
  return out;
}

}  // namespace

CrackLineValues transfer_to_true_crack(const SplitMesh& mesh, const DofMap& dofs,
                                       const Eigen::VectorXd& z,
                                       const RecoveredGradients& grads,
                                       const ShiftData& shift, int crack) {
  const CrackTopology& topo = mesh.cracks()[crack];
  const int n_path = static_cast<int>(topo.path_coords.size());
  CrackLineValues out;
  out.s.resize(n_path);
  out.p_plus.resize(n_path);
  out.p_minus.resize(n_path);
  out.u_plus.resize(n_path);
  out.u_minus.resize(n_path);
  for (int k = 0; k < n_path; ++k) {
    const ShiftSample& smp = shift.path_nodes[k];
    out.s[k] = smp.s;
    for (int s = 0; s < 2; ++s) {
      const int node = (s == 0) ? topo.path_plus[k] : topo.path_minus[k];
      const double p = z[dofs.pressure_dof(node)] +
                       smp.gap.x() * grads.p_x[node] + smp.gap.y() * grads.p_y[node];
      Vec2 u;
      for (int i = 0; i < 2; ++i) {
        u(i) = z[dofs.displacement_dof(node, i)] +
               smp.gap.x() * grads.u_grad[i][0][node] +
               smp.gap.y() * grads.u_grad[i][1][node];
      }
      if (s == 0) {
        out.p_plus[k] = p;
        out.u_plus[k] = u;
      } else {
        out.p_minus[k] = p;
        out.u_minus[k] = u;
      }
    }
  }
  return out;
}

std::string residual_kind_name(ResidualKind kind) {
  switch (kind) {
    case ResidualKind::FluxConstitutive: return "rJ";
    case ResidualKind::FluxBalance: return "rJumpQ";
    case ResidualKind::TractionBalanceN: return "rJumpT_n";
    case ResidualKind::TractionBalanceM: return "rJumpT_m";
    case ResidualKind::TractionConstitutiveN: return "rConstT_n";
    case ResidualKind::TractionConstitutiveM: return "rConstT_m";
    case ResidualKind::LambdaFluxConstitutive: return "lamJ";
    case ResidualKind::LambdaFluxBalance: return "lamJumpQ";
    case ResidualKind::LambdaTractionBalanceN: return "lamJumpT_n";
    case ResidualKind::LambdaTractionBalanceM: return "lamJumpT_m";
    case ResidualKind::LambdaTractionConstitutiveN: return "lamConstT_n";
    case ResidualKind::LambdaTractionConstitutiveM: return "lamConstT_m";
  }
  return "unknown";
}

std::vector<ResidualProfile> residual_profiles(
    const SplitMesh& mesh, const DofMap& dofs,
    const std::vector<ShiftData>& shifts, const std::vector<InterfaceLaw>& laws,
    const MaterialParams& mat, const State& state,
    const RecoveredGradients& grads) {
  std::vector<ResidualProfile> out;
  const QuadRule1D rule = gauss_1d(2);
  const bool strong = (dofs.mode() == EnforcementMode::Strong);

  for (std::size_t c = 0; c < mesh.cracks().size(); ++c) {
    const CrackTopology& topo = mesh.cracks()[c];
    const ShiftData& shift = shifts.at(c);
    const InterfaceLaw& law = laws.at(c);

    std::array<ResidualProfile, 6> prof;
    const std::array<ResidualKind, 6> kinds{
        ResidualKind::FluxConstitutive,      ResidualKind::FluxBalance,
        ResidualKind::TractionBalanceN,      ResidualKind::TractionBalanceM,
        ResidualKind::TractionConstitutiveN, ResidualKind::TractionConstitutiveM};
    for (int i = 0; i < 6; ++i) {
      prof[i].crack = static_cast<int>(c);
      prof[i].kind = kinds[i];
      prof[i].crack_length = shift.crack_length;
    }

    const int pn_offset = mesh.path_node_offset(static_cast<int>(c));
    for (std::size_t f = 0; f < topo.facets.size(); ++f) {
      const auto& rec = topo.facets[f];
      const auto& fs = shift.facets[f];
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const ShiftSample& smp = fs.quad[q];
        const double t = 0.5 * (rule.points[q] + 1.0);
        const double w = rule.weights[q] * 0.5 * fs.length * smp.cos_phi;

        const SideTrace plus = side_trace(dofs, state.z, grads,
                                          rec.plus_nodes[0], rec.plus_nodes[1], t);
        const SideTrace minus = side_trace(dofs, state.z, grads,
                                           rec.minus_nodes[0], rec.minus_nodes[1], t);

        const Vec2 nhat = smp.normal;
        const Vec2 mhat(-nhat.y(), nhat.x());

        const Vec2 q_plus = -mat.mobility * plus.grad_p;
        const Vec2 q_minus = -mat.mobility * minus.grad_p;
        const Mat2 sig_plus =
            effective_stress(plus.grad_u, mat) - mat.biot_alpha * plus.p * Mat2::Identity();
        const Mat2 sig_minus = effective_stress(minus.grad_u, mat) -
                               mat.biot_alpha * minus.p * Mat2::Identity();

        double J_gamma;
        Vec2 T_gamma;
        if (strong) {
          // The prescribed interface values are the enforced unknowns, so
          // the constitutive residuals isolate the reconstruction error.
          const std::array<int, 2> pn{pn_offset + static_cast<int>(f),
                                      pn_offset + static_cast<int>(f) + 1};
          auto lam = [&](int dof0, int dof1) {
            return (1.0 - t) * state.lambda[dof0] + t * state.lambda[dof1];
          };
          J_gamma = 0.5 * (lam(dofs.lambda_flux_dof(pn[0], +1),
                               dofs.lambda_flux_dof(pn[1], +1)) -
                           lam(dofs.lambda_flux_dof(pn[0], -1),
                               dofs.lambda_flux_dof(pn[1], -1)));
          for (int i = 0; i < 2; ++i) {
            T_gamma(i) = 0.5 * (lam(dofs.lambda_traction_dof(pn[0], +1, i),
                                    dofs.lambda_traction_dof(pn[1], +1, i)) -
                                lam(dofs.lambda_traction_dof(pn[0], -1, i),
                                    dofs.lambda_traction_dof(pn[1], -1, i)));
          }
        } else {
          // Taylor-transferred primary jumps feed the interface laws.
          const double jump_p = (plus.p + smp.gap.dot(plus.grad_p)) -
                                (minus.p + smp.gap.dot(minus.grad_p));
          Vec2 jump_u;
          for (int i = 0; i < 2; ++i) {
            jump_u(i) = (plus.u(i) + smp.gap.dot(plus.grad_u.row(i))) -
                        (minus.u(i) + smp.gap.dot(minus.grad_u.row(i)));
          }
          J_gamma = robin_flux(jump_p, law);
          T_gamma = spring_stiffness(law, nhat) * jump_u;
          if (law.has_viscosity()) {
            Vec2 jump_udot;
            for (int i = 0; i < 2; ++i) {
              jump_udot(i) = state.zdot[dofs.displacement_dof(rec.plus_nodes[0], i)] *
                                 (1.0 - t) +
                             state.zdot[dofs.displacement_dof(rec.plus_nodes[1], i)] * t -
                             state.zdot[dofs.displacement_dof(rec.minus_nodes[0], i)] *
                                 (1.0 - t) -
                             state.zdot[dofs.displacement_dof(rec.minus_nodes[1], i)] * t;
            }
            T_gamma += spring_viscosity(law, nhat) * jump_udot;
          }
        }

        const double rJ = 0.5 * (q_plus + q_minus).dot(nhat) - J_gamma;
        const double rQ = (q_plus - q_minus).dot(nhat);
        const Vec2 rT_bal = (sig_plus - sig_minus) * nhat;
        const Vec2 rT_con = 0.5 * (sig_plus + sig_minus) * nhat - T_gamma;

        const std::array<double, 6> vals{rJ,
                                         rQ,
                                         rT_bal.dot(nhat),
                                         rT_bal.dot(mhat),
                                         rT_con.dot(nhat),
                                         rT_con.dot(mhat)};
        for (int i = 0; i < 6; ++i) {
          prof[i].s.push_back(smp.s);
          prof[i].value.push_back(vals[i]);
          prof[i].weight.push_back(w);
        }
      }
    }
    for (auto& p : prof) out.push_back(std::move(p));
  }
  if (strong) {
    auto lam = lambda_residual_profiles(mesh, dofs, shifts, laws, state);
    for (auto& p : lam) out.push_back(std::move(p));
  }
  return out;
}

std::vector<ResidualProfile> lambda_residual_profiles(
    const SplitMesh& mesh, const DofMap& dofs,
    const std::vector<ShiftData>& shifts, const std::vector<InterfaceLaw>& laws,
    const State& state) {
  std::vector<ResidualProfile> out;
  for (std::size_t c = 0; c < mesh.cracks().size(); ++c) {
    const CrackTopology& topo = mesh.cracks()[c];
    const ShiftData& shift = shifts.at(c);
    const InterfaceLaw& law = laws.at(c);

    std::array<ResidualProfile, 6> lam;
    const std::array<ResidualKind, 6> lkinds{
        ResidualKind::LambdaFluxConstitutive,
        ResidualKind::LambdaFluxBalance,
        ResidualKind::LambdaTractionBalanceN,
        ResidualKind::LambdaTractionBalanceM,
        ResidualKind::LambdaTractionConstitutiveN,
        ResidualKind::LambdaTractionConstitutiveM};
    for (int i = 0; i < 6; ++i) {
      lam[i].crack = static_cast<int>(c);
      lam[i].kind = lkinds[i];
      lam[i].crack_length = shift.crack_length;
    }
    const int offset = mesh.path_node_offset(static_cast<int>(c));
    const int n_path = static_cast<int>(topo.path_coords.size());
    for (int k = 0; k < n_path; ++k) {
      const ShiftSample& smp = shift.path_nodes[k];
      double w = 0.0;
      if (k > 0) w += 0.5 * shift.facets[k - 1].length * smp.cos_phi;
      if (k < n_path - 1) w += 0.5 * shift.facets[k].length * smp.cos_phi;

      const int pn = offset + k;
      const double qp = state.lambda[dofs.lambda_flux_dof(pn, +1)];
      const double qm = state.lambda[dofs.lambda_flux_dof(pn, -1)];
      Vec2 tp, tm;
      for (int i = 0; i < 2; ++i) {
        tp(i) = state.lambda[dofs.lambda_traction_dof(pn, +1, i)];
        tm(i) = state.lambda[dofs.lambda_traction_dof(pn, -1, i)];
      }

      const NodalJumps nj = nodal_shifted_jumps(mesh, dofs, state.z, state.zdot,
                                                static_cast<int>(c), k, smp);
      const Vec2 nhat = smp.normal;
      const Vec2 mhat(-nhat.y(), nhat.x());
      const Vec2 T_jump = spring_stiffness(law, nhat) * nj.u +
                          spring_viscosity(law, nhat) * nj.udot;

      // Interface-law residuals expressed through the stored unknowns:
      // <q.n> - J = (q+ - q-)/2 + T_n [[p_hat]], [[q]].n = q+ + q-,
      // ([[sigma]] n) = t+ + t-, <sigma> n - T = (t+ - t-)/2 - T.
      const double lamJ = 0.5 * (qp - qm) + law.transmissivity * nj.p;
      const double lamQ = qp + qm;
      const Vec2 lamT_bal = tp + tm;
      const Vec2 lamT_con = 0.5 * (tp - tm) - T_jump;

      const std::array<double, 6> vals{lamJ,
                                       lamQ,
                                       lamT_bal.dot(nhat),
                                       lamT_bal.dot(mhat),
                                       lamT_con.dot(nhat),
                                       lamT_con.dot(mhat)};
      for (int i = 0; i < 6; ++i) {
        lam[i].s.push_back(smp.s);
        lam[i].value.push_back(vals[i]);
        lam[i].weight.push_back(w);
      }
    }
    for (auto& p : lam) out.push_back(std::move(p));
  }
  return out;
}

double trimmed_norm(const ResidualProfile& profile, double eps) {
  if (eps < 0.0 || eps >= 0.5) {
    throw ConfigError("trim fraction must lie in [0, 0.5)");
  }
  const double lo = eps * profile.crack_length;
  const double hi = (1.0 - eps) * profile.crack_length;
  double acc = 0.0;
  for (std::size_t i = 0; i < profile.s.size(); ++i) {
    if (profile.s[i] < lo || profile.s[i] > hi) continue;
    acc += profile.weight[i] * profile.value[i] * profile.value[i];
  }
  return std::sqrt(acc);
}

double self_convergence_error(const SplitMesh& coarse_mesh, const DofMap& coarse_dofs,
                              const Eigen::VectorXd& coarse_z,
                              const SplitMesh& fine_mesh, const DofMap& fine_dofs,
                              const Eigen::VectorXd& fine_z, FieldTag field) {
  const Box& box = coarse_mesh.domain();
  const double fhx = fine_mesh.hx(), fhy = fine_mesh.hy();
  const int fine_n = static_cast<int>(std::lround(box.width() / fhx));
  if (std::abs(box.width() / fhx - fine_n) > 1e-9 ||
      std::abs(coarse_mesh.hx() / fhx - 2.0) > 1e-9) {
    throw ConfigError("self-convergence requires a nested pair (fine n = 2 coarse n)");
  }

  // Side tags of split nodes: +1 for plus duplicates, -1 for their minus
  // partners, 0 for ordinary nodes.
  auto side_tags = [](const SplitMesh& mesh) {
    std::vector<int> tag(mesh.nodes().size(), 0);
    for (const auto& d : mesh.duplicated_nodes()) {
      tag[d[1]] = +1;
      tag[d[2]] = -1;
    }
    return tag;
  };
  const std::vector<int> coarse_tag = side_tags(coarse_mesh);

  std::vector<std::array<int, 2>> fine_split(fine_mesh.base_node_count(), {-1, -1});
  for (const auto& d : fine_mesh.duplicated_nodes()) {
    fine_split[d[0]] = {d[1], d[2]};  // {plus, minus}
  }

  auto fine_base_id = [&](const Vec2& x) {
    const int ix = static_cast<int>(std::lround((x.x() - box.lo.x()) / fhx));
    const int iy = static_cast<int>(std::lround((x.y() - box.lo.y()) / fhy));
    return iy * (fine_n + 1) + ix;
  };

  const int n_coarse = static_cast<int>(coarse_mesh.nodes().size());
  auto value_of = [&](const Eigen::VectorXd& z, const DofMap& dofs, int node,
                      int comp) {
    return (field == FieldTag::Pressure) ? z[dofs.pressure_dof(node)]
                                         : z[dofs.displacement_dof(node, comp)];
  };

  const int n_comp = (field == FieldTag::Pressure) ? 1 : 2;
  std::vector<Eigen::VectorXd> diff(n_comp, Eigen::VectorXd::Zero(n_coarse));
  std::vector<Eigen::VectorXd> ref(n_comp, Eigen::VectorXd::Zero(n_coarse));

  for (int v = 0; v < n_coarse; ++v) {
    const int base = fine_base_id(coarse_mesh.nodes()[v]);
    for (int comp = 0; comp < n_comp; ++comp) {
      double fine_val;
      if (fine_split[base][0] >= 0) {
        if (coarse_tag[v] > 0) {
          fine_val = value_of(fine_z, fine_dofs, fine_split[base][0], comp);
        } else if (coarse_tag[v] < 0) {
          fine_val = value_of(fine_z, fine_dofs, fine_split[base][1], comp);
        } else {
          fine_val = 0.5 * (value_of(fine_z, fine_dofs, fine_split[base][0], comp) +
                            value_of(fine_z, fine_dofs, fine_split[base][1], comp));
        }
      } else {
        fine_val = value_of(fine_z, fine_dofs, base, comp);
      }
      ref[comp][v] = fine_val;
      diff[comp][v] = value_of(coarse_z, coarse_dofs, v, comp) - fine_val;
    }
  }

  const GradientProjector proj(coarse_mesh);
  const SpMat& M = proj.mass();
  double num = 0.0, den = 0.0;
  for (int comp = 0; comp < n_comp; ++comp) {
    num += diff[comp].dot(M * diff[comp]);
    den += ref[comp].dot(M * ref[comp]);
  }
  if (den == 0.0) return 0.0;
  return std::sqrt(num / den);
}

void write_vtk(const std::string& path, const SplitMesh& mesh, const DofMap& dofs,
               const State& state, const RecoveredGradients& grads,
               const MaterialParams& mat, const std::vector<ShiftData>& shifts,
               bool project_coords) {
  std::ofstream os(path);
  if (!os) throw NumericalError("cannot open VTK output file: " + path);

  std::vector<Vec2> pts(mesh.nodes());
  if (project_coords) {
    for (std::size_t c = 0; c < mesh.cracks().size(); ++c) {
      const CrackTopology& topo = mesh.cracks()[c];
      const ShiftData& shift = shifts.at(c);
      for (std::size_t k = 0; k < topo.path_coords.size(); ++k) {
        const Vec2 moved = topo.path_coords[k] + shift.path_nodes[k].gap;
        pts[topo.path_plus[k]] = moved;
        pts[topo.path_minus[k]] = moved;
      }
    }
  }

  const int n_nodes = static_cast<int>(pts.size());
  const int n_elems = static_cast<int>(mesh.quads().size());
  os << "# vtk DataFile Version 3.0\n";
  os << "poroelastic crack fields\n";
  os << "ASCII\n";
  os << "DATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << n_nodes << " double\n";
  for (const Vec2& p : pts) {
    os << fmt17(p.x()) << " " << fmt17(p.y()) << " 0\n";
  }
  os << "CELLS " << n_elems << " " << 5 * n_elems << "\n";
  for (const auto& q : mesh.quads()) {
    os << "4 " << q[0] << " " << q[1] << " " << q[2] << " " << q[3] << "\n";
  }
  os << "CELL_TYPES " << n_elems << "\n";
  for (int e = 0; e < n_elems; ++e) os << "9\n";

  os << "POINT_DATA " << n_nodes << "\n";
  os << "SCALARS p double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < n_nodes; ++v) os << fmt17(state.z[dofs.pressure_dof(v)]) << "\n";

  os << "VECTORS u double\n";
  for (int v = 0; v < n_nodes; ++v) {
    os << fmt17(state.z[dofs.displacement_dof(v, 0)]) << " "
       << fmt17(state.z[dofs.displacement_dof(v, 1)]) << " 0\n";
  }

  os << "SCALARS p_eff double 1\nLOOKUP_TABLE default\n";
  std::vector<double> pe(n_nodes), j2(n_nodes);
  for (int v = 0; v < n_nodes; ++v) {
    Mat2 gu;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) gu(i, j) = grads.u_grad[i][j][v];
    const Mat2 se = effective_stress(gu, mat);
    const double tr_eps = 0.5 * (gu + gu.transpose()).trace();
    const double se_zz = mat.lame_lambda() * tr_eps;  // plane strain
    const double mean = (se.trace() + se_zz) / 3.0;
    pe[v] = mean;
    const double sxx = se(0, 0) - mean, syy = se(1, 1) - mean, szz = se_zz - mean;
    const double sxy = se(0, 1);
    j2[v] = 0.5 * (sxx * sxx + syy * syy + szz * szz) + sxy * sxy;
  }
  for (int v = 0; v < n_nodes; ++v) os << fmt17(pe[v]) << "\n";
  os << "SCALARS sqrtJ2 double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < n_nodes; ++v) os << fmt17(std::sqrt(std::max(0.0, j2[v]))) << "\n";
  os << "SCALARS u_mag double 1\nLOOKUP_TABLE default\n";
  for (int v = 0; v < n_nodes; ++v) {
    const double ux = state.z[dofs.displacement_dof(v, 0)];
    const double uy = state.z[dofs.displacement_dof(v, 1)];
    os << fmt17(std::hypot(ux, uy)) << "\n";
  }
}

void write_profiles_csv(const std::string& path,
                        const std::vector<ResidualProfile>& profiles) {
  std::ofstream os(path);
  if (!os) throw NumericalError("cannot open CSV output file: " + path);
  os << "crack,s,kind,value,weight\n";
  for (const auto& prof : profiles) {
    const std::string kind = residual_kind_name(prof.kind);
    for (std::size_t i = 0; i < prof.s.size(); ++i) {
      os << prof.crack << "," << fmt17(prof.s[i]) << "," << kind << ","
         << fmt17(prof.value[i]) << "," << fmt17(prof.weight[i]) << "\n";
    }
  }
}

}  // namespace sifem
