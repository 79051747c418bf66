#include "sifem/solver.hpp"

#include "sifem/klu_solver.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sifem/errors.hpp"

namespace sifem {

namespace {

constexpr double kGammaRK = 1.0 - 0.70710678118654752440;  // 1 - 1/sqrt(2)

using Triplets = std::vector<Eigen::Triplet<double>>;

void append_block(Triplets& out, const SpMat& m, int row_off, int col_off,
                  double scale = 1.0) {
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      out.emplace_back(row_off + static_cast<int>(it.row()),
                       col_off + static_cast<int>(it.col()), scale * it.value());
    }
  }
}

SpMat select_rows_cols(const SpMat& m, const std::vector<int>& map, int n_red) {
  Triplets t;
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      const int r = map[it.row()];
      const int c = map[it.col()];
      if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
    }
  }
  SpMat out(n_red, n_red);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

}  // namespace

void build_closure_operators(const SplitMesh& mesh, const DofMap& dofs,
                             const std::vector<ShiftData>& shifts,
                             const std::vector<InterfaceLaw>& laws,
                             SpMat& lambda_z, SpMat& lambda_zdot) {
  const int n_z = dofs.n_bulk();
  const int n_l = dofs.n_interface();
  Triplets t_z, t_zdot;

  for (std::size_t c = 0; c < mesh.cracks().size(); ++c) {
    const CrackTopology& topo = mesh.cracks()[c];
    const ShiftData& shift = shifts.at(c);
    const InterfaceLaw& law = laws.at(c);
    const int offset = mesh.path_node_offset(static_cast<int>(c));
    const int n_path = static_cast<int>(topo.path_coords.size());

    for (int k = 0; k < n_path; ++k) {
      const ShiftSample& smp = shift.path_nodes[k];
      const int pn = offset + k;

      // Owning elements per side: the side elements of the facets adjacent
      // to this path node, deduplicated (a corner facet pair can share one).
      std::array<std::vector<int>, 2> owners;  // [0]=plus, [1]=minus
      for (int f : {k - 1, k}) {
        if (f < 0 || f >= static_cast<int>(topo.facets.size())) continue;
        for (int s = 0; s < 2; ++s) {
          const int e = (s == 0) ? topo.facets[f].elem_plus : topo.facets[f].elem_minus;
          if (std::find(owners[s].begin(), owners[s].end(), e) == owners[s].end()) {
            owners[s].push_back(e);
          }
        }
      }

      // Jump rows of the shifted traces: coefficients over bulk dofs for
      // [[p + gap.grad p]] and [[u_i + gap.grad u_i]].
      std::vector<std::pair<int, double>> jump_p;
      std::array<std::vector<std::pair<int, double>>, 2> jump_u;  // per component

      for (int s = 0; s < 2; ++s) {
        const double sgn = (s == 0) ? 1.0 : -1.0;
        const int node = (s == 0) ? topo.path_plus[k] : topo.path_minus[k];
        jump_p.emplace_back(dofs.pressure_dof(node), sgn);
        for (int comp = 0; comp < 2; ++comp) {
          jump_u[comp].emplace_back(dofs.displacement_dof(node, comp), sgn);
        }
        const double wavg = 1.0 / static_cast<double>(owners[s].size());
        for (int e : owners[s]) {
          // Reference corner of this node inside element e.
          const auto& quad = mesh.quads()[e];
          int corner = -1;
          for (int a = 0; a < 4; ++a) {
            if (quad[a] == node) corner = a;
          }
          if (corner < 0) {
            throw NumericalError("path node missing from owning element");
          }
          static const std::array<Vec2, 4> ref{Vec2{-1, -1}, Vec2{1, -1},
                                               Vec2{1, 1}, Vec2{-1, 1}};
          const BasisEval ev =
              eval_basis(BasisFamily::Q1Bubble, ref[corner].x(), ref[corner].y());
          const double sx = 2.0 / mesh.hx(), sy = 2.0 / mesh.hy();
          for (int a = 0; a < 5; ++a) {
            const Vec2 g(sx * ev.grad[a].x(), sy * ev.grad[a].y());
            const double coef = sgn * wavg * smp.gap.dot(g);
            if (coef == 0.0) continue;
            if (a < 4) {
              jump_p.emplace_back(dofs.pressure_dof(quad[a]), coef);
              for (int comp = 0; comp < 2; ++comp) {
                jump_u[comp].emplace_back(dofs.displacement_dof(quad[a], comp), coef);
              }
            } else {
              for (int comp = 0; comp < 2; ++comp) {
                jump_u[comp].emplace_back(dofs.bubble_dof(e, comp), coef);
              }
            }
          }
        }
      }

      // Flux unknowns: q+ = -T_n [[p_hat]], q- = +T_n [[p_hat]].
      for (const auto& [dof, coef] : jump_p) {
        if (law.transmissivity == 0.0) break;
        t_z.emplace_back(dofs.lambda_flux_dof(pn, +1), dof,
                         -law.transmissivity * coef);
        t_z.emplace_back(dofs.lambda_flux_dof(pn, -1), dof,
                         +law.transmissivity * coef);
      }

      // Traction unknowns: t+- = +-(K [[u_hat]] + H [[du_hat/dt]]).
      const Mat2 Kmat = spring_stiffness(law, smp.normal);
      const Mat2 Hmat = spring_viscosity(law, smp.normal);
      for (int comp = 0; comp < 2; ++comp) {
        for (int d = 0; d < 2; ++d) {
          for (const auto& [dof, coef] : jump_u[d]) {
            if (Kmat(comp, d) != 0.0) {
              t_z.emplace_back(dofs.lambda_traction_dof(pn, +1, comp), dof,
                               Kmat(comp, d) * coef);
              t_z.emplace_back(dofs.lambda_traction_dof(pn, -1, comp), dof,
                               -Kmat(comp, d) * coef);
            }
            if (Hmat(comp, d) != 0.0) {
              t_zdot.emplace_back(dofs.lambda_traction_dof(pn, +1, comp), dof,
                                  Hmat(comp, d) * coef);
              t_zdot.emplace_back(dofs.lambda_traction_dof(pn, -1, comp), dof,
                                  -Hmat(comp, d) * coef);
            }
          }
        }
      }
    }
  }

  lambda_z.resize(n_l, n_z);
  lambda_z.setFromTriplets(t_z.begin(), t_z.end());
  lambda_zdot.resize(n_l, n_z);
  lambda_zdot.setFromTriplets(t_zdot.begin(), t_zdot.end());
}

DAESystem::DAESystem(const SplitMesh& mesh, const DofMap& dofs,
                     SystemBlocks blocks, ConstraintSet constraints,
                     const std::vector<ShiftData>& shifts,
                     const std::vector<InterfaceLaw>& laws)
    : mode_(dofs.mode()), blocks_(std::move(blocks)),
      constraints_(std::move(constraints)) {
  const int n_p = blocks_.n_p;
  const int n_u = blocks_.n_u;
  n_z_ = n_p + n_u;

  const bool strong = (dofs.mode() == EnforcementMode::Strong);

  Triplets t_e, t_k;
  append_block(t_e, blocks_.M_p, 0, 0);
  append_block(t_e, blocks_.C, 0, n_p);
  append_block(t_k, blocks_.K_p, 0, 0);
  append_block(t_k, blocks_.Rc_p, 0, 0);
  append_block(t_k, SpMat(blocks_.C.transpose()), n_p, 0, -1.0);
  append_block(t_k, blocks_.Rc_up, n_p, 0);
  append_block(t_k, blocks_.K_u, n_p, n_p);
  append_block(t_k, blocks_.Rc_uu, n_p, n_p);
  if (blocks_.with_hessian) {
    append_block(t_k, blocks_.Sc_p, 0, 0);
    append_block(t_k, blocks_.Sc_up, n_p, 0);
    append_block(t_k, blocks_.Sc_uu, n_p, n_p);
  }
  if (!strong) {
    append_block(t_k, blocks_.Kc_p, 0, 0);
    append_block(t_k, blocks_.Kc_u, n_p, n_p);
    append_block(t_e, blocks_.Dc_u, n_p, n_p);
  }
  E_full_.resize(n_z_, n_z_);
  E_full_.setFromTriplets(t_e.begin(), t_e.end());
  K_full_.resize(n_z_, n_z_);
  K_full_.setFromTriplets(t_k.begin(), t_k.end());

  if (strong) {
    build_closure_operators(mesh, dofs, shifts, laws, lambda_z_, lambda_zdot_);
    Triplets t_g;
    append_block(t_g, blocks_.G_p, 0, 0);
    append_block(t_g, blocks_.G_u, n_p, 0);
    G_full_.resize(n_z_, blocks_.n_lambda);
    G_full_.setFromTriplets(t_g.begin(), t_g.end());
    // Fold the linear closure into the effective operators; exact for the
    // linear laws used here, so no interface iteration is needed.
    K_full_ = K_full_ + SpMat(G_full_ * lambda_z_);
    E_full_ = E_full_ + SpMat(G_full_ * lambda_zdot_);
  }

  // Symmetric reduction of the homogeneous essential constraints.
  full_to_red_.assign(n_z_, -1);
  std::vector<bool> constrained(n_z_, false);
  for (std::size_t i = 0; i < constraints_.dofs.size(); ++i) {
    const int d = constraints_.dofs[i];
    if (d < 0 || d >= n_z_) throw ConfigError("constraint on nonexistent dof");
    if (constrained[d]) throw ConfigError("duplicate constraint on dof");
    constrained[d] = true;
  }
  for (int d = 0; d < n_z_; ++d) {
    if (!constrained[d]) {
      full_to_red_[d] = static_cast<int>(free_.size());
      free_.push_back(d);
    }
  }
  const int n_red = static_cast<int>(free_.size());
  E_red_ = select_rows_cols(E_full_, full_to_red_, n_red);
  K_red_ = select_rows_cols(K_full_, full_to_red_, n_red);

  Eigen::VectorXd f_full(n_z_);
  f_full.head(n_p) = blocks_.f_p;
  f_full.tail(n_u) = blocks_.f_u;
  f_red_ = reduce(f_full);
}

DAESystem::DAESystem(SpMat E, SpMat K, Eigen::VectorXd f)
    : mode_(EnforcementMode::Weak) {
  n_z_ = static_cast<int>(K.rows());
  blocks_.n_p = n_z_;
  blocks_.n_u = 0;
  blocks_.f_p = f;
  blocks_.f_u = Eigen::VectorXd::Zero(0);
  E_full_ = std::move(E);
  K_full_ = std::move(K);
  full_to_red_.resize(n_z_);
  for (int d = 0; d < n_z_; ++d) {
    full_to_red_[d] = d;
    free_.push_back(d);
  }
  E_red_ = E_full_;
  K_red_ = K_full_;
  f_red_ = std::move(f);
}

Eigen::VectorXd DAESystem::reduce(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(free_.size());
  for (std::size_t i = 0; i < free_.size(); ++i) out[i] = full[free_[i]];
  return out;
}

Eigen::VectorXd DAESystem::expand(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_z_);
  for (std::size_t i = 0; i < free_.size(); ++i) out[free_[i]] = reduced[i];
  return out;
}

Eigen::VectorXd DAESystem::closure_lambda(const Eigen::VectorXd& z_full,
                                          const Eigen::VectorXd& zdot_full) const {
  if (mode_ != EnforcementMode::Strong) return Eigen::VectorXd();
  return lambda_z_ * z_full + lambda_zdot_ * zdot_full;
}

State DAESystem::solve_initial(const Eigen::VectorXd& p0) const {
  const int n_p = blocks_.n_p;
  State st;
  st.t = 0.0;
  st.z = Eigen::VectorXd::Zero(n_z_);
  st.z.head(n_p) = p0;
  for (std::size_t i = 0; i < constraints_.dofs.size(); ++i) {
    st.z[constraints_.dofs[i]] = constraints_.values[i];
  }

  // Momentum rows at t=0: mechanics sub-block of the effective operator.
  std::vector<int> u_map(n_z_, -1);
  std::vector<int> u_free;
  for (int d = n_p; d < n_z_; ++d) {
    if (full_to_red_[d] >= 0) {
      u_map[d] = static_cast<int>(u_free.size());
      u_free.push_back(d);
    }
  }
  Triplets t_kuu;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(u_free.size());
  for (std::size_t i = 0; i < u_free.size(); ++i) rhs[i] = blocks_.f_u[u_free[i] - n_p];
  for (int k = 0; k < K_full_.outerSize(); ++k) {
    for (SpMat::InnerIterator it(K_full_, k); it; ++it) {
      if (it.row() < n_p) continue;
      const int r = u_map[it.row()];
      if (r < 0) continue;
      if (it.col() >= n_p && u_map[it.col()] >= 0) {
        t_kuu.emplace_back(r, u_map[it.col()], it.value());
      } else {
        rhs[r] -= it.value() * st.z[it.col()];
      }
    }
  }
  SpMat Kuu(u_free.size(), u_free.size());
  Kuu.setFromTriplets(t_kuu.begin(), t_kuu.end());
  Kuu.makeCompressed();
  KluLU lu;
  try {
    lu.factorize(Kuu);
  } catch (const NumericalError&) {
    throw ConfigError("initial equilibrium solve failed (insufficient constraints?)");
  }
  Eigen::VectorXd u0 = lu.solve(rhs);
  u0 += lu.solve(Eigen::VectorXd(rhs - Kuu * u0));
  for (std::size_t i = 0; i < u_free.size(); ++i) st.z[u_free[i]] = u0[i];

  st.zdot = Eigen::VectorXd::Zero(n_z_);
  st.lambda = closure_lambda(st.z, st.zdot);
  return st;
}

void DAESystem::factorize(double dt) const {
  if (stage_klu_ && stage_klu_->ready() && factored_dt_ == dt) return;
  if (!stage_klu_) stage_klu_ = std::make_unique<KluLU>();
  stage_m_ = E_red_ + (kGammaRK * dt) * K_red_;
  stage_m_.makeCompressed();
  stage_klu_->factorize(stage_m_);
  factored_dt_ = dt;
  ++n_factorizations_;
}

std::pair<State, double> DAESystem::sdirk2_advance(const State& state, double dt,
                                                   const TimeControls& controls) const {
  factorize(dt);
  const Eigen::VectorXd z_n = reduce(state.z);
  const SpMat& E = E_red_;
  const SpMat& K = K_red_;
  const SpMat& M = stage_m_;

  // One refinement pass per stage solve keeps the algebraic rows accurate
  // across the wide coefficient range of the blocks.
  auto solve_refined = [&](const Eigen::VectorXd& rhs) {
    Eigen::VectorXd x = stage_klu_->solve(rhs);
    x += stage_klu_->solve(Eigen::VectorXd(rhs - M * x));
    return x;
  };

  const Eigen::VectorXd rhs1 = f_red_ - K * z_n;
  const Eigen::VectorXd k1 = solve_refined(rhs1);
  const Eigen::VectorXd rhs2 = f_red_ - K * (z_n + dt * (1.0 - kGammaRK) * k1);
  const Eigen::VectorXd k2 = solve_refined(rhs2);

  const Eigen::VectorXd z_next = z_n + dt * ((1.0 - kGammaRK) * k1 + kGammaRK * k2);

  // Error estimate: difference to the first-order embedded solution,
  // filtered through the stage matrix so stiff/algebraic rows stay bounded.
  const Eigen::VectorXd err_raw = (kGammaRK * dt) * (k2 - k1);
  const Eigen::VectorXd err_f = stage_klu_->solve(Eigen::VectorXd(E * err_raw));

  double acc = 0.0;
  for (int i = 0; i < z_next.size(); ++i) {
    const double scale = controls.atol + controls.rtol * std::abs(z_next[i]);
    const double r = err_f[i] / scale;
    acc += r * r;
  }
  const double err = std::sqrt(acc / std::max<int>(1, z_next.size()));

  State out;
  out.t = state.t + dt;
  out.z = expand(z_next);
  for (std::size_t i = 0; i < constraints_.dofs.size(); ++i) {
    out.z[constraints_.dofs[i]] = constraints_.values[i];
  }
  out.zdot = expand(k2);  // stiffly accurate: last stage derivative
  out.lambda = closure_lambda(out.z, out.zdot);
  return {std::move(out), err};
}

State DAESystem::run_transient(const State& initial, double t_end,
                               const TimeControls& controls,
                               const std::function<void(const State&)>& on_accept) const {
  State state = initial;
  double dt = controls.dt_init;
  while (state.t < t_end * (1.0 - 1e-14)) {
    if (dt < controls.dt_min) {
      throw NumericalError("time step underflow at t = " + std::to_string(state.t));
    }
    const double dt_step = std::min(dt, t_end - state.t);
    auto [candidate, err] = sdirk2_advance(state, dt_step, controls);
    if (std::isnan(err)) {
      dt = 0.5 * dt_step;
      continue;
    }
    const double factor = std::clamp(
        controls.safety * std::pow(1.0 / std::max(err, 1e-300), 0.5),
        controls.shrink_min, controls.growth_max);
    if (err <= 1.0) {
      state = std::move(candidate);
      if (on_accept) on_accept(state);
      // Deadband around 1 so the factorization is reused across the
      // plateau; rejected steps always shrink.
      dt = (factor >= 0.9 && factor < 1.15) ? dt_step : dt_step * factor;
    } else {
      dt = dt_step * factor;
    }
  }
  return state;
}

}  // namespace sifem
