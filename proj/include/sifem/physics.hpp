#pragma once

#include "sifem/geometry.hpp"

namespace sifem {

/// Bulk material data. Unit system is km / MPa / hr throughout.
struct MaterialParams {
  double shear_modulus = 22.0e3;     ///< G (MPa)
  double poisson = 0.25;             ///< nu
  double biot_alpha = 0.25;          ///< Biot-Willis coefficient
  double compressibility = 8.5e-5;   ///< beta, mixture compressibility (1/MPa)
  double mobility = 1.8e-7;          ///< gamma = k/eta (km^2/(MPa hr))

  double lame_lambda() const {
    return 2.0 * shear_modulus * poisson / (1.0 - 2.0 * poisson);
  }
  /// Drained plane-strain elasticity tensor entry C_{ijkl}.
  double elasticity(int i, int j, int k, int l) const;

  void validate() const;
};

/// Linear interface constitutive data: Robin transmissivity, diagonal
/// spring stiffness and dashpot viscosity in the local (normal, tangent)
/// frame. Cross-coupling terms are not supported and rejected if nonzero.
struct InterfaceLaw {
  double transmissivity = 0.0;  ///< T_n (km/(MPa hr))
  double k_n = 0.0;             ///< normal spring stiffness (MPa/km)
  double k_t = 0.0;             ///< tangential spring stiffness (MPa/km)
  double h_n = 0.0;             ///< normal dashpot viscosity (MPa hr/km)
  double h_t = 0.0;             ///< tangential dashpot viscosity (MPa hr/km)
  double k_nt = 0.0;            ///< must stay zero
  double h_nt = 0.0;            ///< must stay zero

  void validate() const;
  bool has_viscosity() const { return h_n != 0.0 || h_t != 0.0; }
};

/// Compactly supported regularized fluid source.
struct SourceTerm {
  Vec2 center{0.0, 0.0};   ///< x_s (km)
  double radius = 0.1;     ///< support radius R (km)
  double rate = 0.0;       ///< signed Q (km^2/hr), constant in time
};

/// Total plane-strain stress sigma = lambda tr(eps) I + 2 G eps - alpha p I,
/// with eps the symmetric part of the displacement gradient.
Mat2 plane_strain_stress(const Mat2& grad_u, double p, const MaterialParams& mat);

/// Normalized C^2 radial bump: 7/(pi R^2) (1-r)_+^4 (4r+1), r = |x-xs|/R.
/// Integrates to one over the plane.
double wendland(const Vec2& x, const SourceTerm& src);

/// Right-handed orthonormal frame (n, m) with m the left-rotate of n.
struct InterfaceFrame {
  Vec2 normal;
  Vec2 tangent;
};
InterfaceFrame interface_frame(const Vec2& normal);

/// Global spring stiffness K_ij = k_n n_i n_j + k_t m_i m_j.
Mat2 spring_stiffness(const InterfaceLaw& law, const Vec2& normal);
/// Global dashpot viscosity H_ij = h_n n_i n_j + h_t m_i m_j.
Mat2 spring_viscosity(const InterfaceLaw& law, const Vec2& normal);

/// Interface traction t_i = K_ij [[u_j]] + H_ij [[du_j/dt]].
Vec2 spring_traction(const Vec2& jump_u, const Vec2& jump_udot,
                     const InterfaceLaw& law, const Vec2& normal);

/// Average normal flux <q.n> = -T_n [[p]].
double robin_flux(double jump_p, const InterfaceLaw& law);

}  // namespace sifem
