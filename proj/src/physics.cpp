#include "sifem/physics.hpp"

#include <cmath>

#include "sifem/errors.hpp"

namespace sifem {

double MaterialParams::elasticity(int i, int j, int k, int l) const {
  const double lam = lame_lambda();
  const double G = shear_modulus;
  const auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  return lam * d(i, j) * d(k, l) + G * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
}

void MaterialParams::validate() const {
  if (shear_modulus <= 0.0) throw ConfigError("shear modulus must be positive");
  if (poisson <= -1.0 || poisson >= 0.5) throw ConfigError("Poisson ratio out of range");
  if (compressibility <= 0.0) throw ConfigError("compressibility must be positive");
  if (mobility <= 0.0) throw ConfigError("mobility must be positive");
  if (biot_alpha < 0.0 || biot_alpha > 1.0) throw ConfigError("Biot coefficient out of [0,1]");
}

void InterfaceLaw::validate() const {
  if (transmissivity < 0.0 || k_n < 0.0 || k_t < 0.0 || h_n < 0.0 || h_t < 0.0) {
    throw ConfigError("interface law coefficients must be non-negative");
  }
  if (k_nt != 0.0 || h_nt != 0.0) {
    throw ConfigError("normal-tangential interface coupling is not supported");
  }
}

Mat2 plane_strain_stress(const Mat2& grad_u, double p, const MaterialParams& mat) {
  const Mat2 eps = 0.5 * (grad_u + grad_u.transpose());
  const double tr = eps.trace();
  return mat.lame_lambda() * tr * Mat2::Identity() + 2.0 * mat.shear_modulus * eps -
         mat.biot_alpha * p * Mat2::Identity();
}

double wendland(const Vec2& x, const SourceTerm& src) {
  const double r = (x - src.center).norm() / src.radius;
  if (r >= 1.0) return 0.0;
  const double one_minus = 1.0 - r;
  const double psi = one_minus * one_minus * one_minus * one_minus * (4.0 * r + 1.0);
  return 7.0 / (M_PI * src.radius * src.radius) * psi;
}

InterfaceFrame interface_frame(const Vec2& normal) {
  return InterfaceFrame{normal, Vec2(-normal.y(), normal.x())};
}

Mat2 spring_stiffness(const InterfaceLaw& law, const Vec2& normal) {
  const InterfaceFrame f = interface_frame(normal);
  return law.k_n * f.normal * f.normal.transpose() +
         law.k_t * f.tangent * f.tangent.transpose();
}

Mat2 spring_viscosity(const InterfaceLaw& law, const Vec2& normal) {
  const InterfaceFrame f = interface_frame(normal);
  return law.h_n * f.normal * f.normal.transpose() +
         law.h_t * f.tangent * f.tangent.transpose();
}

Vec2 spring_traction(const Vec2& jump_u, const Vec2& jump_udot,
                     const InterfaceLaw& law, const Vec2& normal) {
  return spring_stiffness(law, normal) * jump_u +
         spring_viscosity(law, normal) * jump_udot;
}

double robin_flux(double jump_p, const InterfaceLaw& law) {
  return -law.transmissivity * jump_p;
}

}  // namespace sifem
