#pragma once

#include <string>

namespace lowmach {

// Barotropic pressure law. quadratic: P = rho^2 / 2 (P'(1) = 1);
// gamma: P = a rho^g; linear: P = a rho.
struct PressureLaw {
  enum class Kind { quadratic, gamma, linear };
  Kind kind = Kind::quadratic;
  double a = 1.0;
  double g = 1.4;

  static PressureLaw quadratic() { return {}; }
  static PressureLaw gamma_law(double a, double g) { return {Kind::gamma, a, g}; }
  static PressureLaw linear(double a) { return {Kind::linear, a, 1.0}; }
  static PressureLaw parse(const std::string& id, double a = 1.0, double g = 1.4);
  std::string id() const;

  double P(double rho) const;
  double dP(double rho) const;
  double d2P(double rho) const;
  // P'(rho + z) - P'(rho) without cancellation for small z.
  double dP_increment(double rho, double z) const;
  // P(rho + z) - P(rho).
  double P_increment(double rho, double z) const;
};

struct PhysicalParams {
  double mu = 1.0;
  double mu_prime = 0.0;
  double rho_inf = 1.0;
  PressureLaw pressure;

  // Throws std::invalid_argument naming the violated constraint.
  void validate() const;

  double dP_inf() const { return pressure.dP(rho_inf); }
  double nu() const { return 2.0 * mu + mu_prime; }
  double alpha() const { return nu() / (dP_inf() * rho_inf); }
  double beta() const { return dP_inf() / nu(); }
  double gamma() const;
  double gamma0() const { return dP_inf() / rho_inf; }
  double gamma1() const { return dP_inf() / (rho_inf * rho_inf); }
  double gamma2() const;
  // Damping of the symmetrized acoustic block and heat rate of the
  // solenoidal velocity in the perturbation system.
  double acoustic_mu0() const { return nu() / (2.0 * rho_inf); }
  double heat_nu() const { return mu / rho_inf; }

  // Phi(z) = P'(rho_inf + z) / (rho_inf + z), Psi(z) = 1 / (rho_inf + z).
  double Phi(double z) const { return pressure.dP(rho_inf + z) / (rho_inf + z); }
  double Psi(double z) const { return 1.0 / (rho_inf + z); }

  std::string json() const;
};

}  // namespace lowmach
