#include "lowmach/physics.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace lowmach {

PressureLaw PressureLaw::parse(const std::string& id, double a, double g) {
  if (id == "quadratic") return quadratic();
  if (id == "gamma") return gamma_law(a, g);
  if (id == "linear") return linear(a);
  throw std::invalid_argument("pressure law: unknown id '" + id + "' (quadratic | gamma | linear)");
}

std::string PressureLaw::id() const {
  switch (kind) {
    case Kind::quadratic: return "quadratic";
    case Kind::gamma: return "gamma";
    case Kind::linear: return "linear";
  }
  return "";
}

double PressureLaw::P(double rho) const {
  switch (kind) {
    case Kind::quadratic: return 0.5 * rho * rho;
    case Kind::gamma: return a * std::pow(rho, g);
    case Kind::linear: return a * rho;
  }
  return 0.0;
}

double PressureLaw::dP(double rho) const {
  switch (kind) {
    case Kind::quadratic: return rho;
    case Kind::gamma: return a * g * std::pow(rho, g - 1.0);
    case Kind::linear: return a;
  }
  return 0.0;
}

double PressureLaw::d2P(double rho) const {
  switch (kind) {
    case Kind::quadratic: return 1.0;
    case Kind::gamma: return a * g * (g - 1.0) * std::pow(rho, g - 2.0);
    case Kind::linear: return 0.0;
  }
  return 0.0;
}

double PressureLaw::dP_increment(double rho, double z) const {
  switch (kind) {
    case Kind::quadratic: return z;
    case Kind::gamma: return a * g * std::pow(rho, g - 1.0) * std::expm1((g - 1.0) * std::log1p(z / rho));
    case Kind::linear: return 0.0;
  }
  return 0.0;
}

double PressureLaw::P_increment(double rho, double z) const {
  switch (kind) {
    case Kind::quadratic: return z * (rho + 0.5 * z);
    case Kind::gamma: return a * std::pow(rho, g) * std::expm1(g * std::log1p(z / rho));
    case Kind::linear: return a * z;
  }
  return 0.0;
}

void PhysicalParams::validate() const {
  if (!(mu > 0.0)) throw std::invalid_argument("physical params: requires mu > 0");
  if (!(2.0 * mu / 3.0 + mu_prime >= 0.0)) throw std::invalid_argument("physical params: requires 2 mu / 3 + mu' >= 0");
  if (!(rho_inf > 0.0)) throw std::invalid_argument("physical params: requires rho_inf > 0");
  if (!(pressure.a > 0.0)) throw std::invalid_argument("physical params: pressure coefficient must be positive");
  if (!(dP_inf() > 0.0)) throw std::invalid_argument("physical params: requires P'(rho_inf) > 0");
}

double PhysicalParams::gamma() const { return std::sqrt(dP_inf()); }
double PhysicalParams::gamma2() const { return std::sqrt(dP_inf()) / rho_inf; }

std::string PhysicalParams::json() const {
  nlohmann::json j{{"mu", mu},           {"mu_prime", mu_prime},
                   {"rho_inf", rho_inf}, {"pressure_law", pressure.id()},
                   {"pressure_a", pressure.a}, {"pressure_gamma", pressure.g}};
  return j.dump();
}

}  // namespace lowmach
