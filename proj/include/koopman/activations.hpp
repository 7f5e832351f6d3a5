#pragma once

#include <string>

namespace koopman {

/// Bounded scalar activations with bounded first and second derivatives.
/// The analytic sup-bounds below feed the Lipschitz constants used by the
/// step-size rules, so each kind must keep them exact.
enum class ActivationKind { Tanh, Logistic, ArcTan };

/// Sup-bounds of an activation: h = sup|psi|, g1 = sup|psi'|, g2 = sup|psi''|,
/// and l_psi, a Lipschitz constant of Psi(a,b) = psi(a)psi'(b).
struct ActivationBounds {
  double h;
  double g1;
  double g2;
  double l_psi;
};

double activation_eval(ActivationKind kind, double x);
double activation_deriv1(ActivationKind kind, double x);
double activation_deriv2(ActivationKind kind, double x);
ActivationBounds activation_bounds(ActivationKind kind);

/// Config-file names: "tanh" | "logistic" | "arctan".
ActivationKind activation_from_name(const std::string& name);
std::string activation_name(ActivationKind kind);

}  // namespace koopman
