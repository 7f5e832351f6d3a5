#include "koopman/activations.hpp"

#include <cmath>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

void require_finite(double x) {
  if (!std::isfinite(x)) throw usage_error("activation: non-finite input");
}

// Extrema of the second derivatives, frozen from the closed forms.
// tanh''  peaks at tanh(x) = 1/sqrt(3):      4 / (3 sqrt 3)
// sigma'' peaks at sigma(x) = (3-sqrt 3)/6:  1 / (6 sqrt 3)
// arctan'' peaks at x = 1/sqrt(3):           3 sqrt(3) / 8
const double kTanhG2 = 4.0 / (3.0 * std::sqrt(3.0));
const double kLogisticG2 = 1.0 / (6.0 * std::sqrt(3.0));
const double kArcTanG2 = 3.0 * std::sqrt(3.0) / 8.0;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double activation_eval(ActivationKind kind, double x) {
  require_finite(x);
  switch (kind) {
    case ActivationKind::Tanh: return std::tanh(x);
    case ActivationKind::Logistic: return logistic(x);
    case ActivationKind::ArcTan: return std::atan(x);
  }
  throw usage_error("activation: unknown kind");
}

double activation_deriv1(ActivationKind kind, double x) {
  require_finite(x);
  switch (kind) {
    case ActivationKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::Logistic: {
      const double s = logistic(x);
      return s * (1.0 - s);
    }
    case ActivationKind::ArcTan: return 1.0 / (1.0 + x * x);
  }
  throw usage_error("activation: unknown kind");
}

double activation_deriv2(ActivationKind kind, double x) {
  require_finite(x);
  switch (kind) {
    case ActivationKind::Tanh: {
      const double t = std::tanh(x);
      return -2.0 * t * (1.0 - t * t);
    }
    case ActivationKind::Logistic: {
      const double s = logistic(x);
      return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case ActivationKind::ArcTan: {
      const double u = 1.0 + x * x;
      return -2.0 * x / (u * u);
    }
  }
  throw usage_error("activation: unknown kind");
}

ActivationBounds activation_bounds(ActivationKind kind) {
  ActivationBounds b{};
  switch (kind) {
    case ActivationKind::Tanh:
      b = {1.0, 1.0, kTanhG2, 0.0};
      break;
    case ActivationKind::Logistic:
      b = {1.0, 0.25, kLogisticG2, 0.0};
      break;
    case ActivationKind::ArcTan:
      b = {M_PI / 2.0, 1.0, kArcTanG2, 0.0};
      break;
  }
  // sup ||grad Psi||_2 for Psi(a,b) = psi(a) psi'(b)
  b.l_psi = std::sqrt(b.g1 * b.g1 * b.g1 * b.g1 + b.h * b.h * b.g2 * b.g2);
  return b;
}

ActivationKind activation_from_name(const std::string& name) {
  if (name == "tanh") return ActivationKind::Tanh;
  if (name == "logistic") return ActivationKind::Logistic;
  if (name == "arctan") return ActivationKind::ArcTan;
  throw usage_error("activation: unknown name '" + name +
                    "' (expected tanh | logistic | arctan)");
}

std::string activation_name(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Logistic: return "logistic";
    case ActivationKind::ArcTan: return "arctan";
  }
  return "?";
}

}  // namespace koopman
