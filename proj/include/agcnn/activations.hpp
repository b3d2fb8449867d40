#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "agcnn/error.hpp"

namespace agcnn {

enum class ActivationKind {
  relu,
  nlrelu,
  selu,
  elu,
  lrelu,
  prelu,
  sigmoid,
  softplus,
};

constexpr int kActivationCount = 8;

// Self-normalizing constants from Klambauer et al.
constexpr double kSeluLambda = 1.0507009873554805;
constexpr double kSeluAlpha = 1.6732632423543772;
constexpr double kEluAlpha = 1.0;
constexpr double kDefaultLReluSlope = 0.01;
constexpr double kDefaultNLReluBeta = 1.0;
constexpr double kDefaultPReluInit = 0.25;

// Scalar configuration for an activation application. The PReLU slope is a
// learnable model parameter and is passed separately where it matters.
struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double lrelu_slope = kDefaultLReluSlope;
  double nlrelu_beta = kDefaultNLReluBeta;
};

const char* activation_name(ActivationKind kind);
ActivationKind parse_activation(const std::string& name);

namespace detail {
[[noreturn]] void throw_unknown_activation();
}

// Elementwise closed form. `slope` is only read for PReLU. Inline: these
// run once per feature-map element in the hot convolution loops.
inline double activation_value(const Activation& act, double x, double slope) {
  switch (act.kind) {
    case ActivationKind::relu:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::nlrelu:
      // ln(beta * max(0, x) + 1)
      return x > 0.0 ? std::log1p(act.nlrelu_beta * x) : 0.0;
    case ActivationKind::selu:
      return x >= 0.0 ? kSeluLambda * x
                      : kSeluLambda * kSeluAlpha * std::expm1(x);
    case ActivationKind::elu:
      return x >= 0.0 ? x : kEluAlpha * std::expm1(x);
    case ActivationKind::lrelu:
      return x >= 0.0 ? x : act.lrelu_slope * x;
    case ActivationKind::prelu:
      return x >= 0.0 ? x : slope * x;
    case ActivationKind::sigmoid:
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
    case ActivationKind::softplus:
      // max(x,0) + log1p(exp(-|x|)) stays finite for all finite x
      return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
  }
  detail::throw_unknown_activation();
}

// Derivative of the closed form. The rectifier family takes derivative 0
// at the origin. `slope` is only read for PReLU.
inline double activation_deriv(const Activation& act, double x, double slope) {
  switch (act.kind) {
    case ActivationKind::relu:
      return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::nlrelu:
      return x > 0.0 ? act.nlrelu_beta / (act.nlrelu_beta * x + 1.0) : 0.0;
    case ActivationKind::selu:
      return x >= 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
    case ActivationKind::elu:
      return x >= 0.0 ? 1.0 : kEluAlpha * std::exp(x);
    case ActivationKind::lrelu:
      if (x == 0.0) return 0.0;
      return x > 0.0 ? 1.0 : act.lrelu_slope;
    case ActivationKind::prelu:
      if (x == 0.0) return 0.0;
      return x > 0.0 ? 1.0 : slope;
    case ActivationKind::sigmoid: {
      const double s = activation_value(act, x, slope);
      return s * (1.0 - s);
    }
    case ActivationKind::softplus:
      return activation_value({ActivationKind::sigmoid}, x, 0.0);
  }
  detail::throw_unknown_activation();
}

// d/d(slope) of PReLU at x; zero for every other kind.
inline double activation_slope_deriv(const Activation& act, double x) {
  if (act.kind != ActivationKind::prelu) return 0.0;
  return x < 0.0 ? x : 0.0;
}

}  // namespace agcnn
