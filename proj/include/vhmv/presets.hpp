#pragma once

// Named parameter sets for the figure recipes.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vhmv/errors.hpp"
#include "vhmv/model.hpp"

namespace vhmv::presets {

inline ModelParams fig1a(double alpha = 0.6) {
  ModelParams p;
  p.sigma = 0.03;
  p.kappa = 0.1;
  p.theta = 5.0;
  p.rho = -0.7;
  p.T = 1.0;
  p.kernel = KernelSpec::fractional(alpha);
  p.c = p.riskless_terminal() * std::exp(0.1 * p.T);
  return p;
}

inline ModelParams fig1b(double alpha = 0.6) {
  ModelParams p;
  p.sigma = 0.04;
  p.kappa = 2.25;
  p.theta = 0.15;
  p.rho = -0.56;
  p.T = 1.35;
  p.kernel = KernelSpec::fractional(alpha);
  p.c = p.riskless_terminal() * std::exp(0.1 * p.T);
  return p;
}

/// sigma = 0.04 for the small vol-of-vol panel, 3 for the large one.
inline ModelParams fig2(double sigma, double alpha = 0.6) {
  ModelParams p = fig1b(alpha);
  p.sigma = sigma;
  p.x0 = 1.0;
  p.rate = RateCurve(0.01);
  p.V0 = 0.5;
  p.phi = 0.04;
  p.c = p.x0 * std::exp((0.01 + 0.1) * p.T);
  return p;
}

inline constexpr double kFig2V = 0.5;
inline constexpr double kFig2X = 1.0;

inline ModelParams fig4(double alpha = 0.6) {
  ModelParams p;
  p.rate = RateCurve(0.03);
  p.V0 = 0.04;
  p.x0 = 1.0;
  p.phi = 0.3;
  p.sigma = 0.03;
  p.kappa = 0.1;
  p.theta = 0.6;
  p.rho = -0.7;
  p.T = 1.0;
  p.kernel = KernelSpec::fractional(alpha);
  p.c = p.x0 * std::exp((0.03 + 0.1) * p.T);
  return p;
}

/// Targets x0 e^{(r + m) T} for m evenly spaced in [0.01, 0.5].
inline std::vector<double> fig4_targets(const ModelParams& p, std::size_t count = 50) {
  std::vector<double> out;
  const double r = p.rate_integral() / p.T;
  for (std::size_t i = 0; i < count; ++i) {
    const double m = count == 1 ? 0.01 : 0.01 + (0.5 - 0.01) * static_cast<double>(i) / static_cast<double>(count - 1);
    out.push_back(p.x0 * std::exp((r + m) * p.T));
  }
  return out;
}

inline const std::vector<double>& alpha_grid() {
  static const std::vector<double> grid{0.6, 0.7, 0.8, 0.9, 1.0};
  return grid;
}

/// alpha = 0.5 itself is outside the fractional kernel's range.
inline const std::vector<double>& fig4_alpha_grid() {
  static const std::vector<double> grid{0.51, 0.6, 0.7, 0.8, 0.9, 1.0};
  return grid;
}

/// Illustrative rough-Heston investor for the simulation recipe; calibrated
/// values must come from a user config.
inline ModelParams fig3_example() {
  ModelParams p;
  p.x0 = 1.0;
  p.rate = RateCurve(0.01);
  p.theta = 0.4;
  p.T = 1.0;
  p.c = std::exp(0.11);
  p.V0 = 0.02;
  p.kappa = 0.3;
  p.phi = 0.02;
  p.sigma = 0.3;
  p.rho = -0.7;
  p.kernel = KernelSpec::fractional(0.6);
  return p;
}

inline std::vector<std::string> names() { return {"fig1a", "fig1b", "fig2-small-sigma", "fig2-big-sigma", "fig4"}; }

inline std::optional<ModelParams> by_name(const std::string& name, double alpha = 0.6) {
  if (name == "fig1a") return fig1a(alpha);
  if (name == "fig1b") return fig1b(alpha);
  if (name == "fig2-small-sigma") return fig2(0.04, alpha);
  if (name == "fig2-big-sigma") return fig2(3.0, alpha);
  if (name == "fig4") return fig4(alpha);
  return std::nullopt;
}

}  // namespace vhmv::presets
