#pragma once

// Scalar Riccati-Volterra equations f = K * (c0 + c1 f + c2 f^2) by the
// fractional Adams predictor-corrector built on product integration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vhmv/errors.hpp"
#include "vhmv/grid.hpp"
#include "vhmv/kernels.hpp"
#include "vhmv/quadrature.hpp"

namespace vhmv {

struct RiccatiRHS {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double operator()(double f) const noexcept { return c0 + f * (c1 + c2 * f); }
};

struct SolverOptions {
  unsigned corrector_sweeps = 1;
  double blowup_threshold = 1e8;
  double tolerance = 1e-6;  // bound on the discrete residual for `converged`
};

struct RiccatiSolution {
  UniformGrid grid{1.0, 1};
  std::vector<double> values;
  std::vector<double> rhs_values;
  KernelSpec kernel;
  RiccatiRHS rhs;
  bool converged = false;
  double max_residual = 0.0;
  unsigned corrector_sweeps = 1;
  std::vector<std::string> warnings;

  double horizon() const { return grid.horizon(); }
  std::size_t steps() const { return grid.steps(); }
  double at(std::size_t n) const { return values.at(n); }
  /// Trapezoidal int_0^T f.
  double integral() const { return trapezoid(values, grid.step()); }
  /// Trapezoidal int_0^T F(f).
  double rhs_integral() const { return trapezoid(rhs_values, grid.step()); }
};

/// Fractional Adams method on a uniform grid: product-rectangle predictor,
/// product-trapezoid corrector applied `corrector_sweeps` times per step.
inline RiccatiSolution solve_riccati(const RiccatiRHS& rhs, const KernelSpec& kernel, const UniformGrid& grid,
                                     const SolverOptions& opts = {}) {
  if (opts.corrector_sweeps == 0) throw DomainError("at least one corrector sweep is required");
  const ProductWeights w(kernel, grid);
  const std::size_t size = grid.size();
  RiccatiSolution out;
  out.grid = grid;
  out.kernel = kernel;
  out.rhs = rhs;
  out.corrector_sweeps = opts.corrector_sweeps;
  out.values.assign(size, 0.0);
  out.rhs_values.assign(size, 0.0);
  out.rhs_values[0] = rhs(0.0);
  const double w0 = w.right(1);
  double worst = 0.0;
  for (std::size_t n = 1; n < size; ++n) {
    const double history = w.trapezoid_history(out.rhs_values, n);
    double f = w.rectangle_sum(out.rhs_values, n);
    for (unsigned k = 0; k < opts.corrector_sweeps; ++k) f = history + w0 * rhs(f);
    if (std::isnan(f)) {
      std::ostringstream os;
      os << "Riccati-Volterra solve produced NaN at t = " << grid.time(n);
      throw NumericError(os.str());
    }
    if (!std::isfinite(f) || std::abs(f) > opts.blowup_threshold) {
      std::ostringstream os;
      os << "Riccati-Volterra solution exceeds " << opts.blowup_threshold << " between t = " << grid.time(n - 1)
         << " and t = " << grid.time(n);
      throw ExplosionError(os.str(), grid.time(n - 1), grid.time(n));
    }
    out.values[n] = f;
    out.rhs_values[n] = rhs(f);
    worst = std::max(worst, std::abs(f - history - w0 * out.rhs_values[n]));
  }
  out.max_residual = worst;
  out.converged = worst <= opts.tolerance;
  if (!out.converged) {
    std::ostringstream os;
    os << "discrete residual " << worst << " exceeds tolerance " << opts.tolerance
       << "; refine the grid or add corrector sweeps";
    out.warnings.push_back(os.str());
  }
  return out;
}

/// max_n |f_n - (K * F(f))(t_n)| with the product-trapezoid convolution.
inline double riccati_residual(const RiccatiSolution& sol) {
  const auto conv = convolve(sol.kernel, sol.rhs_values, sol.grid);
  double worst = 0.0;
  for (std::size_t n = 0; n < conv.size(); ++n) worst = std::max(worst, std::abs(sol.values[n] - conv[n]));
  return worst;
}

/// Comparison bounds for f = K * H(f) with H(v) = c0 + c1 v + c2 v^2 in the
/// configuration of the comparison lemmas: H(0) and the leading coefficient
/// share a sign, and the linear coefficient is negative (mean reversion).
/// Then f stays between 0 and r(t) = Q^{-1}(int_0^t K), Q(w) = int_0^w dv/H(v),
/// and r(t) stays strictly short of the root of H nearest to 0.
struct ComparisonBound {
  bool applicable = false;
  double root = 0.0;                 // root of H nearest to 0, on the side of sign(c0)
  std::vector<double> curve;         // r(t_n); empty when not applicable
  std::string reason;
};

inline ComparisonBound comparison_bound(const RiccatiRHS& h, const KernelSpec& kernel, const UniformGrid& grid) {
  ComparisonBound out;
  if (h.c0 == 0.0) {
    out.applicable = true;
    out.curve.assign(grid.size(), 0.0);
    out.reason = "zero forcing";
    return out;
  }
  if (!(h.c1 < 0.0)) {
    out.reason = "linear coefficient is not negative";
    return out;
  }
  if (h.c2 == 0.0 || (h.c2 > 0.0) != (h.c0 > 0.0)) {
    out.reason = "constant and quadratic coefficients do not share a sign";
    return out;
  }
  const double disc = h.c1 * h.c1 - 4.0 * h.c0 * h.c2;
  if (!(disc > 0.0)) {
    out.reason = "discriminant is not positive";
    return out;
  }
  out.applicable = true;
  // H(v) = c2 (v - r1)(v - r2) with r1 the root nearer 0, so
  // Q(w) = log[(1 - w/r1) / (1 - w/r2)] / (c2 (r1 - r2)), inverted in closed form.
  const double sq = std::sqrt(disc);
  const double r1 = 2.0 * h.c0 / (-h.c1 + sq);
  const double r2 = (-h.c1 + sq) / (2.0 * h.c2);
  out.root = r1;
  out.curve.assign(grid.size(), 0.0);
  const AnyKernel k = make_kernel(kernel);
  const double scale = h.c2 * (r1 - r2);
  for (std::size_t n = 1; n < grid.size(); ++n) {
    const double x = scale * kernel_primitive(k, grid.time(n));
    const double e = std::exp(x);
    out.curve[n] = -std::expm1(x) / (1.0 / r1 - e / r2);
  }
  return out;
}

/// Empirical convergence order of the Adams solver from successive grid halvings.
struct ConvergenceStudy {
  std::vector<std::size_t> steps;
  std::vector<double> errors;  // max error at the coarsest grid nodes against the finest solution
  std::vector<double> orders;  // log2 of successive error ratios
  double order = std::numeric_limits<double>::quiet_NaN();
  bool exact = false;  // all errors vanish
  bool monotone = true;
  std::vector<std::string> warnings;
};

/// Levels N0, 2 N0, ..., 2^{levels-1} N0; the last level is the reference.
/// The reported order is the least-squares slope of log error against log h
/// over all but the level next to the reference.
inline ConvergenceStudy convergence_order(const RiccatiRHS& rhs, const KernelSpec& kernel, double horizon,
                                          std::size_t coarse_steps, std::size_t levels,
                                          const SolverOptions& opts = {}) {
  if (levels < 3) throw DomainError("convergence study needs at least three levels");
  ConvergenceStudy out;
  std::vector<RiccatiSolution> sols;
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t n = coarse_steps << l;
    out.steps.push_back(n);
    sols.push_back(solve_riccati(rhs, kernel, UniformGrid(horizon, n), opts));
  }
  const RiccatiSolution& ref = sols.back();
  for (std::size_t l = 0; l + 1 < levels; ++l) {
    const std::size_t stride_ref = ref.steps() / coarse_steps;
    const std::size_t stride = sols[l].steps() / coarse_steps;
    double err = 0.0;
    for (std::size_t m = 0; m <= coarse_steps; ++m)
      err = std::max(err, std::abs(sols[l].values[m * stride] - ref.values[m * stride_ref]));
    out.errors.push_back(err);
  }
  out.exact = std::all_of(out.errors.begin(), out.errors.end(), [](double e) { return e == 0.0; });
  if (out.exact) return out;
  for (std::size_t l = 0; l + 1 < out.errors.size(); ++l) {
    if (out.errors[l + 1] > out.errors[l]) out.monotone = false;
    out.orders.push_back(std::log2(out.errors[l] / out.errors[l + 1]));
  }
  if (!out.monotone) out.warnings.push_back("errors are not monotone under refinement");
  const std::size_t fit = out.errors.size() >= 3 ? out.errors.size() - 1 : out.errors.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t l = 0; l < fit; ++l) {
    const double x = -static_cast<double>(l) * std::log(2.0);  // log h up to a constant
    const double y = std::log(out.errors[l]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nf = static_cast<double>(fit);
  out.order = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
  return out;
}

}  // namespace vhmv
