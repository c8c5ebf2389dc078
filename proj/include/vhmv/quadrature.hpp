#pragma once

// Product integration on a uniform grid. The integrand F is interpolated
// (piecewise constant for the rectangle rule, piecewise linear for the
// trapezoidal rule) and integrated exactly against the kernel, so singular
// kernels are never sampled at the origin.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "vhmv/errors.hpp"
#include "vhmv/grid.hpp"
#include "vhmv/kernels.hpp"

namespace vhmv {

/// Lag-indexed weights for (k * F)(t_n) on a uniform grid with step h.
/// Lag m >= 1 refers to the kernel interval u in [(m-1)h, mh], which is the
/// image of [t_{n-m}, t_{n-m+1}] under u = t_n - s.
class ProductWeights {
public:
  ProductWeights() = default;

  template <IntegrableKernel K>
  ProductWeights(const K& kernel, double h, std::size_t max_lag) : h_(h) {
    rect_.assign(max_lag + 1, 0.0);
    left_.assign(max_lag + 1, 0.0);
    right_.assign(max_lag + 1, 0.0);
    for (std::size_t m = 1; m <= max_lag; ++m) {
      const double lo = static_cast<double>(m - 1) * h;
      const double hi = static_cast<double>(m) * h;
      const IntervalMoments mom = kernel.interval_moments(lo, hi);
      rect_[m] = mom.zeroth;
      // F(s) linear on the interval; s - t_{n-m} = hi - u
      left_[m] = mom.first / h;                // weight on F_{n-m}
      right_[m] = mom.zeroth - mom.first / h;  // weight on F_{n-m+1}
    }
  }

  ProductWeights(const AnyKernel& kernel, double h, std::size_t max_lag)
      : ProductWeights(std::visit([&](const auto& k) { return ProductWeights(k, h, max_lag); }, kernel)) {}

  ProductWeights(const KernelSpec& spec, const UniformGrid& grid)
      : ProductWeights(make_kernel(spec), grid.step(), grid.steps()) {}

  double step() const noexcept { return h_; }
  std::size_t max_lag() const noexcept { return rect_.empty() ? 0 : rect_.size() - 1; }

  double rect(std::size_t lag) const { return rect_[lag]; }
  double left(std::size_t lag) const { return left_[lag]; }
  double right(std::size_t lag) const { return right_[lag]; }

  /// Trapezoidal weight of node j in the sum for node n (j <= n).
  double trapezoid(std::size_t n, std::size_t j) const {
    double w = 0.0;
    if (j < n) w += left_[n - j];
    if (j >= 1) w += right_[n - j + 1];
    return w;
  }

  /// sum_{j<n} rect(n-j) F_j : left-rectangle product rule.
  double rectangle_sum(std::span<const double> f, std::size_t n) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += rect_[n - j] * f[j];
    return acc;
  }

  /// Trapezoidal sum over nodes 0..n-1 only (the node-n term is added by the caller).
  double trapezoid_history(std::span<const double> f, std::size_t n) const {
    if (n == 0) return 0.0;
    double acc = left_[n] * f[0];
    for (std::size_t j = 1; j < n; ++j) acc += (left_[n - j] + right_[n - j + 1]) * f[j];
    return acc;
  }

  /// Product-trapezoidal (k * F)(t_n).
  double convolve_at(std::span<const double> f, std::size_t n) const {
    if (n == 0) return 0.0;
    check(f, n);
    return trapezoid_history(f, n) + right_[1] * f[n];
  }

private:
  void check(std::span<const double> f, std::size_t n) const {
    if (n >= f.size()) throw DomainError("sample vector shorter than the requested node");
    if (n > max_lag()) throw DomainError("node beyond the weight table");
  }

  double h_ = 0.0;
  std::vector<double> rect_;
  std::vector<double> left_;
  std::vector<double> right_;
};

/// (K * F)(t_n) for every grid node by the product-trapezoidal rule.
inline std::vector<double> convolve(const AnyKernel& kernel, std::span<const double> f, const UniformGrid& grid) {
  if (f.size() != grid.size()) throw DomainError("sampled function does not match the grid");
  const ProductWeights w(kernel, grid.step(), grid.steps());
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t n = 1; n < grid.size(); ++n) out[n] = w.convolve_at(f, n);
  return out;
}

inline std::vector<double> convolve(const KernelSpec& spec, std::span<const double> f, const UniformGrid& grid) {
  return convolve(make_kernel(spec), f, grid);
}

/// (c * F)(t_n) for a kernel known only through samples c_m = c(t_m) on the
/// same grid (no singularity allowed): plain trapezoid in s.
inline std::vector<double> convolve_sampled(std::span<const double> curve, std::span<const double> f,
                                            const UniformGrid& grid) {
  if (curve.size() != grid.size() || f.size() != grid.size())
    throw DomainError("sampled kernel and function must share the grid");
  const double h = grid.step();
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t n = 1; n < grid.size(); ++n) {
    double acc = 0.5 * (curve[n] * f[0] + curve[0] * f[n]);
    for (std::size_t j = 1; j < n; ++j) acc += curve[n - j] * f[j];
    out[n] = h * acc;
  }
  return out;
}

/// Composite trapezoid of samples over grid nodes [from, to].
inline double trapezoid(std::span<const double> f, double h, std::size_t from, std::size_t to) {
  if (to >= f.size() || from > to) throw DomainError("trapezoid range outside the samples");
  if (from == to) return 0.0;
  double acc = 0.5 * (f[from] + f[to]);
  for (std::size_t j = from + 1; j < to; ++j) acc += f[j];
  return h * acc;
}

inline double trapezoid(std::span<const double> f, double h) { return trapezoid(f, h, 0, f.size() - 1); }

/// Index of t on the grid; off-grid times are rejected.
inline std::size_t grid_index(const UniformGrid& grid, double t) {
  const double x = t / grid.step();
  const double n = std::round(x);
  if (n < 0.0 || n > static_cast<double>(grid.steps()) || std::abs(x - n) > 1e-9 * std::max(1.0, x))
    throw DomainError("time is not a grid node");
  return static_cast<std::size_t>(n);
}

/// Riemann-Liouville integral I^alpha f(t) = int_0^t (t-s)^{alpha-1}/Gamma(alpha) f(s) ds,
/// 0 < alpha <= 1, at a grid node t. alpha = 1 is plain integration.
inline double fractional_integral(double alpha, std::span<const double> f, const UniformGrid& grid, double t) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("fractional order must lie in (0, 1]");
  if (f.size() != grid.size()) throw DomainError("sampled function does not match the grid");
  const std::size_t n = grid_index(grid, t);
  if (n == 0) return 0.0;
  const ProductWeights w(PowerKernel(1.0, alpha), grid.step(), n);
  return w.convolve_at(f, n);
}

/// Second-kind resolvent of lambda*K by marching R = lambda K - lambda K * R with
/// the product-trapezoidal rule. Needs a kernel that is finite at the origin.
template <IntegrableKernel K>
ResolventCurve resolvent_second_kind_numeric(const K& kernel, double lambda, const UniformGrid& grid) {
  ResolventCurve out{grid, std::vector<double>(grid.size(), 0.0), lambda, ResolventForm::Numeric};
  if (lambda == 0.0) return out;
  const double k0 = kernel(0.0);
  if (!std::isfinite(k0)) throw DomainError("numeric resolvent needs a kernel bounded at the origin");
  const ProductWeights w(kernel, grid.step(), grid.steps());
  out.values[0] = lambda * k0;
  for (std::size_t n = 1; n < grid.size(); ++n) {
    const double history = w.trapezoid_history(out.values, n);
    out.values[n] = (lambda * kernel(grid.time(n)) - lambda * history) / (1.0 + lambda * w.right(1));
  }
  return out;
}

inline ResolventCurve resolvent_second_kind_numeric(const KernelSpec& spec, double lambda, const UniformGrid& grid) {
  if (spec.singular()) throw DomainError("numeric resolvent needs a kernel bounded at the origin");
  return std::visit([&](const auto& k) { return resolvent_second_kind_numeric(k, lambda, grid); }, make_kernel(spec));
}

/// (L * f)(t_n) = atom f(t_n) + int_0^{t_n} density(s) f(t_n - s) ds.
inline double apply_first_kind(const FirstKindResolvent& L, std::span<const double> f, const UniformGrid& grid,
                               std::size_t n) {
  if (f.size() != grid.size()) throw DomainError("sampled function does not match the grid");
  double acc = L.atom * f[n];
  if (L.density && n > 0) {
    const ProductWeights w(*L.density, grid.step(), n);
    acc += w.convolve_at(f, n);
  }
  return acc;
}

}  // namespace vhmv
