#pragma once

// Model parameters for the Volterra Heston market and the deterministic rate curve.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "vhmv/errors.hpp"
#include "vhmv/kernels.hpp"

namespace vhmv {

/// Piecewise-constant short rate: value[i] on [knots[i], knots[i+1]), the last
/// piece extending to infinity. knots[0] == 0.
class RateCurve {
public:
  RateCurve() : RateCurve(0.01) {}
  explicit RateCurve(double r) : knots_{0.0}, values_{r} { validate(); }
  RateCurve(std::vector<double> knots, std::vector<double> values)
      : knots_(std::move(knots)), values_(std::move(values)) {
    validate();
  }

  static RateCurve constant(double r) { return RateCurve(r); }

  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& values() const noexcept { return values_; }
  bool is_constant() const noexcept { return values_.size() == 1; }

  double operator()(double t) const {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    const std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    return values_[i];
  }

  /// Exact int_a^b r(s) ds.
  double integral(double a, double b) const {
    if (b < a) return -integral(b, a);
    double acc = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double lo = std::max(a, knots_[i]);
      const double hi = i + 1 < knots_.size() ? std::min(b, knots_[i + 1]) : b;
      if (hi > lo) acc += values_[i] * (hi - lo);
    }
    return acc;
  }

  friend bool operator==(const RateCurve&, const RateCurve&) = default;

private:
  void validate() const {
    if (knots_.empty() || knots_.size() != values_.size()) throw DomainError("rate curve needs one value per knot");
    if (knots_[0] != 0.0) throw DomainError("rate curve must start at t = 0");
    for (std::size_t i = 1; i < knots_.size(); ++i)
      if (!(knots_[i] > knots_[i - 1])) throw DomainError("rate knots must be strictly increasing");
    for (double v : values_)
      if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("rates must be positive and finite");
  }

  std::vector<double> knots_;
  std::vector<double> values_;
};

struct ModelParams {
  double V0 = 0.04;
  double kappa = 0.1;
  double phi = 0.3;
  double sigma = 0.03;
  double rho = -0.7;
  double theta = 0.6;
  RateCurve rate{0.03};
  double T = 1.0;
  double x0 = 1.0;
  double c = 1.1;
  KernelSpec kernel = KernelSpec::fractional(0.6);

  /// Drift coefficient of V under the auxiliary measure.
  double lambda() const noexcept { return kappa + 2.0 * theta * rho * sigma; }
  /// Quadratic coefficient (1 - 2 rho^2) sigma^2 / 2 of the psi equation.
  double c2() const noexcept { return (1.0 - 2.0 * rho * rho) * sigma * sigma / 2.0; }
  double rate_integral() const { return rate.integral(0.0, T); }
  double rate_integral(double t) const { return rate.integral(t, T); }
  /// x0 exp(int_0^T r), the risk-free terminal wealth.
  double riskless_terminal() const { return x0 * std::exp(rate_integral()); }

  /// Structural checks. theta = 0 and sigma = 0 are allowed here.
  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(V0) || !finite(kappa) || !finite(phi) || !finite(sigma) || !finite(rho) || !finite(theta) ||
        !finite(T) || !finite(x0) || !finite(c))
      throw DomainError("model parameters must be finite");
    if (V0 < 0.0) throw DomainError("V0 must be nonnegative");
    if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
    if (!(phi > 0.0)) throw DomainError("phi must be positive");
    if (sigma < 0.0) throw DomainError("sigma must be nonnegative");
    if (rho < -1.0 || rho > 1.0) throw DomainError("rho must lie in [-1, 1]");
    if (!(T > 0.0)) throw DomainError("T must be positive");
    if (!(x0 > 0.0)) throw DomainError("x0 must be positive");
    kernel.validate();
  }

  /// Checks needed by the mean-variance solution on top of validate().
  void validate_for_mv() const {
    validate();
    if (theta == 0.0) throw DomainError("theta must be nonzero for the mean-variance problem");
    const double floor = riskless_terminal();
    if (c < floor * (1.0 - 1e-14)) {
      std::ostringstream os;
      os.precision(17);
      os << "target c = " << c << " is below the riskless terminal wealth " << floor;
      throw DomainError(os.str());
    }
  }
};

}  // namespace vhmv
