#pragma once

// Convolution kernels of the Volterra Heston model and their resolvents.
//
// Every kernel type exposes point evaluation plus exact moments over an
// interval, which is all the product-integration quadrature needs:
//   k(t)
//   k.primitive(x)               = int_0^x k(u) du
//   k.interval_moments(lo, hi)   = { int_lo^hi k(u) du, int_lo^hi (u - lo) k(u) du }

#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "vhmv/errors.hpp"
#include "vhmv/grid.hpp"
#include "vhmv/special.hpp"

namespace vhmv {

enum class KernelKind { Constant, Fractional, Exponential };

inline std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Constant: return "constant";
    case KernelKind::Fractional: return "fractional";
    case KernelKind::Exponential: return "exponential";
  }
  return "unknown";
}

/// Catalog kernel: c, c t^{alpha-1}/Gamma(alpha), or c e^{-beta t}.
struct KernelSpec {
  KernelKind kind = KernelKind::Constant;
  double c = 1.0;
  double alpha = 1.0;  // Fractional only
  double beta = 0.0;   // Exponential only

  static KernelSpec constant(double c = 1.0) { return {KernelKind::Constant, c, 1.0, 0.0}; }
  static KernelSpec fractional(double alpha, double c = 1.0) { return {KernelKind::Fractional, c, alpha, 0.0}; }
  static KernelSpec exponential(double beta, double c = 1.0) { return {KernelKind::Exponential, c, 1.0, beta}; }

  void validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("kernel scale c must be positive");
    if (kind == KernelKind::Fractional && !(alpha > 0.5 && alpha <= 1.0))
      throw DomainError("fractional kernel needs 1/2 < alpha <= 1");
    if (kind == KernelKind::Exponential && !(beta >= 0.0 && std::isfinite(beta)))
      throw DomainError("exponential kernel needs beta >= 0");
  }

  /// Fractional with alpha < 1: unbounded at t = 0.
  bool singular() const noexcept { return kind == KernelKind::Fractional && alpha < 1.0; }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

struct IntervalMoments {
  double zeroth = 0.0;  // int_lo^hi k
  double first = 0.0;   // int_lo^hi (u - lo) k
};

template <class K>
concept IntegrableKernel = requires(const K& k, double x) {
  { k(x) } -> std::convertible_to<double>;
  { k.primitive(x) } -> std::convertible_to<double>;
  { k.interval_moments(x, x) } -> std::same_as<IntervalMoments>;
};

/// c e^{-beta t} for any real beta (negative beta grows).
class ExpKernel {
public:
  ExpKernel(double c, double beta) : c_(c), beta_(beta) {}

  double scale() const noexcept { return c_; }
  double rate() const noexcept { return beta_; }

  double operator()(double t) const { return c_ * std::exp(-beta_ * t); }

  double primitive(double x) const { return c_ * x * phi1(beta_ * x); }

  IntervalMoments interval_moments(double lo, double hi) const {
    const double d = hi - lo;
    const double x = beta_ * d;
    const double base = c_ * std::exp(-beta_ * lo);
    return {base * d * phi1(x), base * d * d * phi2(x)};
  }

private:
  // (1 - e^{-x})/x
  static double phi1(double x) {
    if (x == 0.0) return 1.0;
    return -std::expm1(-x) / x;
  }
  // (1 - e^{-x}(1 + x))/x^2
  static double phi2(double x) {
    if (std::abs(x) < 1e-3) return 0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0 + x * x * x * x / 144.0;
    return (-std::expm1(-x) - x * std::exp(-x)) / (x * x);
  }

  double c_;
  double beta_;
};

/// c t^{alpha-1}/Gamma(alpha), 0 < alpha <= 1 (alpha = 1 is the constant c).
class PowerKernel {
public:
  PowerKernel(double c, double alpha)
      : c_(c), alpha_(alpha), inv_gamma_a_(1.0 / std::tgamma(alpha)), inv_gamma_a1_(1.0 / std::tgamma(alpha + 1.0)) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("power kernel needs 0 < alpha <= 1");
  }

  double scale() const noexcept { return c_; }
  double alpha() const noexcept { return alpha_; }

  double operator()(double t) const {
    if (alpha_ == 1.0) return c_;
    if (!(t > 0.0)) throw DomainError("fractional kernel is singular at t <= 0");
    return c_ * std::pow(t, alpha_ - 1.0) * inv_gamma_a_;
  }

  double primitive(double x) const { return x <= 0.0 ? 0.0 : c_ * std::pow(x, alpha_) * inv_gamma_a1_; }

  IntervalMoments interval_moments(double lo, double hi) const {
    const double pa_hi = std::pow(hi, alpha_), pa_lo = lo > 0.0 ? std::pow(lo, alpha_) : 0.0;
    const double zeroth = c_ * (pa_hi - pa_lo) * inv_gamma_a1_;
    // int_lo^hi u^alpha du / Gamma(alpha) - lo * zeroth
    const double upper = c_ * (hi * pa_hi - lo * pa_lo) / (alpha_ + 1.0) * inv_gamma_a_;
    return {zeroth, upper - lo * zeroth};
  }

private:
  double c_;
  double alpha_;
  double inv_gamma_a_;
  double inv_gamma_a1_;
};

/// R_lambda / lambda for the fractional kernel c t^{alpha-1}/Gamma(alpha):
///   c t^{alpha-1} E_{alpha,alpha}(-lambda c t^alpha)
/// Finite at lambda = 0, where it reduces to the kernel itself.
class MittagLefflerKernel {
public:
  MittagLefflerKernel(double c, double alpha, double lambda)
      : c_(c), alpha_(alpha), lambda_(lambda), e_aa_(alpha, alpha), e_aa1_(alpha, alpha + 1.0), e_aa2_(alpha, alpha + 2.0) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("Mittag-Leffler kernel needs 0 < alpha <= 1");
  }

  double operator()(double t) const {
    if (!(t > 0.0)) throw DomainError("fractional resolvent is singular at t <= 0");
    return c_ * std::pow(t, alpha_ - 1.0) * e_aa_(argument(t));
  }

  double primitive(double x) const {
    if (x <= 0.0) return 0.0;
    return c_ * std::pow(x, alpha_) * e_aa1_(argument(x));
  }

  IntervalMoments interval_moments(double lo, double hi) const {
    const double zeroth = primitive(hi) - primitive(lo);
    return {zeroth, first_moment(hi) - first_moment(lo) - lo * zeroth};
  }

private:
  double argument(double t) const { return -lambda_ * c_ * std::pow(t, alpha_); }

  // int_0^x u k(u) du = x P(x) - int_0^x P(u) du
  double first_moment(double x) const {
    if (x <= 0.0) return 0.0;
    const double z = argument(x);
    const double xa = std::pow(x, alpha_);
    return c_ * x * xa * (e_aa1_(z) - e_aa2_(z));
  }

  double c_;
  double alpha_;
  double lambda_;
  MittagLeffler e_aa_;
  MittagLeffler e_aa1_;
  MittagLeffler e_aa2_;
};

using AnyKernel = std::variant<ExpKernel, PowerKernel, MittagLefflerKernel>;

/// Kernel object for a catalog spec.
inline AnyKernel make_kernel(const KernelSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case KernelKind::Constant: return ExpKernel(spec.c, 0.0);
    case KernelKind::Exponential: return ExpKernel(spec.c, spec.beta);
    case KernelKind::Fractional:
      if (spec.alpha == 1.0) return ExpKernel(spec.c, 0.0);
      return PowerKernel(spec.c, spec.alpha);
  }
  throw DomainError("unknown kernel kind");
}

inline double kernel_eval(const AnyKernel& k, double t) {
  return std::visit([t](const auto& kk) { return kk(t); }, k);
}

inline double kernel_primitive(const AnyKernel& k, double x) {
  return std::visit([x](const auto& kk) { return kk.primitive(x); }, k);
}

inline IntervalMoments kernel_moments(const AnyKernel& k, double lo, double hi) {
  return std::visit([lo, hi](const auto& kk) { return kk.interval_moments(lo, hi); }, k);
}

/// K(t) for a catalog kernel. The fractional kernel rejects t <= 0.
inline double kernel_eval(const KernelSpec& spec, double t) {
  spec.validate();
  if (spec.singular() && !(t > 0.0)) throw DomainError("fractional kernel is singular at t <= 0");
  if (t < 0.0) throw DomainError("kernel evaluated at negative time");
  return kernel_eval(make_kernel(spec), t);
}

/// int_0^t K(s) ds.
inline double kernel_integral(const KernelSpec& spec, double t) { return kernel_primitive(make_kernel(spec), t); }

/// R_lambda / lambda, the resolvent of lambda*K divided by lambda. At lambda = 0
/// this is K itself, matching the convention R_lambda/lambda = K, R_lambda = 0.
inline AnyKernel scaled_resolvent(const KernelSpec& spec, double lambda) {
  spec.validate();
  if (!std::isfinite(lambda)) throw DomainError("resolvent scaling lambda must be finite");
  switch (spec.kind) {
    case KernelKind::Constant: return ExpKernel(spec.c, lambda * spec.c);
    case KernelKind::Exponential: return ExpKernel(spec.c, spec.beta + lambda * spec.c);
    case KernelKind::Fractional:
      if (spec.alpha == 1.0) return ExpKernel(spec.c, lambda * spec.c);
      return MittagLefflerKernel(spec.c, spec.alpha, lambda);
  }
  throw DomainError("unknown kernel kind");
}

enum class ResolventForm { ClosedForm, Numeric };

/// Resolvent of the second kind R_lambda sampled on a uniform grid.
struct ResolventCurve {
  UniformGrid grid;
  std::vector<double> values;
  double lambda = 0.0;
  ResolventForm form = ResolventForm::ClosedForm;
};

/// R_lambda on the grid from the closed forms. A singular kernel yields an
/// infinite value at t = 0 (signed like lambda); that node carries no information.
inline ResolventCurve resolvent_second_kind(const KernelSpec& spec, double lambda, const UniformGrid& grid) {
  ResolventCurve out{grid, std::vector<double>(grid.size(), 0.0), lambda, ResolventForm::ClosedForm};
  if (lambda == 0.0) return out;
  const AnyKernel r = scaled_resolvent(spec, lambda);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const double t = grid.time(n);
    if (n == 0 && spec.singular()) {
      out.values[n] = std::copysign(std::numeric_limits<double>::infinity(), lambda);
      continue;
    }
    out.values[n] = lambda * kernel_eval(r, t);
  }
  return out;
}

/// Resolvent of the first kind: an atom at zero plus an absolutely continuous part.
struct FirstKindResolvent {
  double atom = 0.0;
  std::optional<AnyKernel> density;
};

inline FirstKindResolvent resolvent_first_kind(const KernelSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case KernelKind::Constant: return {1.0 / spec.c, std::nullopt};
    case KernelKind::Fractional:
      if (spec.alpha == 1.0) return {1.0 / spec.c, std::nullopt};
      // c^{-1} t^{-alpha}/Gamma(1-alpha) is itself a power kernel of order 1-alpha
      return {0.0, AnyKernel(PowerKernel(1.0 / spec.c, 1.0 - spec.alpha))};
    case KernelKind::Exponential:
      if (spec.beta == 0.0) return {1.0 / spec.c, std::nullopt};
      return {1.0 / spec.c, AnyKernel(ExpKernel(spec.beta / spec.c, 0.0))};
  }
  throw DomainError("unknown kernel kind");
}

}  // namespace vhmv
