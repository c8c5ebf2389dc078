#pragma once

// Gamma-related helpers and the two-parameter Mittag-Leffler function
// E_{a,b}(z) = sum_n z^n / Gamma(a*n + b) on the real line.

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "vhmv/errors.hpp"

namespace vhmv {

inline double gamma_fn(double x) { return std::tgamma(x); }

/// 1/Gamma(x), zero at the poles x = 0, -1, -2, ...
inline long double inv_gamma(long double x) {
  if (x <= 0.0L && x == std::floor(x)) return 0.0L;
  if (x > 1700.0L) return 0.0L;
  return 1.0L / std::tgamma(x);
}

namespace detail {

using mp_real = boost::multiprecision::cpp_bin_float_50;

inline bool is_integer(double x) { return x == std::floor(x); }

}  // namespace detail

/// Evaluator for E_{alpha,beta} at fixed (alpha, beta).
///
/// Three regimes on the negative axis, chosen by s = |z|^{1/alpha}:
///   s <= 4        power series in long double (max term ~ e^s, no cancellation loss)
///   4 < s < 36    power series in 50-digit arithmetic
///   s >= 36       algebraic asymptotic expansion, optimally truncated (alpha < 1)
/// Positive arguments have no cancellation and always use the long double series.
/// alpha == 1 with beta in {1, 2, 3} uses the elementary closed forms.
///
/// Copies share the lazily built high-precision coefficient table, so an
/// evaluator can be held by value in curves that are shared across threads.
class MittagLeffler {
public:
  static constexpr std::size_t kSeriesTerms = 400;
  static constexpr std::size_t kMpTerms = 700;
  static constexpr double kMpThreshold = 4.0;
  static constexpr double kAsymptoticThreshold = 36.0;

  MittagLeffler(double alpha, double beta) : state_(std::make_shared<State>()) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
      throw DomainError("Mittag-Leffler parameters must be positive");
    state_->alpha = alpha;
    state_->beta = beta;
    state_->inv_gamma.resize(kSeriesTerms);
    for (std::size_t n = 0; n < kSeriesTerms; ++n)
      state_->inv_gamma[n] = inv_gamma(static_cast<long double>(alpha) * n + beta);
  }

  double alpha() const noexcept { return state_->alpha; }
  double beta() const noexcept { return state_->beta; }

  double operator()(double z) const {
    const double a = state_->alpha;
    const double b = state_->beta;
    if (std::isnan(z)) throw DomainError("Mittag-Leffler argument is NaN");
    if (z == 0.0) return static_cast<double>(state_->inv_gamma[0]);
    if (a == 1.0 && detail::is_integer(b) && b <= 3.0) return unit_alpha(static_cast<int>(b), z);
    if (z > 0.0) return positive_series(z);
    const double s = std::pow(-z, 1.0 / a);
    if (s <= kMpThreshold) return negative_series(z);
    if (s < kAsymptoticThreshold || a >= 1.0) {
      if (s >= kAsymptoticThreshold) {
        std::ostringstream os;
        os << "Mittag-Leffler: no accurate scheme for alpha=" << a << " beta=" << b << " z=" << z;
        throw NumericError(os.str());
      }
      return mp_series(z);
    }
    return asymptotic(z);
  }

private:
  struct State {
    double alpha = 1.0;
    double beta = 1.0;
    std::vector<long double> inv_gamma;
    std::once_flag mp_once;
    std::vector<detail::mp_real> mp_inv_gamma;
  };

  [[noreturn]] void fail(double z, std::size_t terms) const {
    std::ostringstream os;
    os << "Mittag-Leffler series did not converge: alpha=" << state_->alpha << " beta=" << state_->beta
       << " z=" << z << " after " << terms << " terms";
    throw NumericError(os.str());
  }

  static double unit_alpha(int b, double z) {
    // E_{1,m}(z) = z^{1-m} (e^z - sum_{k<m-1} z^k/k!)
    if (b == 1) return std::exp(z);
    if (std::abs(z) >= 1.0) {
      if (b == 2) return std::expm1(z) / z;
      return (std::expm1(z) - z) / (z * z);
    }
    long double sum = 0.0L, term = 1.0L / std::tgamma(static_cast<long double>(b));
    for (int n = 0; n < 60; ++n) {
      sum += term;
      term *= static_cast<long double>(z) / (n + b);
    }
    return static_cast<double>(sum);
  }

  double negative_series(double z) const {
    const auto& c = state_->inv_gamma;
    long double sum = 0.0L, power = 1.0L;
    for (std::size_t n = 0; n < c.size(); ++n) {
      const long double term = power * c[n];
      sum += term;
      if (n > 2 && std::abs(term) <= 1e-20L * std::abs(sum)) return static_cast<double>(sum);
      power *= z;
    }
    fail(z, c.size());
  }

  double positive_series(double z) const {
    const long double a = state_->alpha, b = state_->beta;
    const long double logz = std::log(static_cast<long double>(z));
    long double sum = 0.0L;
    long double prev = 0.0L;
    for (std::size_t n = 0; n < 200000; ++n) {
      const long double arg = a * n + b;
      const long double term = std::exp(n * logz - std::lgamma(arg));
      sum += term;
      if (!std::isfinite(sum)) fail(z, n);
      // Terms decay monotonically once past the peak.
      if (n > 2 && term < prev && term <= 1e-20L * sum) return static_cast<double>(sum);
      prev = term;
    }
    fail(z, 200000);
  }

  double mp_series(double z) const {
    std::call_once(state_->mp_once, [this] {
      const detail::mp_real a(state_->alpha), b(state_->beta);
      state_->mp_inv_gamma.resize(kMpTerms);
      for (std::size_t n = 0; n < kMpTerms; ++n) {
        const detail::mp_real arg = a * n + b;
        state_->mp_inv_gamma[n] = 1 / boost::math::tgamma(arg);
      }
    });
    const auto& c = state_->mp_inv_gamma;
    const detail::mp_real x(z);
    detail::mp_real sum = 0, power = 1;
    const detail::mp_real tiny("1e-42");
    for (std::size_t n = 0; n < c.size(); ++n) {
      const detail::mp_real term = power * c[n];
      sum += term;
      if (n > 10 && abs(term) <= tiny * abs(sum)) return static_cast<double>(sum);
      power *= x;
    }
    fail(z, c.size());
  }

  double asymptotic(double z) const {
    // -sum_k z^{-k}/Gamma(b - a k). |1/Gamma(b - a k)| oscillates through the
    // sine factor of the reflection formula, so truncation follows the envelope
    // Gamma(1 - b + a k) |z|^{-k}, which is minimal near a k = |z|^{1/a}.
    const long double a = state_->alpha, b = state_->beta;
    const long double inv_z = 1.0L / static_cast<long double>(z);
    const long double log_abs_z = std::log(std::abs(static_cast<long double>(z)));
    long double sum = 0.0L, power = 1.0L;
    long double last_envelope = std::numeric_limits<long double>::infinity();
    for (int k = 1; k < 2000; ++k) {
      power *= inv_z;
      const long double envelope = std::lgamma(1.0L - b + a * k) - k * log_abs_z;
      if (k > 1 && envelope > last_envelope) break;
      last_envelope = envelope;
      const long double g = inv_gamma(b - a * k);
      sum += -power * g;
      if (std::exp(envelope) <= 1e-20L * std::abs(sum)) break;
    }
    return static_cast<double>(sum);
  }

  std::shared_ptr<State> state_;
};

/// One-off evaluation of E_{alpha,beta}(z).
inline double mittag_leffler(double alpha, double beta, double z) { return MittagLeffler(alpha, beta)(z); }

}  // namespace vhmv
