#pragma once

// Reference implementations for cross-checks: RK4 with step halving, implicit
// product integration for linear Volterra equations, tanh-sinh quadrature.
// Nothing here calls the Volterra solver or the portfolio layer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "vhmv/errors.hpp"
#include "vhmv/grid.hpp"
#include "vhmv/kernels.hpp"
#include "vhmv/model.hpp"
#include "vhmv/quadrature.hpp"

namespace vhmv::oracle {

/// int_a^b f by tanh-sinh quadrature. The integrand receives (x - a, b - x),
/// both computed without cancellation, so singular endpoints are handled.
/// The interval is split at its midpoint so each half sees one endpoint only.
/// Accepts when the estimated error is within 100 tol.
inline double brute_quadrature(const std::function<double(double, double)>& f, double a, double b,
                               double tol = 1e-12) {
  if (!(b >= a)) throw DomainError("quadrature interval is reversed");
  if (!(tol > 0.0)) throw DomainError("quadrature tolerance must be positive");
  if (a == b) return 0.0;
  const double width = b - a;
  const double half = 0.5 * width;
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  double total = 0.0, total_error = 0.0, total_l1 = 0.0;
  for (int side = 0; side < 2; ++side) {
    double error = 0.0, l1 = 0.0;
    auto g = [&](double, double xc) {
      // distance from the outer endpoint of this half
      const double near = xc <= 0.0 ? -xc : half - xc;
      return side == 0 ? f(near, width - near) : f(width - near, near);
    };
    total += integrator.integrate(g, 0.0, half, tol, &error, &l1);
    total_error += error;
    total_l1 += l1;
  }
  if (!(total_error <= 100.0 * tol * std::max(1.0, total_l1)) || !std::isfinite(total)) {
    std::ostringstream os;
    os << "brute_quadrature: tolerance " << tol << " not met on [" << a << ", " << b << "], error estimate "
       << total_error;
    throw NumericError(os.str());
  }
  return total;
}

/// Convenience overload for integrands of x alone.
inline double brute_quadrature(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  return brute_quadrature([&](double left, double) { return f(a + left); }, a, b, tol);
}

/// Solution of w' = scale (c0 + c1 w + c2 w^2), w(0) = 0, with y(t) = int_0^t w.
struct OdeSolution {
  UniformGrid grid;
  std::vector<double> w;
  std::vector<double> y;
  double error_estimate = 0.0;  // max |w_m - w_{2m}| over the grid at the accepted substep count
  std::size_t substeps = 1;     // RK4 steps per grid interval
};

namespace detail {

inline void rk4_pass(double c0, double c1, double c2, double scale, const UniformGrid& grid, std::size_t m,
                     std::vector<double>& w, std::vector<double>& y) {
  auto rhs = [&](double v) { return scale * (c0 + v * (c1 + c2 * v)); };
  w.assign(grid.size(), 0.0);
  y.assign(grid.size(), 0.0);
  const double h = grid.step() / static_cast<double>(m);
  double wv = 0.0, yv = 0.0;
  for (std::size_t n = 1; n < grid.size(); ++n) {
    for (std::size_t k = 0; k < m; ++k) {
      // y' = w rides along so that y is fourth order too
      const double k1 = rhs(wv);
      const double k2 = rhs(wv + 0.5 * h * k1);
      const double k3 = rhs(wv + 0.5 * h * k2);
      const double k4 = rhs(wv + h * k3);
      const double l1 = wv, l2 = wv + 0.5 * h * k1, l3 = wv + 0.5 * h * k2, l4 = wv + h * k3;
      wv += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
      yv += h * (l1 + 2.0 * l2 + 2.0 * l3 + l4) / 6.0;
      if (!std::isfinite(wv) || std::abs(wv) > 1e8)
        throw ExplosionError("RK4 oracle: solution left the finite range", grid.time(n - 1), grid.time(n));
    }
    w[n] = wv;
    y[n] = yv;
  }
}

}  // namespace detail

/// RK4 with step halving until successive solutions agree to tol (relative to max(1, |w|)).
inline OdeSolution riccati_ode(double c0, double c1, double c2, const UniformGrid& grid, double scale = 1.0,
                               double tol = 1e-9) {
  OdeSolution out{grid, {}, {}, 0.0, 1};
  std::vector<double> w_prev, y_prev, w, y;
  detail::rk4_pass(c0, c1, c2, scale, grid, 1, w_prev, y_prev);
  for (std::size_t m = 2; m <= (std::size_t{1} << 16); m *= 2) {
    detail::rk4_pass(c0, c1, c2, scale, grid, m, w, y);
    double err = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
      err = std::max(err, std::abs(w[n] - w_prev[n]) / std::max(1.0, std::abs(w[n])));
      err = std::max(err, std::abs(y[n] - y_prev[n]) / std::max(1.0, std::abs(y[n])));
    }
    if (err <= tol) {
      out.w = std::move(w);
      out.y = std::move(y);
      out.error_estimate = err;
      out.substeps = m;
      return out;
    }
    w_prev.swap(w);
    y_prev.swap(y);
  }
  throw NumericError("RK4 oracle: step halving did not reach the tolerance");
}

/// Classical Heston reduction: w' = c2 w^2 - lambda w - theta^2, y' = kappa phi w.
/// Uses the scale c of a constant kernel K = c.
inline OdeSolution heston_ode_solve(const ModelParams& params, const UniformGrid& grid, double tol = 1e-9) {
  if (params.kernel.kind != KernelKind::Constant &&
      !(params.kernel.kind == KernelKind::Fractional && params.kernel.alpha == 1.0))
    throw DomainError("Heston ODE oracle needs a constant kernel");
  const double theta2 = params.theta * params.theta;
  OdeSolution s = riccati_ode(-theta2, -params.lambda(), params.c2(), grid, params.kernel.c, tol);
  for (double& v : s.y) v *= params.kappa * params.phi;
  return s;
}

/// Noiseless variance: V = V0 + K * (kappa (phi - V)), by implicit product trapezoid.
inline std::vector<double> deterministic_volterra(const ModelParams& params, const UniformGrid& grid) {
  if (params.sigma != 0.0) throw DomainError("deterministic Volterra oracle needs sigma = 0");
  const ProductWeights w(params.kernel, grid);
  std::vector<double> v(grid.size(), params.V0);
  std::vector<double> drift(grid.size(), params.kappa * (params.phi - params.V0));
  const double w0 = w.right(1);
  for (std::size_t n = 1; n < grid.size(); ++n) {
    const double history = w.trapezoid_history(drift, n);
    v[n] = (params.V0 + history + w0 * params.kappa * params.phi) / (1.0 + w0 * params.kappa);
    drift[n] = params.kappa * (params.phi - v[n]);
  }
  return v;
}

/// max over grid nodes of |lambda (K * R)(t) - lambda K(t) + R(t)|, R from the
/// resolvent table and K * R by tanh-sinh quadrature.
inline double resolvent_identity_residual(const KernelSpec& spec, double lambda, const UniformGrid& grid) {
  const auto table = resolvent_second_kind(spec, lambda, grid);
  const AnyKernel rk = scaled_resolvent(spec, lambda);
  const AnyKernel k = make_kernel(spec);
  double worst = 0.0;
  for (std::size_t n = 1; n < grid.size(); ++n) {
    const double t = grid.time(n);
    const double conv = brute_quadrature(
        [&](double s, double rest) {
          if (s == 0.0 || rest == 0.0) return 0.0;
          return kernel_eval(k, rest) * lambda * kernel_eval(rk, s);
        },
        0.0, t, 1e-10);
    worst = std::max(worst, std::abs(lambda * conv - lambda * kernel_eval(k, t) + table.values[n]));
  }
  return worst;
}

/// max over grid nodes of |(K * L)(t) - 1|.
inline double first_kind_identity_residual(const KernelSpec& spec, const UniformGrid& grid) {
  const FirstKindResolvent L = resolvent_first_kind(spec);
  const AnyKernel k = make_kernel(spec);
  double worst = 0.0;
  for (std::size_t n = 1; n < grid.size(); ++n) {
    const double t = grid.time(n);
    double value = L.atom * kernel_eval(k, t);
    if (L.density) {
      value += brute_quadrature(
          [&](double s, double rest) {
            if (s == 0.0 || rest == 0.0) return 0.0;
            return kernel_eval(k, rest) * kernel_eval(*L.density, s);
          },
          0.0, t, 1e-10);
    }
    worst = std::max(worst, std::abs(value - 1.0));
  }
  return worst;
}

}  // namespace vhmv::oracle
