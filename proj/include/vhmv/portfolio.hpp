#pragma once

// Closed-form mean-variance quantities under the Volterra Heston model.

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
#include "vhmv/model.hpp"
#include "vhmv/quadrature.hpp"
#include "vhmv/volterra.hpp"

namespace vhmv {

inline constexpr std::size_t kDefaultSteps = 500;

// ---------------------------------------------------------------- psi and g

/// Which solvability statement covers the psi equation for given parameters.
enum class PsiCase {
  Negative,    // 1 - 2 rho^2 > 0: global solution, psi < 0
  Linear,      // 1 - 2 rho^2 = 0
  Bounded,     // 1 - 2 rho^2 < 0 with lambda > 0 and positive discriminant
  Unverified,  // 1 - 2 rho^2 < 0 without those conditions: only local existence
};

inline std::string to_string(PsiCase c) {
  switch (c) {
    case PsiCase::Negative: return "negative";
    case PsiCase::Linear: return "linear";
    case PsiCase::Bounded: return "bounded";
    case PsiCase::Unverified: return "unverified";
  }
  return "unknown";
}

inline RiccatiRHS psi_rhs(const ModelParams& p) { return {-p.theta * p.theta, -p.lambda(), p.c2()}; }
inline RiccatiRHS g_rhs(double a, const ModelParams& p) { return {a, -p.kappa, p.sigma * p.sigma / 2.0}; }

inline PsiCase psi_case(const ModelParams& p) {
  const double q = 1.0 - 2.0 * p.rho * p.rho;
  if (q > 0.0) return PsiCase::Negative;
  if (q == 0.0) return PsiCase::Linear;
  const double lambda = p.lambda();
  const double disc = lambda * lambda + 2.0 * q * p.theta * p.theta * p.sigma * p.sigma;
  return lambda > 0.0 && disc > 0.0 ? PsiCase::Bounded : PsiCase::Unverified;
}

struct PsiSolution : RiccatiSolution {
  PsiCase lemma_case = PsiCase::Negative;
};

inline PsiSolution solve_psi(const ModelParams& params, const UniformGrid& grid, const SolverOptions& opts = {}) {
  params.validate();
  PsiSolution out;
  out.lemma_case = psi_case(params);
  static_cast<RiccatiSolution&>(out) = solve_riccati(psi_rhs(params), params.kernel, grid, opts);
  if (out.lemma_case == PsiCase::Unverified)
    out.warnings.insert(out.warnings.begin(),
                        "1 - 2 rho^2 < 0 without lambda > 0 and a positive discriminant: "
                        "global solvability is not guaranteed, solved with the blow-up guard");
  return out;
}

inline PsiSolution solve_psi(const ModelParams& params, std::size_t steps = kDefaultSteps,
                             const SolverOptions& opts = {}) {
  return solve_psi(params, UniformGrid(params.T, steps), opts);
}

/// a0(t) = (kappa + t^{-alpha}/Gamma(1-alpha))^2 / (2 sigma^2) for the fractional kernel
/// t^{alpha-1}/Gamma(alpha) with alpha < 1; infinite when sigma = 0.
inline double fractional_bound_a0(const ModelParams& p, double t) {
  if (p.kernel.kind != KernelKind::Fractional || p.kernel.c != 1.0 || !(p.kernel.alpha < 1.0))
    throw DomainError("the a0 bound needs the kernel t^{alpha-1}/Gamma(alpha) with alpha < 1");
  if (!(t > 0.0)) throw DomainError("a0 needs t > 0");
  if (p.sigma == 0.0) return std::numeric_limits<double>::infinity();
  const double alpha = p.kernel.alpha;
  const double s = p.kappa + std::pow(t, -alpha) / std::tgamma(1.0 - alpha);
  return s * s / (2.0 * p.sigma * p.sigma);
}

inline bool has_fractional_bound(const ModelParams& p) {
  return p.kernel.kind == KernelKind::Fractional && p.kernel.c == 1.0 && p.kernel.alpha < 1.0;
}

struct GOptions {
  bool fractional_precheck = false;  // reject a >= a0(T) before solving
};

inline RiccatiSolution solve_g(double a, const ModelParams& params, const UniformGrid& grid,
                               const SolverOptions& opts = {}, const GOptions& gopts = {}) {
  params.validate();
  if (!std::isfinite(a)) throw DomainError("moment exponent a must be finite");
  if (gopts.fractional_precheck && has_fractional_bound(params)) {
    const double a0 = fractional_bound_a0(params, params.T);
    if (a >= a0) {
      std::ostringstream os;
      os << "a = " << a << " is not below the fractional bound a0(T) = " << a0;
      throw DomainError(os.str());
    }
  }
  return solve_riccati(g_rhs(a, params), params.kernel, grid, opts);
}

// ---------------------------------------------------------------- comparison bounds

/// Bounds from the comparison lemmas. The g bound is 0 < g <= r2 < w_star.
/// The psi bound is stated for psi_tilde = (1 - 2 rho^2) psi: 0 < psi_tilde <= rbar2 < wbar_star.
struct LemmaBounds {
  bool g_applicable = false;
  double w_star = 0.0;
  std::vector<double> r2;
  bool psi_applicable = false;
  double wbar_star = 0.0;
  std::vector<double> rbar2;
  std::string g_reason;
  std::string psi_reason;
};

inline LemmaBounds lemma_bounds(const ModelParams& params, double a, const UniformGrid& grid) {
  LemmaBounds out;
  const double s2 = params.sigma * params.sigma;
  if (params.kappa * params.kappa - 2.0 * a * s2 > 0.0 && a >= 0.0 && params.sigma > 0.0) {
    const ComparisonBound g = comparison_bound(g_rhs(a, params), params.kernel, grid);
    out.g_applicable = g.applicable;
    out.w_star = g.root;
    out.r2 = g.curve;
    out.g_reason = g.reason;
  } else {
    out.g_reason = "needs kappa^2 - 2 a sigma^2 > 0, a >= 0 and sigma > 0";
  }
  if (psi_case(params) == PsiCase::Bounded && params.sigma > 0.0) {
    const double q = 1.0 - 2.0 * params.rho * params.rho;
    const ComparisonBound b = comparison_bound(psi_rhs(params), params.kernel, grid);
    out.psi_applicable = b.applicable;
    out.wbar_star = q * b.root;
    out.rbar2.resize(b.curve.size());
    for (std::size_t n = 0; n < b.curve.size(); ++n) out.rbar2[n] = q * b.curve[n];
    out.psi_reason = b.reason;
  } else {
    out.psi_reason = "needs 1 - 2 rho^2 < 0, lambda > 0 and a positive discriminant";
  }
  return out;
}

struct LemmaCheck {
  std::size_t checks = 0;
  std::size_t violations = 0;
  bool psi_sign = false;   // 1 - 2 rho^2 > 0 and theta != 0
  bool psi_bounds = false;
  bool g_bounds = false;
};

/// Counts nodes t > 0 where psi or g(a, .) leaves its comparison bounds. Bound
/// curves get an absolute slack of 1e-9 for the quadrature of the solver.
inline LemmaCheck lemma_violations(const ModelParams& params, const RiccatiSolution& psi, double a,
                                   const SolverOptions& opts = {}) {
  LemmaCheck out;
  const UniformGrid& grid = psi.grid;
  const LemmaBounds b = lemma_bounds(params, a, grid);
  auto check = [&](bool ok) {
    ++out.checks;
    if (!ok) ++out.violations;
  };
  const PsiCase pc = psi_case(params);
  if (pc == PsiCase::Negative && params.theta != 0.0) {
    out.psi_sign = true;
    for (std::size_t n = 1; n < grid.size(); ++n) check(psi.values[n] < 0.0);
  }
  if (b.psi_applicable && params.theta != 0.0) {
    out.psi_bounds = true;
    const double q = 1.0 - 2.0 * params.rho * params.rho;
    for (std::size_t n = 1; n < grid.size(); ++n) {
      check(psi.values[n] < 0.0);
      check(psi.values[n] > b.wbar_star / q);
      check(psi.values[n] >= b.rbar2[n] / q - 1e-9);
    }
  }
  if (b.g_applicable && a > 0.0) {
    out.g_bounds = true;
    const RiccatiSolution g = solve_g(a, params, grid, opts);
    for (std::size_t n = 1; n < grid.size(); ++n) {
      check(g.values[n] > 0.0);
      check(g.values[n] <= b.r2[n] + 1e-9);
      check(b.r2[n] < b.w_star);
    }
  }
  return out;
}

// ---------------------------------------------------------------- forward variance and M

/// xi_t(s) for s on the nodes t_m, m = anchor..N, of a grid on [0, T].
struct ForwardVarianceCurve {
  UniformGrid grid{1.0, 1};
  std::size_t anchor = 0;
  std::vector<double> values;

  double anchor_time() const { return grid.time(anchor); }
  double at(std::size_t m) const { return values.at(m - anchor); }
  /// Trapezoidal int_t^T xi_t(s) ds.
  double integral() const { return trapezoid(values, grid.step()); }
};

/// xi_0(s) = V0 + (kappa phi - lambda V0) int_0^s R_lambda/lambda.
inline ForwardVarianceCurve xi0(const ModelParams& params, const UniformGrid& grid) {
  params.validate();
  const AnyKernel scaled = scaled_resolvent(params.kernel, params.lambda());
  ForwardVarianceCurve out{grid, 0, std::vector<double>(grid.size(), params.V0)};
  const double slope = params.kappa * params.phi - params.lambda() * params.V0;
  for (std::size_t m = 1; m < grid.size(); ++m) out.values[m] = params.V0 + slope * kernel_primitive(scaled, grid.time(m));
  return out;
}

namespace detail {

/// psi(T - t_m) read directly from a psi grid that refines the curve grid.
inline double psi_reflected(const RiccatiSolution& psi, const UniformGrid& grid, std::size_t m) {
  const std::size_t ratio = psi.grid.refinement_of(grid);
  return psi.values[(grid.steps() - m) * ratio];
}

}  // namespace detail

/// M_t = 2 exp int_t^T (2 r - theta^2 xi_t(s) + c2 psi(T-s)^2 xi_t(s)) ds.
inline double M_t(const ModelParams& params, const RiccatiSolution& psi, const ForwardVarianceCurve& xi) {
  const UniformGrid& grid = xi.grid;
  if (xi.values.size() != grid.size() - xi.anchor) throw DomainError("forward variance curve has the wrong length");
  const double theta2 = params.theta * params.theta;
  const double c2 = params.c2();
  std::vector<double> integrand(xi.values.size());
  for (std::size_t m = xi.anchor; m < grid.size(); ++m) {
    const double x = xi.at(m);
    if (x < 0.0 || std::isnan(x)) throw DomainError("forward variance must be nonnegative");
    const double p = detail::psi_reflected(psi, grid, m);
    integrand[m - xi.anchor] = (c2 * p * p - theta2) * x;
  }
  const double exponent = 2.0 * params.rate.integral(xi.anchor_time(), params.T) + trapezoid(integrand, grid.step());
  return 2.0 * std::exp(exponent);
}

struct M0Forms {
  double general = 0.0;  // 2 exp[2 int r + kappa phi int psi + V0 int F(psi)]
  double dual = 0.0;     // 2 exp[2 int r + kappa phi int psi + V0 (L * psi)(T)]
  double relative_gap = 0.0;
};

inline M0Forms m0_forms(const ModelParams& params, const RiccatiSolution& psi) {
  const double base = 2.0 * params.rate_integral() + params.kappa * params.phi * psi.integral();
  const FirstKindResolvent L = resolvent_first_kind(params.kernel);
  const double l_term = apply_first_kind(L, psi.values, psi.grid, psi.grid.steps());
  M0Forms out;
  out.general = 2.0 * std::exp(base + params.V0 * psi.rhs_integral());
  out.dual = 2.0 * std::exp(base + params.V0 * l_term);
  out.relative_gap = std::abs(out.general - out.dual) / out.general;
  return out;
}

/// M0 in the general form after checking it against the first-kind-resolvent form.
inline double M0(const ModelParams& params, const RiccatiSolution& psi, double tolerance = 1e-5) {
  const M0Forms f = m0_forms(params, psi);
  if (!(f.relative_gap <= tolerance)) {
    std::ostringstream os;
    os << "M0 forms disagree: general " << f.general << ", resolvent form " << f.dual << " (relative gap "
       << f.relative_gap << ")";
    throw ConsistencyError(os.str());
  }
  return f.general;
}

// ---------------------------------------------------------------- exponential moments

struct ExpMoment {
  bool finite = true;
  double value = std::numeric_limits<double>::infinity();  // g form
  double l_form = std::numeric_limits<double>::infinity();
  double relative_gap = 0.0;
  double blow_up_time = std::numeric_limits<double>::quiet_NaN();
};

/// E[exp(a int_0^T V)] by both expressions of the affine transform formula.
inline ExpMoment exp_moment(double a, const ModelParams& params, const UniformGrid& grid,
                            const SolverOptions& opts = {}, double tolerance = 1e-5) {
  ExpMoment out;
  RiccatiSolution g;
  try {
    g = solve_g(a, params, grid, opts);
  } catch (const ExplosionError& e) {
    out.finite = false;
    out.blow_up_time = e.blow_up_time();
    return out;
  }
  const double base = params.kappa * params.phi * g.integral();
  const FirstKindResolvent L = resolvent_first_kind(params.kernel);
  out.value = std::exp(base + params.V0 * g.rhs_integral());
  out.l_form = std::exp(base + params.V0 * apply_first_kind(L, g.values, grid, grid.steps()));
  out.relative_gap = std::abs(out.value - out.l_form) / out.value;
  if (!(out.relative_gap <= tolerance)) {
    std::ostringstream os;
    os << "exponential moment forms disagree: " << out.value << " vs " << out.l_form;
    throw ConsistencyError(os.str());
  }
  return out;
}

// ---------------------------------------------------------------- admissibility

/// a = max{2p|theta| sup|A|, (8p^2 - 2p) sup A^2} with A_t = theta + rho sigma psi(T - t).
inline double admissibility_constant(const ModelParams& params, const RiccatiSolution& psi, double p = 2.5) {
  if (!(p > 2.0)) throw DomainError("admissibility exponent p must exceed 2");
  double sup_abs = 0.0;
  for (double v : psi.values) sup_abs = std::max(sup_abs, std::abs(params.theta + params.rho * params.sigma * v));
  return std::max(2.0 * p * std::abs(params.theta) * sup_abs, (8.0 * p * p - 2.0 * p) * sup_abs * sup_abs);
}

enum class Verdict { Satisfied, SatisfiedByFractionalBound, Unknown };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Satisfied: return "satisfied";
    case Verdict::SatisfiedByFractionalBound: return "satisfied-by-fractional-bound";
    case Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

struct AssumptionCheck {
  Verdict verdict = Verdict::Unknown;
  std::string detail;
};

/// Sufficient conditions for E[exp(a int_0^T V)] < infinity, tried in turn:
/// the fractional bound a < a0(T), then kappa^2 - 2 a sigma^2 > 0, then a g solve
/// that stays finite on [0, T].
inline AssumptionCheck check_assumption_V(const ModelParams& params, double a, const UniformGrid& grid,
                                          const SolverOptions& opts = {}) {
  params.validate();
  std::ostringstream os;
  if (a <= 0.0) return {Verdict::Satisfied, "a <= 0 gives a moment bounded by 1"};
  if (has_fractional_bound(params)) {
    const double a0 = fractional_bound_a0(params, params.T);
    if (a < a0) {
      os << "a = " << a << " < a0(T) = " << a0;
      return {Verdict::SatisfiedByFractionalBound, os.str()};
    }
  }
  const double disc = params.kappa * params.kappa - 2.0 * a * params.sigma * params.sigma;
  if (disc > 0.0) {
    os << "kappa^2 - 2 a sigma^2 = " << disc << " > 0";
    return {Verdict::Satisfied, os.str()};
  }
  try {
    solve_g(a, params, grid, opts);
  } catch (const ExplosionError& e) {
    os << "g explodes near t = " << e.blow_up_time() << "; no sufficient condition holds";
    return {Verdict::Unknown, os.str()};
  }
  os << "g(a, .) stays finite on [0, T]";
  return {Verdict::Satisfied, os.str()};
}

// ---------------------------------------------------------------- mean-variance solution

struct MVOptions {
  std::size_t steps = kDefaultSteps;
  SolverOptions solver{};
  double p = 2.5;
  bool check_admissibility = true;
  double dual_tolerance = 1e-5;
};

struct MVSolution {
  ModelParams params;
  PsiSolution psi;
  double M0 = 0.0;
  double M0_dual = 0.0;
  double eta_star = 0.0;
  double zeta_star = 0.0;
  double variance_opt = 0.0;
  std::vector<double> A;  // A(t_n) = theta + rho sigma psi(T - t_n) on the psi grid
  double admissibility_a = 0.0;
  AssumptionCheck admissibility;
  std::vector<std::string> warnings;

  const UniformGrid& grid() const { return psi.grid; }

  /// A(t); between grid nodes psi(T - t) is interpolated linearly.
  double A_at(double t) const {
    const UniformGrid& g = psi.grid;
    if (t < 0.0 || t > g.horizon()) throw DomainError("time outside [0, T]");
    const double x = t / g.step();
    const double fl = std::floor(x);
    std::size_t n = static_cast<std::size_t>(fl);
    if (n >= g.steps()) return A.back();
    const double frac = x - fl;
    if (std::abs(x - std::round(x)) <= 1e-9 * std::max(1.0, x)) return A[static_cast<std::size_t>(std::round(x))];
    return (1.0 - frac) * A[n] + frac * A[n + 1];
  }

  /// zeta* exp(-int_t^T r), the wealth level the strategy steers towards.
  double target_at(double t) const { return zeta_star * std::exp(-params.rate.integral(t, params.T)); }

  /// E[(X_T - zeta*)^2] = M0 (x0 - zeta* e^{-int r})^2 / 2.
  double terminal_square_error() const {
    const double gap = params.x0 - target_at(0.0);
    return 0.5 * M0 * gap * gap;
  }
};

inline double mv_variance(double m0, double disc2, double c, double x0, double disc1) {
  const double gap = c * disc1 - x0;
  return m0 * gap * gap / (2.0 - disc2 * m0);
}

inline MVSolution solve_mv(const ModelParams& params, const MVOptions& opts = {}) {
  params.validate_for_mv();
  MVSolution out;
  out.params = params;
  out.psi = solve_psi(params, UniformGrid(params.T, opts.steps), opts.solver);
  for (const auto& w : out.psi.warnings) out.warnings.push_back("psi: " + w);
  const M0Forms forms = m0_forms(params, out.psi);
  if (!(forms.relative_gap <= opts.dual_tolerance)) {
    std::ostringstream os;
    os << "M0 forms disagree: general " << forms.general << ", resolvent form " << forms.dual;
    throw ConsistencyError(os.str());
  }
  out.M0 = forms.general;
  out.M0_dual = forms.dual;
  const double d1 = std::exp(-params.rate_integral());
  const double d2 = std::exp(-2.0 * params.rate_integral());
  const double denom = 2.0 - d2 * out.M0;
  if (!(denom > 0.0) || !(out.M0 > 0.0)) {
    std::ostringstream os;
    os << "M0 = " << out.M0 << " violates 0 < M0 < 2 exp(2 int r)";
    throw ConsistencyError(os.str());
  }
  out.eta_star = (d1 * out.M0 * params.x0 - d2 * out.M0 * params.c) / denom;
  out.zeta_star = params.c - out.eta_star;
  out.variance_opt = mv_variance(out.M0, d2, params.c, params.x0, d1);
  const std::size_t N = out.psi.grid.steps();
  out.A.resize(N + 1);
  for (std::size_t n = 0; n <= N; ++n) out.A[n] = params.theta + params.rho * params.sigma * out.psi.values[N - n];
  out.admissibility_a = admissibility_constant(params, out.psi, opts.p);
  if (opts.check_admissibility) {
    out.admissibility = check_assumption_V(params, out.admissibility_a, out.psi.grid, opts.solver);
    if (out.admissibility.verdict == Verdict::Unknown)
      out.warnings.push_back("admissibility of u* could not be verified: " + out.admissibility.detail);
  }
  return out;
}

/// u*(t) = A_t sqrt(V) (zeta* e^{-int_t^T r} - X).
inline double optimal_u(const MVSolution& mv, double t, double V, double X) {
  if (V < 0.0 || std::isnan(V)) throw DomainError("variance must be nonnegative");
  return mv.A_at(t) * std::sqrt(V) * (mv.target_at(t) - X);
}

/// pi* = u* / sqrt(V), the amount held in the stock; needs V > 0.
inline double optimal_pi(const MVSolution& mv, double t, double V, double X) {
  if (!(V > 0.0)) throw DomainError("pi* is defined only for positive variance");
  return mv.A_at(t) * (mv.target_at(t) - X);
}

struct FrontierCurve {
  std::vector<double> c;
  std::vector<double> variance;
  std::vector<double> stddev;
  std::vector<double> ratio;  // Var / (c e^{-int r} - x0)^2, NaN at the riskless point
  double M0 = 0.0;
};

/// Var[X*_T] across targets; psi and M0 do not depend on c and are solved once.
inline FrontierCurve efficient_frontier(const ModelParams& params, const std::vector<double>& targets,
                                        const MVOptions& opts = {}) {
  params.validate();
  if (params.theta == 0.0) throw DomainError("theta must be nonzero for the mean-variance problem");
  const double floor = params.riskless_terminal();
  for (double c : targets)
    if (!(c >= floor * (1.0 - 1e-14))) throw DomainError("frontier target below the riskless terminal wealth");
  const PsiSolution psi = solve_psi(params, UniformGrid(params.T, opts.steps), opts.solver);
  const M0Forms forms = m0_forms(params, psi);
  if (!(forms.relative_gap <= opts.dual_tolerance)) throw ConsistencyError("M0 forms disagree");
  FrontierCurve out;
  out.M0 = forms.general;
  const double d1 = std::exp(-params.rate_integral());
  const double d2 = std::exp(-2.0 * params.rate_integral());
  if (!(2.0 - d2 * out.M0 > 0.0)) throw ConsistencyError("M0 violates its upper bound");
  for (double c : targets) {
    const double var = mv_variance(out.M0, d2, c, params.x0, d1);
    const double gap = c * d1 - params.x0;
    out.c.push_back(c);
    out.variance.push_back(var);
    out.stddev.push_back(std::sqrt(var));
    out.ratio.push_back(gap == 0.0 ? std::numeric_limits<double>::quiet_NaN() : var / (gap * gap));
  }
  return out;
}

/// max_n | int_t^T (c2 psi(T-s)^2 - theta^2) R_lambda(s-t)/lambda ds - psi(T-t) | over grid times t.
inline double identity_Uequivalent_check(const ModelParams& params, const RiccatiSolution& psi) {
  const double theta2 = params.theta * params.theta;
  const double c2 = params.c2();
  std::vector<double> forcing(psi.values.size());
  for (std::size_t n = 0; n < forcing.size(); ++n) forcing[n] = c2 * psi.values[n] * psi.values[n] - theta2;
  const auto lhs = convolve(scaled_resolvent(params.kernel, params.lambda()), forcing, psi.grid);
  double worst = 0.0;
  for (std::size_t n = 0; n < lhs.size(); ++n) worst = std::max(worst, std::abs(lhs[n] - psi.values[n]));
  return worst;
}

}  // namespace vhmv
