#pragma once

// Monte Carlo paths for variance, stock and optimal wealth, pathwise forward
// variance and M, and bootstrap summaries.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "vhmv/errors.hpp"
#include "vhmv/grid.hpp"
#include "vhmv/kernels.hpp"
#include "vhmv/model.hpp"
#include "vhmv/portfolio.hpp"
#include "vhmv/quadrature.hpp"

namespace vhmv {

enum class Scheme { VolterraEuler, Lifted };

inline std::string to_string(Scheme s) { return s == Scheme::Lifted ? "lifted" : "volterra-euler"; }

inline std::optional<Scheme> parse_scheme(const std::string& s) {
  if (s == "volterra-euler") return Scheme::VolterraEuler;
  if (s == "lifted") return Scheme::Lifted;
  return std::nullopt;
}

struct SimConfig {
  std::size_t n_paths = 1000;
  std::size_t n_steps = 250;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::VolterraEuler;
  std::size_t lifted_factors = 20;
  double lifted_spacing = 0.0;       // geometric ratio of the Laplace-measure partition; 0 means 1 + 10 n^{-0.9}
  double lifted_tolerance = 0.05;    // relative L2 kernel error on [h, T] that triggers a warning
  double s0 = 1.0;
  unsigned threads = 1;

  void validate() const {
    if (n_paths == 0) throw ConfigError("n_paths must be positive");
    if (n_steps == 0) throw ConfigError("n_steps must be positive");
    if (lifted_factors == 0) throw ConfigError("lifted_factors must be positive");
    if (lifted_spacing != 0.0 && !(lifted_spacing > 1.0)) throw ConfigError("lifted_spacing must exceed 1");
    if (!(lifted_tolerance > 0.0)) throw ConfigError("lifted_tolerance must be positive");
    if (!(s0 > 0.0)) throw ConfigError("s0 must be positive");
    if (threads == 0) throw ConfigError("threads must be positive");
  }
};

// ---------------------------------------------------------------- Brownian drivers

/// Per-path generator keyed on (seed, path): paths do not depend on thread layout.
inline std::mt19937_64 path_engine(std::uint64_t seed, std::size_t path) {
  const auto p = static_cast<std::uint64_t>(path);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32)};
  return std::mt19937_64(seq);
}

/// Increments of W1 and W2 for one path, interleaved per step.
inline void brownian_increments(std::uint64_t seed, std::size_t path, std::size_t steps, double h,
                                std::span<double> dW1, std::span<double> dW2) {
  auto eng = path_engine(seed, path);
  std::normal_distribution<double> normal;
  const double sh = std::sqrt(h);
  for (std::size_t n = 0; n < steps; ++n) {
    dW1[n] = sh * normal(eng);
    dW2[n] = sh * normal(eng);
  }
}

/// Runs body(path) for every path over `threads` workers with contiguous blocks.
inline void parallel_paths(std::size_t n_paths, unsigned threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n_paths);
  if (workers <= 1) {
    for (std::size_t p = 0; p < n_paths; ++p) body(p);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t block = (n_paths + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t p = w * block; p < std::min(n_paths, (w + 1) * block); ++p) body(p);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------- lifted kernel

/// sum_i weights[i] exp(-nodes[i] t).
struct LiftedKernel {
  std::vector<double> weights;
  std::vector<double> nodes;

  double operator()(double t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * std::exp(-nodes[i] * t);
    return s;
  }

  /// int_0^t of the approximation.
  double primitive(double t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
      s += nodes[i] == 0.0 ? weights[i] * t : weights[i] * -std::expm1(-nodes[i] * t) / nodes[i];
    return s;
  }
};

/// Factors from the partition eta_i = r^{i - n/2}, i = 0..n, of the Laplace
/// measure mu(dx) = x^{-alpha} dx / (Gamma(alpha) Gamma(1 - alpha)): each cell
/// contributes its mass and its mean. Constant and exponential kernels, and
/// alpha = 1, are single factors.
inline LiftedKernel lifted_kernel(const KernelSpec& k, std::size_t factors, double spacing = 0.0) {
  k.validate();
  if (factors == 0) throw DomainError("lifted kernel needs at least one factor");
  if (k.kind == KernelKind::Constant || (k.kind == KernelKind::Fractional && k.alpha == 1.0)) return {{k.c}, {0.0}};
  if (k.kind == KernelKind::Exponential) return {{k.c}, {k.beta}};
  const double alpha = k.alpha;
  const double n = static_cast<double>(factors);
  const double r = spacing > 0.0 ? spacing : 1.0 + 10.0 * std::pow(n, -0.9);
  const double norm = (1.0 - alpha) * std::tgamma(alpha) * std::tgamma(1.0 - alpha);
  LiftedKernel out;
  for (std::size_t i = 1; i <= factors; ++i) {
    const double lo = std::pow(r, static_cast<double>(i) - 1.0 - n / 2.0);
    const double hi = std::pow(r, static_cast<double>(i) - n / 2.0);
    const double m0 = std::pow(hi, 1.0 - alpha) - std::pow(lo, 1.0 - alpha);
    const double m1 = std::pow(hi, 2.0 - alpha) - std::pow(lo, 2.0 - alpha);
    out.weights.push_back(k.c * m0 / norm);
    out.nodes.push_back((1.0 - alpha) / (2.0 - alpha) * m1 / m0);
  }
  return out;
}

/// Absolute and relative L2 distance between K and its lift on [a, b].
struct LiftError {
  double absolute = 0.0;
  double relative = 0.0;
};

inline LiftError lifted_l2_error(const KernelSpec& k, const LiftedKernel& lift, double a, double b) {
  if (!(a > 0.0) || !(b > a)) throw DomainError("L2 error needs 0 < a < b");
  const AnyKernel exact = make_kernel(k);
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double gap = GK::integrate([&](double t) {
    const double d = kernel_eval(exact, t) - lift(t);
    return d * d;
  }, a, b, 15, 1e-12);
  const double ref = GK::integrate([&](double t) {
    const double v = kernel_eval(exact, t);
    return v * v;
  }, a, b, 15, 1e-12);
  return {std::sqrt(gap), ref > 0.0 ? std::sqrt(gap / ref) : 0.0};
}

// ---------------------------------------------------------------- variance paths

/// Row-major [path][node] arrays of the truncated variance V+; increments have
/// one entry per step.
struct VariancePaths {
  UniformGrid grid{1.0, 1};
  std::size_t n_paths = 0;
  std::vector<double> V;
  std::vector<double> dW1;
  std::vector<double> dW2;
  std::size_t clipped_nodes = 0;  // nodes with V < 0 before truncation
  std::vector<std::string> warnings;

  std::size_t nodes() const { return grid.size(); }
  std::span<const double> path(std::size_t p) const { return {V.data() + p * nodes(), nodes()}; }
  std::span<const double> w1(std::size_t p) const { return {dW1.data() + p * grid.steps(), grid.steps()}; }
  std::span<const double> w2(std::size_t p) const { return {dW2.data() + p * grid.steps(), grid.steps()}; }
  double clipped_fraction() const {
    return static_cast<double>(clipped_nodes) / static_cast<double>(n_paths * grid.steps());
  }
};

namespace detail {

inline VariancePaths allocate_paths(const ModelParams& params, const SimConfig& cfg) {
  params.validate();
  cfg.validate();
  VariancePaths out;
  out.grid = UniformGrid(params.T, cfg.n_steps);
  out.n_paths = cfg.n_paths;
  out.V.assign(cfg.n_paths * out.grid.size(), params.V0);
  out.dW1.assign(cfg.n_paths * cfg.n_steps, 0.0);
  out.dW2.assign(cfg.n_paths * cfg.n_steps, 0.0);
  return out;
}

template <class StepPath>
void run_variance_paths(VariancePaths& out, const ModelParams& params, const SimConfig& cfg, StepPath&& step) {
  const std::size_t N = cfg.n_steps;
  const double h = out.grid.step();
  const double rb = std::sqrt(1.0 - params.rho * params.rho);
  std::vector<std::size_t> clipped(cfg.n_paths, 0);
  parallel_paths(cfg.n_paths, cfg.threads, [&](std::size_t p) {
    std::span<double> w1(out.dW1.data() + p * N, N), w2(out.dW2.data() + p * N, N);
    brownian_increments(cfg.seed, p, N, h, w1, w2);
    std::vector<double> dB(N);
    for (std::size_t n = 0; n < N; ++n) dB[n] = params.rho * w1[n] + rb * w2[n];
    std::span<double> v(out.V.data() + p * (N + 1), N + 1);
    clipped[p] = step(v, std::span<const double>(dB));
  });
  out.clipped_nodes = std::accumulate(clipped.begin(), clipped.end(), std::size_t{0});
}

}  // namespace detail

/// Left-point Euler for the Volterra equation with exact kernel averages over
/// each step and full truncation. O(N^2) per path.
inline VariancePaths simulate_variance_volterra(const ModelParams& params, const SimConfig& cfg) {
  VariancePaths out = detail::allocate_paths(params, cfg);
  const std::size_t N = cfg.n_steps;
  const double h = out.grid.step();
  const AnyKernel k = make_kernel(params.kernel);
  std::vector<double> kbar(N + 1, 0.0);
  const bool flat = params.kernel.kind == KernelKind::Constant ||
                    (params.kernel.kind == KernelKind::Fractional && params.kernel.alpha == 1.0);
  for (std::size_t m = 1; m <= N; ++m)
    kbar[m] = flat ? params.kernel.c
                   : (kernel_primitive(k, out.grid.time(m)) - kernel_primitive(k, out.grid.time(m - 1))) / h;
  detail::run_variance_paths(out, params, cfg, [&](std::span<double> v, std::span<const double> dB) {
    std::vector<double> incr(N);
    std::size_t clipped = 0;
    for (std::size_t n = 1; n <= N; ++n) {
      const double vp = std::max(v[n - 1], 0.0);
      incr[n - 1] = params.kappa * (params.phi - vp) * h + params.sigma * std::sqrt(vp) * dB[n - 1];
      double s = params.V0;
      for (std::size_t j = 0; j < n; ++j) s += kbar[n - j] * incr[j];
      if (s < 0.0) ++clipped;
      v[n] = std::max(s, 0.0);
    }
    return clipped;
  });
  return out;
}

/// Multi-factor lift: V = g0(t) + sum c_i U_i with
/// dU_i = (-x_i U_i - kappa V) dt + sigma sqrt(V) dB, stepped implicitly in x_i.
inline VariancePaths simulate_variance_lifted(const ModelParams& params, const SimConfig& cfg) {
  VariancePaths out = detail::allocate_paths(params, cfg);
  const std::size_t N = cfg.n_steps;
  const double h = out.grid.step();
  const LiftedKernel lift = lifted_kernel(params.kernel, cfg.lifted_factors, cfg.lifted_spacing);
  if (lift.weights.size() > 1) {
    const LiftError e = lifted_l2_error(params.kernel, lift, h, params.T);
    if (e.relative > cfg.lifted_tolerance) {
      std::ostringstream os;
      os << "lifted kernel relative L2 error on [h, T] is " << e.relative << " (tolerance " << cfg.lifted_tolerance
         << ")";
      out.warnings.push_back(os.str());
    }
  }
  std::vector<double> g0(N + 1);
  for (std::size_t n = 0; n <= N; ++n) g0[n] = params.V0 + params.kappa * params.phi * lift.primitive(out.grid.time(n));
  const std::size_t F = lift.weights.size();
  detail::run_variance_paths(out, params, cfg, [&](std::span<double> v, std::span<const double> dB) {
    std::vector<double> U(F, 0.0);
    std::size_t clipped = 0;
    for (std::size_t n = 1; n <= N; ++n) {
      const double vp = std::max(v[n - 1], 0.0);
      const double shock = -params.kappa * vp * h + params.sigma * std::sqrt(vp) * dB[n - 1];
      double s = g0[n];
      for (std::size_t i = 0; i < F; ++i) {
        U[i] = (U[i] + shock) / (1.0 + lift.nodes[i] * h);
        s += lift.weights[i] * U[i];
      }
      if (s < 0.0) ++clipped;
      v[n] = std::max(s, 0.0);
    }
    return clipped;
  });
  return out;
}

inline VariancePaths simulate_variance(const ModelParams& params, const SimConfig& cfg) {
  return cfg.scheme == Scheme::Lifted ? simulate_variance_lifted(params, cfg) : simulate_variance_volterra(params, cfg);
}

// ---------------------------------------------------------------- forward variance along a path

/// (R_lambda/lambda)(k h) for k = 0..N; entry 0 is unused.
inline std::vector<double> resolvent_table(const ModelParams& params, const UniformGrid& grid) {
  const AnyKernel r = scaled_resolvent(params.kernel, params.lambda());
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t k = 1; k < grid.size(); ++k) out[k] = kernel_eval(r, grid.time(k));
  return out;
}

/// Advances xi_{t_n} to xi_{t_{n+1}} with the left-point rule for
/// int R_lambda(s - u)/lambda sigma sqrt(V_u) dB~_u, dB~ = dB + 2 theta rho sqrt(V) dt.
/// Negative values are clipped to 0; returns how many were clipped.
inline std::size_t update_forward_variance(ForwardVarianceCurve& xi, const std::vector<double>& table,
                                           const ModelParams& params, double V, double dB) {
  const UniformGrid& g = xi.grid;
  if (xi.anchor >= g.steps()) throw DomainError("forward variance curve is already at the horizon");
  if (table.size() != g.size()) throw DomainError("resolvent table does not match the curve grid");
  const double vp = std::max(V, 0.0);
  const double shock = params.sigma * std::sqrt(vp) * (dB + 2.0 * params.theta * params.rho * std::sqrt(vp) * g.step());
  std::size_t clipped = 0;
  std::vector<double> next(xi.values.size() - 1);
  for (std::size_t m = xi.anchor + 1; m < g.size(); ++m) {
    double v = xi.at(m) + table[m - xi.anchor] * shock;
    if (v < 0.0) {
      v = 0.0;
      ++clipped;
    }
    next[m - xi.anchor - 1] = v;
  }
  xi.values = std::move(next);
  ++xi.anchor;
  return clipped;
}

// ---------------------------------------------------------------- portfolio paths

struct PortfolioOptions {
  bool zero_control = false;  // u = 0: pure risk-free compounding
  bool track_M = true;
};

struct PathBundle {
  UniformGrid grid{1.0, 1};
  std::size_t n_paths = 0;
  std::vector<double> V, S, X, u, pi, M;  // row-major [path][node]; M empty unless tracked
  std::vector<double> dW1, dW2;           // [path][step]
  std::size_t clipped_nodes = 0;
  std::size_t xi_clipped = 0;
  std::vector<std::string> warnings;

  std::size_t nodes() const { return grid.size(); }
  double at(const std::vector<double>& a, std::size_t p, std::size_t n) const { return a.at(p * nodes() + n); }
  std::span<const double> row(const std::vector<double>& a, std::size_t p) const {
    return {a.data() + p * nodes(), nodes()};
  }
  /// Values of `a` at node n across paths.
  std::vector<double> column(const std::vector<double>& a, std::size_t n) const {
    std::vector<double> out(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) out[p] = a[p * nodes() + n];
    return out;
  }
  std::vector<double> terminal_wealth() const { return column(X, grid.steps()); }
  double clipped_fraction() const {
    return static_cast<double>(clipped_nodes) / static_cast<double>(n_paths * grid.steps());
  }
};

/// Euler steps for S (log scale) and X under u*(t_n, V_n, X_n), on precomputed variance paths.
inline PathBundle simulate_portfolio(const ModelParams& params, const MVSolution& mv, const VariancePaths& vp,
                                     const SimConfig& cfg, const PortfolioOptions& opts = {}) {
  const UniformGrid& g = vp.grid;
  const std::size_t N = g.steps(), nodes = g.size(), P = vp.n_paths;
  const double h = g.step();
  if (g.horizon() != params.T) throw DomainError("variance paths do not cover [0, T]");
  PathBundle out;
  out.grid = g;
  out.n_paths = P;
  out.V = vp.V;
  out.dW1 = vp.dW1;
  out.dW2 = vp.dW2;
  out.clipped_nodes = vp.clipped_nodes;
  out.warnings = vp.warnings;
  out.S.assign(P * nodes, cfg.s0);
  out.X.assign(P * nodes, params.x0);
  out.u.assign(P * nodes, 0.0);
  out.pi.assign(P * nodes, 0.0);
  std::vector<double> A(nodes), target(nodes), step_rate(N);
  const bool on_grid = mv.psi.grid.horizon() == g.horizon() && mv.psi.grid.steps() % N == 0;
  for (std::size_t n = 0; n < nodes; ++n) {
    A[n] = on_grid ? mv.A[n * (mv.psi.grid.steps() / N)] : mv.A_at(g.time(n));
    target[n] = mv.target_at(g.time(n));
  }
  for (std::size_t n = 0; n < N; ++n) step_rate[n] = params.rate.integral(g.time(n), g.time(n + 1));

  const bool track = opts.track_M;
  std::vector<double> table;
  ForwardVarianceCurve xi_start;
  if (track) {
    if (!on_grid) throw DomainError("tracking M needs the psi grid to refine the simulation grid");
    out.M.assign(P * nodes, 0.0);
    table = resolvent_table(params, g);
    xi_start = xi0(params, g);
  }
  const double rb = std::sqrt(1.0 - params.rho * params.rho);
  std::vector<std::size_t> xi_clipped(P, 0);
  parallel_paths(P, cfg.threads, [&](std::size_t p) {
    const double* V = out.V.data() + p * nodes;
    const double* w1 = out.dW1.data() + p * N;
    const double* w2 = out.dW2.data() + p * N;
    double* S = out.S.data() + p * nodes;
    double* X = out.X.data() + p * nodes;
    double* u = out.u.data() + p * nodes;
    double* pi = out.pi.data() + p * nodes;
    ForwardVarianceCurve xi;
    if (track) xi = xi_start;
    for (std::size_t n = 0; n <= N; ++n) {
      const double v = std::max(V[n], 0.0);
      const double gap = target[n] - X[n];
      pi[n] = opts.zero_control ? 0.0 : A[n] * gap;
      u[n] = pi[n] * std::sqrt(v);
      if (track) out.M[p * nodes + n] = M_t(params, mv.psi, xi);
      if (n == N) break;
      const double growth = std::exp(step_rate[n]);
      S[n + 1] = S[n] * growth * std::exp((params.theta - 0.5) * v * h + std::sqrt(v) * w1[n]);
      X[n + 1] = X[n] * growth + params.theta * std::sqrt(v) * u[n] * h + u[n] * w1[n];
      if (track) xi_clipped[p] += update_forward_variance(xi, table, params, v, params.rho * w1[n] + rb * w2[n]);
    }
  });
  out.xi_clipped = std::accumulate(xi_clipped.begin(), xi_clipped.end(), std::size_t{0});
  return out;
}

inline PathBundle simulate_portfolio(const ModelParams& params, const MVSolution& mv, const SimConfig& cfg,
                                     const PortfolioOptions& opts = {}) {
  return simulate_portfolio(params, mv, simulate_variance(params, cfg), cfg, opts);
}

// ---------------------------------------------------------------- statistics

struct BootstrapOptions {
  std::size_t resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

struct BandCurve {
  std::vector<double> mean;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> std_error;  // bootstrap standard error of the mean
};

namespace detail {

/// Linear-interpolated quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double sample_sd(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

/// Resampled path indices, one row per bootstrap replicate.
inline std::vector<std::uint32_t> resample_indices(std::size_t n_paths, const BootstrapOptions& opts) {
  std::mt19937_64 eng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n_paths - 1));
  std::vector<std::uint32_t> idx(opts.resamples * n_paths);
  for (auto& i : idx) i = pick(eng);
  return idx;
}

inline void check_bootstrap(std::size_t n_paths, const BootstrapOptions& opts) {
  if (n_paths < 2) throw DomainError("bootstrap needs at least two paths");
  if (opts.resamples < 2) throw DomainError("bootstrap needs at least two resamples");
  if (!(opts.level > 0.0 && opts.level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
}

}  // namespace detail

/// Percentile bootstrap bands for the mean at each node of row-major [path][node] data.
/// Paths are resampled jointly across nodes.
inline BandCurve bootstrap_bands(std::span<const double> data, std::size_t n_paths, std::size_t n_nodes,
                                 const BootstrapOptions& opts = {}) {
  detail::check_bootstrap(n_paths, opts);
  if (data.size() != n_paths * n_nodes) throw DomainError("data size does not match paths x nodes");
  const auto idx = detail::resample_indices(n_paths, opts);
  const double inv = 1.0 / static_cast<double>(n_paths);
  std::vector<double> boot(opts.resamples * n_nodes, 0.0);  // [replicate][node]
  for (std::size_t b = 0; b < opts.resamples; ++b) {
    double* row = boot.data() + b * n_nodes;
    for (std::size_t k = 0; k < n_paths; ++k) {
      const double* src = data.data() + static_cast<std::size_t>(idx[b * n_paths + k]) * n_nodes;
      for (std::size_t n = 0; n < n_nodes; ++n) row[n] += src[n];
    }
    for (std::size_t n = 0; n < n_nodes; ++n) row[n] *= inv;
  }
  BandCurve out;
  out.mean.assign(n_nodes, 0.0);
  for (std::size_t p = 0; p < n_paths; ++p)
    for (std::size_t n = 0; n < n_nodes; ++n) out.mean[n] += data[p * n_nodes + n];
  for (double& m : out.mean) m *= inv;
  out.lower.resize(n_nodes);
  out.upper.resize(n_nodes);
  out.std_error.resize(n_nodes);
  std::vector<double> col(opts.resamples);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    for (std::size_t b = 0; b < opts.resamples; ++b) col[b] = boot[b * n_nodes + n];
    out.std_error[n] = detail::sample_sd(col);
    std::sort(col.begin(), col.end());
    // a percentile interval can miss the sample mean when resamples are few
    out.lower[n] = std::min(detail::quantile_sorted(col, 0.5 * (1.0 - opts.level)), out.mean[n]);
    out.upper[n] = std::max(detail::quantile_sorted(col, 0.5 * (1.0 + opts.level)), out.mean[n]);
  }
  return out;
}

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;  // bootstrap
};

struct TerminalStats {
  Estimate mean;          // E[X_T]
  Estimate variance;      // Var[X_T]
  Estimate square_error;  // E[(X_T - zeta)^2]
};

/// Mean, variance and mean squared distance to zeta with bootstrap standard errors.
inline TerminalStats terminal_stats(const std::vector<double>& x, double zeta, const BootstrapOptions& opts = {}) {
  detail::check_bootstrap(x.size(), opts);
  const std::size_t n = x.size();
  auto stats = [&](auto&& get) {
    double s = 0.0, s2 = 0.0, se = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = get(k);
      s += v;
      s2 += v * v;
      se += (v - zeta) * (v - zeta);
    }
    const double nn = static_cast<double>(n);
    const double m = s / nn;
    return std::array<double, 3>{m, (s2 - nn * m * m) / (nn - 1.0), se / nn};
  };
  const auto full = stats([&](std::size_t k) { return x[k]; });
  const auto idx = detail::resample_indices(n, opts);
  std::array<std::vector<double>, 3> reps;
  for (auto& r : reps) r.reserve(opts.resamples);
  for (std::size_t b = 0; b < opts.resamples; ++b) {
    const auto s = stats([&](std::size_t k) { return x[idx[b * n + k]]; });
    for (int i = 0; i < 3; ++i) reps[i].push_back(s[i]);
  }
  return {{full[0], detail::sample_sd(reps[0])},
          {full[1], detail::sample_sd(reps[1])},
          {full[2], detail::sample_sd(reps[2])}};
}

struct McSummary {
  std::vector<double> times;
  BandCurve wealth;
  BandCurve strategy;  // u*
  BandCurve amount;    // pi*
  BandCurve variance;
  TerminalStats terminal;
  double clipped_fraction = 0.0;
};

inline McSummary summarize(const PathBundle& b, double zeta, const BootstrapOptions& opts = {}) {
  McSummary out;
  out.times = b.grid.times();
  out.wealth = bootstrap_bands(b.X, b.n_paths, b.nodes(), opts);
  out.strategy = bootstrap_bands(b.u, b.n_paths, b.nodes(), opts);
  out.amount = bootstrap_bands(b.pi, b.n_paths, b.nodes(), opts);
  out.variance = bootstrap_bands(b.V, b.n_paths, b.nodes(), opts);
  out.terminal = terminal_stats(b.terminal_wealth(), zeta, opts);
  out.clipped_fraction = b.clipped_fraction();
  return out;
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;  // asymptotic Kolmogorov distribution
};

/// Two-sample Kolmogorov-Smirnov test.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("KS test needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  const double lam = (en + 0.12 + 0.11 / en) * d;
  double q = 0.0;
  if (lam < 1e-3) {
    q = 1.0;
  } else {
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lam * lam);
      q += (k % 2 ? 2.0 : -2.0) * term;
      if (term < 1e-16) break;
    }
    q = std::clamp(q, 0.0, 1.0);
  }
  return {d, q};
}

/// Discrete p-variation along the grid partition: sum |x_{n+1} - x_n|^p.
inline double p_variation(std::span<const double> x, double p) {
  if (!(p >= 1.0)) throw DomainError("p-variation needs p >= 1");
  double s = 0.0;
  for (std::size_t n = 1; n < x.size(); ++n) s += std::pow(std::abs(x[n] - x[n - 1]), p);
  return s;
}

}  // namespace vhmv
