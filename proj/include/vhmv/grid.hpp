#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "vhmv/errors.hpp"

namespace vhmv {

/// Uniform time grid t_n = n*h, n = 0..steps, with t_steps == horizon.
class UniformGrid {
public:
  UniformGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("grid horizon must be positive and finite");
    if (steps == 0) throw DomainError("grid needs at least one step");
  }

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return steps_ + 1; }
  double step() const noexcept { return horizon_ / static_cast<double>(steps_); }

  // Last node returns the horizon exactly so that T - t_N == 0.
  double time(std::size_t n) const noexcept {
    return n == steps_ ? horizon_ : static_cast<double>(n) * step();
  }

  std::vector<double> times() const {
    std::vector<double> out(size());
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = time(n);
    return out;
  }

  /// Ratio steps/other.steps when this grid refines `coarse` on the same horizon.
  std::size_t refinement_of(const UniformGrid& coarse) const {
    if (horizon_ != coarse.horizon_ || steps_ % coarse.steps_ != 0)
      throw DomainError("grid is not an integer refinement of the coarse grid");
    return steps_ / coarse.steps_;
  }

  friend bool operator==(const UniformGrid&, const UniformGrid&) = default;

private:
  double horizon_;
  std::size_t steps_;
};

}  // namespace vhmv
