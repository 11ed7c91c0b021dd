#pragma once

// Berkson query interface: the learner names w, the oracle labels the
// perturbed point w + U, U ~ Unif[-sigma, sigma].

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "berkson/function_class.hpp"
#include "berkson/rng.hpp"

namespace berkson {

enum class Label : std::int8_t { Negative = -1, Positive = 1 };

struct Sample {
  double w;
  Label y;
};

enum class Design { EquispacedGrid, UniformRandom };

class NoisyOracle {
 public:
  NoisyOracle(RegressionFunction m, std::size_t budget, std::uint64_t seed, std::uint64_t stream);

  /// One label at w. Throws BudgetExhausted or QueryOutsideDomain; a failed
  /// call changes nothing.
  Label query(double w);

  /// n labels on `domain`: midpoints lo + (j - 1/2) * width / n for the grid
  /// design, i.i.d. uniform points otherwise. All-or-nothing on the budget.
  std::vector<Sample> passive_batch(std::size_t n, Design design, const Interval& domain);

  /// Noise width; known to the learner.
  double sigma() const { return m_.params().sigma; }
  /// Region where queries are allowed.
  Interval admissible() const { return m_.admissible(); }
  std::size_t budget() const { return budget_; }
  std::size_t used() const { return used_; }
  std::size_t remaining() const { return budget_ - used_; }
  const std::vector<Sample>& log() const { return log_; }

 private:
  void check_admissible(double w) const;

  RegressionFunction m_;
  std::size_t budget_;
  std::size_t used_ = 0;
  CounterRng rng_;
  std::vector<Sample> log_;
};

/// CSV rows "trial_id,step,w,y" (y as +1/-1), one per logged query; the
/// header is written when `header` is set.
void write_query_log(std::ostream& out, std::uint64_t trial_id, std::span<const Sample> log,
                     bool header = true);

}  // namespace berkson
