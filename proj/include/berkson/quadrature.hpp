#pragma once

#include <cstddef>
#include <vector>

namespace berkson {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Rule with `points` nodes, computed once per size by Newton iteration on the
/// three-term Legendre recurrence and cached for the life of the process.
const GaussLegendreRule& gauss_legendre(std::size_t points);

template <class F>
double integrate(const F& f, double a, double b, const GaussLegendreRule& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

}  // namespace berkson
