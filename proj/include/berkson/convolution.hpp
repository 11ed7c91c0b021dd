#pragma once

// F(w) = (m * Unif[-sigma, sigma])(w): the probability of a + label when the
// learner asks for w and the oracle answers at w + U.

#include <cstddef>
#include <optional>
#include <span>

#include "berkson/function_class.hpp"

namespace berkson {

struct ConvolutionMethod {
  enum class Kind { Analytic, Quadrature };
  Kind kind = Kind::Analytic;
  std::size_t nodes = 64;  // Gauss-Legendre nodes per smooth piece (Quadrature only)

  static ConvolutionMethod analytic() { return {}; }
  static ConvolutionMethod quadrature(std::size_t nodes = 64) { return {Kind::Quadrature, nodes}; }
};

class ConvolvedFunction {
 public:
  ConvolvedFunction(RegressionFunction source, double sigma, ConvolutionMethod method);

  const RegressionFunction& source() const { return source_; }
  double sigma() const { return sigma_; }
  const ConvolutionMethod& method() const { return method_; }
  double threshold() const { return source_.threshold(); }

  /// Queries allowed by (Q): the source domain shrunk by sigma.
  Interval admissible() const;

  /// Throws QueryOutsideDomain when w is outside admissible().
  double operator()(double w) const;
  /// Same value without the (Q) check; used by scans that already clipped their grid.
  double eval_unchecked(double w) const;

 private:
  double analytic(double w) const;
  double quadrature(double w) const;

  RegressionFunction source_;
  double sigma_;
  ConvolutionMethod method_;
  std::vector<double> breaks_;
};

ConvolvedFunction convolve(const RegressionFunction& m, double sigma,
                           ConvolutionMethod method = ConvolutionMethod::analytic());

struct GapResult {
  double gap = 0.0;
  double argmax = 0.0;
};

/// min(a, sigma) / 100: gap features have width min(a, sigma).
double default_gap_step(double a, double sigma);

/// Grid maximum of |F1 - F0| over the shared admissible region, optionally
/// restricted to `window`.
GapResult max_gap(const ConvolvedFunction& f0, const ConvolvedFunction& f1, double grid_step,
                  std::optional<Interval> window = std::nullopt);

/// (F(t + h) - F(t - h)) / (2h) about the source threshold, 0 < h <= sigma.
double local_slope(const ConvolvedFunction& f, double h);

}  // namespace berkson
