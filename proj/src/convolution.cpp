#include "berkson/convolution.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "berkson/error.hpp"
#include "berkson/quadrature.hpp"
#include "berkson/simd/kernels.hpp"

namespace berkson {
namespace {

constexpr double kQueryTol = 1e-12;

}  // namespace

ConvolvedFunction::ConvolvedFunction(RegressionFunction source, double sigma, ConvolutionMethod method)
    : source_(std::move(source)), sigma_(sigma), method_(method) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorCode::BadParams, "convolution needs sigma > 0");
  if (method_.kind == ConvolutionMethod::Kind::Quadrature && method_.nodes == 0) {
    throw Error(ErrorCode::BadParams, "quadrature needs at least one node");
  }
  breaks_ = source_.breakpoints();
}

Interval ConvolvedFunction::admissible() const {
  return Interval{source_.domain().lo + sigma_, source_.domain().hi - sigma_};
}

double ConvolvedFunction::operator()(double w) const {
  if (!admissible().contains(w, kQueryTol)) {
    throw Error(ErrorCode::QueryOutsideDomain, "w = " + std::to_string(w) + " violates the sigma margin");
  }
  return eval_unchecked(w);
}

double ConvolvedFunction::eval_unchecked(double w) const {
  return method_.kind == ConvolutionMethod::Kind::Analytic ? analytic(w) : quadrature(w);
}

double ConvolvedFunction::analytic(double w) const {
  const double lo = w - sigma_;
  const double hi = w + sigma_;
  double total = 0.0;
  for (const Segment& s : source_.segments()) {
    const double u = std::max(lo, s.lo);
    const double v = std::min(hi, s.hi);
    if (v > u) total += s.clipped_integral(u, v);
  }
  return total / (2.0 * sigma_);
}

double ConvolvedFunction::quadrature(double w) const {
  const double lo = w - sigma_;
  const double hi = w + sigma_;
  const GaussLegendreRule& rule = gauss_legendre(method_.nodes);
  std::vector<double> cuts{lo};
  for (double b : breaks_) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  cuts.push_back(hi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    total += integrate([this](double x) { return source_(x); }, cuts[i], cuts[i + 1], rule);
  }
  return total / (2.0 * sigma_);
}

ConvolvedFunction convolve(const RegressionFunction& m, double sigma, ConvolutionMethod method) {
  return ConvolvedFunction(m, sigma, method);
}

double default_gap_step(double a, double sigma) { return std::min(a, sigma) / 100.0; }

GapResult max_gap(const ConvolvedFunction& f0, const ConvolvedFunction& f1, double grid_step,
                  std::optional<Interval> window) {
  if (!(grid_step > 0.0)) throw Error(ErrorCode::BadParams, "grid_step must be > 0");
  if (f0.sigma() != f1.sigma() || !(f0.source().domain() == f1.source().domain())) {
    throw Error(ErrorCode::BadParams, "max_gap needs functions with the same sigma and domain");
  }
  Interval region = f0.admissible();
  if (window) region = intersect(region, *window);
  if (!(region.hi >= region.lo)) return {};

  const auto steps = static_cast<std::size_t>(std::ceil(region.width() / grid_step));
  std::vector<double> grid(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    grid[i] = std::min(region.lo + static_cast<double>(i) * grid_step, region.hi);
  }
  std::vector<double> v0(grid.size());
  std::vector<double> v1(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    v0[i] = f0.eval_unchecked(grid[i]);
    v1[i] = f1.eval_unchecked(grid[i]);
  }
  const simd::MaxAbsDiff best = simd::max_abs_diff(v1, v0);
  return GapResult{best.value, grid[best.index]};
}

double local_slope(const ConvolvedFunction& f, double h) {
  if (!(h > 0.0) || h > f.sigma()) throw Error(ErrorCode::BadParams, "local_slope needs 0 < h <= sigma");
  const double t = f.threshold();
  return (f(t + h) - f(t - h)) / (2.0 * h);
}

}  // namespace berkson
