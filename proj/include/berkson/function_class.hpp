#pragma once

// Regression functions m(x) = P(Y = + | X = x) in the margin class
// P(c, C, k, sigma): the canonical power family, the two-hypothesis pairs used
// by the lower-bound constructions, and tabulated piecewise-linear curves.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace berkson {

struct Interval {
  double lo = -1.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  double radius() const { return 0.5 * (hi - lo); }
  bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
  bool operator==(const Interval&) const = default;
};

/// Intersection; may come back with hi < lo when the intervals are disjoint.
Interval intersect(const Interval& a, const Interval& b);

struct MarginParams {
  double k = 1.0;         // margin exponent, >= 1
  double c = 0.25;        // lower margin constant, (0, 1/2]
  double C = 1.0;         // upper margin constant, >= c
  double sigma = 0.0;     // noise half-width, [0, 1)
  double epsilon0 = 0.5;  // radius in |m - 1/2| where the margin condition is enforced

  /// Throws Error(BadParams) naming the first violated constraint.
  void validate() const;
};

enum class Form { PowerSymmetric, StepPair0, StepPair1, PowerPair0, PowerPair1, TabulatedPiecewise };

std::string_view to_string(Form form);
Form form_from_string(std::string_view name);

/// One analytic piece on [lo, hi):
///   offset + coef * y^exponent,  y = dir * (x - anchor) >= 0 on the piece,
/// with the power term taken as 0 at y == 0 (so 0^0 contributes nothing).
/// Piecewise-linear pieces use exponent 1 with anchor at the left knot.
struct Segment {
  double lo;
  double hi;
  double offset;
  double coef;
  double anchor;
  int dir;  // +1 or -1
  double exponent;

  double raw(double x) const;
  /// Points in (lo, hi) where raw() crosses 0 or 1 (clip kinks).
  std::vector<double> saturation_points() const;
  /// Exact integral of clip(raw, 0, 1) over [u, v], lo <= u <= v <= hi.
  double clipped_integral(double u, double v) const;
};

class RegressionFunction {
 public:
  const MarginParams& params() const { return params_; }
  Form form() const { return form_; }
  double threshold() const { return t_; }
  const Interval& domain() const { return domain_; }
  /// Query region allowed by (Q): the domain shrunk by sigma on both sides.
  Interval admissible() const;
  std::optional<double> separation() const { return a_; }
  std::optional<double> beta() const { return beta_; }
  const std::vector<Segment>& segments() const { return segments_; }

  /// clip(m(x), 0, 1). Defined on the whole real line; callers restrict to domain().
  double operator()(double x) const;
  void eval(std::span<const double> x, std::span<double> out) const;

  /// Segment boundaries plus clip kinks, sorted, finite only.
  std::vector<double> breakpoints() const;

  /// Copy translated by `offset` (domain, threshold and every piece).
  RegressionFunction shifted(double offset) const;
  /// Copy with the margin constants replaced; used to audit membership under
  /// different (c, C) without rebuilding the pieces.
  RegressionFunction with_params(const MarginParams& params) const;

  nlohmann::json to_json() const;
  static RegressionFunction from_json(const nlohmann::json& j);

 private:
  friend RegressionFunction make_power(const MarginParams&, double);
  friend std::pair<RegressionFunction, RegressionFunction> make_lb_pair(const MarginParams&, double);
  friend RegressionFunction make_tabulated(const MarginParams&, double, std::vector<double>,
                                           std::vector<double>);
  friend RegressionFunction to_standard_domain(const RegressionFunction&);

  RegressionFunction() = default;
  const Segment& segment_at(double x) const;
  bool single_power_ = false;  // two mirrored pieces around t: kernel fast path

  MarginParams params_;
  Form form_ = Form::PowerSymmetric;
  double t_ = 0.0;
  Interval domain_;
  std::optional<double> a_;
  std::optional<double> beta_;
  std::vector<Segment> segments_;
  std::vector<double> table_x_;
  std::vector<double> table_y_;
};

/// m(x) = clip(1/2 + c sgn(x - t) |x - t|^(k-1)) on [-1, 1].
RegressionFunction make_power(const MarginParams& params, double t);

/// Two-hypothesis pair. k = 1: steps at -a and +a on [-1, 1].
/// k > 1: thresholds 0 and a on the shifted domain [-sigma, 2 - sigma]; the
/// second member rejoins the first after beta*a + sigma.
std::pair<RegressionFunction, RegressionFunction> make_lb_pair(const MarginParams& params, double a);

/// 1/(1 - (c/C)^(1/(k-1))); BadParams when k == 1 or c >= C.
double lb_beta(const MarginParams& params);

/// Piecewise-linear interpolation through (xs, ys) on [xs.front(), xs.back()],
/// held constant outside. `t` is the declared threshold.
RegressionFunction make_tabulated(const MarginParams& params, double t, std::vector<double> xs,
                                  std::vector<double> ys);

/// Moves a function built on a shifted domain back onto [-1, 1].
RegressionFunction to_standard_domain(const RegressionFunction& m);

struct ConditionResult {
  bool pass = true;
  double worst_x = 0.0;    // grid point with the largest violation
  double violation = 0.0;  // magnitude by which the condition fails there (<= 0 when passing)
  std::size_t checked = 0;
};

struct MembershipReport {
  ConditionResult range;      // values inside [0, 1]
  ConditionResult crossing;   // m(t) = 1/2
  ConditionResult margin;     // (T)
  ConditionResult symmetry;   // (M)
  ConditionResult boundary;   // (B)

  bool all_pass() const {
    return range.pass && crossing.pass && margin.pass && symmetry.pass && boundary.pass;
  }
  nlohmann::json to_json() const;
};

inline constexpr double kMembershipTolerance = 1e-12;
inline constexpr double kDefaultMembershipGrid = 1e-4;

MembershipReport check_membership(const RegressionFunction& m,
                                  double grid_step = kDefaultMembershipGrid);

}  // namespace berkson
