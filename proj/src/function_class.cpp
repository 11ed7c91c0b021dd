#include "berkson/function_class.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "berkson/error.hpp"
#include "berkson/json_util.hpp"
#include "berkson/simd/kernels.hpp"

namespace berkson {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBoundaryTol = 1e-12;

Segment power_piece(double lo, double hi, double coef, double anchor, int dir, double exponent) {
  return Segment{lo, hi, 0.5, coef, anchor, dir, exponent};
}

std::vector<Segment> mirrored_power(double t, double c, double exponent) {
  return {power_piece(-kInf, t, -c, t, -1, exponent), power_piece(t, kInf, c, t, +1, exponent)};
}

}  // namespace

Interval intersect(const Interval& a, const Interval& b) {
  return Interval{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
}

void MarginParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::BadParams, what); };
  if (!std::isfinite(k) || k < 1.0) bad("k must be >= 1");
  if (!std::isfinite(c) || c <= 0.0 || c > 0.5) bad("c must lie in (0, 1/2]");
  if (!std::isfinite(C) || C < c) bad("C must be >= c");
  if (!std::isfinite(sigma) || sigma < 0.0 || sigma >= 1.0) bad("sigma must lie in [0, 1)");
  if (!std::isfinite(epsilon0) || epsilon0 <= 0.0 || epsilon0 > 0.5) bad("epsilon0 must lie in (0, 1/2]");
}

std::string_view to_string(Form form) {
  switch (form) {
    case Form::PowerSymmetric: return "PowerSymmetric";
    case Form::StepPair0: return "StepPair0";
    case Form::StepPair1: return "StepPair1";
    case Form::PowerPair0: return "PowerPair0";
    case Form::PowerPair1: return "PowerPair1";
    case Form::TabulatedPiecewise: return "TabulatedPiecewise";
  }
  return "Unknown";
}

Form form_from_string(std::string_view name) {
  for (Form f : {Form::PowerSymmetric, Form::StepPair0, Form::StepPair1, Form::PowerPair0,
                 Form::PowerPair1, Form::TabulatedPiecewise}) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorCode::ConfigError, "unknown function form '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Segment

double Segment::raw(double x) const {
  const double y = dir > 0 ? x - anchor : anchor - x;
  if (y == 0.0) return offset;
  return offset + coef * simd::nonneg_power(y, exponent);
}

std::vector<double> Segment::saturation_points() const {
  std::vector<double> out;
  if (coef == 0.0 || exponent == 0.0) return out;
  for (double target : {0.0, 1.0}) {
    const double r = (target - offset) / coef;
    if (!(r > 0.0)) continue;
    const double y = exponent == 1.0 ? r : std::pow(r, 1.0 / exponent);
    const double x = anchor + dir * y;
    if (x > lo && x < hi) out.push_back(x);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double Segment::clipped_integral(double u, double v) const {
  if (!(v > u)) return 0.0;
  std::vector<double> cuts{u};
  for (double s : saturation_points()) {
    if (s > u && s < v) cuts.push_back(s);
  }
  cuts.push_back(v);

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double p = cuts[i];
    const double q = cuts[i + 1];
    const double mid = raw(0.5 * (p + q));
    if (mid >= 1.0) {
      total += q - p;
    } else if (mid <= 0.0) {
      // saturated at zero
    } else {
      const double yp = dir > 0 ? p - anchor : anchor - p;
      const double yq = dir > 0 ? q - anchor : anchor - q;
      const double e1 = exponent + 1.0;
      const double antideriv = (simd::nonneg_power(yq, e1) - simd::nonneg_power(yp, e1)) / e1;
      total += offset * (q - p) + coef * dir * antideriv;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// RegressionFunction

Interval RegressionFunction::admissible() const {
  return Interval{domain_.lo + params_.sigma, domain_.hi - params_.sigma};
}

const Segment& RegressionFunction::segment_at(double x) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), x,
                             [](double value, const Segment& s) { return value < s.lo; });
  if (it == segments_.begin()) return segments_.front();
  return *(it - 1);
}

double RegressionFunction::operator()(double x) const {
  const double v = segment_at(x).raw(x);
  return std::min(std::max(v, 0.0), 1.0);
}

void RegressionFunction::eval(std::span<const double> x, std::span<double> out) const {
  if (single_power_) {
    simd::signed_power(x, t_, params_.c, params_.k - 1.0, out);
    return;
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (*this)(x[i]);
}

std::vector<double> RegressionFunction::breakpoints() const {
  std::vector<double> pts;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& s = segments_[i];
    if (i > 0 && std::isfinite(s.lo)) pts.push_back(s.lo);
    for (double p : s.saturation_points()) pts.push_back(p);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

RegressionFunction RegressionFunction::shifted(double offset) const {
  RegressionFunction out = *this;
  out.t_ += offset;
  out.domain_.lo += offset;
  out.domain_.hi += offset;
  for (Segment& s : out.segments_) {
    if (std::isfinite(s.lo)) s.lo += offset;
    if (std::isfinite(s.hi)) s.hi += offset;
    s.anchor += offset;
  }
  for (double& x : out.table_x_) x += offset;
  return out;
}

RegressionFunction RegressionFunction::with_params(const MarginParams& params) const {
  RegressionFunction out = *this;
  out.params_ = params;
  return out;
}

nlohmann::json RegressionFunction::to_json() const {
  nlohmann::json j;
  j["form"] = std::string(to_string(form_));
  j["k"] = params_.k;
  j["c"] = params_.c;
  j["C"] = params_.C;
  j["sigma"] = params_.sigma;
  j["epsilon0"] = params_.epsilon0;
  j["t"] = t_;
  j["domain"] = {domain_.lo, domain_.hi};
  if (a_) j["a"] = *a_;
  if (form_ == Form::TabulatedPiecewise) {
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t i = 0; i < table_x_.size(); ++i) pts.push_back({table_x_[i], table_y_[i]});
    j["points"] = pts;
  }
  return j;
}

RegressionFunction RegressionFunction::from_json(const nlohmann::json& j) {
  const std::string path = "function";
  MarginParams p;
  p.k = json_util::require_number(j, "k", path);
  p.c = json_util::require_number(j, "c", path);
  p.C = json_util::optional_number(j, "C", path).value_or(p.c);
  p.sigma = json_util::require_number(j, "sigma", path);
  p.epsilon0 = json_util::optional_number(j, "epsilon0", path).value_or(0.5);
  const Form form = form_from_string(json_util::optional_string(j, "form", path).value_or("PowerSymmetric"));

  RegressionFunction m;
  switch (form) {
    case Form::PowerSymmetric:
      m = make_power(p, json_util::require_number(j, "t", path));
      break;
    case Form::StepPair0:
    case Form::StepPair1:
    case Form::PowerPair0:
    case Form::PowerPair1: {
      auto pair = make_lb_pair(p, json_util::require_number(j, "a", path));
      const bool second = form == Form::StepPair1 || form == Form::PowerPair1;
      m = second ? pair.second : pair.first;
      if (m.form() != form) {
        throw Error(ErrorCode::ConfigError, path + ".form: " + std::string(to_string(form)) +
                                                " does not match k = " + std::to_string(p.k));
      }
      break;
    }
    case Form::TabulatedPiecewise: {
      if (!j.contains("points") || !j["points"].is_array()) {
        throw Error(ErrorCode::ConfigError, path + ".points: required array of [x, y] pairs");
      }
      std::vector<double> xs, ys;
      for (const auto& pt : j["points"]) {
        if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
          throw Error(ErrorCode::ConfigError, path + ".points: each entry must be [x, y]");
        }
        xs.push_back(pt[0].get<double>());
        ys.push_back(pt[1].get<double>());
      }
      m = make_tabulated(p, json_util::require_number(j, "t", path), std::move(xs), std::move(ys));
      break;
    }
  }
  if (j.contains("domain")) {
    const auto& d = j["domain"];
    if (!d.is_array() || d.size() != 2 || !d[0].is_number()) {
      throw Error(ErrorCode::ConfigError, path + ".domain: expected [lo, hi]");
    }
    const double lo = d[0].get<double>();
    if (lo != m.domain().lo) m = m.shifted(lo - m.domain().lo);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Constructors

RegressionFunction make_power(const MarginParams& params, double t) {
  params.validate();
  if (!std::isfinite(t) || t - params.sigma < -1.0 - kBoundaryTol || t + params.sigma > 1.0 + kBoundaryTol) {
    throw Error(ErrorCode::BoundaryViolation,
                "threshold " + std::to_string(t) + " is closer than sigma to the boundary");
  }
  RegressionFunction m;
  m.params_ = params;
  m.form_ = Form::PowerSymmetric;
  m.t_ = t;
  m.domain_ = Interval{-1.0, 1.0};
  m.segments_ = mirrored_power(t, params.c, params.k - 1.0);
  m.single_power_ = true;
  return m;
}

double lb_beta(const MarginParams& params) {
  if (params.k <= 1.0) throw Error(ErrorCode::BadParams, "beta is only defined for k > 1");
  if (!(params.c < params.C)) throw Error(ErrorCode::BadParams, "beta requires c < C strictly");
  return 1.0 / (1.0 - std::pow(params.c / params.C, 1.0 / (params.k - 1.0)));
}

std::pair<RegressionFunction, RegressionFunction> make_lb_pair(const MarginParams& params, double a) {
  params.validate();
  if (!std::isfinite(a) || a <= 0.0) throw Error(ErrorCode::BadParams, "separation a must be > 0");
  const double sigma = params.sigma;

  if (params.k == 1.0) {
    if (a + sigma > 1.0 + kBoundaryTol) {
      throw Error(ErrorCode::BoundaryViolation, "step thresholds -a, +a violate the sigma margin");
    }
    RegressionFunction p0 = make_power(params, -a);
    RegressionFunction p1 = make_power(params, a);
    p0.form_ = Form::StepPair0;
    p1.form_ = Form::StepPair1;
    p0.a_ = a;
    p1.a_ = a;
    return {p0, p1};
  }

  const double beta = lb_beta(params);
  const Interval domain{-sigma, 2.0 - sigma};
  if (a > domain.hi - sigma + kBoundaryTol) {
    throw Error(ErrorCode::BoundaryViolation, "second threshold a violates the sigma margin");
  }
  const double e = params.k - 1.0;
  const double c = params.c;

  RegressionFunction p0;
  p0.params_ = params;
  p0.form_ = Form::PowerPair0;
  p0.t_ = 0.0;
  p0.domain_ = domain;
  p0.a_ = a;
  p0.beta_ = beta;
  p0.segments_ = mirrored_power(0.0, c, e);
  p0.single_power_ = true;

  RegressionFunction p1;
  p1.params_ = params;
  p1.form_ = Form::PowerPair1;
  p1.t_ = a;
  p1.domain_ = domain;
  p1.a_ = a;
  p1.beta_ = beta;
  const double rejoin = beta * a + sigma;
  p1.segments_ = {power_piece(-kInf, a, -c, a, -1, e), power_piece(a, rejoin, c, a, +1, e),
                  power_piece(rejoin, kInf, c, 0.0, +1, e)};
  return {p0, p1};
}

RegressionFunction make_tabulated(const MarginParams& params, double t, std::vector<double> xs,
                                  std::vector<double> ys) {
  params.validate();
  if (xs.size() < 2 || xs.size() != ys.size()) {
    throw Error(ErrorCode::BadParams, "tabulated function needs >= 2 matching (x, y) knots");
  }
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (!(xs[i + 1] > xs[i])) throw Error(ErrorCode::BadParams, "tabulated knots must increase");
  }
  RegressionFunction m;
  m.params_ = params;
  m.form_ = Form::TabulatedPiecewise;
  m.t_ = t;
  m.domain_ = Interval{xs.front(), xs.back()};
  m.segments_.push_back(Segment{-kInf, xs.front(), ys.front(), 0.0, xs.front(), +1, 1.0});
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    m.segments_.push_back(Segment{xs[i], xs[i + 1], ys[i], slope, xs[i], +1, 1.0});
  }
  m.segments_.push_back(Segment{xs.back(), kInf, ys.back(), 0.0, xs.back(), +1, 1.0});
  m.table_x_ = std::move(xs);
  m.table_y_ = std::move(ys);
  return m;
}

RegressionFunction to_standard_domain(const RegressionFunction& m) {
  if (m.domain() == Interval{-1.0, 1.0}) return m;
  if (std::fabs(m.domain().width() - 2.0) > 1e-12) {
    throw Error(ErrorCode::BadParams, "only width-2 domains map onto [-1, 1]");
  }
  RegressionFunction out = m.shifted(-1.0 - m.domain().lo);
  out.domain_ = Interval{-1.0, 1.0};  // the shift can round the far end
  return out;
}

// ---------------------------------------------------------------------------
// Membership

namespace {

void record(ConditionResult& r, double x, double violation) {
  ++r.checked;
  if (r.checked == 1 || violation > r.violation) {
    r.violation = violation;
    r.worst_x = x;
  }
  if (violation > kMembershipTolerance) r.pass = false;
}

nlohmann::json condition_json(const ConditionResult& r) {
  return {{"pass", r.pass}, {"worst_x", r.worst_x}, {"violation", r.violation}, {"checked", r.checked}};
}

}  // namespace

nlohmann::json MembershipReport::to_json() const {
  return {{"range", condition_json(range)},       {"crossing", condition_json(crossing)},
          {"margin", condition_json(margin)},     {"symmetry", condition_json(symmetry)},
          {"boundary", condition_json(boundary)}, {"all_pass", all_pass()}};
}

MembershipReport check_membership(const RegressionFunction& m, double grid_step) {
  if (!(grid_step > 0.0)) throw Error(ErrorCode::BadParams, "grid_step must be > 0");
  const MarginParams& p = m.params();
  const double t = m.threshold();
  const Interval dom = m.domain();
  MembershipReport report;

  const double dist_to_edge = std::min(t - dom.lo, dom.hi - t);
  record(report.boundary, t, p.sigma - dist_to_edge);
  record(report.crossing, t, std::fabs(m(t) - 0.5));

  const auto steps = static_cast<std::size_t>(std::ceil(dom.width() / grid_step));
  for (std::size_t i = 0; i <= steps; ++i) {
    const double x = std::min(dom.lo + static_cast<double>(i) * grid_step, dom.hi);
    const double v = m(x);
    record(report.range, x, std::max(-v, v - 1.0));

    if (x == t) continue;
    const double g = std::fabs(v - 0.5);
    if (!(g < p.epsilon0)) continue;
    const double dist = std::fabs(x - t);
    const double shape = p.k == 1.0 ? 1.0 : std::pow(dist, p.k - 1.0);
    record(report.margin, x, std::max(p.c * shape - g, g - p.C * shape));
  }

  if (p.sigma > 0.0) {
    const auto dsteps = static_cast<std::size_t>(std::floor(p.sigma / grid_step));
    for (std::size_t j = 0; j <= dsteps + 1; ++j) {
      const double delta = std::min(static_cast<double>(j) * grid_step, p.sigma);
      const double residual = std::fabs((m(t + delta) - 0.5) - (0.5 - m(t - delta)));
      record(report.symmetry, t + delta, residual);
    }
  } else {
    record(report.symmetry, t, 0.0);
  }
  return report;
}

}  // namespace berkson
