#include "hac/geometry/lorentz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hac/errors.hpp"

namespace hac::geometry {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_compatible(const LorentzPoint& x, const LorentzPoint& y) {
  if (x.dim() != y.dim()) {
    throw ShapeError("Lorentz points of dimension " + std::to_string(x.dim()) + " and " +
                     std::to_string(y.dim()));
  }
  if (x.curvature != y.curvature) throw ValidationError("Lorentz points on different curvatures");
}

}  // namespace

void GeometryConfig::validate() const {
  if (!(curvature > 0.0) || !std::isfinite(curvature)) throw ValidationError("curvature must be positive");
  if (!(aperture_k > 0.0) || !std::isfinite(aperture_k)) throw ValidationError("aperture K must be positive");
  if (!(acosh_eps > 0.0)) throw ValidationError("acosh epsilon must be positive");
}

LorentzPoint LorentzPoint::origin(std::size_t dim, double curvature) {
  return {std::vector<double>(dim, 0.0), 1.0 / std::sqrt(curvature), curvature};
}

LorentzPoint LorentzPoint::from_space(std::vector<double> space, double curvature) {
  const double t = std::sqrt(1.0 / curvature + dot(space, space));
  return {std::move(space), t, curvature};
}

double LorentzPoint::space_norm() const { return std::sqrt(dot(space, space)); }

LorentzBatch LorentzBatch::from_space(ad::Tensor space, double curvature) {
  LorentzBatch batch{std::move(space), {}, curvature};
  const std::size_t n = batch.space.rows(), d = batch.space.cols();
  batch.time.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += batch.space.at(i, j) * batch.space.at(i, j);
    batch.time[i] = std::sqrt(1.0 / curvature + sq);
  }
  return batch;
}

LorentzPoint LorentzBatch::row(std::size_t i) const {
  const std::size_t d = space.cols();
  std::vector<double> s(space.values().begin() + static_cast<std::ptrdiff_t>(i * d),
                        space.values().begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
  return {std::move(s), time.at(i), curvature};
}

double lorentz_inner(const LorentzPoint& x, const LorentzPoint& y) {
  check_compatible(x, y);
  return dot(x.space, y.space) - x.time * y.time;
}

double lorentz_norm(std::span<const double> space, double time) {
  return std::sqrt(std::fabs(dot(space, space) - time * time));
}

double lorentz_norm(const LorentzPoint& v) { return lorentz_norm(v.space, v.time); }

double manifold_residual(const LorentzPoint& x) {
  return std::fabs(x.curvature * lorentz_inner(x, x) + 1.0);
}

LorentzPoint exp_map_origin(std::span<const double> tangent, double curvature) {
  if (!(curvature > 0.0)) throw ValidationError("curvature must be positive");
  for (double v : tangent) {
    if (!std::isfinite(v)) throw NumericalError("exp_map_origin: non-finite tangent vector");
  }
  const double r = std::sqrt(dot(tangent, tangent));
  const double scaled = std::sqrt(curvature) * r;
  const double factor = scaled > 0.0 ? std::sinh(scaled) / scaled : 1.0;
  std::vector<double> space(tangent.begin(), tangent.end());
  for (double& v : space) v *= factor;
  return LorentzPoint::from_space(std::move(space), curvature);
}

// Chord form of acosh(-c<x, y>): -c<x, y> - 1 = c/2 |x - y|_L^2, and the time
// difference is taken as (|xs|^2 - |ys|^2) / (xt + yt). Exact zero at x == y,
// where the inner-product form is off by about 1e-8.
double lorentz_distance(const LorentzPoint& x, const LorentzPoint& y) {
  check_compatible(x, y);
  const double c = x.curvature;
  double ds = 0.0, gap = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    const double diff = x.space[i] - y.space[i];
    ds += diff * diff;
    gap += diff * (x.space[i] + y.space[i]);
  }
  const double dt = gap / (x.time + y.time);
  const double chord = std::sqrt(std::max(ds - dt * dt, 0.0));
  return 2.0 * std::asinh(0.5 * std::sqrt(c) * chord) / std::sqrt(c);
}

double distance_to_origin(const LorentzPoint& x) {
  const double rc = std::sqrt(x.curvature);
  return std::asinh(rc * x.space_norm()) / rc;
}

double exterior_angle(const LorentzPoint& x, const LorentzPoint& t) {
  const double c = x.curvature;
  const double t_norm = t.space_norm();
  if (t_norm == 0.0) throw DomainError("exterior_angle: cone apex at the origin");
  const double c_inner = c * lorentz_inner(x, t);
  const double q = c_inner * c_inner - 1.0;
  if (!(q > 0.0)) throw DomainError("exterior_angle: points coincide");
  // atan2 form of acos(numer / (|ts| sqrt(q))): the matching sine is
  // sqrt(c) |xs x ts| / (|ts| sqrt(q)), and |a x b| = |a||b| |a^ - b^| |a^ + b^| / 2
  // stays accurate for nearly parallel a, b.
  const double numer = x.time + t.time * c_inner;
  const double x_norm = x.space_norm();
  double cross = 0.0;
  if (x_norm > 0.0) {
    double minus = 0.0, plus = 0.0;
    for (std::size_t i = 0; i < x.dim(); ++i) {
      const double a = x.space[i] / x_norm, b = t.space[i] / t_norm;
      minus += (a - b) * (a - b);
      plus += (a + b) * (a + b);
    }
    cross = 0.5 * x_norm * t_norm * std::sqrt(minus) * std::sqrt(plus);
  }
  return std::atan2(std::sqrt(c) * cross, numer);
}

double half_aperture(const LorentzPoint& t, const GeometryConfig& config) {
  const double t_norm = t.space_norm();
  if (t_norm == 0.0) throw DomainError("half_aperture: cone apex at the origin");
  const double arg = 2.0 * config.aperture_k / (std::sqrt(t.curvature) * t_norm);
  return std::asin(std::min(1.0, arg));
}

// ---------------------------------------------------------------------------

ad::Var time_component(const ad::Var& space, double curvature) {
  return ad::sqrt(ad::sum(ad::square(space), 1, true) + 1.0 / curvature);
}

ad::Var exp_map_origin(const ad::Var& tangent, double curvature) {
  const double rc = std::sqrt(curvature);
  // Floor keeps sinh(r)/r well defined at r = 0, where the ratio is 1.
  const ad::Var r = ad::clamp(ad::norm(tangent, 1, true) * rc, 1e-15, 1e300);
  return tangent * (ad::sinh(r) / r);
}

ad::Var pairwise_inner(const ad::Var& xs, const ad::Var& ys, double curvature) {
  const ad::Var xt = time_component(xs, curvature);
  const ad::Var yt = time_component(ys, curvature);
  return ad::matmul(xs, ad::transpose(ys)) - ad::matmul(xt, ad::transpose(yt));
}

ad::Var pairwise_distance(const ad::Var& xs, const ad::Var& ys, double curvature) {
  const ad::Var arg = pairwise_inner(xs, ys, curvature) * -curvature;
  return ad::acosh(arg, ad::DomainGuard::kClamp) / std::sqrt(curvature);
}

namespace {

ad::Var paired_inner(const ad::Var& xs, const ad::Var& ys, double curvature) {
  const ad::Var xt = time_component(xs, curvature);
  const ad::Var yt = time_component(ys, curvature);
  return ad::sum(xs * ys, 1) - ad::reshape(xt * yt, {xs.shape()[0]});
}

}  // namespace

ad::Var paired_distance(const ad::Var& xs, const ad::Var& ys, double curvature) {
  const ad::Var arg = paired_inner(xs, ys, curvature) * -curvature;
  return ad::acosh(arg, ad::DomainGuard::kClamp) / std::sqrt(curvature);
}

ad::Var exterior_angle(const ad::Var& xs, const ad::Var& ts, const GeometryConfig& config) {
  const double c = config.curvature;
  const std::size_t n = xs.shape()[0];
  const ad::Var xt = ad::reshape(time_component(xs, c), {n});
  const ad::Var tt = ad::reshape(time_component(ts, c), {n});
  const ad::Var c_inner = paired_inner(xs, ts, c) * c;
  const ad::Var numer = xt + tt * c_inner;
  const ad::Var sine = ad::sqrt(ad::clamp(ad::square(c_inner) - 1.0, config.acosh_eps, 1e300));
  const ad::Var denom = ad::norm(ts, 1) * sine;
  return ad::acos(numer / denom, ad::DomainGuard::kClamp);
}

ad::Var half_aperture(const ad::Var& ts, const GeometryConfig& config) {
  const ad::Var arg = (2.0 * config.aperture_k / std::sqrt(config.curvature)) / ad::norm(ts, 1);
  return ad::asin(arg, ad::DomainGuard::kClamp);
}

ad::Var distance_to_origin(const ad::Var& xs, double curvature) {
  const double rc = std::sqrt(curvature);
  const ad::Var t = ad::reshape(time_component(xs, curvature), {xs.shape()[0]});
  return ad::acosh(t * rc, ad::DomainGuard::kClamp) / rc;
}

ad::Var lorentz_norm(const ad::Var& xs, double curvature) {
  const ad::Var t = ad::reshape(time_component(xs, curvature), {xs.shape()[0]});
  return ad::sqrt(ad::abs(ad::sum(ad::square(xs), 1) - ad::square(t)));
}

}  // namespace hac::geometry
