#pragma once

// Lorentz model of hyperbolic space with curvature -c. A point keeps its
// space components and its time component, which is determined by the
// hyperboloid constraint <x, x>_L = -1/c.

#include <cstddef>
#include <span>
#include <vector>

#include "hac/ad/graph.hpp"
#include "hac/ad/tensor.hpp"

namespace hac::geometry {

struct GeometryConfig {
  double curvature = 1.0;
  /// Constant K in the entailment-cone half-aperture.
  double aperture_k = 0.1;
  /// Floor for the squared-sine term in the exterior-angle denominator.
  double acosh_eps = 1e-8;

  void validate() const;
};

struct LorentzPoint {
  std::vector<double> space;
  double time = 1.0;
  double curvature = 1.0;

  static LorentzPoint origin(std::size_t dim, double curvature);
  /// Time component recovered from the hyperboloid constraint.
  static LorentzPoint from_space(std::vector<double> space, double curvature);

  std::size_t dim() const { return space.size(); }
  double space_norm() const;
};

struct LorentzBatch {
  ad::Tensor space;  // N x d
  std::vector<double> time;
  double curvature = 1.0;

  static LorentzBatch from_space(ad::Tensor space, double curvature);

  std::size_t size() const { return time.size(); }
  LorentzPoint row(std::size_t i) const;
};

double lorentz_inner(const LorentzPoint& x, const LorentzPoint& y);
/// sqrt(|<v, v>_L|) for an arbitrary vector split into space and time parts.
double lorentz_norm(std::span<const double> space, double time);
double lorentz_norm(const LorentzPoint& v);
/// |c <x, x>_L + 1|, zero for points on the hyperboloid.
double manifold_residual(const LorentzPoint& x);

LorentzPoint exp_map_origin(std::span<const double> tangent, double curvature);
double lorentz_distance(const LorentzPoint& x, const LorentzPoint& y);
double distance_to_origin(const LorentzPoint& x);

/// Angle at t between the ray origin->t and the geodesic t->x, in [0, pi].
double exterior_angle(const LorentzPoint& x, const LorentzPoint& t);
/// Half-aperture of the entailment cone rooted at t, in (0, pi/2].
double half_aperture(const LorentzPoint& t, const GeometryConfig& config);

// ---------------------------------------------------------------------------
// Differentiable batch kernels. Inputs are N x d matrices of space
// components; time components are derived from the constraint.

/// N x 1 column of time components.
ad::Var time_component(const ad::Var& space, double curvature);
/// Space components of exp_map_origin applied to each row of `tangent`.
ad::Var exp_map_origin(const ad::Var& tangent, double curvature);
/// N x M Lorentzian inner products.
ad::Var pairwise_inner(const ad::Var& xs, const ad::Var& ys, double curvature);
/// N x M geodesic distances.
ad::Var pairwise_distance(const ad::Var& xs, const ad::Var& ys, double curvature);
/// Row-aligned geodesic distances, length N.
ad::Var paired_distance(const ad::Var& xs, const ad::Var& ys, double curvature);
/// Row-aligned exterior angles ext(x_i, t_i), length N.
ad::Var exterior_angle(const ad::Var& xs, const ad::Var& ts, const GeometryConfig& config);
/// Half-apertures of the cones rooted at each row of `ts`, length N.
ad::Var half_aperture(const ad::Var& ts, const GeometryConfig& config);
/// Geodesic distance of each row to the origin, length N.
ad::Var distance_to_origin(const ad::Var& xs, double curvature);
/// Literal Lorentzian norm sqrt(|<x, x>_L|) of each row, length N.
ad::Var lorentz_norm(const ad::Var& xs, double curvature);

}  // namespace hac::geometry
