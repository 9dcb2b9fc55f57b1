#pragma once

#include <functional>
#include <vector>

#include "hac/ad/graph.hpp"

namespace hac::ad {

/// Scalar-valued expression of several tensor inputs, rebuilt on a fresh graph
/// for every evaluation.
using MultiFunction = std::function<Var(Graph&, const std::vector<Var>&)>;
using ScalarFunction = std::function<Var(Graph&, const Var&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_coordinate = 0;
};

/// Compares reverse-mode gradients with central differences. The error per
/// coordinate is |analytic - numeric| / max(1, |analytic|).
GradCheckResult grad_check(const MultiFunction& f, const std::vector<Tensor>& points, double step);

double grad_check(const ScalarFunction& f, const Tensor& point, double step);

/// Forward evaluation only.
double evaluate(const MultiFunction& f, const std::vector<Tensor>& points);

}  // namespace hac::ad
