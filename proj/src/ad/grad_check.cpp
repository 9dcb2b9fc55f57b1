#include "hac/ad/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "hac/errors.hpp"

namespace hac::ad {

double evaluate(const MultiFunction& f, const std::vector<Tensor>& points) {
  Graph graph;
  std::vector<Var> inputs;
  inputs.reserve(points.size());
  for (const Tensor& p : points) inputs.push_back(graph.constant(p));
  const Var out = f(graph, inputs);
  if (out.value().size() != 1) throw ShapeError("grad_check function must return a scalar");
  return out.item();
}

GradCheckResult grad_check(const MultiFunction& f, const std::vector<Tensor>& points, double step) {
  if (!(step > 0.0)) throw ValidationError("grad_check step must be positive");

  Graph graph;
  std::vector<Var> inputs;
  inputs.reserve(points.size());
  for (const Tensor& p : points) inputs.push_back(graph.variable(p));
  const Var loss = f(graph, inputs);
  const GradientMap grads = graph.backward(loss, inputs);

  GradCheckResult result;
  std::vector<Tensor> probe = points;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Tensor& analytic = grads.at(inputs[i]);
    for (std::size_t k = 0; k < points[i].size(); ++k) {
      const double original = points[i][k];
      probe[i][k] = original + step;
      const double up = evaluate(f, probe);
      probe[i][k] = original - step;
      const double down = evaluate(f, probe);
      probe[i][k] = original;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericalError("grad_check: non-finite value at perturbed point");
      }
      const double numeric = (up - down) / (2.0 * step);
      const double err = std::fabs(analytic[k] - numeric) / std::max(1.0, std::fabs(analytic[k]));
      if (err > result.max_relative_error) {
        result = {err, i, k};
      }
    }
  }
  return result;
}

double grad_check(const ScalarFunction& f, const Tensor& point, double step) {
  return grad_check([&f](Graph& g, const std::vector<Var>& in) { return f(g, in[0]); },
                    std::vector<Tensor>{point}, step)
      .max_relative_error;
}

}  // namespace hac::ad
