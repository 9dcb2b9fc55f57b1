#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hac/ad/grad_check.hpp"
#include "hac/ad/graph.hpp"
#include "hac/errors.hpp"

using namespace hac;
using namespace hac::ad;

namespace {

Tensor uniform(std::mt19937_64& rng, const Shape& shape, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t = Tensor::zeros(shape);
  for (double& v : t.values()) v = u(rng);
  return t;
}

struct UnaryCase {
  std::string name;
  std::function<Var(const Var&)> op;
  double lo;
  double hi;
};

}  // namespace

TEST_CASE("forward values of basic primitives") {
  Graph g;
  CHECK(exp(g.constant(0.0)).item() == 1.0);
  CHECK(acosh(g.constant(1.0)).item() == 0.0);

  Var a = g.constant(Tensor::full({2, 3}, 1.0));
  Var b = g.constant(Tensor::full({3, 2}, 1.0));
  Var m = matmul(a, b);
  REQUIRE(m.shape() == Shape{2, 2});
  for (double v : m.value().values()) CHECK(v == 3.0);
}

TEST_CASE("gradient of sum of squares") {
  Graph g;
  Var x = g.variable(Tensor::vector({1, 2, 3}));
  Var loss = sum(x * x);
  auto grads = g.backward(loss, {x});
  CHECK(grads.at(x) == Tensor::vector({2, 4, 6}));
}

TEST_CASE("acosh derivative at 2 agrees with a central difference") {
  Graph g;
  Var x = g.variable(Tensor::scalar(2.0));
  auto grads = g.backward(acosh(x), {x});
  const double h = 1e-6;
  const double fd = (std::acosh(2.0 + h) - std::acosh(2.0 - h)) / (2 * h);
  CHECK(grads.at(x).item() == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(grads.at(x).item() == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("logsumexp of equal entries splits the gradient evenly") {
  for (double a : {-40.0, 0.0, 3.5, 700.0}) {
    Graph g;
    Var x = g.variable(Tensor::vector({a, a}));
    auto grads = g.backward(logsumexp(x, 0), {x});
    CHECK(grads.at(x)[0] == doctest::Approx(0.5));
    CHECK(grads.at(x)[1] == doctest::Approx(0.5));
  }
}

TEST_CASE("backward is linear in the loss") {
  std::mt19937_64 rng(11);
  Tensor p = uniform(rng, {3, 4}, -1, 1);
  auto f1 = [](const Var& x) { return sum(exp(x) * x); };
  auto f2 = [](const Var& x) { return mean(sinh(x)) + sum(logsumexp(x, 1)); };

  Graph g;
  Var x = g.variable(p);
  Var l1 = f1(x);
  Var l2 = f2(x);
  Var l12 = l1 + l2;
  const Tensor g1 = g.backward(l1, {x}).at(x);
  const Tensor g2 = g.backward(l2, {x}).at(x);
  const Tensor g12 = g.backward(l12, {x}).at(x);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(g12[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-14));
}

TEST_CASE("backward is repeatable and deterministic") {
  std::mt19937_64 rng(5);
  Tensor p = uniform(rng, {4, 3}, 1.1, 3);
  auto run = [&] {
    Graph g;
    Var x = g.variable(p);
    Var loss = sum(acosh(x) * norm(x, 1, true));
    Tensor a = g.backward(loss, {x}).at(x);
    Tensor b = g.backward(loss, {x}).at(x);
    CHECK(a == b);
    return a;
  };
  CHECK(run() == run());
}

TEST_CASE("every unary primitive matches central differences") {
  const std::vector<UnaryCase> cases = {
      {"neg", [](const Var& x) { return -x; }, -2, 2},
      {"abs", [](const Var& x) { return abs(x); }, 0.1, 2},
      {"exp", [](const Var& x) { return exp(x); }, -2, 2},
      {"log", [](const Var& x) { return log(x); }, 0.2, 3},
      {"sqrt", [](const Var& x) { return sqrt(x); }, 0.2, 3},
      {"sinh", [](const Var& x) { return sinh(x); }, -2, 2},
      {"cosh", [](const Var& x) { return cosh(x); }, -2, 2},
      {"acosh", [](const Var& x) { return acosh(x); }, 1.05, 4},
      {"asin", [](const Var& x) { return asin(x); }, -0.95, 0.95},
      {"acos", [](const Var& x) { return acos(x); }, -0.95, 0.95},
      {"clamp", [](const Var& x) { return clamp(x, -0.5, 0.5) * x; }, -1, 1},
      {"relu", [](const Var& x) { return relu(x) * x; }, -1, 1},
      {"transpose", [](const Var& x) { return transpose(x) * 2.0; }, -1, 1},
      {"reshape", [](const Var& x) { return reshape(x, {12}) * reshape(x, {12}); }, -1, 1},
      {"sum axis", [](const Var& x) { return exp(sum(x, 0)); }, -1, 1},
      {"mean axis", [](const Var& x) { return exp(mean(x, 1, true)); }, -1, 1},
      {"logsumexp", [](const Var& x) { return logsumexp(x, 1) * 3.0; }, -2, 2},
      {"norm", [](const Var& x) { return norm(x, 1); }, 0.1, 1},
      {"broadcast", [](const Var& x) { return broadcast_to(sum(x, 0, true), {5, 4}) * 0.5; }, -1, 1},
      {"take", [](const Var& x) { return take(x, {0, 5, 5, 11}, {2, 2}); }, -1, 1},
  };
  std::mt19937_64 rng(2024);
  for (const auto& c : cases) {
    CAPTURE(c.name);
    double worst = 0.0;
    for (int point = 0; point < 100; ++point) {
      Tensor p = uniform(rng, {3, 4}, c.lo, c.hi);
      ScalarFunction f = [&](Graph&, const Var& x) { return sum(square(c.op(x))); };
      worst = std::max(worst, grad_check(f, p, 1e-6));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("every binary primitive matches central differences") {
  const std::vector<std::pair<std::string, std::function<Var(const Var&, const Var&)>>> cases = {
      {"add", [](const Var& a, const Var& b) { return a + b; }},
      {"sub", [](const Var& a, const Var& b) { return a - b; }},
      {"mul", [](const Var& a, const Var& b) { return a * b; }},
      {"div", [](const Var& a, const Var& b) { return a / b; }},
      {"matmul", [](const Var& a, const Var& b) { return matmul(a, transpose(b)); }},
      {"broadcast add", [](const Var& a, const Var& b) { return a * rows(b, {1}); }},
  };
  std::mt19937_64 rng(99);
  for (const auto& [name, op] : cases) {
    CAPTURE(name);
    double worst = 0.0;
    for (int point = 0; point < 100; ++point) {
      std::vector<Tensor> pts = {uniform(rng, {3, 4}, -1, 1), uniform(rng, {3, 4}, 0.5, 2)};
      MultiFunction f = [&](Graph&, const std::vector<Var>& in) { return sum(square(op(in[0], in[1]))); };
      worst = std::max(worst, grad_check(f, pts, 1e-6).max_relative_error);
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("grad_check on a polynomial is essentially exact") {
  std::mt19937_64 rng(1);
  Tensor p = uniform(rng, {6}, -3, 3);
  ScalarFunction f = [](Graph&, const Var& x) { return sum(x * x); };
  CHECK(grad_check(f, p, 1e-6) < 1e-8);
}

TEST_CASE("clamped domain guards give finite values and flat gradients") {
  Graph g;
  Var x = g.variable(Tensor::vector({0.5, 1.5, -2.0}));
  Var a = acosh(x, DomainGuard::kClamp);
  Var s = asin(x, DomainGuard::kClamp);
  Var c = acos(x, DomainGuard::kClamp);
  CHECK(a.value()[0] == 0.0);
  CHECK(s.value()[1] == doctest::Approx(M_PI / 2));
  CHECK(c.value()[2] == doctest::Approx(M_PI));
  auto ga = g.backward(sum(a), {x}).at(x);
  CHECK(ga[0] == 0.0);
  CHECK(ga[1] == doctest::Approx(1.0 / std::sqrt(1.5 * 1.5 - 1.0)));
  auto gs = g.backward(sum(s), {x}).at(x);
  CHECK(gs[1] == 0.0);
  CHECK(gs[2] == 0.0);
}

TEST_CASE("primitive errors") {
  Graph g;
  SUBCASE("shape mismatch") {
    Var a = g.constant(Tensor::zeros({2, 3}));
    Var b = g.constant(Tensor::zeros({4, 3}));
    CHECK_THROWS_AS(a + b, ShapeError);
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
  }
  SUBCASE("strict domain") {
    CHECK_THROWS_AS(acosh(g.constant(0.5)), DomainError);
    CHECK_THROWS_AS(asin(g.constant(1.5)), DomainError);
    CHECK_THROWS_AS(log(g.constant(-1.0)), DomainError);
  }
  SUBCASE("non-finite result") { CHECK_THROWS_AS(exp(g.constant(1000.0)), NumericalError); }
  SUBCASE("non-scalar loss") {
    Var x = g.variable(Tensor::vector({1, 2}));
    CHECK_THROWS_AS(g.backward(x * x, {x}), ShapeError);
  }
  SUBCASE("node from another graph") {
    Graph other;
    Var y = other.variable(Tensor::scalar(1.0));
    Var x = g.variable(Tensor::scalar(2.0));
    CHECK_THROWS_AS(g.backward(x * x, {y}), ValidationError);
    CHECK_THROWS_AS(x + y, ValidationError);
  }
}

TEST_CASE("custom_unary uses the supplied derivative") {
  Graph g;
  Var x = g.variable(Tensor::scalar(0.3));
  Var y = custom_unary(x, [](double v) { return std::sin(v); }, [](double v) { return 2 * std::cos(v); });
  CHECK(g.backward(y, {x}).at(x).item() == doctest::Approx(2 * std::cos(0.3)));
  ScalarFunction f = [](Graph&, const Var& v) {
    return sum(custom_unary(v, [](double t) { return std::sin(t); }, [](double t) { return 2 * std::cos(t); }));
  };
  CHECK(grad_check(f, Tensor::vector({0.3}), 1e-6) > 1e-2);
}
