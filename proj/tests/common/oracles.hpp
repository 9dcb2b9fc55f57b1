#pragma once
// Naive reference implementations for tests: plain loops over std::vector,
// no autodiff, no shared code with the library.
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double cosine(const Vec& a, const Vec& b) { return dot(a, b) / (norm(a) * norm(b)); }

inline double time_of(const Vec& space, double c) { return std::sqrt(1.0 / c + dot(space, space)); }

inline double inner(const Vec& xs, const Vec& ys, double c) { return dot(xs, ys) - time_of(xs, c) * time_of(ys, c); }

inline double distance(const Vec& xs, const Vec& ys, double c) {
  return std::acosh(std::max(1.0, -c * inner(xs, ys, c))) / std::sqrt(c);
}

inline double distance_to_origin(const Vec& xs, double c) {
  return std::acosh(std::max(1.0, std::sqrt(c) * time_of(xs, c))) / std::sqrt(c);
}

inline Vec exp_map(const Vec& v, double c) {
  const double r = norm(v);
  if (r == 0.0) return Vec(v.size(), 0.0);
  const double f = std::sinh(std::sqrt(c) * r) / (std::sqrt(c) * r);
  Vec out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = f * v[k];
  return out;
}

inline double exterior_angle(const Vec& x, const Vec& t, double c) {
  const double ci = c * inner(x, t, c);
  double arg = (time_of(x, c) + time_of(t, c) * ci) / (norm(t) * std::sqrt(ci * ci - 1.0));
  arg = std::clamp(arg, -1.0, 1.0);
  return std::acos(arg);
}

inline double half_aperture(const Vec& t, double c, double k) {
  return std::asin(std::min(1.0, 2.0 * k / (std::sqrt(c) * norm(t))));
}

struct Batch {
  Mat image;  // raw vectors (cosine) or space components (Lorentz)
  Mat text;
  std::vector<bool> forget;
  bool hyperbolic = false;
  double c = 1.0;
  double k = 0.1;

  std::size_t size() const { return image.size(); }

  double sim(const Vec& a, const Vec& b) const { return hyperbolic ? -distance(a, b, c) : cosine(a, b); }
  double s(std::size_t i, std::size_t j) const { return sim(image[i], text[j]); }

  std::vector<std::size_t> ids(bool want_forget) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i) {
      if (forget[i] == want_forget) out.push_back(i);
    }
    return out;
  }
};

inline double log_sum_exp(const Vec& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Cross-entropy of positive i against all candidates, both directions.
inline double row_ce(const Batch& b, std::size_t i, double tau) {
  Vec row, col;
  for (std::size_t j = 0; j < b.size(); ++j) {
    row.push_back(b.s(i, j) / tau);
    col.push_back(b.s(j, i) / tau);
  }
  return (log_sum_exp(row) - b.s(i, i) / tau) + (log_sum_exp(col) - b.s(i, i) / tau);
}

inline double clip(const Batch& b, double tau) {
  double total = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) total += row_ce(b, i, tau);
  return total / (2.0 * static_cast<double>(b.size()));
}

inline double retain(const Batch& b, double tau) {
  const auto r = b.ids(false);
  double total = 0.0;
  for (std::size_t i : r) total += row_ce(b, i, tau);
  return total / (2.0 * static_cast<double>(r.size()));
}

inline double info_nce(const Batch& b, const Mat& z, const std::vector<std::size_t>& positive, double tau) {
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    Vec others;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (j != i) others.push_back(b.sim(z[i], z[j]) / tau);
    }
    total += log_sum_exp(others) - b.sim(z[i], z[positive[i]]) / tau;
  }
  return total / static_cast<double>(z.size());
}

inline double negative(const Batch& b, double tau) {
  const auto f = b.ids(true);
  const double nf = static_cast<double>(f.size());
  double total = 0.0;
  for (std::size_t i : f) {
    for (std::size_t j : f) {
      if (i != j) total += (b.s(i, j) + b.s(j, i)) / tau;
    }
  }
  return -total / (2.0 * nf * nf);
}

inline double positive(const Batch& b, double tau) {
  const auto f = b.ids(true);
  double total = 0.0;
  for (std::size_t i : f) total += b.s(i, i) / tau;
  return total / static_cast<double>(f.size());
}

inline double performance(const Batch& b, double tau) {
  const auto f = b.ids(true);
  const double m = static_cast<double>(b.size());
  double total = 0.0;
  for (std::size_t i : f) {
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      row += std::exp(b.s(i, j) / tau);
      col += std::exp(b.s(j, i) / tau);
    }
    total += std::log(row / m) + std::log(col / m);
  }
  return total / (2.0 * static_cast<double>(f.size()));
}

inline double retain_entailment(const Batch& b) {
  const auto r = b.ids(false);
  double total = 0.0;
  for (std::size_t i : r) {
    total += std::max(0.0, exterior_angle(b.image[i], b.text[i], b.c) - half_aperture(b.text[i], b.c, b.k));
  }
  return total / static_cast<double>(r.size());
}

inline double forget_entailment(const Batch& b) {
  const auto f = b.ids(true);
  double total = 0.0;
  for (std::size_t i : f) {
    total += std::max(0.0, half_aperture(b.text[i], b.c, b.k) - exterior_angle(b.image[i], b.text[i], b.c));
  }
  return total / static_cast<double>(f.size());
}

inline double all_pairs_entailment(const Batch& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    total += std::max(0.0, exterior_angle(b.image[i], b.text[i], b.c) - half_aperture(b.text[i], b.c, b.k));
  }
  return total / static_cast<double>(b.size());
}

inline double norm_reg(const Batch& b) {
  const auto f = b.ids(true);
  double total = 0.0;
  for (std::size_t i : f) total += distance_to_origin(b.image[i], b.c) + distance_to_origin(b.text[i], b.c);
  return total / static_cast<double>(f.size());
}

struct Weights {
  double alpha = 0, beta = 0, gamma = 0, epsilon = 1, omega_r = 0, omega_f = 0, lambda = 0, tau = 0.01;
};

inline double forget_total(const Batch& b, const Weights& w) {
  return w.alpha * negative(b, w.tau) + w.beta * positive(b, w.tau) + w.gamma * performance(b, w.tau);
}

inline double ac(const Batch& b, const Weights& w) { return retain(b, w.tau) + w.epsilon * forget_total(b, w); }

inline double hac(const Batch& b, const Weights& w) {
  return ac(b, w) + w.omega_r * retain_entailment(b) + w.omega_f * forget_entailment(b);
}

inline double hac_reg(const Batch& b, const Weights& w) { return hac(b, w) + w.lambda * norm_reg(b); }

/// Seeded random batch: `half` retain pairs then `half` forget pairs, entries
/// N(0, scale^2). Lorentz batches hold lifted space components.
inline Batch random_batch(std::mt19937_64& rng, std::size_t half, std::size_t dim, bool hyperbolic, double scale = 0.6) {
  std::normal_distribution<double> normal(0.0, scale);
  Batch b;
  b.hyperbolic = hyperbolic;
  for (std::size_t i = 0; i < 2 * half; ++i) {
    Vec x(dim), t(dim);
    for (double& v : x) v = normal(rng);
    for (double& v : t) v = normal(rng);
    if (hyperbolic) {
      x = exp_map(x, b.c);
      t = exp_map(t, b.c);
    }
    b.image.push_back(x);
    b.text.push_back(t);
    b.forget.push_back(i >= half);
  }
  return b;
}

}  // namespace oracle
