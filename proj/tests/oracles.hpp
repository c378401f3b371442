#pragma once

// Test-only oracles. Everything here is written independently of the library
// implementation paths it checks: brute-force math, compensated summation,
// clean-room optimizer recurrences and finite differences.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pilot/rng.hpp"
#include "pilot/vector_ops.hpp"

namespace oracles {

/// Kahan compensated summation of a[i] * b[i].
inline double kahan_dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  double carry = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double term = a[i] * b[i] - carry;
    const double next = sum + term;
    carry = (next - sum) - term;
    sum = next;
  }
  return sum;
}

/// Naive power-sum polynomial evaluation: sum c_k x^k with explicit powers.
inline double naive_poly(std::span<const double> coeffs, double x) {
  double acc = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    acc += coeffs[k] * std::pow(x, static_cast<double>(k));
  }
  return acc;
}

/// Clean-room Adam: the textbook recurrence, written without reference to the
/// library's optimizer code. Plain L2 decay is folded into the gradient.
class ReferenceAdam {
 public:
  ReferenceAdam(std::size_t dim, double lr, double beta1, double beta2, double eps,
                double weight_decay = 0.0)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), wd_(weight_decay),
        m_(dim, 0.0), v_(dim, 0.0) {}

  void step(std::vector<double>& theta, const std::vector<double>& grad,
            double lr_scale = 1.0) {
    ++t_;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad[i] + wd_ * theta[i];
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * g;
      v_[i] = b2_ * v_[i] + (1.0 - b2_) * g * g;
      const double mh = m_[i] / (1.0 - std::pow(b1_, t_));
      const double vh = v_[i] / (1.0 - std::pow(b2_, t_));
      theta[i] -= lr_ * lr_scale * mh / (std::sqrt(vh) + eps_);
    }
  }

 private:
  double lr_, b1_, b2_, eps_, wd_;
  double t_ = 0.0;
  std::vector<double> m_, v_;
};

/// Clean-room AdaBelief with the same prediction-error convention the library
/// documents: error measured against the running momentum before it absorbs
/// the new gradient.
class ReferenceAdaBelief {
 public:
  ReferenceAdaBelief(std::size_t dim, double lr, double beta1, double beta2, double eps)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(dim, 0.0), s_(dim, 0.0) {}

  void step(std::vector<double>& theta, const std::vector<double>& grad) {
    ++t_;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double err = grad[i] - m_[i];
      m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
      s_[i] = b2_ * s_[i] + (1.0 - b2_) * err * err + eps_;
      const double mh = m_[i] / (1.0 - std::pow(b1_, t_));
      const double sh = s_[i] / (1.0 - std::pow(b2_, t_));
      theta[i] -= lr_ * mh / (std::sqrt(sh) + eps_);
    }
  }

 private:
  double lr_, b1_, b2_, eps_;
  double t_ = 0.0;
  std::vector<double> m_, s_;
};

/// Central finite difference of a scalar function at x along coordinate i.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, std::size_t i, double h) {
  x[i] += h;
  const double up = f(x);
  x[i] -= 2.0 * h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

/// Gradient-check pass rule: relative agreement with an absolute floor where
/// both values are tiny and the relative test is meaningless.
inline bool grad_close(double analytic, double numeric, double rel_tol,
                       double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  return diff <= std::max(abs_floor, rel_tol * (std::abs(analytic) + std::abs(numeric)));
}

inline std::vector<double> random_vector(pilot::Rng& rng, std::size_t dim, double lo,
                                         double hi) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// Nearest-class-mean classifier accuracy. For class-conditional unit
/// Gaussians this is the Bayes-optimal linear rule, so it is a fair
/// separability oracle for the synthetic datasets.
inline double nearest_mean_accuracy(const std::vector<double>& inputs,
                                    const std::vector<int>& labels, std::size_t dim,
                                    std::size_t classes) {
  const std::size_t count = labels.size();
  std::vector<double> means(classes * dim, 0.0);
  std::vector<std::size_t> tally(classes, 0);
  for (std::size_t e = 0; e < count; ++e) {
    const auto c = static_cast<std::size_t>(labels[e]);
    ++tally[c];
    for (std::size_t i = 0; i < dim; ++i) means[c * dim + i] += inputs[e * dim + i];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < dim; ++i) means[c * dim + i] /= static_cast<double>(tally[c]);
  }
  std::size_t correct = 0;
  for (std::size_t e = 0; e < count; ++e) {
    double best = 0.0;
    std::size_t best_c = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      double dist = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = inputs[e * dim + i] - means[c * dim + i];
        dist += d * d;
      }
      if (c == 0 || dist < best) {
        best = dist;
        best_c = c;
      }
    }
    if (static_cast<int>(best_c) == labels[e]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(count);
}

}  // namespace oracles
