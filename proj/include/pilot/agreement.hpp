#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include "pilot/errors.hpp"
#include "pilot/vector_ops.hpp"

namespace pilot {

/// Gradient-direction agreement signal.
///
/// Tracks the stabilized cosine similarity between consecutive flattened
/// gradients,
///
///   r_t = g_t . g_{t-1} / (|g_t| |g_{t-1}| + eps),      r_1 = 0,
///
/// and its exponential moving average rho_t = gamma * rho_{t-1} + (1-gamma) r_t
/// with rho_0 = 0. rho is a single global scalar over the fully flattened
/// gradient. |r_t| < 1 for nonzero gradients and rho stays in [-1, 1] by
/// induction on the EMA.
class AgreementSignal {
 public:
  AgreementSignal(double gamma, double epsilon) : gamma_(gamma), eps_(epsilon) {
    if (!(gamma >= 0.0 && gamma < 1.0)) {
      throw ContractViolation("AgreementSignal: gamma must be in [0,1), got " +
                              std::to_string(gamma));
    }
    if (!(epsilon > 0.0)) {
      throw ContractViolation("AgreementSignal: epsilon must be > 0");
    }
  }

  /// Folds one gradient into the signal and returns the updated rho.
  double observe(const DenseVector& grad) {
    if (grad.empty()) {
      throw ContractViolation("AgreementSignal::observe: empty gradient");
    }
    require_finite(grad, "AgreementSignal::observe");
    if (prev_ && prev_->size() != grad.size()) {
      throw ContractViolation("AgreementSignal::observe: gradient length changed from " +
                              std::to_string(prev_->size()) + " to " +
                              std::to_string(grad.size()));
    }
    const double r = prev_ ? agreement(grad, *prev_) : 0.0;
    rho_ = gamma_ * rho_ + (1.0 - gamma_) * r;
    prev_ = grad;
    return rho_;
  }

  void reset() {
    rho_ = 0.0;
    prev_.reset();
  }

  double rho() const { return rho_; }
  bool has_previous() const { return prev_.has_value(); }
  double gamma() const { return gamma_; }
  double epsilon() const { return eps_; }

 private:
  // Algebraically equal to dot(g,p) / (|g||p| + eps) but immune to overflow:
  // both vectors are normalized before the dot product and the +eps correction
  // is applied as 1 / (1 + eps/(|g||p|)).
  double agreement(const DenseVector& g, const DenseVector& p) const {
    const double ng = stable_l2_norm(g);
    const double np = stable_l2_norm(p);
    if (ng == 0.0 || np == 0.0) return 0.0;  // numerator 0, denominator eps
    double cosine = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) cosine += (g[i] / ng) * (p[i] / np);
    // Rounding can push the cosine of unit vectors a few ulps past 1.
    cosine = std::clamp(cosine, -1.0, 1.0);
    const double correction = 1.0 + (eps_ / ng) / np;
    return cosine / correction;
  }

  double gamma_;
  double eps_;
  double rho_ = 0.0;
  std::optional<DenseVector> prev_;
};

}  // namespace pilot
