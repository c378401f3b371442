#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "pilot/errors.hpp"
#include "pilot/pilot_optimizer.hpp"
#include "pilot/vector_ops.hpp"

namespace pilot {

enum class BaselineKind { sgd, signsgd, adam, adamw, lion, adabelief };

inline const char* to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::sgd: return "sgd";
    case BaselineKind::signsgd: return "signsgd";
    case BaselineKind::adam: return "adam";
    case BaselineKind::adamw: return "adamw";
    case BaselineKind::lion: return "lion";
    case BaselineKind::adabelief: return "adabelief";
  }
  return "?";
}

struct BaselineHyper {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double momentum = 0.0;  // plain SGD only

  void validate() const {
    auto in_unit = [](double x) { return x >= 0.0 && x < 1.0; };
    if (!(eta > 0.0)) throw ContractViolation("BaselineHyper: eta must be > 0");
    if (!in_unit(beta1) || !in_unit(beta2)) {
      throw ContractViolation("BaselineHyper: betas must be in [0,1)");
    }
    if (!(eps > 0.0)) throw ContractViolation("BaselineHyper: eps must be > 0");
    if (!(weight_decay >= 0.0)) {
      throw ContractViolation("BaselineHyper: weight_decay must be >= 0");
    }
    if (!in_unit(momentum)) {
      throw ContractViolation("BaselineHyper: momentum must be in [0,1)");
    }
  }
};

/// Reference first-order optimizers behind one step interface. Buffers are
/// allocated only where the method needs them (signSGD and momentum-free SGD
/// carry none). Weight decay conventions: adam / sgd / signsgd couple L2 into
/// the gradient, adamw / lion decay decoupled from the adaptive update.
class BaselineOptimizer {
 public:
  BaselineOptimizer(BaselineKind kind, std::size_t dim, const BaselineHyper& hyper)
      : kind_(kind), hyper_(hyper), dim_(dim) {
    if (dim == 0) throw ContractViolation("BaselineOptimizer: dim must be > 0");
    hyper_.validate();
    switch (kind_) {
      case BaselineKind::sgd:
        if (hyper_.momentum > 0.0) m_.assign(dim, 0.0);
        break;
      case BaselineKind::signsgd:
        break;
      case BaselineKind::lion:
        m_.assign(dim, 0.0);
        break;
      case BaselineKind::adam:
      case BaselineKind::adamw:
      case BaselineKind::adabelief:
        m_.assign(dim, 0.0);
        v_.assign(dim, 0.0);
        break;
    }
  }

  void step(DenseVector& theta, const DenseVector& grad, double lr_scale = 1.0) {
    if (theta.size() != dim_ || grad.size() != dim_) {
      throw ContractViolation("BaselineOptimizer: parameter/gradient length mismatch");
    }
    require_finite(grad, "BaselineOptimizer::step gradient");
    const double eta = hyper_.eta * lr_scale;
    const std::size_t t = step_ + 1;
    switch (kind_) {
      case BaselineKind::sgd: sgd_step(theta, grad, eta); break;
      case BaselineKind::signsgd: signsgd_step(theta, grad, eta); break;
      case BaselineKind::adam: adam_step(theta, grad, eta, t, false); break;
      case BaselineKind::adamw: adam_step(theta, grad, eta, t, true); break;
      case BaselineKind::lion: lion_step(theta, grad, eta); break;
      case BaselineKind::adabelief: adabelief_step(theta, grad, eta, t); break;
    }
    step_ = t;
  }

  BaselineKind kind() const { return kind_; }
  const BaselineHyper& hyper() const { return hyper_; }
  std::size_t step_count() const { return step_; }
  bool has_first_moment() const { return !m_.empty(); }
  bool has_second_moment() const { return !v_.empty(); }

 private:
  void sgd_step(DenseVector& theta, const DenseVector& grad, double eta) {
    const double lambda = hyper_.weight_decay;
    for (std::size_t i = 0; i < dim_; ++i) {
      double g = grad[i] + lambda * theta[i];
      if (hyper_.momentum > 0.0) {
        m_[i] = hyper_.momentum * m_[i] + g;
        g = m_[i];
      }
      theta[i] -= eta * g;
    }
  }

  void signsgd_step(DenseVector& theta, const DenseVector& grad, double eta) {
    const double lambda = hyper_.weight_decay;
    for (std::size_t i = 0; i < dim_; ++i) {
      theta[i] -= eta * sign(grad[i] + lambda * theta[i]);
    }
  }

  void adam_step(DenseVector& theta, const DenseVector& grad, double eta,
                 std::size_t t, bool decoupled) {
    const double bc1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(t));
    const double lambda = hyper_.weight_decay;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double g = decoupled ? grad[i] : grad[i] + lambda * theta[i];
      m_[i] = hyper_.beta1 * m_[i] + (1.0 - hyper_.beta1) * g;
      v_[i] = hyper_.beta2 * v_[i] + (1.0 - hyper_.beta2) * g * g;
      const double m_hat = m_[i] / bc1;
      const double v_hat = v_[i] / bc2;
      const double decay = decoupled ? eta * lambda * theta[i] : 0.0;
      theta[i] -= eta * m_hat / (std::sqrt(v_hat) + hyper_.eps) + decay;
    }
  }

  // Update direction sign(b1 m + (1-b1) g), then m <- b2 m + (1-b2) g.
  void lion_step(DenseVector& theta, const DenseVector& grad, double eta) {
    const double lambda = hyper_.weight_decay;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double c = hyper_.beta1 * m_[i] + (1.0 - hyper_.beta1) * grad[i];
      theta[i] -= eta * (sign(c) + lambda * theta[i]);
      m_[i] = hyper_.beta2 * m_[i] + (1.0 - hyper_.beta2) * grad[i];
    }
  }

  // Second moment tracks the squared prediction error (g - m)^2 of the
  // incoming gradient against the running momentum, plus a per-step eps.
  void adabelief_step(DenseVector& theta, const DenseVector& grad, double eta,
                      std::size_t t) {
    const double bc1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(t));
    const double lambda = hyper_.weight_decay;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double g = grad[i] + lambda * theta[i];
      const double err = g - m_[i];
      m_[i] = hyper_.beta1 * m_[i] + (1.0 - hyper_.beta1) * g;
      v_[i] = hyper_.beta2 * v_[i] + (1.0 - hyper_.beta2) * err * err + hyper_.eps;
      const double m_hat = m_[i] / bc1;
      const double s_hat = v_[i] / bc2;
      theta[i] -= eta * m_hat / (std::sqrt(s_hat) + hyper_.eps);
    }
  }

  BaselineKind kind_;
  BaselineHyper hyper_;
  std::size_t dim_;
  std::size_t step_ = 0;
  DenseVector m_;
  DenseVector v_;
};

/// Appendix-style Lion scaling from a shared base learning rate and decay:
/// eta/3 and 3*lambda. Applied by the harness so configs carry one base pair.
inline BaselineHyper lion_scaled(BaselineHyper base) {
  base.eta = base.eta / 3.0;
  base.weight_decay = 3.0 * base.weight_decay;
  base.beta1 = 0.9;
  base.beta2 = 0.99;
  return base;
}

}  // namespace pilot
