#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "pilot/agreement.hpp"
#include "pilot/errors.hpp"
#include "pilot/policy.hpp"
#include "pilot/vector_ops.hpp"

namespace pilot {

/// Floor applied to the bias-corrected second moment before exponentiation.
/// Removes the 0^0 ambiguity at p_v -> 0 and the log singularity in the
/// meta-gradient; far below any attainable v_hat in practice.
inline constexpr double kVhatFloor = 1e-30;

struct PilotHyper {
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double gamma = 0.95;
  double eps = 1e-8;
  double eps_n = 1e-8;
  double weight_decay = 0.0;
  bool coupled_weight_decay = false;  // default decoupled (AdamW-style)
  double eta_phi = 0.005;
  double policy_clip = 10.0;
  std::optional<double> fixed_pm;
  std::optional<double> fixed_pv;
  std::optional<double> fixed_ps;

  void validate() const {
    auto in_unit = [](double x) { return x >= 0.0 && x < 1.0; };
    if (!(eta > 0.0)) throw ContractViolation("PilotHyper: eta must be > 0");
    if (!in_unit(beta1)) throw ContractViolation("PilotHyper: beta1 must be in [0,1)");
    if (!in_unit(beta2)) throw ContractViolation("PilotHyper: beta2 must be in [0,1)");
    if (!in_unit(gamma)) throw ContractViolation("PilotHyper: gamma must be in [0,1)");
    if (!(eps > 0.0)) throw ContractViolation("PilotHyper: eps must be > 0");
    if (!(eps_n >= 0.0)) throw ContractViolation("PilotHyper: eps_n must be >= 0");
    if (!(weight_decay >= 0.0)) {
      throw ContractViolation("PilotHyper: weight_decay must be >= 0");
    }
    if (!(eta_phi >= 0.0)) throw ContractViolation("PilotHyper: eta_phi must be >= 0");
    if (!(policy_clip > 0.0)) {
      throw ContractViolation("PilotHyper: policy_clip must be > 0 (inf disables)");
    }
    auto check_override = [](const std::optional<double>& o, double hi, const char* name) {
      if (o && !(*o >= 0.0 && *o <= hi)) {
        throw ContractViolation(std::string("PilotHyper: ") + name +
                                " override out of range");
      }
    };
    check_override(fixed_pm, 1.0, "fixed_pm");
    check_override(fixed_pv, 0.5, "fixed_pv");
    check_override(fixed_ps, 1.0, "fixed_ps");
  }
};

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Everything one step produced, kept around because the one-step
/// meta-gradient differentiates it against the *next* gradient.
struct UpdateIncrement {
  DenseVector delta;   // policy step only; decoupled weight decay excluded
  DenseVector n;       // p_m * m_hat + (1 - p_m) * g
  DenseVector m_hat;   // bias-corrected first moment
  DenseVector v_hat;   // bias-corrected second moment, clamped to >= kVhatFloor
  PolicyOutputs outputs;  // after any fixed overrides
  double rho = 0.0;
  std::size_t step = 0;
  double eta_eff = 0.0;  // eta * lr_scale actually applied
  std::array<bool, 3> overridden{false, false, false};  // p_m, p_v, p_s
};

/// m <- b1 m + (1-b1) g, v <- b2 v + (1-b2) g*g, then bias correction
/// m_hat = m/(1-b1^t), v_hat = v/(1-b2^t). t is the 1-based step count.
inline void update_moments(DenseVector& m, DenseVector& v, const DenseVector& grad,
                           double beta1, double beta2, std::size_t t,
                           DenseVector& m_hat, DenseVector& v_hat) {
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  m_hat.resize(grad.size());
  v_hat.resize(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    m_hat[i] = m[i] / bc1;
    v_hat[i] = v[i] / bc2;
  }
}

/// n = p_m * m_hat + (1 - p_m) * g
inline DenseVector compose_direction(const DenseVector& m_hat, const DenseVector& grad,
                                     double p_m) {
  if (m_hat.size() != grad.size()) {
    throw ContractViolation("compose_direction: length mismatch");
  }
  DenseVector n(m_hat.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    n[i] = p_m * m_hat[i] + (1.0 - p_m) * grad[i];
  }
  return n;
}

/// Policy-controlled update, element-wise:
///   delta = -eta_eff * (|n| + eps_n)^(1-p_s) * sign(n) / (v_hat^p_v + eps)
/// with sign(0) = 0. v_hat must already carry the kVhatFloor clamp.
inline DenseVector compute_delta(const DenseVector& n, const DenseVector& v_hat,
                                 const PolicyOutputs& p, const PilotHyper& hyper,
                                 double lr_scale = 1.0) {
  if (n.size() != v_hat.size()) {
    throw ContractViolation("compute_delta: length mismatch");
  }
  const double eta_eff = hyper.eta * lr_scale;
  DenseVector delta(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double s = sign(n[i]);
    if (s == 0.0) {
      delta[i] = 0.0;
      continue;
    }
    const double magnitude = std::pow(std::abs(n[i]) + hyper.eps_n, 1.0 - p.p_s);
    const double denom = std::pow(v_hat[i], p.p_v) + hyper.eps;
    delta[i] = -eta_eff * magnitude * s / denom;
  }
  return delta;
}

/// PILOT: policy-controlled first-order optimizer.
///
/// Each step chains agreement -> policy -> moments -> direction -> update.
/// With overrides (p_m, p_v, p_s) = (1, 0.5, 0) and eps_n = 0 the update is
/// exactly the Adam direction; with (1, 0, 1) it is a pure sign update of
/// magnitude eta / (1 + eps).
class PilotOptimizer {
 public:
  PilotOptimizer(std::size_t dim, const PilotHyper& hyper, PolicyCoefficients phi)
      : hyper_(hyper),
        phi_(std::move(phi)),
        agreement_(hyper.gamma, hyper.eps),
        m_(dim, 0.0),
        v_(dim, 0.0),
        dim_(dim) {
    if (dim == 0) throw ContractViolation("PilotOptimizer: dim must be > 0");
    hyper_.validate();
    phi_.validate();
  }

  /// Applies one policy-controlled update to theta in place and returns the
  /// full increment. State is left untouched when the gradient is rejected.
  UpdateIncrement step(DenseVector& theta, const DenseVector& grad,
                       double lr_scale = 1.0) {
    check_lengths(theta, grad);
    require_finite(grad, "PilotOptimizer::step gradient");

    const std::size_t t = step_ + 1;
    UpdateIncrement inc;
    inc.step = t;
    inc.rho = agreement_.observe(grad);
    inc.outputs = evaluate_policy(phi_, inc.rho);
    inc.overridden = {hyper_.fixed_pm.has_value(), hyper_.fixed_pv.has_value(),
                      hyper_.fixed_ps.has_value()};
    if (hyper_.fixed_pm) inc.outputs.p_m = *hyper_.fixed_pm;
    if (hyper_.fixed_pv) inc.outputs.p_v = *hyper_.fixed_pv;
    if (hyper_.fixed_ps) inc.outputs.p_s = *hyper_.fixed_ps;

    update_moments(m_, v_, grad, hyper_.beta1, hyper_.beta2, t, inc.m_hat, inc.v_hat);
    for (double& vh : inc.v_hat) vh = std::max(vh, kVhatFloor);

    inc.n = compose_direction(inc.m_hat, grad, inc.outputs.p_m);
    inc.delta = compute_delta(inc.n, inc.v_hat, inc.outputs, hyper_, lr_scale);
    inc.eta_eff = hyper_.eta * lr_scale;

    const double decay =
        (!hyper_.coupled_weight_decay && hyper_.weight_decay > 0.0)
            ? inc.eta_eff * hyper_.weight_decay
            : 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      theta[i] = theta[i] + inc.delta[i] - decay * theta[i];
    }
    step_ = t;
    return inc;
  }

  /// Adds lambda * theta to the raw gradient. Used by the harness when the
  /// coupled weight-decay switch is on; must run before step().
  DenseVector coupled_decay_gradient(const DenseVector& theta,
                                     const DenseVector& grad) const {
    check_lengths(theta, grad);
    DenseVector out(grad);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += hyper_.weight_decay * theta[i];
    }
    return out;
  }

  void reset() {
    std::fill(m_.begin(), m_.end(), 0.0);
    std::fill(v_.begin(), v_.end(), 0.0);
    step_ = 0;
    agreement_.reset();
  }

  PolicyCoefficients& coefficients() { return phi_; }
  const PolicyCoefficients& coefficients() const { return phi_; }
  const PilotHyper& hyper() const { return hyper_; }
  const AgreementSignal& agreement() const { return agreement_; }
  std::size_t step_count() const { return step_; }
  std::size_t dim() const { return dim_; }

 private:
  void check_lengths(const DenseVector& theta, const DenseVector& grad) const {
    if (theta.size() != dim_ || grad.size() != dim_) {
      throw ContractViolation("PilotOptimizer: parameter/gradient length mismatch (dim " +
                              std::to_string(dim_) + ", theta " +
                              std::to_string(theta.size()) + ", grad " +
                              std::to_string(grad.size()) + ")");
    }
  }

  PilotHyper hyper_;
  PolicyCoefficients phi_;
  AgreementSignal agreement_;
  DenseVector m_;
  DenseVector v_;
  std::size_t dim_;
  std::size_t step_ = 0;
};

}  // namespace pilot
