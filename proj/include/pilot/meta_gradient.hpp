#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>

#include "pilot/errors.hpp"
#include "pilot/pilot_optimizer.hpp"
#include "pilot/policy.hpp"
#include "pilot/vector_ops.hpp"

namespace pilot {

/// Frozen snapshot of step t, differentiated once the gradient at step t+1
/// arrives. Moments, v_hat and rho are treated as constants with respect to
/// the policy coefficients.
struct MetaContext {
  std::size_t step = 0;  // the step that produced this snapshot
  DenseVector m_hat;
  DenseVector grad;   // g_t
  DenseVector v_hat;  // already clamped to >= kVhatFloor
  DenseVector n;
  PolicyOutputs outputs;
  double rho = 0.0;
  double eta_eff = 0.0;
  std::array<bool, 3> overridden{false, false, false};

  static MetaContext from_step(const UpdateIncrement& inc, const DenseVector& grad) {
    MetaContext ctx;
    ctx.step = inc.step;
    ctx.m_hat = inc.m_hat;
    ctx.grad = grad;
    ctx.v_hat = inc.v_hat;
    ctx.n = inc.n;
    ctx.outputs = inc.outputs;
    ctx.rho = inc.rho;
    ctx.eta_eff = inc.eta_eff;
    ctx.overridden = inc.overridden;
    return ctx;
  }
};

struct DeltaPartials {
  DenseVector dp_m;
  DenseVector dp_v;
  DenseVector dp_s;
};

/// Element-wise partials of the applied update with respect to the three
/// control variables, with A = |n| + eps_n and D = v_hat^p_v + eps:
///
///   d delta / d p_m = -eta (1-p_s) A^(-p_s) (m_hat - g) / D
///   d delta / d p_v = +eta A^(1-p_s) sign(n) v_hat^p_v ln(v_hat) / D^2
///   d delta / d p_s = +eta A^(1-p_s) ln(A) sign(n) / D
///
/// sign(n) is treated as piecewise constant (zero derivative a.e.), so all
/// three partials vanish where n = 0. eta here is the effective learning
/// rate the step actually used.
inline DeltaPartials delta_partials(const MetaContext& ctx, const PilotHyper& hyper) {
  const std::size_t dim = ctx.n.size();
  if (ctx.m_hat.size() != dim || ctx.grad.size() != dim || ctx.v_hat.size() != dim) {
    throw ContractViolation("delta_partials: inconsistent context lengths");
  }
  DeltaPartials out;
  out.dp_m.assign(dim, 0.0);
  out.dp_v.assign(dim, 0.0);
  out.dp_s.assign(dim, 0.0);
  const double p_v = ctx.outputs.p_v;
  const double p_s = ctx.outputs.p_s;
  const double eta = ctx.eta_eff;
  for (std::size_t i = 0; i < dim; ++i) {
    const double s = sign(ctx.n[i]);
    if (s == 0.0) continue;  // sign(0)=0 kills every term
    const double a = std::abs(ctx.n[i]) + hyper.eps_n;
    const double vpow = std::pow(ctx.v_hat[i], p_v);
    const double denom = vpow + hyper.eps;
    const double apow = std::pow(a, 1.0 - p_s);
    out.dp_m[i] = -eta * (1.0 - p_s) * std::pow(a, -p_s) *
                  (ctx.m_hat[i] - ctx.grad[i]) / denom;
    out.dp_v[i] = eta * apow * s * vpow * std::log(ctx.v_hat[i]) / (denom * denom);
    out.dp_s[i] = eta * apow * std::log(a) * s / denom;
  }
  return out;
}

/// Per-coefficient meta-gradient estimate, same layout as PolicyCoefficients.
struct PolicyGradient {
  std::vector<double> m;
  std::vector<double> v;
  std::vector<double> s;

  static PolicyGradient zeros(int degree) {
    PolicyGradient g;
    g.m.assign(static_cast<std::size_t>(degree) + 1, 0.0);
    g.v.assign(static_cast<std::size_t>(degree) + 1, 0.0);
    g.s.assign(static_cast<std::size_t>(degree) + 1, 0.0);
    return g;
  }

  double l2_norm() const {
    double acc = 0.0;
    for (const auto* part : {&m, &v, &s}) {
      for (double x : *part) acc += x * x;
    }
    return std::sqrt(acc);
  }

  bool finite() const {
    for (const auto* part : {&m, &v, &s}) {
      for (double x : *part) {
        if (!std::isfinite(x)) return false;
      }
    }
    return true;
  }
};

/// One-step meta-gradient: for each coefficient c_k,
///   grad(c_k) = (g_{t+1} . d delta / d p) * d p / d c_k
/// with the policy jacobian taken at the stored rho. Families behind a fixed
/// override contribute exactly zero.
inline PolicyGradient meta_grad(const MetaContext& ctx, const DenseVector& next_grad,
                                const PolicyCoefficients& phi, const PilotHyper& hyper) {
  if (next_grad.size() != ctx.n.size()) {
    throw ContractViolation("meta_grad: next_grad length " +
                            std::to_string(next_grad.size()) +
                            " does not match context dim " + std::to_string(ctx.n.size()));
  }
  const DeltaPartials partials = delta_partials(ctx, hyper);
  const double along_pm = dot(next_grad, partials.dp_m);
  const double along_pv = dot(next_grad, partials.dp_v);
  const double along_ps = dot(next_grad, partials.dp_s);
  const PolicyJacobian jac = policy_jacobian(phi, ctx.rho);

  PolicyGradient grad = PolicyGradient::zeros(phi.degree);
  for (std::size_t k = 0; k < jac.m.size(); ++k) {
    if (!ctx.overridden[0]) grad.m[k] = along_pm * jac.m[k];
    if (!ctx.overridden[1]) grad.v[k] = along_pv * jac.v[k];
    if (!ctx.overridden[2]) grad.s[k] = along_ps * jac.s[k];
  }
  return grad;
}

/// phi <- phi - eta_phi * grad, with grad rescaled so its overall L2 norm is
/// at most clip (clip = inf disables). Returns false when the gradient was
/// non-finite and the update skipped.
inline bool apply_policy_update(PolicyCoefficients& phi, const PolicyGradient& grad_phi,
                                double eta_phi, double clip) {
  if (eta_phi < 0.0) throw ContractViolation("apply_policy_update: eta_phi must be >= 0");
  if (!(clip > 0.0)) throw ContractViolation("apply_policy_update: clip must be > 0");
  if (grad_phi.m.size() != phi.m.size() || grad_phi.v.size() != phi.v.size() ||
      grad_phi.s.size() != phi.s.size()) {
    throw ContractViolation("apply_policy_update: gradient/coefficient shape mismatch");
  }
  if (!grad_phi.finite()) return false;
  if (eta_phi == 0.0) return true;  // frozen policy: bit-exact no-op
  const double norm = grad_phi.l2_norm();
  const double scale = (std::isfinite(clip) && norm > clip) ? clip / norm : 1.0;
  for (std::size_t k = 0; k < phi.m.size(); ++k) {
    phi.m[k] -= eta_phi * scale * grad_phi.m[k];
    phi.v[k] -= eta_phi * scale * grad_phi.v[k];
    phi.s[k] -= eta_phi * scale * grad_phi.s[k];
  }
  return true;
}

/// Owns the strict one-step lag between an update and the gradient that
/// scores it. record() stores step t; update_policy() at step t+1 consumes
/// the stored snapshot, checked via the step stamp, and applies Eq.-style
/// phi update in place. The first step has no snapshot and is a no-op.
class MetaGradientController {
 public:
  /// Consumes the previous snapshot (if any) using this step's gradient.
  void update_policy(PolicyCoefficients& phi, const DenseVector& current_grad,
                     std::size_t current_step, const PilotHyper& hyper,
                     double eta_phi_scale = 1.0) {
    if (!ctx_) return;  // first step: zero gradient by contract
    if (ctx_->step + 1 != current_step) {
      throw ContractViolation("MetaGradientController: stale snapshot (step " +
                              std::to_string(ctx_->step) + " vs current " +
                              std::to_string(current_step) + ")");
    }
    const PolicyGradient grad = meta_grad(*ctx_, current_grad, phi, hyper);
    if (!apply_policy_update(phi, grad, hyper.eta_phi * eta_phi_scale,
                             hyper.policy_clip)) {
      ++skipped_;
    }
  }

  void record(const UpdateIncrement& inc, const DenseVector& grad) {
    ctx_ = MetaContext::from_step(inc, grad);
  }

  void reset() {
    ctx_.reset();
    skipped_ = 0;
  }

  bool has_context() const { return ctx_.has_value(); }
  const MetaContext& context() const { return *ctx_; }
  std::size_t skipped_updates() const { return skipped_; }

 private:
  std::optional<MetaContext> ctx_;
  std::size_t skipped_ = 0;
};

}  // namespace pilot
