#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pilot/errors.hpp"
#include "pilot/param_view.hpp"
#include "pilot/rng.hpp"
#include "pilot/vector_ops.hpp"

namespace pilot {

/// Non-owning mini-batch view. Analytic objectives ignore it.
struct Batch {
  std::span<const double> inputs;  // size * input_dim, row-major
  std::span<const int> labels;     // size entries for classifiers
  std::size_t size = 0;
};

/// Differentiable objective over a flat parameter vector. loss and gradient
/// are pure functions of (theta, batch); instances are shareable read-only
/// across parallel runs.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual double loss(const DenseVector& theta, const Batch& batch) const = 0;
  virtual void gradient(const DenseVector& theta, const Batch& batch,
                        DenseVector& grad) const = 0;

  /// Single-pass loss+gradient; overridden where the forward pass is shared.
  virtual double loss_and_gradient(const DenseVector& theta, const Batch& batch,
                                   DenseVector& grad) const {
    gradient(theta, batch, grad);
    return loss(theta, batch);
  }

  DenseVector gradient(const DenseVector& theta, const Batch& batch) const {
    DenseVector g;
    gradient(theta, batch, g);
    return g;
  }

  /// Correct predictions in the batch; classifiers only.
  virtual std::size_t correct_count(const DenseVector&, const Batch&) const {
    throw ContractViolation("correct_count: '" + name_ + "' is not a classifier");
  }

  virtual void init_params(Rng& rng, DenseVector& theta) const = 0;

  const std::string& name() const { return name_; }
  const ParamView& layout() const { return layout_; }
  std::size_t param_count() const { return layout_.total_length(); }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t class_count() const { return class_count_; }
  bool is_classifier() const { return class_count_ > 0; }

 protected:
  Objective(std::string name, ParamView layout, std::size_t input_dim,
            std::size_t class_count)
      : name_(std::move(name)),
        layout_(std::move(layout)),
        input_dim_(input_dim),
        class_count_(class_count) {}

  void check_theta(const DenseVector& theta) const {
    if (theta.size() != layout_.total_length()) {
      throw ContractViolation(name_ + ": theta length " + std::to_string(theta.size()) +
                              " does not match param_count " +
                              std::to_string(layout_.total_length()));
    }
  }

 private:
  std::string name_;
  ParamView layout_;
  std::size_t input_dim_;
  std::size_t class_count_;
};

/// Deterministic initialization: weights drawn N(0, 1/fan_in) per layer,
/// biases zero; analytic objective parameters standard normal.
inline DenseVector init_params(const Objective& obj, std::uint64_t seed) {
  Rng rng(seed);
  DenseVector theta(obj.param_count(), 0.0);
  obj.init_params(rng, theta);
  return theta;
}

namespace detail {

/// Numerically stable log(sum(exp(z))) over a logit row.
inline double log_sum_exp(std::span<const double> z) {
  double peak = z[0];
  for (double x : z) peak = std::max(peak, x);
  double acc = 0.0;
  for (double x : z) acc += std::exp(x - peak);
  return peak + std::log(acc);
}

inline void check_labels(const Batch& batch, std::size_t class_count,
                         const std::string& who) {
  for (std::size_t e = 0; e < batch.size; ++e) {
    const int y = batch.labels[e];
    if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
      throw DataError(who + ": label " + std::to_string(y) + " out of range [0, " +
                      std::to_string(class_count) + ")");
    }
  }
}

class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(std::size_t dim, double condition_number)
      : Objective("quadratic", ParamView::from_segments({{"theta", dim}}), 0, 0),
        eigenvalues_(dim) {
    if (dim < 1) throw ContractViolation("quadratic_objective: dim must be >= 1");
    if (!(condition_number >= 1.0)) {
      throw ContractViolation("quadratic_objective: condition_number must be >= 1");
    }
    // Log-spaced eigenvalues from 1 to the condition number.
    for (std::size_t i = 0; i < dim; ++i) {
      const double frac =
          dim == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(dim - 1);
      eigenvalues_[i] = std::pow(condition_number, frac);
    }
  }

  double loss(const DenseVector& theta, const Batch&) const override {
    check_theta(theta);
    double acc = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      acc += 0.5 * eigenvalues_[i] * theta[i] * theta[i];
    }
    return acc;
  }

  void gradient(const DenseVector& theta, const Batch&, DenseVector& grad) const override {
    check_theta(theta);
    grad.resize(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) grad[i] = eigenvalues_[i] * theta[i];
  }

  void init_params(Rng& rng, DenseVector& theta) const override {
    for (double& x : theta) x = rng.normal();
  }

 private:
  DenseVector eigenvalues_;
};

class RosenbrockObjective final : public Objective {
 public:
  explicit RosenbrockObjective(std::size_t dim)
      : Objective("rosenbrock", ParamView::from_segments({{"theta", dim}}), 0, 0) {
    if (dim < 2 || dim % 2 != 0) {
      throw ContractViolation("rosenbrock_objective: dim must be even and >= 2");
    }
  }

  double loss(const DenseVector& theta, const Batch&) const override {
    check_theta(theta);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < theta.size(); ++i) {
      const double a = theta[i + 1] - theta[i] * theta[i];
      const double b = 1.0 - theta[i];
      acc += 100.0 * a * a + b * b;
    }
    return acc;
  }

  void gradient(const DenseVector& theta, const Batch&, DenseVector& grad) const override {
    check_theta(theta);
    const std::size_t dim = theta.size();
    grad.assign(dim, 0.0);
    for (std::size_t i = 0; i + 1 < dim; ++i) {
      const double a = theta[i + 1] - theta[i] * theta[i];
      grad[i] += -400.0 * theta[i] * a - 2.0 * (1.0 - theta[i]);
      grad[i + 1] += 200.0 * a;
    }
  }

  void init_params(Rng& rng, DenseVector& theta) const override {
    for (double& x : theta) x = rng.normal();
  }
};

class LogisticObjective final : public Objective {
 public:
  LogisticObjective(std::size_t features, std::size_t classes)
      : Objective("logistic",
                  ParamView::from_segments(
                      {{"weight", features * classes}, {"bias", classes}}),
                  features, classes) {
    if (features < 1 || classes < 2) {
      throw ContractViolation("logistic_objective: need features >= 1, classes >= 2");
    }
  }

  double loss(const DenseVector& theta, const Batch& batch) const override {
    DenseVector scratch;
    return forward(theta, batch, nullptr, scratch);
  }

  void gradient(const DenseVector& theta, const Batch& batch,
                DenseVector& grad) const override {
    DenseVector scratch;
    forward(theta, batch, &grad, scratch);
  }

  double loss_and_gradient(const DenseVector& theta, const Batch& batch,
                           DenseVector& grad) const override {
    DenseVector scratch;
    return forward(theta, batch, &grad, scratch);
  }

  std::size_t correct_count(const DenseVector& theta, const Batch& batch) const override {
    check_theta(theta);
    detail::check_labels(batch, class_count(), name());
    const std::size_t d = input_dim();
    const std::size_t c = class_count();
    std::size_t correct = 0;
    DenseVector z(c);
    for (std::size_t e = 0; e < batch.size; ++e) {
      logits(theta, batch.inputs.subspan(e * d, d), z);
      std::size_t best = 0;
      for (std::size_t j = 1; j < c; ++j) {
        if (z[j] > z[best]) best = j;
      }
      if (static_cast<int>(best) == batch.labels[e]) ++correct;
    }
    return correct;
  }

  void init_params(Rng& rng, DenseVector& theta) const override {
    const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim()));
    const std::size_t weights = input_dim() * class_count();
    for (std::size_t i = 0; i < weights; ++i) theta[i] = scale * rng.normal();
    // biases stay zero
  }

 private:
  void logits(const DenseVector& theta, std::span<const double> x, DenseVector& z) const {
    const std::size_t d = input_dim();
    const std::size_t c = class_count();
    for (std::size_t j = 0; j < c; ++j) {
      double acc = theta[d * c + j];  // bias
      const double* w = theta.data() + j * d;
      for (std::size_t i = 0; i < d; ++i) acc += w[i] * x[i];
      z[j] = acc;
    }
  }

  // Mean cross-entropy; when grad is non-null also accumulates
  // (softmax - onehot) x^T / batch into it.
  double forward(const DenseVector& theta, const Batch& batch, DenseVector* grad,
                 DenseVector& z) const {
    check_theta(theta);
    if (batch.size == 0) throw ContractViolation("logistic: empty batch");
    detail::check_labels(batch, class_count(), name());
    const std::size_t d = input_dim();
    const std::size_t c = class_count();
    if (grad) grad->assign(theta.size(), 0.0);
    z.resize(c);
    double total = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch.size);
    for (std::size_t e = 0; e < batch.size; ++e) {
      const auto x = batch.inputs.subspan(e * d, d);
      logits(theta, x, z);
      const double lse = detail::log_sum_exp(z);
      const int y = batch.labels[e];
      total += lse - z[static_cast<std::size_t>(y)];
      if (grad) {
        for (std::size_t j = 0; j < c; ++j) {
          double p = std::exp(z[j] - lse);
          if (static_cast<int>(j) == y) p -= 1.0;
          p *= inv_batch;
          double* w = grad->data() + j * d;
          for (std::size_t i = 0; i < d; ++i) w[i] += p * x[i];
          (*grad)[d * c + j] += p;
        }
      }
    }
    return total * inv_batch;
  }
};

}  // namespace detail

enum class Activation { relu, tanh };

struct MlpSpec {
  std::vector<std::size_t> widths;  // input, hidden..., output
  Activation activation = Activation::relu;

  void validate() const {
    if (widths.size() < 3) {
      throw ContractViolation("MlpSpec: need at least one hidden layer");
    }
    for (std::size_t w : widths) {
      if (w == 0) throw ContractViolation("MlpSpec: widths must be positive");
    }
  }
};

namespace detail {

/// Fully connected network with softmax cross-entropy output and manual
/// backpropagation. Layer l maps widths[l] -> widths[l+1]; parameters are
/// laid out layer-major as weight (out x in, row-major) then bias.
class MlpObjective final : public Objective {
 public:
  explicit MlpObjective(MlpSpec spec)
      : Objective("mlp", make_layout(spec), spec.widths.front(), spec.widths.back()),
        spec_(std::move(spec)) {}

  double loss(const DenseVector& theta, const Batch& batch) const override {
    return run(theta, batch, nullptr);
  }

  void gradient(const DenseVector& theta, const Batch& batch,
                DenseVector& grad) const override {
    run(theta, batch, &grad);
  }

  double loss_and_gradient(const DenseVector& theta, const Batch& batch,
                           DenseVector& grad) const override {
    return run(theta, batch, &grad);
  }

  std::size_t correct_count(const DenseVector& theta, const Batch& batch) const override {
    check_theta(theta);
    detail::check_labels(batch, class_count(), name());
    std::vector<DenseVector> acts;
    std::size_t correct = 0;
    for (std::size_t e = 0; e < batch.size; ++e) {
      const auto x = batch.inputs.subspan(e * input_dim(), input_dim());
      const DenseVector& z = forward_example(theta, x, acts);
      std::size_t best = 0;
      for (std::size_t j = 1; j < z.size(); ++j) {
        if (z[j] > z[best]) best = j;
      }
      if (static_cast<int>(best) == batch.labels[e]) ++correct;
    }
    return correct;
  }

  void init_params(Rng& rng, DenseVector& theta) const override {
    // N(0, 1/fan_in) weights, zero biases, in layer declaration order.
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < spec_.widths.size(); ++l) {
      const std::size_t fan_in = spec_.widths[l];
      const std::size_t fan_out = spec_.widths[l + 1];
      const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (std::size_t i = 0; i < fan_in * fan_out; ++i) {
        theta[offset + i] = scale * rng.normal();
      }
      offset += fan_in * fan_out + fan_out;  // biases left zero
    }
  }

  const MlpSpec& spec() const { return spec_; }

 private:
  static ParamView make_layout(const MlpSpec& spec) {
    spec.validate();
    std::vector<std::pair<std::string, std::size_t>> segs;
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
      const std::string tag = "layer" + std::to_string(l);
      segs.emplace_back(tag + ".weight", spec.widths[l] * spec.widths[l + 1]);
      segs.emplace_back(tag + ".bias", spec.widths[l + 1]);
    }
    return ParamView::from_segments(segs);
  }

  double activate(double x) const {
    return spec_.activation == Activation::relu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
  }

  double activate_grad(double pre, double post) const {
    return spec_.activation == Activation::relu ? (pre > 0.0 ? 1.0 : 0.0)
                                                : 1.0 - post * post;
  }

  // acts[0] = input copy, acts[2l+1] = pre-activation of layer l,
  // acts[2l+2] = post-activation; returns the final logits (no activation).
  const DenseVector& forward_example(const DenseVector& theta, std::span<const double> x,
                                     std::vector<DenseVector>& acts) const {
    const std::size_t layers = spec_.widths.size() - 1;
    acts.assign(2 * layers + 1, {});
    acts[0].assign(x.begin(), x.end());
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = spec_.widths[l];
      const std::size_t out = spec_.widths[l + 1];
      const double* w = theta.data() + offset;
      const double* b = theta.data() + offset + in * out;
      const DenseVector& prev = l == 0 ? acts[0] : acts[2 * l];
      DenseVector& pre = acts[2 * l + 1];
      pre.resize(out);
      for (std::size_t j = 0; j < out; ++j) {
        double acc = b[j];
        const double* row = w + j * in;
        for (std::size_t i = 0; i < in; ++i) acc += row[i] * prev[i];
        pre[j] = acc;
      }
      if (l + 1 < layers) {
        DenseVector& post = acts[2 * l + 2];
        post.resize(out);
        for (std::size_t j = 0; j < out; ++j) post[j] = activate(pre[j]);
      } else {
        acts[2 * l + 2] = pre;  // logits pass through
      }
      offset += in * out + out;
    }
    return acts[2 * layers - 1];
  }

  double run(const DenseVector& theta, const Batch& batch, DenseVector* grad) const {
    check_theta(theta);
    if (batch.size == 0) throw ContractViolation("mlp: empty batch");
    detail::check_labels(batch, class_count(), name());
    const std::size_t layers = spec_.widths.size() - 1;
    if (grad) grad->assign(theta.size(), 0.0);

    std::vector<DenseVector> acts;
    DenseVector delta, delta_prev;
    double total = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch.size);
    for (std::size_t e = 0; e < batch.size; ++e) {
      const auto x = batch.inputs.subspan(e * input_dim(), input_dim());
      const DenseVector& logits = forward_example(theta, x, acts);
      const double lse = detail::log_sum_exp(logits);
      const int y = batch.labels[e];
      total += lse - logits[static_cast<std::size_t>(y)];
      if (!grad) continue;

      // Output delta: softmax - onehot, averaged over the batch.
      delta.resize(logits.size());
      for (std::size_t j = 0; j < logits.size(); ++j) {
        double p = std::exp(logits[j] - lse);
        if (static_cast<int>(j) == y) p -= 1.0;
        delta[j] = p * inv_batch;
      }

      // Walk layers backwards accumulating weight/bias gradients.
      std::size_t offset_end = theta.size();
      for (std::size_t l = layers; l-- > 0;) {
        const std::size_t in = spec_.widths[l];
        const std::size_t out = spec_.widths[l + 1];
        const std::size_t offset = offset_end - (in * out + out);
        const double* w = theta.data() + offset;
        const DenseVector& prev = l == 0 ? acts[0] : acts[2 * l];
        double* gw = grad->data() + offset;
        double* gb = grad->data() + offset + in * out;
        for (std::size_t j = 0; j < out; ++j) {
          const double dj = delta[j];
          double* grow = gw + j * in;
          for (std::size_t i = 0; i < in; ++i) grow[i] += dj * prev[i];
          gb[j] += dj;
        }
        if (l > 0) {
          // Propagate through the previous activation.
          delta_prev.assign(in, 0.0);
          for (std::size_t j = 0; j < out; ++j) {
            const double dj = delta[j];
            const double* row = w + j * in;
            for (std::size_t i = 0; i < in; ++i) delta_prev[i] += row[i] * dj;
          }
          const DenseVector& pre = acts[2 * (l - 1) + 1];
          const DenseVector& post = acts[2 * (l - 1) + 2];
          for (std::size_t i = 0; i < in; ++i) {
            delta_prev[i] *= activate_grad(pre[i], post[i]);
          }
          delta.swap(delta_prev);
        }
        offset_end = offset;
      }
    }
    return total * inv_batch;
  }

  MlpSpec spec_;
};

}  // namespace detail

inline std::unique_ptr<Objective> quadratic_objective(std::size_t dim,
                                                      double condition_number) {
  return std::make_unique<detail::QuadraticObjective>(dim, condition_number);
}

inline std::unique_ptr<Objective> rosenbrock_objective(std::size_t dim) {
  return std::make_unique<detail::RosenbrockObjective>(dim);
}

inline std::unique_ptr<Objective> logistic_objective(std::size_t features,
                                                     std::size_t classes) {
  return std::make_unique<detail::LogisticObjective>(features, classes);
}

inline std::unique_ptr<Objective> mlp_objective(MlpSpec spec) {
  return std::make_unique<detail::MlpObjective>(std::move(spec));
}

}  // namespace pilot
