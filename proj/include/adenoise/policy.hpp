#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "adenoise/errors.hpp"
#include "adenoise/parameters.hpp"
#include "adenoise/rng.hpp"
#include "adenoise/trajectory.hpp"

namespace adenoise {

/// Input layout: magnitude features, normalized parameter values, previous reward.
inline constexpr int kPolicyInputDim = kFeatureDim + static_cast<int>(kNumParams) + 1;

struct PolicyShape {
  int hidden_size = 196;
  int input_size = kPolicyInputDim;
  int num_heads = static_cast<int>(kNumParams);

  Eigen::Index num_weights() const {
    const Eigen::Index g = 4 * Eigen::Index(hidden_size);
    return g * input_size + g * hidden_size + g + Eigen::Index(num_heads) * kNumChoices * (hidden_size + 1);
  }
  bool operator==(const PolicyShape&) const = default;
};

/// Weights of a single-layer LSTM trunk with one 3-way softmax head per
/// control parameter. All coefficients live in one flat vector so that
/// optimizers, clipping and finite differences can treat them uniformly;
/// the named accessors return Eigen::Map views into it.
///
/// Gate blocks in the 4H rows are ordered input, forget, output, candidate.
template <typename Scalar>
class BasicPolicyParameters {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  BasicPolicyParameters() = default;
  explicit BasicPolicyParameters(const PolicyShape& shape) : shape_(shape), data_(Vector::Zero(shape.num_weights())) {
    if (shape.hidden_size < 1 || shape.input_size < 1 || shape.num_heads < 1)
      throw InvalidArgument("policy shape: hidden, input and head counts must be positive");
  }

  const PolicyShape& shape() const { return shape_; }
  int hidden_size() const { return shape_.hidden_size; }
  int input_size() const { return shape_.input_size; }
  int num_heads() const { return shape_.num_heads; }

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }

  MatrixMap input_weights() { return {data_.data() + input_offset(), gates(), shape_.input_size}; }
  ConstMatrixMap input_weights() const { return {data_.data() + input_offset(), gates(), shape_.input_size}; }
  MatrixMap recurrent_weights() { return {data_.data() + recurrent_offset(), gates(), shape_.hidden_size}; }
  ConstMatrixMap recurrent_weights() const { return {data_.data() + recurrent_offset(), gates(), shape_.hidden_size}; }
  VectorMap biases() { return {data_.data() + bias_offset(), gates()}; }
  ConstVectorMap biases() const { return {data_.data() + bias_offset(), gates()}; }
  MatrixMap head_weights(int k) { return {data_.data() + head_offset(k), kNumChoices, shape_.hidden_size}; }
  ConstMatrixMap head_weights(int k) const { return {data_.data() + head_offset(k), kNumChoices, shape_.hidden_size}; }
  VectorMap head_biases(int k) { return {data_.data() + head_offset(k) + kNumChoices * shape_.hidden_size, kNumChoices}; }
  ConstVectorMap head_biases(int k) const {
    return {data_.data() + head_offset(k) + kNumChoices * shape_.hidden_size, kNumChoices};
  }

  bool all_finite() const { return data_.allFinite(); }

  template <typename Other>
  BasicPolicyParameters<Other> cast() const {
    BasicPolicyParameters<Other> out(shape_);
    out.data() = data_.template cast<Other>();
    return out;
  }

 private:
  Eigen::Index gates() const { return 4 * Eigen::Index(shape_.hidden_size); }
  Eigen::Index input_offset() const { return 0; }
  Eigen::Index recurrent_offset() const { return gates() * shape_.input_size; }
  Eigen::Index bias_offset() const { return recurrent_offset() + gates() * shape_.hidden_size; }
  Eigen::Index head_offset(int k) const {
    return bias_offset() + gates() + Eigen::Index(k) * kNumChoices * (shape_.hidden_size + 1);
  }

  PolicyShape shape_{};
  Vector data_;
};

using PolicyParameters = BasicPolicyParameters<double>;

template <typename Scalar>
struct BasicHiddenState {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> h;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> c;

  static BasicHiddenState zeros(int hidden_size) {
    using V = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    return {V::Zero(hidden_size), V::Zero(hidden_size)};
  }
};

using HiddenState = BasicHiddenState<double>;

/// Column k holds (p_decrease, p_hold, p_increase) for head k.
template <typename Scalar>
using BasicActionProbabilities = Eigen::Matrix<Scalar, kNumChoices, Eigen::Dynamic>;
using ActionProbabilities = BasicActionProbabilities<double>;

struct PolicyInit {
  double init_scale = 0.08;
  double forget_bias = 1.0;
  /// Initial logit of "hold" in every head (0 gives uniform heads).
  double hold_bias = 0.0;
};

/// Uniform(-scale, scale) matrices, zero biases except the forget gate and
/// the hold logit of each head.
PolicyParameters init_policy(const PolicyShape& shape, const PolicyInit& init, Rng& rng);

/// Read-only vector view whose scalar is deduced from the parameters only.
template <typename Scalar>
using ConstVectorRef = const Eigen::Ref<const Eigen::Matrix<std::type_identity_t<Scalar>, Eigen::Dynamic, 1>>&;

namespace detail {

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
Scalar log_sum_exp3(const Eigen::Matrix<Scalar, kNumChoices, 1>& z) {
  const Scalar m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

template <typename Scalar, typename Derived>
void check_input(const BasicPolicyParameters<Scalar>& theta, const Eigen::MatrixBase<Derived>& input,
                 const BasicHiddenState<Scalar>& state) {
  if (input.size() != theta.input_size())
    throw InvalidArgument("lstm_step: input has " + std::to_string(input.size()) + " entries, expected " +
                          std::to_string(theta.input_size()));
  if (state.h.size() != theta.hidden_size() || state.c.size() != theta.hidden_size())
    throw InvalidArgument("lstm_step: hidden state size mismatch");
}

}  // namespace detail

/// Activated gates of one LSTM step, rows ordered i, f, o, g.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> lstm_gates(const BasicPolicyParameters<Scalar>& theta,
                                                    ConstVectorRef<Scalar> input,
                                                    const BasicHiddenState<Scalar>& state) {
  detail::check_input(theta, input, state);
  const int H = theta.hidden_size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z = theta.biases();
  z.noalias() += theta.input_weights() * input;
  z.noalias() += theta.recurrent_weights() * state.h;
  for (Eigen::Index j = 0; j < 3 * H; ++j) z[j] = detail::sigmoid(z[j]);
  for (Eigen::Index j = 3 * H; j < 4 * H; ++j) z[j] = std::tanh(z[j]);
  return z;
}

/// Standard LSTM cell update.
template <typename Scalar>
BasicHiddenState<Scalar> lstm_step(const BasicPolicyParameters<Scalar>& theta,
                                   ConstVectorRef<Scalar> input,
                                   const BasicHiddenState<Scalar>& state) {
  const int H = theta.hidden_size();
  const auto gates = lstm_gates(theta, input, state);
  BasicHiddenState<Scalar> next;
  next.c = gates.segment(H, H).cwiseProduct(state.c) + gates.segment(0, H).cwiseProduct(gates.segment(3 * H, H));
  next.h = gates.segment(2 * H, H).cwiseProduct(next.c.array().tanh().matrix());
  return next;
}

/// Softmax over the three logits of every head.
template <typename Scalar>
BasicActionProbabilities<Scalar> action_distribution(const BasicPolicyParameters<Scalar>& theta,
                                                     ConstVectorRef<Scalar> h) {
  if (h.size() != theta.hidden_size()) throw InvalidArgument("action_distribution: hidden vector size mismatch");
  BasicActionProbabilities<Scalar> probs(kNumChoices, theta.num_heads());
  for (int k = 0; k < theta.num_heads(); ++k) {
    Eigen::Matrix<Scalar, kNumChoices, 1> z = theta.head_biases(k);
    z.noalias() += theta.head_weights(k) * h;
    const Scalar lse = detail::log_sum_exp3(z);
    probs.col(k) = (z.array() - lse).exp().matrix();
  }
  return probs;
}

/// Log-probability of `action` under `probs`, summed over heads.
template <typename Scalar>
Scalar action_log_prob(const BasicActionProbabilities<Scalar>& probs, const Action& action) {
  Scalar lp(0);
  for (Eigen::Index k = 0; k < probs.cols(); ++k) lp += std::log(probs(action.choices[k], k));
  return lp;
}

struct SampledAction {
  Action action;
  double log_prob = 0.0;
};

/// Independent categorical draw per head; consumes one uniform per head.
SampledAction sample_action(const ActionProbabilities& probs, Rng& rng);
/// Most probable choice per head (ties resolved toward "hold", then lower index).
SampledAction greedy_action(const ActionProbabilities& probs);

/// Moves each parameter by direction * step and clamps to bounds. Heads
/// beyond the action's length leave their parameters untouched.
ParameterSet apply_action(const ParameterSet& params, const Action& action);

/// Surrogate objective sum_t log pi(a_t | inputs up to t) * (R_t - b_t),
/// replaying the recorded policy inputs from a zero hidden state.
template <typename Scalar>
Scalar surrogate_objective(const BasicPolicyParameters<Scalar>& theta, const Trajectory& trajectory,
                           std::span<const double> baseline) {
  if (baseline.size() != trajectory.size()) throw InvalidArgument("surrogate_objective: baseline length mismatch");
  const Eigen::VectorXd returns = trajectory.returns_to_go();
  auto state = BasicHiddenState<Scalar>::zeros(theta.hidden_size());
  Scalar total(0);
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    const auto& step = trajectory.steps[t];
    state = lstm_step<Scalar>(theta, step.policy_input.template cast<Scalar>(), state);
    const auto probs = action_distribution<Scalar>(theta, state.h);
    total += action_log_prob(probs, step.action) * Scalar(returns[Eigen::Index(t)] - baseline[t]);
  }
  return total;
}

/// Gradient of surrogate_objective with respect to theta, by backpropagation
/// through time over the whole episode. The result is an ascent direction on
/// the expected return.
PolicyParameters reinforce_gradient(const PolicyParameters& theta, const Trajectory& trajectory,
                                    std::span<const double> baseline);

/// Scales `grad` in place so its L2 norm is at most `max_norm`; returns the
/// norm before clipping.
double clip_global_norm(PolicyParameters& grad, double max_norm);

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_size(Eigen::Index n, double learning_rate);
};

/// One bias-corrected Adam descent step on `grad`. A non-finite gradient
/// throws NumericError and leaves both theta and the optimizer untouched.
void adam_update(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::Ref<const Eigen::VectorXd>& grad, AdamState& opt);
void adam_update(PolicyParameters& theta, const PolicyParameters& grad, AdamState& opt);

}  // namespace adenoise
