#include "adenoise/policy.hpp"

#include <cmath>
#include <string>

namespace adenoise {

Eigen::VectorXd Trajectory::returns_to_go() const {
  Eigen::VectorXd returns(Eigen::Index(steps.size()));
  double acc = 0.0;
  for (std::size_t t = steps.size(); t-- > 0;) {
    acc += steps[t].reward;
    returns[Eigen::Index(t)] = acc;
  }
  return returns;
}

PolicyParameters init_policy(const PolicyShape& shape, const PolicyInit& init, Rng& rng) {
  PolicyParameters theta(shape);
  auto fill = [&](auto&& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = uniform(rng, -init.init_scale, init.init_scale);
  };
  fill(theta.input_weights());
  fill(theta.recurrent_weights());
  theta.biases().setZero();
  theta.biases().segment(shape.hidden_size, shape.hidden_size).setConstant(init.forget_bias);
  for (int k = 0; k < shape.num_heads; ++k) {
    fill(theta.head_weights(k));
    theta.head_biases(k).setZero();
    theta.head_biases(k)[kHold] = init.hold_bias;
  }
  return theta;
}

SampledAction sample_action(const ActionProbabilities& probs, Rng& rng) {
  SampledAction out;
  out.action.choices.resize(std::size_t(probs.cols()));
  for (Eigen::Index k = 0; k < probs.cols(); ++k) {
    const double u = uniform01(rng);
    int choice = kNumChoices - 1;
    double cumulative = 0.0;
    for (int c = 0; c < kNumChoices - 1; ++c) {
      cumulative += probs(c, k);
      if (u < cumulative) {
        choice = c;
        break;
      }
    }
    // Guards against a zero-probability last category when rounding leaves cumulative < 1.
    while (probs(choice, k) <= 0.0 && choice > 0) --choice;
    out.action.choices[std::size_t(k)] = choice;
    out.log_prob += std::log(probs(choice, k));
  }
  return out;
}

SampledAction greedy_action(const ActionProbabilities& probs) {
  SampledAction out;
  out.action.choices.resize(std::size_t(probs.cols()));
  for (Eigen::Index k = 0; k < probs.cols(); ++k) {
    int best = kHold;
    for (int c : {kDecrease, kIncrease})
      if (probs(c, k) > probs(best, k)) best = c;
    out.action.choices[std::size_t(k)] = best;
    out.log_prob += std::log(probs(best, k));
  }
  return out;
}

ParameterSet apply_action(const ParameterSet& params, const Action& action) {
  ParameterSet next = params;
  const std::size_t n = std::min(action.choices.size(), kNumParams);
  for (std::size_t i = 0; i < n; ++i) {
    const int dir = action.direction(i);
    if (dir != 0) next.set(i, params[i] + dir * kParamSpecs[i].step);
  }
  return next;
}

PolicyParameters reinforce_gradient(const PolicyParameters& theta, const Trajectory& trajectory,
                                    std::span<const double> baseline) {
  const std::size_t T = trajectory.size();
  if (baseline.size() != T)
    throw InvalidArgument("reinforce_gradient: baseline has " + std::to_string(baseline.size()) +
                          " entries for a trajectory of " + std::to_string(T));
  const int H = theta.hidden_size();
  const int D = theta.input_size();
  const int K = theta.num_heads();
  PolicyParameters grad(theta.shape());
  if (T == 0) return grad;

  const Eigen::VectorXd returns = trajectory.returns_to_go();

  // Forward pass, caching everything the backward pass needs.
  Eigen::MatrixXd inputs(D, Eigen::Index(T));
  Eigen::MatrixXd gates(4 * H, Eigen::Index(T));
  Eigen::MatrixXd h_prev(H, Eigen::Index(T)), c_prev(H, Eigen::Index(T));
  Eigen::MatrixXd hs(H, Eigen::Index(T)), cs(H, Eigen::Index(T));
  Eigen::MatrixXd dlogits(kNumChoices * K, Eigen::Index(T));

  HiddenState state = HiddenState::zeros(H);
  for (std::size_t t = 0; t < T; ++t) {
    const auto& step = trajectory.steps[t];
    if (step.policy_input.size() != D) throw InvalidArgument("reinforce_gradient: policy input size mismatch");
    if (step.action.choices.size() != std::size_t(K))
      throw InvalidArgument("reinforce_gradient: action length does not match head count");
    const auto col = Eigen::Index(t);
    inputs.col(col) = step.policy_input;
    h_prev.col(col) = state.h;
    c_prev.col(col) = state.c;
    gates.col(col) = lstm_gates(theta, step.policy_input, state);
    state.c = gates.col(col).segment(H, H).cwiseProduct(state.c) +
              gates.col(col).segment(0, H).cwiseProduct(gates.col(col).segment(3 * H, H));
    state.h = gates.col(col).segment(2 * H, H).cwiseProduct(state.c.array().tanh().matrix());
    hs.col(col) = state.h;
    cs.col(col) = state.c;

    // d(A_t log p(a)) / d logits = A_t (onehot(a) - p)
    const ActionProbabilities probs = action_distribution(theta, state.h);
    const double advantage = returns[col] - baseline[t];
    for (int k = 0; k < K; ++k) {
      Eigen::Vector3d d = -probs.col(k);
      d[step.action.choices[std::size_t(k)]] += 1.0;
      dlogits.col(col).segment(kNumChoices * k, kNumChoices) = advantage * d;
    }
  }

  // Heads.
  Eigen::MatrixXd dh_heads = Eigen::MatrixXd::Zero(H, Eigen::Index(T));
  for (int k = 0; k < K; ++k) {
    const auto dl = dlogits.middleRows(kNumChoices * k, kNumChoices);
    grad.head_weights(k).noalias() = dl * hs.transpose();
    grad.head_biases(k) = dl.rowwise().sum();
    dh_heads.noalias() += theta.head_weights(k).transpose() * dl;
  }

  // Backward through time.
  Eigen::MatrixXd dz(4 * H, Eigen::Index(T));
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
  const auto Wh_t = theta.recurrent_weights().transpose();
  for (std::size_t tt = T; tt-- > 0;) {
    const auto col = Eigen::Index(tt);
    const auto g = gates.col(col);
    const auto i = g.segment(0, H).array();
    const auto f = g.segment(H, H).array();
    const auto o = g.segment(2 * H, H).array();
    const auto cand = g.segment(3 * H, H).array();
    const Eigen::ArrayXd tanh_c = cs.col(col).array().tanh();

    const Eigen::ArrayXd dh = (dh_heads.col(col) + dh_next).array();
    const Eigen::ArrayXd dc = dc_next.array() + dh * o * (1.0 - tanh_c.square());
    auto z = dz.col(col);
    z.segment(0, H) = (dc * cand * i * (1.0 - i)).matrix();
    z.segment(H, H) = (dc * c_prev.col(col).array() * f * (1.0 - f)).matrix();
    z.segment(2 * H, H) = (dh * tanh_c * o * (1.0 - o)).matrix();
    z.segment(3 * H, H) = (dc * i * (1.0 - cand.square())).matrix();

    dc_next = (dc * f).matrix();
    dh_next.noalias() = Wh_t * z;
  }
  grad.input_weights().noalias() = dz * inputs.transpose();
  grad.recurrent_weights().noalias() = dz * h_prev.transpose();
  grad.biases() = dz.rowwise().sum();
  return grad;
}

double clip_global_norm(PolicyParameters& grad, double max_norm) {
  const double norm = grad.data().norm();
  if (std::isfinite(norm) && norm > max_norm && norm > 0.0) grad.data() *= max_norm / norm;
  return norm;
}

AdamState AdamState::for_size(Eigen::Index n, double learning_rate) {
  AdamState s;
  s.first_moment = Eigen::VectorXd::Zero(n);
  s.second_moment = Eigen::VectorXd::Zero(n);
  s.learning_rate = learning_rate;
  return s;
}

void adam_update(Eigen::Ref<Eigen::VectorXd> theta, const Eigen::Ref<const Eigen::VectorXd>& grad, AdamState& opt) {
  if (theta.size() != grad.size() || opt.first_moment.size() != grad.size() || opt.second_moment.size() != grad.size())
    throw InvalidArgument("adam_update: shape mismatch");
  if (!grad.allFinite()) throw NumericError("adam_update: non-finite gradient, update rejected");

  ++opt.step_count;
  opt.first_moment = opt.beta1 * opt.first_moment + (1.0 - opt.beta1) * grad;
  opt.second_moment = opt.beta2 * opt.second_moment + (1.0 - opt.beta2) * grad.cwiseAbs2();
  const double step = static_cast<double>(opt.step_count);
  const double bias1 = 1.0 - std::pow(opt.beta1, step);
  const double bias2 = 1.0 - std::pow(opt.beta2, step);
  theta.array() -= opt.learning_rate * (opt.first_moment.array() / bias1) /
                   ((opt.second_moment.array() / bias2).sqrt() + opt.epsilon);
}

void adam_update(PolicyParameters& theta, const PolicyParameters& grad, AdamState& opt) {
  if (!(theta.shape() == grad.shape())) throw InvalidArgument("adam_update: parameter shapes differ");
  adam_update(theta.data(), grad.data(), opt);
}

}  // namespace adenoise
