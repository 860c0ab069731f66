#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adenoise/dsp.hpp"
#include "adenoise/parameters.hpp"

namespace adenoise {

/// Per-parameter choice index: 0 = decrease, 1 = hold, 2 = increase.
inline constexpr int kNumChoices = 3;
inline constexpr int kDecrease = 0;
inline constexpr int kHold = 1;
inline constexpr int kIncrease = 2;

/// One categorical choice per control parameter.
struct Action {
  std::vector<int> choices;

  /// -1, 0 or +1 for parameter i.
  int direction(std::size_t i) const { return choices[i] - 1; }
  bool operator==(const Action&) const = default;
};

struct TrajectoryStep {
  Eigen::VectorXd policy_input;  ///< the full input fed to the recurrent policy
  FeatureVector feature;
  Action action;
  double log_prob = 0.0;
  double reward = 0.0;      ///< normalized reward, the one the gradient sees
  double raw_reward = 0.0;  ///< negated squared error before normalization
  /// Raw reward of the fixed initial parameters on the same frame (0 unless tracked).
  double reference_reward = 0.0;
  /// Return-to-go of the fixed initial parameters from this step, normalized
  /// by a copy of the reward normalizer as it stood before this step.
  double reference_return = 0.0;
  ParameterSet params_applied;
};

/// One episode (one utterance) of controller/suppressor interaction.
struct Trajectory {
  std::string episode_id;
  std::vector<TrajectoryStep> steps;
  double total_return = 0.0;

  std::size_t size() const { return steps.size(); }
  /// R_t = sum over t' >= t of reward_t' (undiscounted).
  Eigen::VectorXd returns_to_go() const;
};

}  // namespace adenoise
