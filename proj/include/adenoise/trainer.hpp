#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adenoise/data.hpp"
#include "adenoise/enhancer.hpp"
#include "adenoise/metrics.hpp"
#include "adenoise/policy.hpp"
#include "adenoise/trajectory.hpp"

namespace adenoise {

inline constexpr double kRewardEpsilon = 1e-12;

enum class RewardDomain { Spectral, Time };
enum class ActionMode { Sample, Greedy };
enum class BaselineMode { None, EpisodeMean, Ema, Reference };

std::string to_string(RewardDomain d);
std::string to_string(ActionMode m);
std::string to_string(BaselineMode m);
RewardDomain reward_domain_from_string(const std::string& s);
ActionMode action_mode_from_string(const std::string& s);
BaselineMode baseline_mode_from_string(const std::string& s);

/// -||clean - enhanced||^2 over equal-length frames.
double frame_reward(const Eigen::Ref<const Eigen::VectorXd>& clean, const Eigen::Ref<const Eigen::VectorXd>& enhanced);

/// Online scaling of rewards into [-1, 1] by a decaying running max of |r|.
struct RewardNormalizer {
  double running_max_abs = kRewardEpsilon;
  double decay = 1.0;
};

/// running_max_abs <- max(decay * running_max_abs, |r|, eps); returns
/// clamp(r / running_max_abs, -1, 1). Throws NumericError on non-finite r.
double normalize_reward(RewardNormalizer& norm, double r);

/// Variance-reduction baseline for the policy gradient.
///
/// The baseline applied to an episode is computed from earlier episodes only,
/// so it is independent of the episode's own actions:
///  - None: zeros.
///  - EpisodeMean: the running mean, over all completed episodes, of each
///    episode's mean return-to-go.
///  - Ema: the exponential moving average of the same per-episode quantity.
///  - Reference: the normalized return-to-go the fixed initial parameters
///    earn on the same utterance from step t on. It depends only on the
///    utterance and on the normalizer state before step t, and needs
///    episodes run with track_reference set.
struct BaselineEstimator {
  BaselineMode mode = BaselineMode::EpisodeMean;
  double ema_decay = 0.9;
  double ema_value = 0.0;
  double history_mean = 0.0;
  std::int64_t history_count = 0;
};

/// Baseline for every step of `trajectory`, then folds the trajectory's mean
/// return-to-go into the estimator.
std::vector<double> baseline_values(BaselineEstimator& est, const Trajectory& trajectory);

struct EpisodeOptions {
  RewardDomain reward_domain = RewardDomain::Spectral;
  ActionMode action_mode = ActionMode::Sample;
  /// Feed the previous normalized reward to the policy (slot is zero otherwise).
  bool reward_input = true;
  /// Also run the fixed initial parameters alongside and record their
  /// per-frame raw reward in each step (needs a clean reference).
  bool track_reference = false;
  EnhancerOptions enhancer;
};

/// features (log-compressed magnitudes) | normalized parameters | previous reward.
Eigen::VectorXd build_policy_input(const FeatureVector& feature, const ParameterSet& params, double prev_reward);

struct Episode {
  Trajectory trajectory;
  AudioSignal enhanced;
};

/// One utterance under policy control. Every frame: policy input from the
/// noisy features, current parameters and previous normalized reward; LSTM
/// step; action; parameter update; suppressor step with the new parameters;
/// reward against the clean reference. The clean signal is used for nothing
/// else. An empty clean signal runs the controller without a reference: every
/// reward is 0, so the policy's reward input stays 0.
Episode run_episode(const PolicyParameters& theta, const Utterance& utterance, const ParameterSet& initial_params,
                    Rng& rng, RewardNormalizer& normalizer, const EpisodeOptions& options = {});

struct TrainerConfig {
  PolicyShape shape;
  PolicyInit init{.hold_bias = 3.0};
  double learning_rate = 1e-3;
  /// When non-empty, one run per rate; the best by validation mean return wins.
  std::vector<double> lr_grid{1e-2, 3e-3, 1e-3, 3e-4};
  int epochs = 5;
  /// Hard cap on training episodes per run (0 = no cap).
  int max_episodes = 500;
  BaselineMode baseline_mode = BaselineMode::EpisodeMean;
  double baseline_ema_decay = 0.9;
  double reward_decay = 1.0;
  RewardDomain reward_domain = RewardDomain::Spectral;
  ActionMode eval_action_mode = ActionMode::Greedy;
  bool reward_input = true;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  EnhancerOptions enhancer;
};

/// Everything needed to resume training or run the controller.
struct TrainingState {
  PolicyParameters theta;
  AdamState adam;
  RewardNormalizer normalizer;
  BaselineEstimator baseline;
  ParameterSet initial_params;
  std::int64_t episodes_done = 0;
  int epoch = 0;
  double validation_return = std::numeric_limits<double>::quiet_NaN();
};

TrainingState init_training_state(const TrainerConfig& config, const ParameterSet& initial_params, double learning_rate);

struct EpisodeLogRecord {
  std::int64_t episode_id = 0;
  int epoch = 0;
  std::string utterance_id;
  std::uint64_t seed = 0;
  double total_return = 0.0;
  double gradient_norm = 0.0;
  double learning_rate = 0.0;
  double wall_time_s = 0.0;  ///< kept out of the deterministic log file
};

struct EpochSummary {
  int epoch = 0;
  double learning_rate = 0.0;
  double val_mean_return = 0.0;
  AggregateMetrics val_metrics;
};

struct TrainResult {
  TrainingState best;
  double selected_learning_rate = 0.0;
  std::vector<EpisodeLogRecord> log;
  std::vector<EpochSummary> epochs;
};

/// One REINFORCE update: baseline, gradient, clipping, Adam. Returns the
/// gradient norm before clipping. Throws NumericError on a non-finite gradient.
double reinforce_update(TrainingState& state, const Trajectory& trajectory, double clip_norm);

/// Rolls out `state`'s policy on an utterance without touching the state
/// (the normalizer is copied). Sampling uses `seed`.
Episode run_policy(const TrainingState& state, const Utterance& utterance, const TrainerConfig& config,
                   ActionMode mode, std::uint64_t seed);

/// Mean total return of the policy on `split` (rollout seeds derived from config.seed).
double validation_return(const TrainingState& state, const std::vector<Utterance>& split, const TrainerConfig& config);

using EpisodeCallback = std::function<void(const EpisodeLogRecord&)>;

/// Batch-size-1 REINFORCE training with validation after every epoch and
/// best-by-validation selection (the untrained policy counts as epoch 0).
TrainResult train(const TrainerConfig& config, const std::vector<Utterance>& train_split,
                  const std::vector<Utterance>& val_split, const ParameterSet& initial_params,
                  const EpisodeCallback& on_episode = {});

}  // namespace adenoise
