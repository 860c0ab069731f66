#include "adenoise/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>

namespace adenoise {

std::string to_string(RewardDomain d) { return d == RewardDomain::Spectral ? "spectral" : "time"; }
std::string to_string(ActionMode m) { return m == ActionMode::Sample ? "sample" : "greedy"; }
std::string to_string(BaselineMode m) {
  switch (m) {
    case BaselineMode::None: return "none";
    case BaselineMode::EpisodeMean: return "episode-mean";
    case BaselineMode::Ema: return "ema";
    case BaselineMode::Reference: return "reference";
  }
  return "?";
}

RewardDomain reward_domain_from_string(const std::string& s) {
  if (s == "spectral") return RewardDomain::Spectral;
  if (s == "time") return RewardDomain::Time;
  throw InvalidArgument("unknown reward domain '" + s + "' (expected spectral|time)");
}

ActionMode action_mode_from_string(const std::string& s) {
  if (s == "sample") return ActionMode::Sample;
  if (s == "greedy") return ActionMode::Greedy;
  throw InvalidArgument("unknown action mode '" + s + "' (expected sample|greedy)");
}

BaselineMode baseline_mode_from_string(const std::string& s) {
  if (s == "none") return BaselineMode::None;
  if (s == "episode-mean") return BaselineMode::EpisodeMean;
  if (s == "ema") return BaselineMode::Ema;
  if (s == "reference") return BaselineMode::Reference;
  throw InvalidArgument("unknown baseline mode '" + s + "' (expected none|episode-mean|ema|reference)");
}

double frame_reward(const Eigen::Ref<const Eigen::VectorXd>& clean, const Eigen::Ref<const Eigen::VectorXd>& enhanced) {
  if (clean.size() != enhanced.size()) throw InvalidArgument("frame_reward: frame lengths differ");
  return -(clean - enhanced).squaredNorm();
}

double normalize_reward(RewardNormalizer& norm, double r) {
  if (!std::isfinite(r)) throw NumericError("normalize_reward: non-finite reward");
  norm.running_max_abs = std::max({norm.decay * norm.running_max_abs, std::abs(r), kRewardEpsilon});
  return std::clamp(r / norm.running_max_abs, -1.0, 1.0);
}

std::vector<double> baseline_values(BaselineEstimator& est, const Trajectory& trajectory) {
  const std::size_t T = trajectory.size();
  std::vector<double> out(T, 0.0);
  if (est.mode == BaselineMode::None || T == 0) return out;
  if (est.mode == BaselineMode::Reference) {
    for (std::size_t t = 0; t < T; ++t) out[t] = trajectory.steps[t].reference_return;
    return out;
  }

  const double current = est.mode == BaselineMode::EpisodeMean ? est.history_mean : est.ema_value;
  std::fill(out.begin(), out.end(), current);

  const double episode_mean = trajectory.returns_to_go().mean();
  ++est.history_count;
  est.history_mean += (episode_mean - est.history_mean) / double(est.history_count);
  est.ema_value = est.ema_decay * est.ema_value + (1.0 - est.ema_decay) * episode_mean;
  return out;
}

Eigen::VectorXd build_policy_input(const FeatureVector& feature, const ParameterSet& params, double prev_reward) {
  if (feature.size() != kFeatureDim) throw InvalidArgument("build_policy_input: feature vector must have 256 entries");
  Eigen::VectorXd x(kPolicyInputDim);
  x.head(kFeatureDim) = feature.array().log1p().matrix();
  x.segment(kFeatureDim, kNumParams) = params.normalized();
  x[kPolicyInputDim - 1] = prev_reward;
  return x;
}

namespace {

/// Per-frame reward against the clean reference. In the time domain it keeps
/// a running weighted overlap-add of the output and scores the hop of samples
/// that receives no further contributions.
class FrameScorer {
 public:
  FrameScorer(const AudioSignal& clean, const Spectrogram& clean_spec, RewardDomain domain)
      : clean_spec_(clean_spec), domain_(domain) {
    if (domain_ != RewardDomain::Time || clean.size() == 0) return;
    n_ = clean_spec.frame_size;
    hop_ = clean_spec.hop;
    window_ = hann_window(n_);
    window_sq_ = window_.cwiseAbs2();
    const Padding pad = utterance_padding(clean.size());
    clean_padded_ = Eigen::VectorXd::Zero(pad.front + clean.size() + pad.back);
    clean_padded_.segment(pad.front, clean.size()) = clean.samples;
    ola_ = Eigen::VectorXd::Zero(clean_padded_.size());
    ola_norm_ = Eigen::VectorXd::Zero(clean_padded_.size());
  }

  double score(Eigen::Index t, const Eigen::VectorXcd& enhanced_spectrum) {
    if (domain_ == RewardDomain::Spectral) return frame_reward(features(clean_spec_.frame(t)), features(enhanced_spectrum));
    const Eigen::Index start = t * hop_;
    ola_.segment(start, n_) += irfft(enhanced_spectrum, n_).cwiseProduct(window_);
    ola_norm_.segment(start, n_) += window_sq_;
    double err = 0.0;
    for (Eigen::Index i = start; i < start + hop_; ++i) {
      const double y = ola_norm_[i] > 1e-10 ? ola_[i] / ola_norm_[i] : 0.0;
      err += (clean_padded_[i] - y) * (clean_padded_[i] - y);
    }
    return -err;
  }

 private:
  const Spectrogram& clean_spec_;
  RewardDomain domain_;
  int n_ = 0;
  int hop_ = 0;
  Eigen::VectorXd window_, window_sq_, clean_padded_, ola_, ola_norm_;
};

}  // namespace

Episode run_episode(const PolicyParameters& theta, const Utterance& utterance, const ParameterSet& initial_params,
                    Rng& rng, RewardNormalizer& normalizer, const EpisodeOptions& options) {
  const bool has_reference = utterance.clean.size() > 0;
  if (has_reference && (utterance.clean.size() != utterance.noisy.size() ||
                        utterance.clean.sample_rate != utterance.noisy.sample_rate))
    throw InvalidArgument("run_episode: clean and noisy signals are not aligned");
  if (theta.input_size() != kPolicyInputDim)
    throw InvalidArgument("run_episode: policy input size must be " + std::to_string(kPolicyInputDim));
  if (theta.num_heads() != int(kNumParams))
    throw InvalidArgument("run_episode: policy must have one head per control parameter");

  const Spectrogram noisy_spec = analyze_utterance(utterance.noisy);
  const Spectrogram clean_spec = has_reference ? analyze_utterance(utterance.clean) : Spectrogram{};
  const Eigen::Index T = noisy_spec.num_frames();
  const Eigen::Index lead = std::clamp<Eigen::Index>(options.enhancer.lead_in_frames, 1, T);
  EnhancerState enh = init_state(noisy_spec.frames.leftCols(lead));

  Spectrogram enhanced_spec = noisy_spec;
  const bool track_reference = has_reference && options.track_reference;
  FrameScorer scorer(utterance.clean, clean_spec, options.reward_domain);
  std::optional<FrameScorer> reference_scorer;
  EnhancerState reference_enh;
  if (track_reference) {
    reference_scorer.emplace(utterance.clean, clean_spec, options.reward_domain);
    reference_enh = enh;
  }

  Episode episode;
  episode.trajectory.episode_id = utterance.id;
  episode.trajectory.steps.reserve(std::size_t(T));
  ParameterSet params = initial_params;
  HiddenState hidden = HiddenState::zeros(theta.hidden_size());
  double prev_reward = 0.0;
  std::vector<RewardNormalizer> reference_scales;

  for (Eigen::Index t = 0; t < T; ++t) {
    TrajectoryStep step;
    step.feature = features(noisy_spec.frame(t));
    step.policy_input = build_policy_input(step.feature, params, options.reward_input ? prev_reward : 0.0);
    hidden = lstm_step(theta, step.policy_input, hidden);
    const ActionProbabilities probs = action_distribution(theta, hidden.h);
    SampledAction chosen = options.action_mode == ActionMode::Sample ? sample_action(probs, rng) : greedy_action(probs);
    params = apply_action(params, chosen.action);

    const EnhancedFrame out = process_frame(enh, noisy_spec.frame(t), params);
    enhanced_spec.frame(t) = out.enhanced_spectrum;
    step.raw_reward = has_reference ? scorer.score(t, out.enhanced_spectrum) : 0.0;
    if (track_reference)
      step.reference_reward =
          reference_scorer->score(t, process_frame(reference_enh, noisy_spec.frame(t), initial_params).enhanced_spectrum);
    if (track_reference) reference_scales.push_back(normalizer);
    step.reward = normalize_reward(normalizer, step.raw_reward);
    step.action = std::move(chosen.action);
    step.log_prob = chosen.log_prob;
    step.params_applied = params;
    prev_reward = step.reward;
    episode.trajectory.total_return += step.reward;
    episode.trajectory.steps.push_back(std::move(step));
  }

  if (track_reference) {
    auto& steps = episode.trajectory.steps;
    for (std::size_t t = 0; t < steps.size(); ++t) {
      RewardNormalizer norm = reference_scales[t];
      double to_go = 0.0;
      for (std::size_t u = t; u < steps.size(); ++u) to_go += normalize_reward(norm, steps[u].reference_reward);
      steps[t].reference_return = to_go;
    }
  }

  episode.enhanced = synthesize_utterance(enhanced_spec, utterance.noisy.size());
  return episode;
}

TrainingState init_training_state(const TrainerConfig& config, const ParameterSet& initial_params,
                                  double learning_rate) {
  TrainingState state;
  Rng init_rng = make_rng(config.seed, "policy-init");
  state.theta = init_policy(config.shape, config.init, init_rng);
  state.adam = AdamState::for_size(config.shape.num_weights(), learning_rate);
  state.normalizer.decay = config.reward_decay;
  state.baseline.mode = config.baseline_mode;
  state.baseline.ema_decay = config.baseline_ema_decay;
  state.initial_params = initial_params;
  return state;
}

double reinforce_update(TrainingState& state, const Trajectory& trajectory, double clip_norm) {
  const std::vector<double> baseline = baseline_values(state.baseline, trajectory);
  PolicyParameters grad = reinforce_gradient(state.theta, trajectory, baseline);
  const double norm = clip_global_norm(grad, clip_norm);
  if (!std::isfinite(norm)) throw NumericError("reinforce_update: non-finite policy gradient");
  grad.data() = -grad.data();  // descend on -J
  adam_update(state.theta, grad, state.adam);
  ++state.episodes_done;
  return norm;
}

Episode run_policy(const TrainingState& state, const Utterance& utterance, const TrainerConfig& config,
                   ActionMode mode, std::uint64_t seed) {
  RewardNormalizer normalizer = state.normalizer;
  Rng rng(seed);
  EpisodeOptions options;
  options.reward_domain = config.reward_domain;
  options.action_mode = mode;
  options.reward_input = config.reward_input;
  options.enhancer = config.enhancer;
  return run_episode(state.theta, utterance, state.initial_params, rng, normalizer, options);
}

namespace {

double raw_return(const Trajectory& t) {
  double acc = 0.0;
  for (const auto& s : t.steps) acc += s.raw_reward;
  return acc;
}

struct Validation {
  double mean_return = 0.0;
  AggregateMetrics metrics;
};

Validation validate(const TrainingState& state, const std::vector<Utterance>& split, const TrainerConfig& config) {
  Validation v;
  std::vector<UtteranceMetrics> rows;
  for (std::size_t i = 0; i < split.size(); ++i) {
    const Episode ep =
        run_policy(state, split[i], config, config.eval_action_mode, derive_seed(config.seed, "validation", i));
    v.mean_return += raw_return(ep.trajectory);
    rows.push_back(measure(split[i].id, split[i].snr_db, split[i].clean, ep.enhanced));
  }
  if (!split.empty()) v.mean_return /= double(split.size());
  v.metrics = aggregate(rows);
  return v;
}

}  // namespace

double validation_return(const TrainingState& state, const std::vector<Utterance>& split, const TrainerConfig& config) {
  double total = 0.0;
  for (std::size_t i = 0; i < split.size(); ++i)
    total += raw_return(
        run_policy(state, split[i], config, config.eval_action_mode, derive_seed(config.seed, "validation", i))
            .trajectory);
  return split.empty() ? 0.0 : total / double(split.size());
}

TrainResult train(const TrainerConfig& config, const std::vector<Utterance>& train_split,
                  const std::vector<Utterance>& val_split, const ParameterSet& initial_params,
                  const EpisodeCallback& on_episode) {
  if (train_split.empty()) throw InvalidArgument("train: empty training split");
  if (val_split.empty()) throw InvalidArgument("train: empty validation split");
  if (config.epochs < 1) throw InvalidArgument("train: epochs must be >= 1");

  const std::vector<double> rates = config.lr_grid.empty() ? std::vector<double>{config.learning_rate} : config.lr_grid;
  EpisodeOptions options;
  options.reward_domain = config.reward_domain;
  options.action_mode = ActionMode::Sample;
  options.reward_input = config.reward_input;
  options.track_reference = config.baseline_mode == BaselineMode::Reference;
  options.enhancer = config.enhancer;

  TrainResult result;
  bool have_best = false;
  for (const double rate : rates) {
    TrainingState state = init_training_state(config, initial_params, rate);
    Validation val = validate(state, val_split, config);
    state.validation_return = val.mean_return;
    result.epochs.push_back({0, rate, val.mean_return, val.metrics});
    if (!have_best || val.mean_return > result.best.validation_return) {
      result.best = state;
      result.selected_learning_rate = rate;
      have_best = true;
    }

    bool capped = false;
    for (int epoch = 1; epoch <= config.epochs && !capped; ++epoch) {
      state.epoch = epoch;
      std::vector<std::size_t> order(train_split.size());
      std::iota(order.begin(), order.end(), 0);
      Rng shuffle_rng = make_rng(config.seed, "shuffle", std::uint64_t(epoch));
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle_rng, i)]);

      for (const std::size_t idx : order) {
        if (config.max_episodes > 0 && state.episodes_done >= config.max_episodes) {
          capped = true;
          break;
        }
        const auto start = std::chrono::steady_clock::now();
        EpisodeLogRecord rec;
        rec.episode_id = state.episodes_done;
        rec.epoch = epoch;
        rec.utterance_id = train_split[idx].id;
        rec.seed = derive_seed(config.seed, "rollout", std::uint64_t(state.episodes_done));
        rec.learning_rate = rate;
        Rng rng(rec.seed);
        const Episode ep = run_episode(state.theta, train_split[idx], state.initial_params, rng, state.normalizer, options);
        rec.total_return = ep.trajectory.total_return;
        rec.gradient_norm = reinforce_update(state, ep.trajectory, config.clip_norm);
        rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (on_episode) on_episode(rec);
        result.log.push_back(std::move(rec));
      }

      val = validate(state, val_split, config);
      state.validation_return = val.mean_return;
      result.epochs.push_back({epoch, rate, val.mean_return, val.metrics});
      if (val.mean_return > result.best.validation_return) {
        result.best = state;
        result.selected_learning_rate = rate;
      }
    }
  }
  return result;
}

}  // namespace adenoise
