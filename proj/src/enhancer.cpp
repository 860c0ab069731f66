#include "adenoise/enhancer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace adenoise {

EnhancerState init_state(const Eigen::Ref<const Eigen::MatrixXcd>& first_frames) {
  if (first_frames.cols() == 0 || first_frames.rows() == 0)
    throw InvalidArgument("init_state: at least one frame is required");
  if (!first_frames.allFinite()) throw InvalidArgument("init_state: non-finite spectrum");
  EnhancerState state;
  state.noise_psd = first_frames.cwiseAbs2().rowwise().mean().cwiseMax(kNoisePsdFloor);
  state.prev_gain = Eigen::VectorXd::Ones(first_frames.rows());
  state.prev_posteriori = Eigen::VectorXd::Zero(first_frames.rows());
  return state;
}

EnhancedFrame process_frame(EnhancerState& state, const Eigen::Ref<const Eigen::VectorXcd>& noisy_spectrum,
                            const ParameterSet& params) {
  if (!state.initialized()) throw StateError("process_frame: enhancer state is not initialized");
  if (noisy_spectrum.size() != state.noise_psd.size())
    throw InvalidArgument("process_frame: spectrum has " + std::to_string(noisy_spectrum.size()) + " bins, state has " +
                          std::to_string(state.noise_psd.size()));
  if (!noisy_spectrum.allFinite()) throw InvalidArgument("process_frame: non-finite spectrum");

  const double alpha = params[Param::DdAlpha];
  const double beta = params[Param::NoiseBeta];
  const double over = params[Param::OverEstimation];
  const double floor_gain = std::pow(10.0, params[Param::GainFloorDb] / 20.0);

  const Eigen::VectorXd power = noisy_spectrum.cwiseAbs2();

  // (1) energy VAD with hangover
  const double energy = power.sum();
  const double ratio_db = 10.0 * std::log10(energy / state.noise_psd.sum());
  bool speech = false;
  if (ratio_db > params[Param::VadThresholdDb]) {
    speech = true;
    state.hangover_counter = static_cast<int>(params[Param::VadHangover]);
  } else if (state.hangover_counter > 0) {
    speech = true;
    --state.hangover_counter;
  }

  // (2) noise tracking on non-speech frames
  if (!speech)
    state.noise_psd = (beta * state.noise_psd + (1.0 - beta) * power).cwiseMax(kNoisePsdFloor);

  // (3) a posteriori and decision-directed a priori SNR, (4) Wiener rule
  EnhancedFrame out;
  out.vad_decision = speech;
  out.posteriori_snr = power.cwiseQuotient(over * state.noise_psd);
  out.gains.resize(power.size());
  for (Eigen::Index k = 0; k < power.size(); ++k) {
    const double gamma = out.posteriori_snr[k];
    const double xi = alpha * state.prev_gain[k] * state.prev_gain[k] * state.prev_posteriori[k] +
                      (1.0 - alpha) * std::max(gamma - 1.0, 0.0);
    out.gains[k] = std::clamp(xi / (1.0 + xi), floor_gain, 1.0);
  }

  // (5) gain application, phase preserved
  out.enhanced_spectrum = noisy_spectrum.cwiseProduct(out.gains.cast<std::complex<double>>());

  state.prev_gain = out.gains;
  state.prev_posteriori = out.posteriori_snr;
  ++state.frame_index;
  return out;
}

Padding utterance_padding(Eigen::Index length) {
  Padding pad;
  pad.front = kHop;
  const Eigen::Index min_total = std::max<Eigen::Index>(pad.front + length + kHop, kFrameSize);
  const Eigen::Index rem = (min_total - kFrameSize) % kHop;
  pad.back = min_total + (rem == 0 ? 0 : kHop - rem) - pad.front - length;
  return pad;
}

Eigen::Index utterance_frame_count(Eigen::Index length) {
  const Padding pad = utterance_padding(length);
  return frame_count(pad.front + length + pad.back);
}

Spectrogram analyze_utterance(const AudioSignal& signal) {
  const Padding pad = utterance_padding(signal.size());
  AudioSignal padded;
  padded.sample_rate = signal.sample_rate;
  padded.samples = Eigen::VectorXd::Zero(pad.front + signal.size() + pad.back);
  padded.samples.segment(pad.front, signal.size()) = signal.samples;
  return stft(padded);
}

AudioSignal synthesize_utterance(const Spectrogram& spec, Eigen::Index length) {
  const Padding pad = utterance_padding(length);
  AudioSignal full = istft(spec);
  if (full.size() < pad.front + length) throw InvalidArgument("synthesize_utterance: spectrogram too short");
  AudioSignal out;
  out.sample_rate = spec.sample_rate;
  out.samples = full.samples.segment(pad.front, length);
  return out;
}

AudioSignal enhance_utterance(const AudioSignal& noisy, std::span<const ParameterSet> params_per_frame,
                              const EnhancerOptions& options) {
  Spectrogram spec = analyze_utterance(noisy);
  const Eigen::Index frames = spec.num_frames();
  if (Eigen::Index(params_per_frame.size()) != frames)
    throw InvalidArgument("enhance_utterance: " + std::to_string(params_per_frame.size()) +
                          " parameter sets for " + std::to_string(frames) + " frames");
  const Eigen::Index lead = std::clamp<Eigen::Index>(options.lead_in_frames, 1, frames);
  EnhancerState state = init_state(spec.frames.leftCols(lead));
  for (Eigen::Index t = 0; t < frames; ++t)
    spec.frames.col(t) = process_frame(state, spec.frames.col(t), params_per_frame[std::size_t(t)]).enhanced_spectrum;
  return synthesize_utterance(spec, noisy.size());
}

AudioSignal enhance_utterance(const AudioSignal& noisy, const ParameterSet& params, const EnhancerOptions& options) {
  const std::vector<ParameterSet> per_frame(std::size_t(utterance_frame_count(noisy.size())), params);
  return enhance_utterance(noisy, per_frame, options);
}

}  // namespace adenoise
