#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "adenoise/dsp.hpp"
#include "adenoise/parameters.hpp"

namespace adenoise {

/// Per-bin floor applied to the noise PSD estimate.
inline constexpr double kNoisePsdFloor = 1e-10;

/// Per-stream statistics of the suppressor. Not shareable across streams.
struct EnhancerState {
  Eigen::VectorXd noise_psd;        ///< per-bin noise variance
  Eigen::VectorXd prev_gain;        ///< gains applied to the previous frame
  Eigen::VectorXd prev_posteriori;  ///< a posteriori SNR of the previous frame
  int hangover_counter = 0;
  long frame_index = 0;

  bool initialized() const { return noise_psd.size() > 0; }
};

struct EnhancedFrame {
  Eigen::VectorXcd enhanced_spectrum;
  Eigen::VectorXd gains;
  bool vad_decision = false;
  Eigen::VectorXd posteriori_snr;
};

struct EnhancerOptions {
  /// Leading frames assumed speech-free and used to bootstrap the noise PSD.
  int lead_in_frames = 6;
};

/// Bootstraps the noise tracker from the mean power of `first_frames`
/// (columns are spectra).
EnhancerState init_state(const Eigen::Ref<const Eigen::MatrixXcd>& first_frames);

/// One frame of the suppressor: energy VAD with hangover, recursive noise
/// update on non-speech frames, decision-directed a priori SNR, Wiener gain
/// with floor. Updates `state` in place.
EnhancedFrame process_frame(EnhancerState& state, const Eigen::Ref<const Eigen::VectorXcd>& noisy_spectrum,
                            const ParameterSet& params);

/// Zero padding (front, back) that enhance_utterance adds so every input
/// sample is covered by two analysis frames.
struct Padding {
  Eigen::Index front = 0;
  Eigen::Index back = 0;
};
Padding utterance_padding(Eigen::Index length);
/// Number of analysis frames enhance_utterance uses for `length` samples.
Eigen::Index utterance_frame_count(Eigen::Index length);

/// The padded analysis of a signal as seen by the enhancer and trainer.
Spectrogram analyze_utterance(const AudioSignal& signal);
/// Inverse of analyze_utterance: overlap-add then crop back to `length` samples.
AudioSignal synthesize_utterance(const Spectrogram& spec, Eigen::Index length);

/// Full pipeline with one ParameterSet per analysis frame.
AudioSignal enhance_utterance(const AudioSignal& noisy, std::span<const ParameterSet> params_per_frame,
                              const EnhancerOptions& options = {});
/// Full pipeline with fixed parameters.
AudioSignal enhance_utterance(const AudioSignal& noisy, const ParameterSet& params,
                              const EnhancerOptions& options = {});

}  // namespace adenoise
