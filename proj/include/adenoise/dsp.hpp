#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "adenoise/errors.hpp"

namespace adenoise {

inline constexpr int kSampleRate = 16000;
inline constexpr int kFrameSize = 512;
inline constexpr int kHop = kFrameSize / 2;
inline constexpr int kNumBins = kFrameSize / 2 + 1;
inline constexpr int kFeatureDim = kFrameSize / 2;

/// Mono time-domain signal. Samples are expected in [-1, 1].
struct AudioSignal {
  Eigen::VectorXd samples;
  int sample_rate = kSampleRate;

  Eigen::Index size() const { return samples.size(); }
  /// Throws InvalidArgument on a non-positive rate or non-finite samples.
  void validate() const;
};

/// One complex spectrum per column, bins 0..frame_size/2.
struct Spectrogram {
  Eigen::MatrixXcd frames;
  int frame_size = kFrameSize;
  int hop = kHop;
  int sample_rate = kSampleRate;

  Eigen::Index num_frames() const { return frames.cols(); }
  Eigen::Index num_bins() const { return frames.rows(); }
  auto frame(Eigen::Index t) { return frames.col(t); }
  auto frame(Eigen::Index t) const { return frames.col(t); }
};

/// Policy-facing magnitude features; kFeatureDim entries.
using FeatureVector = Eigen::VectorXd;

/// Periodic (DFT-even) Hann window, w[k] = 0.5 (1 - cos(2 pi k / length)).
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> hann_window(Eigen::Index length) {
  if (length < 2) throw InvalidArgument("hann_window: length must be >= 2");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w(length);
  const Scalar step = Scalar(2) * std::numbers::pi_v<Scalar> / Scalar(length);
  for (Eigen::Index k = 0; k < length; ++k) w[k] = Scalar(0.5) * (Scalar(1) - std::cos(step * Scalar(k)));
  return w;
}

/// floor((length - frame_size) / hop) + 1, or 0 when the signal is shorter than one frame.
constexpr Eigen::Index frame_count(Eigen::Index length, int frame_size = kFrameSize, int hop = kHop) {
  return length < frame_size ? 0 : (length - frame_size) / hop + 1;
}

/// Real FFT of one frame; returns frame.size()/2 + 1 bins.
Eigen::VectorXcd rfft(const Eigen::Ref<const Eigen::VectorXd>& frame);
/// Inverse of rfft for an even transform length `n`.
Eigen::VectorXd irfft(const Eigen::Ref<const Eigen::VectorXcd>& spectrum, Eigen::Index n);

/// Hann-windowed short-time Fourier transform. Requires hop == frame_size/2.
Spectrogram stft(const AudioSignal& signal, int frame_size = kFrameSize, int hop = kHop);

/// Weighted overlap-add inverse, normalized by the summed squared window.
/// Output length is (frames - 1) * hop + frame_size. Samples covered by a
/// single frame (the outer half-frames) are not guaranteed to reconstruct.
AudioSignal istft(const Spectrogram& spec);

/// Magnitudes of bins 0..255; the Nyquist bin is dropped.
FeatureVector features(const Eigen::Ref<const Eigen::VectorXcd>& frame);

}  // namespace adenoise
