#include "adenoise/dsp.hpp"

#include <string>

#include <unsupported/Eigen/FFT>

namespace adenoise {

namespace {

Eigen::FFT<double>& thread_fft() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    return f;
  }();
  return fft;
}

}  // namespace

void AudioSignal::validate() const {
  if (sample_rate <= 0) throw InvalidArgument("audio signal: sample_rate must be positive");
  if (!samples.allFinite()) throw InvalidArgument("audio signal: non-finite sample");
}

Eigen::VectorXcd rfft(const Eigen::Ref<const Eigen::VectorXd>& frame) {
  Eigen::VectorXd in = frame;
  Eigen::VectorXcd out;
  thread_fft().fwd(out, in);
  return out;
}

Eigen::VectorXd irfft(const Eigen::Ref<const Eigen::VectorXcd>& spectrum, Eigen::Index n) {
  if (n % 2 != 0 || spectrum.size() != n / 2 + 1)
    throw InvalidArgument("irfft: spectrum of " + std::to_string(spectrum.size()) + " bins does not match length " +
                          std::to_string(n));
  Eigen::VectorXcd in = spectrum;
  Eigen::VectorXd out;
  thread_fft().inv(out, in, n);
  return out;
}

Spectrogram stft(const AudioSignal& signal, int frame_size, int hop) {
  if (frame_size < 2 || frame_size % 2 != 0) throw InvalidArgument("stft: frame_size must be even and >= 2");
  if (hop != frame_size / 2) throw InvalidArgument("stft: hop must equal frame_size / 2");
  if (signal.size() < frame_size)
    throw InvalidArgument("stft: signal of " + std::to_string(signal.size()) + " samples is shorter than one frame");
  signal.validate();

  const Eigen::VectorXd window = hann_window(frame_size);
  const Eigen::Index frames = frame_count(signal.size(), frame_size, hop);
  Spectrogram spec;
  spec.frame_size = frame_size;
  spec.hop = hop;
  spec.sample_rate = signal.sample_rate;
  spec.frames.resize(frame_size / 2 + 1, frames);
  for (Eigen::Index t = 0; t < frames; ++t)
    spec.frames.col(t) = rfft(signal.samples.segment(t * hop, frame_size).cwiseProduct(window));
  return spec;
}

AudioSignal istft(const Spectrogram& spec) {
  const int n = spec.frame_size;
  if (n < 2 || n % 2 != 0 || spec.hop != n / 2) throw InvalidArgument("istft: inconsistent frame geometry");
  if (spec.num_bins() != n / 2 + 1)
    throw InvalidArgument("istft: frames have " + std::to_string(spec.num_bins()) + " bins, expected " +
                          std::to_string(n / 2 + 1));

  AudioSignal out;
  out.sample_rate = spec.sample_rate;
  const Eigen::Index frames = spec.num_frames();
  if (frames == 0) return out;

  const Eigen::VectorXd window = hann_window(n);
  const Eigen::Index length = (frames - 1) * spec.hop + n;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(length);
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(length);
  const Eigen::VectorXd window_sq = window.cwiseAbs2();
  for (Eigen::Index t = 0; t < frames; ++t) {
    acc.segment(t * spec.hop, n) += irfft(spec.frame(t), n).cwiseProduct(window);
    norm.segment(t * spec.hop, n) += window_sq;
  }
  out.samples.resize(length);
  for (Eigen::Index i = 0; i < length; ++i) out.samples[i] = norm[i] > 1e-10 ? acc[i] / norm[i] : 0.0;
  return out;
}

FeatureVector features(const Eigen::Ref<const Eigen::VectorXcd>& frame) {
  if (frame.size() != kNumBins)
    throw InvalidArgument("features: expected " + std::to_string(kNumBins) + " bins, got " +
                          std::to_string(frame.size()));
  return frame.head(kFeatureDim).cwiseAbs();
}

}  // namespace adenoise
