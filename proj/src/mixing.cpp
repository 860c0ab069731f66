#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/FFT>

#include "adenoise/data.hpp"
#include "adenoise/errors.hpp"

namespace adenoise {

double signal_power(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return x.size() == 0 ? 0.0 : x.squaredNorm() / double(x.size());
}

Eigen::VectorXd noise_segment(const AudioSignal& noise, Eigen::Index offset, Eigen::Index length) {
  if (noise.size() == 0) throw InvalidArgument("noise_segment: empty noise");
  if (offset < 0) throw InvalidArgument("noise_segment: negative offset");
  Eigen::VectorXd seg(length);
  for (Eigen::Index i = 0; i < length; ++i) seg[i] = noise.samples[(offset + i) % noise.size()];
  return seg;
}

Mixture mix_at_snr(const AudioSignal& clean, const AudioSignal& noise, double target_snr_db, Eigen::Index offset) {
  if (!std::isfinite(target_snr_db)) throw InvalidArgument("mix_at_snr: non-finite target SNR");
  if (clean.sample_rate != noise.sample_rate) throw InvalidArgument("mix_at_snr: sample rates differ");
  const double p_clean = signal_power(clean.samples);
  if (!(p_clean > 0.0)) throw InvalidArgument("mix_at_snr: clean signal has zero power");

  Mixture mix;
  mix.noise_offset = offset;
  const Eigen::VectorXd seg = noise_segment(noise, offset, clean.size());
  const double p_noise = signal_power(seg);
  if (!(p_noise > 0.0)) throw InvalidArgument("mix_at_snr: noise segment has zero power");
  mix.noise_gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, target_snr_db / 10.0)));
  mix.scaled_noise = mix.noise_gain * seg;
  mix.noisy.sample_rate = clean.sample_rate;
  mix.noisy.samples = clean.samples + mix.scaled_noise;
  return mix;
}

Mixture mix_at_snr(const AudioSignal& clean, const AudioSignal& noise, double target_snr_db, Rng& rng) {
  const Eigen::Index span = std::max<Eigen::Index>(noise.size() - clean.size() + 1, 1);
  return mix_at_snr(clean, noise, target_snr_db, Eigen::Index(uniform_index(rng, std::uint64_t(span))));
}

AudioSignal convolve_direct(const AudioSignal& signal, const AudioSignal& rir) {
  if (rir.size() == 0) throw InvalidArgument("convolve: empty impulse response");
  if (!rir.samples.allFinite()) throw InvalidArgument("convolve: non-finite impulse response");
  AudioSignal out;
  out.sample_rate = signal.sample_rate;
  out.samples = Eigen::VectorXd::Zero(signal.size());
  for (Eigen::Index n = 0; n < signal.size(); ++n) {
    double acc = 0.0;
    const Eigen::Index kmax = std::min(n, rir.size() - 1);
    for (Eigen::Index k = 0; k <= kmax; ++k) acc += rir.samples[k] * signal.samples[n - k];
    out.samples[n] = acc;
  }
  return out;
}

AudioSignal convolve_rir(const AudioSignal& signal, const AudioSignal& rir) {
  if (rir.size() == 0) throw InvalidArgument("convolve: empty impulse response");
  if (!rir.samples.allFinite()) throw InvalidArgument("convolve: non-finite impulse response");
  if (rir.size() <= 128 || signal.size() == 0) return convolve_direct(signal, rir);

  // Overlap-add with blocks of `block` input samples and transform size >= block + M - 1.
  const Eigen::Index m = rir.size();
  Eigen::Index nfft = 1;
  while (nfft < 2 * m) nfft <<= 1;
  const Eigen::Index block = nfft - m + 1;

  Eigen::FFT<double> fft;
  Eigen::VectorXd padded = Eigen::VectorXd::Zero(nfft);
  padded.head(m) = rir.samples;
  Eigen::VectorXcd rir_spec;
  fft.fwd(rir_spec, padded);

  AudioSignal out;
  out.sample_rate = signal.sample_rate;
  out.samples = Eigen::VectorXd::Zero(signal.size());
  Eigen::VectorXcd spec;
  Eigen::VectorXd chunk;
  for (Eigen::Index start = 0; start < signal.size(); start += block) {
    const Eigen::Index len = std::min(block, signal.size() - start);
    padded.setZero();
    padded.head(len) = signal.samples.segment(start, len);
    fft.fwd(spec, padded);
    spec = spec.cwiseProduct(rir_spec);
    fft.inv(chunk, spec);
    const Eigen::Index keep = std::min(nfft, signal.size() - start);
    out.samples.segment(start, keep) += chunk.head(keep);
  }
  return out;
}

}  // namespace adenoise
