#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "adenoise/data.hpp"
#include "adenoise/errors.hpp"

namespace adenoise {

namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Formant {
  double freq;
  double bandwidth;
  double gain;
};

double formant_weight(double f, const std::array<Formant, 3>& formants) {
  double w = 0.05;
  for (const auto& fm : formants) {
    const double d = (f - fm.freq) / fm.bandwidth;
    w += fm.gain * std::exp(-0.5 * d * d);
  }
  return w;
}

/// Adds one voiced word of `length` samples at `start` into `out`.
void add_word(Eigen::VectorXd& out, Eigen::Index start, Eigen::Index length, const SynthConfig& cfg, Rng& rng) {
  const double fs = cfg.sample_rate;
  const double f0_begin = uniform(rng, cfg.f0_min, cfg.f0_max);
  const double f0_end = std::clamp(f0_begin * uniform(rng, 0.8, 1.2), 0.7 * cfg.f0_min, 1.3 * cfg.f0_max);
  const double vibrato_rate = uniform(rng, 3.0, 7.0);
  const double vibrato_depth = uniform(rng, 0.005, 0.02);
  const double level = uniform(rng, 0.08, 0.25);
  const int syllables = 1 + int(uniform_index(rng, 3));

  std::array<std::array<Formant, 3>, 3> formant_sets{};
  for (auto& set : formant_sets)
    set = {Formant{uniform(rng, 300.0, 850.0), uniform(rng, 80.0, 160.0), 1.0},
           Formant{uniform(rng, 900.0, 2300.0), uniform(rng, 100.0, 200.0), uniform(rng, 0.4, 0.8)},
           Formant{uniform(rng, 2400.0, 3400.0), uniform(rng, 150.0, 250.0), uniform(rng, 0.15, 0.4)}};

  const int max_harmonics = int(5000.0 / cfg.f0_min) + 1;
  std::vector<double> phase(std::size_t(max_harmonics), 0.0);
  for (auto& p : phase) p = uniform(rng, 0.0, kTwoPi);

  const Eigen::Index syl_len = std::max<Eigen::Index>(length / syllables, 1);
  for (Eigen::Index n = 0; n < length && start + n < out.size(); ++n) {
    const double pos = double(n) / double(length);
    const double f0 = (f0_begin + (f0_end - f0_begin) * pos) *
                      (1.0 + vibrato_depth * std::sin(kTwoPi * vibrato_rate * double(n) / fs));
    const Eigen::Index syl = std::min<Eigen::Index>(n / syl_len, syllables - 1);
    const double syl_pos = double(n - syl * syl_len) / double(syl_len);
    const double env = level * std::pow(std::sin(std::numbers::pi * std::clamp(syl_pos, 0.0, 1.0)), 0.6);
    const auto& formants = formant_sets[std::size_t(syl)];

    double acc = 0.0;
    for (int h = 1; h <= max_harmonics; ++h) {
      const double fh = h * f0;
      if (fh >= 0.45 * fs || fh > 5000.0) break;
      auto& ph = phase[std::size_t(h - 1)];
      ph += kTwoPi * fh / fs;
      if (ph > kTwoPi) ph -= kTwoPi;
      acc += formant_weight(fh, formants) / std::sqrt(double(h)) * std::sin(ph);
    }
    out[start + n] += env * acc;
  }
}

void normalize_rms(Eigen::VectorXd& x, double target_rms) {
  const double rms = std::sqrt(signal_power(x));
  if (rms > 0.0) x *= target_rms / rms;
}

void write_corpus_file(const fs::path& path, AudioSignal sig) {
  const double peak = sig.samples.cwiseAbs().maxCoeff();
  if (peak > 0.95) sig.samples *= 0.95 / peak;
  write_wav(path, sig, WavFormat::Pcm16);
}

std::string numbered(const char* prefix, int i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04d.wav", prefix, i);
  return buf;
}

}  // namespace

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::White: return "white";
    case NoiseKind::Pink: return "pink";
    case NoiseKind::Babble: return "babble";
  }
  return "?";
}

AudioSignal synth_speech_like(const SynthConfig& cfg, Rng& rng) {
  const auto length = Eigen::Index(std::llround(cfg.duration_s * cfg.sample_rate));
  AudioSignal sig;
  sig.sample_rate = cfg.sample_rate;
  sig.samples = Eigen::VectorXd::Zero(length);

  const double fs = cfg.sample_rate;
  Eigen::Index pos = Eigen::Index(cfg.lead_in_s * fs);
  const Eigen::Index tail = Eigen::Index(0.1 * fs);
  while (pos + Eigen::Index(0.2 * fs) < length - tail) {
    const Eigen::Index word = std::min(Eigen::Index(uniform(rng, 0.25, 0.6) * fs), length - tail - pos);
    add_word(sig.samples, pos, word, cfg, rng);
    pos += word + Eigen::Index(uniform(rng, 0.1, 0.35) * fs);
  }

  const double floor_rms = std::pow(10.0, cfg.noise_floor_dbfs / 20.0);
  for (Eigen::Index i = 0; i < length; ++i) sig.samples[i] += floor_rms * standard_normal(rng);
  return sig;
}

AudioSignal synth_white_noise(Eigen::Index length, int sample_rate, Rng& rng) {
  AudioSignal sig;
  sig.sample_rate = sample_rate;
  sig.samples.resize(length);
  for (Eigen::Index i = 0; i < length; ++i) sig.samples[i] = standard_normal(rng);
  return sig;
}

AudioSignal synth_pink_noise(Eigen::Index length, int sample_rate, Rng& rng) {
  Eigen::Index nfft = 1;
  while (nfft < length) nfft <<= 1;
  const AudioSignal white = synth_white_noise(nfft, sample_rate, rng);
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  Eigen::VectorXcd spec;
  fft.fwd(spec, white.samples);
  spec[0] = 0.0;
  for (Eigen::Index k = 1; k < spec.size(); ++k) spec[k] /= std::sqrt(double(k));
  Eigen::VectorXd shaped;
  fft.inv(shaped, spec, nfft);

  AudioSignal sig;
  sig.sample_rate = sample_rate;
  sig.samples = shaped.head(length);
  normalize_rms(sig.samples, 1.0);
  return sig;
}

AudioSignal synth_babble_noise(const SynthConfig& cfg, Eigen::Index length, Rng& rng) {
  SynthConfig talker = cfg;
  talker.duration_s = double(length) / cfg.sample_rate;
  talker.lead_in_s = 0.0;
  talker.noise_floor_dbfs = -200.0;

  AudioSignal sig;
  sig.sample_rate = cfg.sample_rate;
  sig.samples = Eigen::VectorXd::Zero(length);
  for (int k = 0; k < 6; ++k) {
    AudioSignal voice = synth_speech_like(talker, rng);
    const double rate = uniform(rng, 0.3, 1.5);
    const double phase = uniform(rng, 0.0, kTwoPi);
    for (Eigen::Index i = 0; i < length; ++i)
      sig.samples[i] += voice.samples[i] * (0.6 + 0.4 * std::sin(kTwoPi * rate * double(i) / cfg.sample_rate + phase));
  }
  normalize_rms(sig.samples, 1.0);
  const AudioSignal pink = synth_pink_noise(length, cfg.sample_rate, rng);
  sig.samples += 0.1 * pink.samples;
  return sig;
}

AudioSignal synth_rir(double rt60_s, int sample_rate, Rng& rng) {
  if (!(rt60_s > 0.0)) throw InvalidArgument("synth_rir: rt60 must be positive");
  const auto length = Eigen::Index(std::ceil(rt60_s * sample_rate));
  const Eigen::Index delay = Eigen::Index(0.002 * sample_rate);
  AudioSignal rir;
  rir.sample_rate = sample_rate;
  rir.samples = Eigen::VectorXd::Zero(std::max<Eigen::Index>(length, delay + 2));
  rir.samples[0] = 1.0;
  // 60 dB amplitude decay over rt60: exp(-6.908 n / (rt60 fs)).
  const double decay = 6.907755 / (rt60_s * sample_rate);
  Eigen::VectorXd tail = Eigen::VectorXd::Zero(rir.size());
  for (Eigen::Index n = delay; n < rir.size(); ++n) tail[n] = standard_normal(rng) * std::exp(-decay * double(n - delay));
  // Direct-to-reverberant energy ratio of about +6 dB.
  const double tail_energy = tail.squaredNorm();
  if (tail_energy > 0.0) rir.samples += tail * std::sqrt(0.25 / tail_energy);
  return rir;
}

CorpusLayout synth_corpus(const SynthConfig& cfg, const fs::path& out_dir, std::uint64_t seed) {
  if (cfg.num_clean <= 0 || cfg.num_noise <= 0 || cfg.num_rir < 0)
    throw InvalidArgument("synth_corpus: file counts must be positive");
  if (!(cfg.duration_s > 0.0) || cfg.sample_rate <= 0) throw InvalidArgument("synth_corpus: invalid duration or rate");
  if (!(cfg.f0_min > 0.0 && cfg.f0_max >= cfg.f0_min)) throw InvalidArgument("synth_corpus: invalid f0 range");
  if (cfg.num_rir > 0 && !(cfg.rt60_min > 0.0 && cfg.rt60_max >= cfg.rt60_min))
    throw InvalidArgument("synth_corpus: invalid rt60 range");

  CorpusLayout layout{out_dir / "clean", out_dir / "noise", out_dir / "rir"};
  fs::create_directories(layout.clean_dir);
  fs::create_directories(layout.noise_dir);
  fs::create_directories(layout.rir_dir);

  for (int i = 0; i < cfg.num_clean; ++i) {
    Rng rng = make_rng(seed, "corpus/clean", std::uint64_t(i));
    write_corpus_file(layout.clean_dir / numbered("clean", i), synth_speech_like(cfg, rng));
  }

  // Noise files are twice the utterance length so the mixer has room to crop.
  const auto noise_len = Eigen::Index(std::llround(2.0 * cfg.duration_s * cfg.sample_rate));
  for (int i = 0; i < cfg.num_noise; ++i) {
    Rng rng = make_rng(seed, "corpus/noise", std::uint64_t(i));
    const auto kind = static_cast<NoiseKind>(i % 3);
    AudioSignal noise;
    switch (kind) {
      case NoiseKind::White: noise = synth_white_noise(noise_len, cfg.sample_rate, rng); break;
      case NoiseKind::Pink: noise = synth_pink_noise(noise_len, cfg.sample_rate, rng); break;
      case NoiseKind::Babble: noise = synth_babble_noise(cfg, noise_len, rng); break;
    }
    normalize_rms(noise.samples, 0.1);
    write_corpus_file(layout.noise_dir / numbered(("noise_" + to_string(kind)).c_str(), i), noise);
  }

  for (int i = 0; i < cfg.num_rir; ++i) {
    Rng rng = make_rng(seed, "corpus/rir", std::uint64_t(i));
    const double rt60 = uniform(rng, cfg.rt60_min, cfg.rt60_max);
    AudioSignal rir = synth_rir(rt60, cfg.sample_rate, rng);
    write_wav(layout.rir_dir / numbered("rir", i), rir, WavFormat::Float32);
  }
  return layout;
}

}  // namespace adenoise
