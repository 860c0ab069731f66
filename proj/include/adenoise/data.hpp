#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adenoise/dsp.hpp"
#include "adenoise/rng.hpp"

namespace adenoise {

// ---------------------------------------------------------------------------
// WAV I/O

enum class WavFormat { Pcm16, Float32 };

/// Reads a mono RIFF/WAVE file (PCM 16-bit or IEEE float 32-bit). PCM samples
/// are scaled by 1/32768. Throws ParseError on malformed or truncated input,
/// UnsupportedFormat on anything else that is well formed.
AudioSignal read_wav(const std::filesystem::path& path);
AudioSignal parse_wav(std::span<const std::uint8_t> bytes);

/// Writes a mono file. PCM16 rounds x * 32768 to nearest and saturates.
void write_wav(const std::filesystem::path& path, const AudioSignal& signal, WavFormat format = WavFormat::Pcm16);
std::vector<std::uint8_t> encode_wav(const AudioSignal& signal, WavFormat format = WavFormat::Pcm16);

// ---------------------------------------------------------------------------
// Mixing and reverberation

/// Mean power of a signal.
double signal_power(const Eigen::Ref<const Eigen::VectorXd>& x);

struct Mixture {
  AudioSignal noisy;
  Eigen::VectorXd scaled_noise;  ///< k * noise segment actually added
  double noise_gain = 0.0;       ///< k
  Eigen::Index noise_offset = 0;
};

/// Noise segment of clean.size() samples starting at `offset`, tiling the
/// noise when it is shorter than the clean signal.
Eigen::VectorXd noise_segment(const AudioSignal& noise, Eigen::Index offset, Eigen::Index length);

/// clean + k * noise[offset ...], with k chosen so that the clean-to-scaled-noise
/// power ratio equals `target_snr_db`.
Mixture mix_at_snr(const AudioSignal& clean, const AudioSignal& noise, double target_snr_db, Eigen::Index offset);
/// As above with the crop offset drawn uniformly from `rng`.
Mixture mix_at_snr(const AudioSignal& clean, const AudioSignal& noise, double target_snr_db, Rng& rng);

/// Linear convolution truncated to the input length. Uses FFT overlap-add
/// for responses longer than 128 taps and direct summation otherwise.
AudioSignal convolve_rir(const AudioSignal& signal, const AudioSignal& rir);
/// Direct O(N*M) convolution, truncated to the input length.
AudioSignal convolve_direct(const AudioSignal& signal, const AudioSignal& rir);

// ---------------------------------------------------------------------------
// Manifest

enum class Split { Train, Val, Test };
std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct ManifestEntry {
  std::string utterance_id;
  std::string clean_path;
  std::string noise_path;
  std::optional<std::string> rir_path;
  double target_snr_db = 0.0;
  Split split = Split::Train;
  std::optional<std::string> noisy_path;  ///< set once the mixture has been rendered
};

struct Manifest {
  static constexpr int kSchemaVersion = 1;
  int sample_rate = kSampleRate;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{75.0, 15.0, 15.0};
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> split(Split s) const;
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
void save_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest load_manifest(const std::filesystem::path& path);

/// Split sizes for `n` items under `ratios`, by largest-remainder rounding of
/// the normalized ratios. Ties go to the earlier split.
std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& ratios);

struct ManifestOptions {
  std::vector<double> snr_grid{0.0, 10.0, 20.0, 30.0};
  std::array<double, 3> ratios{75.0, 15.0, 15.0};
  std::uint64_t seed = 0;
};

/// Lists *.wav files under the directories (sorted by name), shuffles clean
/// files with the seed, cuts them into splits, draws a noise file (and an RIR
/// when rir_dir is given) per entry, and assigns SNRs round-robin within each
/// split.
Manifest build_manifest(const std::filesystem::path& clean_dir, const std::filesystem::path& noise_dir,
                        const std::optional<std::filesystem::path>& rir_dir, const ManifestOptions& options);

/// A fully rendered training/evaluation example held in memory.
struct Utterance {
  std::string id;
  AudioSignal clean;  ///< reference (reverberated when an RIR is used)
  AudioSignal noisy;
  double snr_db = 0.0;
};

/// Crop offset the mixer uses for an entry; derived from the manifest seed.
Eigen::Index mixing_offset(const Manifest& m, const ManifestEntry& e, Eigen::Index noise_length,
                           Eigen::Index clean_length);

/// Renders one entry: reverberates clean and noise with the entry's RIR (if
/// any), then mixes at the target SNR. Exact and deterministic, so callers
/// never depend on re-reading quantized noisy files.
Utterance render_utterance(const Manifest& m, const ManifestEntry& e);
std::vector<Utterance> render_split(const Manifest& m, Split s);

// ---------------------------------------------------------------------------
// Synthetic corpus

struct SynthConfig {
  int num_clean = 140;
  int num_noise = 12;
  int num_rir = 4;
  double duration_s = 4.0;
  double f0_min = 90.0;
  double f0_max = 240.0;
  double rt60_min = 0.15;
  double rt60_max = 0.5;
  int sample_rate = kSampleRate;
  double lead_in_s = 0.3;       ///< leading silence of every clean file
  double noise_floor_dbfs = -75.0;  ///< tiny stationary floor under clean speech
};

/// Harmonic-complex "speech" with pitch glides, syllabic amplitude envelopes,
/// moving formant weighting, and silence gaps between words.
AudioSignal synth_speech_like(const SynthConfig& cfg, Rng& rng);

enum class NoiseKind { White, Pink, Babble };
std::string to_string(NoiseKind k);
AudioSignal synth_white_noise(Eigen::Index length, int sample_rate, Rng& rng);
/// 1/f power spectrum by spectral shaping of white noise.
AudioSignal synth_pink_noise(Eigen::Index length, int sample_rate, Rng& rng);
/// Sum of several amplitude-modulated talkers plus a little pink noise.
AudioSignal synth_babble_noise(const SynthConfig& cfg, Eigen::Index length, Rng& rng);
/// Exponentially decaying Gaussian tail with a unit direct path.
AudioSignal synth_rir(double rt60_s, int sample_rate, Rng& rng);

struct CorpusLayout {
  std::filesystem::path clean_dir;
  std::filesystem::path noise_dir;
  std::filesystem::path rir_dir;
};

/// Writes clean/, noise/ and rir/ under `out_dir` as 16-bit PCM. Every file
/// draws from its own derived stream so the corpus is bitwise reproducible.
CorpusLayout synth_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir, std::uint64_t seed);

}  // namespace adenoise
