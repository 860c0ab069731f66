#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adenoise/dsp.hpp"
#include "adenoise/errors.hpp"

namespace adenoise {

inline constexpr double kSnrCapDb = 100.0;
inline constexpr double kLsdEpsilon = 1e-10;

/// 10 log10(sum g^2 / sum (g - g_hat)^2), capped at +100 dB when the error
/// energy falls below 1e-20 of the signal energy.
template <typename DerivedA, typename DerivedB>
double snr_db(const Eigen::MatrixBase<DerivedA>& clean, const Eigen::MatrixBase<DerivedB>& estimate) {
  if (clean.size() != estimate.size()) throw InvalidArgument("snr_db: length mismatch");
  const double signal = clean.squaredNorm();
  if (!(signal > 0.0)) throw InvalidArgument("snr_db: clean signal has zero energy");
  const double error = (clean - estimate).squaredNorm();
  if (error < 1e-20 * signal) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(signal / error));
}

inline double snr_db(const AudioSignal& clean, const AudioSignal& estimate) {
  return snr_db(clean.samples, estimate.samples);
}

/// (1/N) sum (g - g_hat)^2.
template <typename DerivedA, typename DerivedB>
double mse_time(const Eigen::MatrixBase<DerivedA>& clean, const Eigen::MatrixBase<DerivedB>& estimate) {
  if (clean.size() != estimate.size()) throw InvalidArgument("mse_time: length mismatch");
  if (clean.size() == 0) return 0.0;
  return (clean - estimate).squaredNorm() / double(clean.size());
}

inline double mse_time(const AudioSignal& clean, const AudioSignal& estimate) {
  return mse_time(clean.samples, estimate.samples);
}

/// Mean over frames of the RMS (over bins) of 20 log10((|G| + eps) / (|G_hat| + eps)).
double lsd(const Spectrogram& clean_spec, const Spectrogram& est_spec);

/// Time-domain convenience: analyses both signals with the default STFT first.
double lsd(const AudioSignal& clean, const AudioSignal& estimate);

struct UtteranceMetrics {
  std::string utterance_id;
  double input_snr_db = 0.0;  ///< the mixing target; used for bucketing
  double snr_db = 0.0;
  double lsd = 0.0;
  double mse = 0.0;
};

struct AggregateMetrics {
  std::size_t count = 0;
  double snr_db = 0.0;
  double lsd = 0.0;
  double mse = 0.0;
};

AggregateMetrics aggregate(const std::vector<UtteranceMetrics>& rows);

UtteranceMetrics measure(const std::string& id, double input_snr_db, const AudioSignal& clean,
                         const AudioSignal& estimate);

/// One evaluated method over one split: per-utterance rows, the mean over
/// all of them, and the same means per input-SNR bucket.
struct MetricReport {
  std::string method;
  std::vector<UtteranceMetrics> utterances;
  AggregateMetrics overall;
  std::map<double, AggregateMetrics> buckets;

  static MetricReport from_rows(std::string method, std::vector<UtteranceMetrics> rows);
};

}  // namespace adenoise
