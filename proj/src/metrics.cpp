#include "adenoise/metrics.hpp"

#include <algorithm>

namespace adenoise {

double lsd(const Spectrogram& clean_spec, const Spectrogram& est_spec) {
  if (clean_spec.num_frames() != est_spec.num_frames() || clean_spec.num_bins() != est_spec.num_bins())
    throw InvalidArgument("lsd: spectrogram shapes differ");
  const Eigen::Index frames = clean_spec.num_frames();
  if (frames == 0 || clean_spec.num_bins() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index t = 0; t < frames; ++t) {
    const Eigen::ArrayXd ratio_db =
        20.0 * ((clean_spec.frame(t).cwiseAbs().array() + kLsdEpsilon) /
                (est_spec.frame(t).cwiseAbs().array() + kLsdEpsilon))
                   .log10();
    total += std::sqrt(ratio_db.square().mean());
  }
  return total / double(frames);
}

double lsd(const AudioSignal& clean, const AudioSignal& estimate) {
  if (clean.size() != estimate.size()) throw InvalidArgument("lsd: length mismatch");
  return lsd(stft(clean), stft(estimate));
}

AggregateMetrics aggregate(const std::vector<UtteranceMetrics>& rows) {
  AggregateMetrics agg;
  agg.count = rows.size();
  if (rows.empty()) return agg;
  for (const auto& r : rows) {
    agg.snr_db += r.snr_db;
    agg.lsd += r.lsd;
    agg.mse += r.mse;
  }
  const double n = double(rows.size());
  agg.snr_db /= n;
  agg.lsd /= n;
  agg.mse /= n;
  return agg;
}

UtteranceMetrics measure(const std::string& id, double input_snr_db, const AudioSignal& clean,
                         const AudioSignal& estimate) {
  UtteranceMetrics m;
  m.utterance_id = id;
  m.input_snr_db = input_snr_db;
  m.snr_db = snr_db(clean, estimate);
  m.lsd = lsd(clean, estimate);
  m.mse = mse_time(clean, estimate);
  return m;
}

MetricReport MetricReport::from_rows(std::string method, std::vector<UtteranceMetrics> rows) {
  MetricReport report;
  report.method = std::move(method);
  report.overall = aggregate(rows);
  std::map<double, std::vector<UtteranceMetrics>> by_bucket;
  for (const auto& r : rows) by_bucket[r.input_snr_db].push_back(r);
  for (const auto& [snr, bucket] : by_bucket) report.buckets[snr] = aggregate(bucket);
  report.utterances = std::move(rows);
  return report;
}

}  // namespace adenoise
