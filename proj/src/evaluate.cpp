#include "adenoise/evaluate.hpp"

#include <cstdio>
#include <ostream>

#include "adenoise/parallel.hpp"

namespace adenoise {

MetricReport evaluate(const std::vector<Utterance>& split, const EvalMethod& method) {
  if (method.kind == MethodKind::Policy && method.policy == nullptr)
    throw NotFound("evaluate: policy method requires a loaded checkpoint");
  std::vector<UtteranceMetrics> rows(split.size());
  parallel_for(split.size(), [&](std::size_t i) {
    const Utterance& u = split[i];
    AudioSignal estimate;
    switch (method.kind) {
      case MethodKind::Noisy: estimate = u.noisy; break;
      case MethodKind::Clean: estimate = u.clean; break;
      case MethodKind::FixedParams: estimate = enhance_utterance(u.noisy, method.params, method.config.enhancer); break;
      case MethodKind::Policy:
        estimate = run_policy(*method.policy, u, method.config, method.config.eval_action_mode,
                              derive_seed(method.config.seed, "evaluate", i))
                       .enhanced;
        break;
    }
    rows[i] = measure(u.id, u.snr_db, u.clean, estimate);
  });
  return MetricReport::from_rows(method.label, std::move(rows));
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_report_csv(std::ostream& out, const MetricReport& report) {
  out << "utterance_id,input_snr_db,snr_db,lsd,mse\n";
  for (const auto& r : report.utterances)
    out << r.utterance_id << ',' << num(r.input_snr_db) << ',' << num(r.snr_db) << ',' << num(r.lsd) << ','
        << num(r.mse) << '\n';
  out << "__all__,," << num(report.overall.snr_db) << ',' << num(report.overall.lsd) << ','
      << num(report.overall.mse) << '\n';
  for (const auto& [snr, agg] : report.buckets)
    out << "__bucket_" << num(snr) << "__," << num(snr) << ',' << num(agg.snr_db) << ',' << num(agg.lsd) << ','
        << num(agg.mse) << '\n';
}

nlohmann::json report_to_json(const MetricReport& report) {
  auto agg_json = [](const AggregateMetrics& a) {
    return nlohmann::json{{"count", a.count}, {"snr_db", a.snr_db}, {"lsd", a.lsd}, {"mse", a.mse}};
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.utterances)
    rows.push_back({{"utterance_id", r.utterance_id},
                    {"input_snr_db", r.input_snr_db},
                    {"snr_db", r.snr_db},
                    {"lsd", r.lsd},
                    {"mse", r.mse}});
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& [snr, agg] : report.buckets) {
    auto b = agg_json(agg);
    b["input_snr_db"] = snr;
    buckets.push_back(std::move(b));
  }
  return {{"schema_version", 1},
          {"method", report.method},
          {"overall", agg_json(report.overall)},
          {"buckets", std::move(buckets)},
          {"utterances", std::move(rows)},
          {"wer", "n/a"},
          {"ser", "n/a"},
          {"pesq", "n/a"}};
}

void write_bucket_csv(std::ostream& out, const std::vector<MetricReport>& reports) {
  out << "method,input_snr_db,count,snr_db,lsd,mse\n";
  for (const auto& report : reports)
    for (const auto& [snr, agg] : report.buckets)
      out << report.method << ',' << num(snr) << ',' << agg.count << ',' << num(agg.snr_db) << ',' << num(agg.lsd)
          << ',' << num(agg.mse) << '\n';
}

void write_results_table(std::ostream& out, const std::vector<MetricReport>& reports) {
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %10s %10s %12s %6s %6s %6s\n", "method", "SNR(dB)", "LSD", "MSE", "WER",
                "SER", "PESQ");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-16s %10.2f %10.2f %12.5g %6s %6s %6s\n", r.method.c_str(), r.overall.snr_db,
                  r.overall.lsd, r.overall.mse, "n/a", "n/a", "n/a");
    out << line;
  }
}

}  // namespace adenoise
