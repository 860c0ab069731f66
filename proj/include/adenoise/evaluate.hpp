#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "adenoise/data.hpp"
#include "adenoise/metrics.hpp"
#include "adenoise/trainer.hpp"

namespace adenoise {

enum class MethodKind { Noisy, Clean, FixedParams, Policy };

/// What to evaluate. `params` is used by FixedParams; `policy` and `config`
/// by Policy.
struct EvalMethod {
  MethodKind kind = MethodKind::Noisy;
  std::string label;
  ParameterSet params;
  const TrainingState* policy = nullptr;
  TrainerConfig config;
};

/// Per-utterance metrics of the method's output against the clean reference.
/// Utterances are processed in parallel and reduced in split order.
MetricReport evaluate(const std::vector<Utterance>& split, const EvalMethod& method);

/// Rows: utterance_id,input_snr_db,snr_db,lsd,mse then aggregate rows
/// "__all__" and "__bucket_<snr>__".
void write_report_csv(std::ostream& out, const MetricReport& report);
nlohmann::json report_to_json(const MetricReport& report);

/// Per-bucket CSV over several reports: method,input_snr_db,count,snr_db,lsd,mse.
void write_bucket_csv(std::ostream& out, const std::vector<MetricReport>& reports);

/// Results table in the noisy / baseline / rl-unbiased / rl-baselined / clean
/// layout. WER, SER and PESQ are printed as n/a.
void write_results_table(std::ostream& out, const std::vector<MetricReport>& reports);

}  // namespace adenoise
