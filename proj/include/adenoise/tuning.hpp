#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "adenoise/data.hpp"
#include "adenoise/enhancer.hpp"
#include "adenoise/metrics.hpp"
#include "adenoise/nelder_mead.hpp"
#include "adenoise/parameters.hpp"

namespace adenoise {

struct TuneOptions {
  NelderMeadOptions nelder_mead{.max_iter = 120, .tol = 1e-4, .initial_step = 0.15};
  /// Weights of (-SNR, LSD, MSE) after normalization.
  std::array<double, 3> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  EnhancerOptions enhancer;
};

/// Min-max ranges of each split-mean metric over the initial simplex.
struct MetricScaling {
  std::array<double, 3> min{};  ///< snr, lsd, mse
  std::array<double, 3> max{};

  /// w1 * (-snr_norm) + w2 * lsd_norm + w3 * mse_norm.
  double score(const AggregateMetrics& m, const std::array<double, 3>& weights) const;
};

/// Mean SNR/LSD/MSE over `split` with a fixed parameter set.
AggregateMetrics evaluate_fixed(const std::vector<Utterance>& split, const ParameterSet& params,
                                const EnhancerOptions& enhancer = {});

struct TuneResult {
  ParameterSet params;
  double objective = 0.0;
  double start_objective = 0.0;  ///< objective at the starting point
  AggregateMetrics metrics;
  MetricScaling scaling;
  NelderMeadResult search;
};

/// Offline fixed-parameter baseline: Nelder-Mead over the normalized parameter
/// cube minimizing the equally weighted, min-max normalized metric objective
/// averaged over the training split.
TuneResult tune_baseline(const std::vector<Utterance>& train_split, const ParameterSet& start,
                         const TuneOptions& options = {});

/// Versioned JSON parameter document.
nlohmann::json params_to_json(const ParameterSet& p);
ParameterSet params_from_json(const nlohmann::json& j);
void save_params(const std::filesystem::path& path, const ParameterSet& p);
ParameterSet load_params(const std::filesystem::path& path);

}  // namespace adenoise
