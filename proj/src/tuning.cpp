#include "adenoise/tuning.hpp"

#include <fstream>
#include <map>

#include "adenoise/errors.hpp"
#include "adenoise/parallel.hpp"

namespace adenoise {

double MetricScaling::score(const AggregateMetrics& m, const std::array<double, 3>& weights) const {
  const std::array<double, 3> raw{m.snr_db, m.lsd, m.mse};
  std::array<double, 3> norm{};
  for (std::size_t i = 0; i < 3; ++i) {
    const double range = max[i] - min[i];
    norm[i] = (raw[i] - min[i]) / (range > 0.0 ? range : 1.0);
  }
  return -weights[0] * norm[0] + weights[1] * norm[1] + weights[2] * norm[2];
}

AggregateMetrics evaluate_fixed(const std::vector<Utterance>& split, const ParameterSet& params,
                                const EnhancerOptions& enhancer) {
  std::vector<UtteranceMetrics> rows(split.size());
  parallel_for(split.size(), [&](std::size_t i) {
    const auto& u = split[i];
    rows[i] = measure(u.id, u.snr_db, u.clean, enhance_utterance(u.noisy, params, enhancer));
  });
  return aggregate(rows);
}

TuneResult tune_baseline(const std::vector<Utterance>& train_split, const ParameterSet& start,
                         const TuneOptions& options) {
  if (train_split.empty()) throw InvalidArgument("tune_baseline: empty training split");

  std::map<std::vector<double>, AggregateMetrics> cache;
  auto metrics_at = [&](const Eigen::VectorXd& x) -> const AggregateMetrics& {
    std::vector<double> key(x.data(), x.data() + x.size());
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(std::move(key), evaluate_fixed(train_split, ParameterSet::from_normalized(x), options.enhancer))
               .first;
    return it->second;
  };

  TuneResult result;
  const Eigen::VectorXd x0 = start.normalized();
  bool first = true;
  for (const auto& v : initial_simplex(x0, options.nelder_mead.initial_step)) {
    const AggregateMetrics& m = metrics_at(v);
    const std::array<double, 3> raw{m.snr_db, m.lsd, m.mse};
    for (std::size_t i = 0; i < 3; ++i) {
      if (!std::isfinite(raw[i])) throw NumericError("tune_baseline: non-finite metric on the initial simplex");
      result.scaling.min[i] = first ? raw[i] : std::min(result.scaling.min[i], raw[i]);
      result.scaling.max[i] = first ? raw[i] : std::max(result.scaling.max[i], raw[i]);
    }
    first = false;
  }

  auto objective = [&](const Eigen::VectorXd& x) { return result.scaling.score(metrics_at(x), options.weights); };
  result.start_objective = objective(x0);
  result.search = nelder_mead(objective, x0, options.nelder_mead);
  result.params = ParameterSet::from_normalized(result.search.best);
  result.objective = result.search.value;
  result.metrics = metrics_at(result.search.best);
  return result;
}

nlohmann::json params_to_json(const ParameterSet& p) {
  nlohmann::json values = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumParams; ++i) values[std::string(kParamSpecs[i].name)] = p[i];
  return {{"schema_version", 1}, {"kind", "parameter_set"}, {"params", values}};
}

ParameterSet params_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != 1) throw ParseError("parameter document: unsupported schema_version");
    if (j.at("kind").get<std::string>() != "parameter_set") throw ParseError("parameter document: wrong kind");
    const auto& values = j.at("params");
    if (values.size() != kNumParams) throw ParseError("parameter document: expected 6 parameters");
    ParameterSet p;
    for (std::size_t i = 0; i < kNumParams; ++i) {
      const double v = values.at(std::string(kParamSpecs[i].name)).get<double>();
      if (v < kParamSpecs[i].min || v > kParamSpecs[i].max)
        throw ParseError("parameter document: " + std::string(kParamSpecs[i].name) + " out of bounds");
      p.set(i, v);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("parameter document: ") + e.what());
  }
}

void save_params(const std::filesystem::path& path, const ParameterSet& p) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw NotFound("cannot create " + path.string());
  out << params_to_json(p).dump(2) << '\n';
}

ParameterSet load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open parameter file " + path.string());
  try {
    return params_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("parameter file " + path.string() + ": " + e.what());
  }
}

}  // namespace adenoise
