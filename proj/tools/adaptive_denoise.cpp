#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adenoise/checkpoint.hpp"
#include "adenoise/config.hpp"
#include "adenoise/evaluate.hpp"
#include "adenoise/tuning.hpp"

namespace fs = std::filesystem;
using namespace adenoise;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw NotFound("cannot create " + path.string());
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number '" + item + "' in list '" + text + "'");
    }
  }
  if (values.empty()) throw ConfigError("empty list '" + text + "'");
  return values;
}

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  Config load() const {
    Config c = config_path.empty() ? Config{} : load_config(config_path);
    if (seed) c.seed = *seed;
    c.sync();
    return c;
  }
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", common.seed, "root random seed (overrides the config)");
}

Split parse_split(const std::string& s) {
  try {
    return split_from_string(s);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

// synth ---------------------------------------------------------------------

int cmd_synth(const Common& common, const fs::path& out_dir) {
  const Config c = common.load();
  const CorpusLayout layout = synth_corpus(c.synth, out_dir, c.seed);
  std::cout << layout.clean_dir.string() << '\n' << layout.noise_dir.string() << '\n';
  if (c.synth.num_rir > 0) std::cout << layout.rir_dir.string() << '\n';
  return kOk;
}

// mix -----------------------------------------------------------------------

struct MixArgs {
  fs::path corpus = "corpus";
  std::string clean_dir, noise_dir, rir_dir, snr_grid;
  bool no_rir = false;
  fs::path out_dir = "mix";
};

int cmd_mix(const Common& common, const MixArgs& a) {
  Config c = common.load();
  if (!a.snr_grid.empty()) c.data.snr_grid = parse_list(a.snr_grid);
  const fs::path clean = a.clean_dir.empty() ? a.corpus / "clean" : fs::path(a.clean_dir);
  const fs::path noise = a.noise_dir.empty() ? a.corpus / "noise" : fs::path(a.noise_dir);
  std::optional<fs::path> rir;
  if (c.use_rir && !a.no_rir) {
    const fs::path dir = a.rir_dir.empty() ? a.corpus / "rir" : fs::path(a.rir_dir);
    if (!a.rir_dir.empty() || fs::is_directory(dir)) rir = dir;
  }
  for (const fs::path& d : {clean, noise})
    if (!fs::is_directory(d)) throw NotFound("directory not found: " + d.string());

  Manifest m = build_manifest(clean, noise, rir, c.data);
  const fs::path noisy_dir = a.out_dir / "noisy";
  fs::create_directories(noisy_dir);
  for (auto& e : m.entries) {
    const Utterance u = render_utterance(m, e);
    const fs::path path = noisy_dir / (e.utterance_id + ".wav");
    write_wav(path, u.noisy, WavFormat::Float32);
    e.noisy_path = path.string();
  }
  const fs::path manifest_path = a.out_dir / "manifest.json";
  save_manifest(manifest_path, m);
  std::cout << manifest_path.string() << '\n';
  return kOk;
}

// tune ----------------------------------------------------------------------

int cmd_tune(const Common& common, const fs::path& manifest_path, const fs::path& out, const fs::path& trace) {
  const Config c = common.load();
  const Manifest m = load_manifest(manifest_path);
  const std::vector<Utterance> train = render_split(m, Split::Train);
  const TuneResult r = tune_baseline(train, ParameterSet{}, c.tune);
  save_params(out, r.params);

  const fs::path trace_path = trace.empty() ? fs::path(out).replace_extension(".trace.csv") : trace;
  std::ofstream t = open_out(trace_path);
  t << "iteration,evaluations,best_value,spread\n";
  for (const auto& row : r.search.trace)
    t << row.iteration << ',' << row.evaluations << ',' << num(row.best_value) << ',' << num(row.spread) << '\n';
  std::cerr << "tune: objective " << r.start_objective << " -> " << r.objective << " after " << r.search.iterations
            << " iterations; train SNR " << r.metrics.snr_db << " dB\n";
  std::cout << out.string() << '\n' << trace_path.string() << '\n';
  return kOk;
}

// train ---------------------------------------------------------------------

struct TrainArgs {
  fs::path manifest;
  std::string params;
  std::string baseline_mode;
  fs::path out_dir = "run";
};

int cmd_train(const Common& common, const TrainArgs& a) {
  Config c = common.load();
  if (!a.baseline_mode.empty()) {
    try {
      c.trainer.baseline_mode = baseline_mode_from_string(a.baseline_mode);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  const Manifest m = load_manifest(a.manifest);
  const ParameterSet initial = a.params.empty() ? ParameterSet{} : load_params(a.params);
  const std::vector<Utterance> train_split = render_split(m, Split::Train);
  const std::vector<Utterance> val_split = render_split(m, Split::Val);

  fs::create_directories(a.out_dir);
  std::ofstream log = open_out(a.out_dir / "training_log.csv");
  std::ofstream timing = open_out(a.out_dir / "training_timing.csv");
  log << "episode_id,epoch,utterance_id,seed,learning_rate,return,gradient_norm\n";
  timing << "episode_id,wall_time_s\n";
  const TrainResult result = train(c.trainer, train_split, val_split, initial, [&](const EpisodeLogRecord& r) {
    log << r.episode_id << ',' << r.epoch << ',' << r.utterance_id << ',' << r.seed << ',' << num(r.learning_rate)
        << ',' << num(r.total_return) << ',' << num(r.gradient_norm) << '\n';
    timing << r.episode_id << ',' << num(r.wall_time_s) << '\n';
  });

  std::ofstream epochs = open_out(a.out_dir / "validation.csv");
  epochs << "learning_rate,epoch,val_mean_return,val_snr_db,val_lsd,val_mse\n";
  for (const auto& e : result.epochs)
    epochs << num(e.learning_rate) << ',' << e.epoch << ',' << num(e.val_mean_return) << ','
           << num(e.val_metrics.snr_db) << ',' << num(e.val_metrics.lsd) << ',' << num(e.val_metrics.mse) << '\n';

  const fs::path ckpt = a.out_dir / "checkpoint.bin";
  save_checkpoint(ckpt, result.best, to_json(c));
  std::cerr << "train: selected lr " << result.selected_learning_rate << ", epoch " << result.best.epoch
            << ", validation return " << result.best.validation_return << '\n';
  std::cout << ckpt.string() << '\n';
  return kOk;
}

// enhance -------------------------------------------------------------------

struct EnhanceArgs {
  std::string checkpoint, params, reference, trace;
  fs::path in, out;
};

int cmd_enhance(const Common& common, const EnhanceArgs& a) {
  const AudioSignal noisy = read_wav(a.in);
  std::vector<ParameterSet> per_frame;
  std::vector<double> rewards;
  AudioSignal enhanced;
  if (!a.checkpoint.empty()) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    Config c = config_from_json(ck.config);
    if (common.seed) c.seed = *common.seed;
    c.sync();
    Utterance u;
    u.id = a.in.stem().string();
    u.noisy = noisy;
    if (!a.reference.empty()) u.clean = read_wav(a.reference);
    const Episode ep = run_policy(ck.state, u, c.trainer, c.trainer.eval_action_mode, derive_seed(c.seed, "enhance", 0));
    enhanced = ep.enhanced;
    for (const auto& s : ep.trajectory.steps) {
      per_frame.push_back(s.params_applied);
      rewards.push_back(s.raw_reward);
    }
  } else {
    const Config c = common.load();
    const ParameterSet p = a.params.empty() ? ParameterSet{} : load_params(a.params);
    enhanced = enhance_utterance(noisy, p, c.enhancer);
    per_frame.assign(std::size_t(utterance_frame_count(noisy.size())), p);
  }
  write_wav(a.out, enhanced, WavFormat::Float32);
  std::cout << a.out.string() << '\n';

  if (!a.trace.empty()) {
    std::ofstream t = open_out(a.trace);
    t << "frame,time_s";
    for (const auto& spec : kParamSpecs) t << ',' << spec.name;
    if (!rewards.empty() && !a.reference.empty()) t << ",reward";
    t << '\n';
    for (std::size_t i = 0; i < per_frame.size(); ++i) {
      t << i << ',' << num(double(i) * kHop / noisy.sample_rate);
      for (std::size_t k = 0; k < kNumParams; ++k) t << ',' << num(per_frame[i][k]);
      if (!rewards.empty() && !a.reference.empty()) t << ',' << num(rewards[i]);
      t << '\n';
    }
    std::cout << a.trace << '\n';
  }
  return kOk;
}

// eval ----------------------------------------------------------------------

EvalMethod make_method(MethodKind kind, std::string label) {
  EvalMethod m;
  m.kind = kind;
  m.label = std::move(label);
  return m;
}

struct EvalArgs {
  fs::path manifest;
  std::string split = "test";
  std::string params;
  std::vector<std::string> checkpoints;
  fs::path out_dir = "eval";
};

int cmd_eval(const Common& common, const EvalArgs& a) {
  const Config c = common.load();
  const Manifest m = load_manifest(a.manifest);
  const std::vector<Utterance> utterances = render_split(m, parse_split(a.split));
  if (utterances.empty()) throw InvalidArgument("eval: split '" + a.split + "' is empty");

  std::vector<MetricReport> reports;
  EvalMethod noisy = make_method(MethodKind::Noisy, "noisy");
  reports.push_back(evaluate(utterances, noisy));

  EvalMethod fixed = make_method(MethodKind::FixedParams, "baseline");
  fixed.params = a.params.empty() ? ParameterSet{} : load_params(a.params);
  fixed.config = c.trainer;
  reports.push_back(evaluate(utterances, fixed));

  std::vector<Checkpoint> loaded;
  loaded.reserve(a.checkpoints.size());
  for (const auto& path : a.checkpoints) loaded.push_back(load_checkpoint(path));
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    Config pc = config_from_json(loaded[i].config);
    pc.seed = c.seed;
    pc.sync();
    EvalMethod policy = make_method(MethodKind::Policy, "");
    policy.label = loaded[i].state.baseline.mode == BaselineMode::None ? "rl-unbiased" : "rl-baselined";
    for (std::size_t j = 0; j < i; ++j)
      if (reports[2 + j].method == policy.label) policy.label += "-" + std::to_string(i);
    policy.policy = &loaded[i].state;
    policy.config = pc.trainer;
    reports.push_back(evaluate(utterances, policy));
  }

  EvalMethod clean = make_method(MethodKind::Clean, "clean");
  reports.push_back(evaluate(utterances, clean));

  fs::create_directories(a.out_dir);
  for (const auto& r : reports) {
    std::ofstream csv = open_out(a.out_dir / ("report_" + r.method + ".csv"));
    write_report_csv(csv, r);
    std::ofstream json = open_out(a.out_dir / ("report_" + r.method + ".json"));
    json << report_to_json(r).dump(2) << '\n';
  }
  std::ofstream buckets = open_out(a.out_dir / "buckets.csv");
  write_bucket_csv(buckets, reports);
  std::ofstream table = open_out(a.out_dir / "results.txt");
  write_results_table(table, reports);
  write_results_table(std::cout, reports);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive noise suppression with a reinforcement-learned parameter controller"};
  app.require_subcommand(1);
  Common common;

  fs::path synth_out = "corpus";
  auto* synth = app.add_subcommand("synth", "generate the synthetic clean/noise/RIR corpus");
  add_common(synth, common);
  synth->add_option("--out", synth_out, "output directory");

  MixArgs mix_args;
  auto* mix = app.add_subcommand("mix", "build the manifest and render noisy mixtures");
  add_common(mix, common);
  mix->add_option("--corpus", mix_args.corpus, "corpus root holding clean/, noise/ and rir/");
  mix->add_option("--clean", mix_args.clean_dir, "clean speech directory");
  mix->add_option("--noise", mix_args.noise_dir, "noise directory");
  mix->add_option("--rir", mix_args.rir_dir, "room impulse response directory");
  mix->add_flag("--no-rir", mix_args.no_rir, "skip reverberation");
  mix->add_option("--snr-grid", mix_args.snr_grid, "comma-separated target SNRs in dB");
  mix->add_option("--out", mix_args.out_dir, "output directory");

  fs::path tune_manifest, tune_out = "baseline_params.json", tune_trace;
  auto* tune = app.add_subcommand("tune", "tune the fixed-parameter baseline with Nelder-Mead");
  add_common(tune, common);
  tune->add_option("--manifest", tune_manifest, "manifest file")->required();
  tune->add_option("--out", tune_out, "parameter document to write");
  tune->add_option("--trace", tune_trace, "iteration trace CSV");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train the policy with REINFORCE");
  add_common(train_cmd, common);
  train_cmd->add_option("--manifest", train_args.manifest, "manifest file")->required();
  train_cmd->add_option("--params", train_args.params, "initial parameter document (tuned baseline)");
  train_cmd->add_option("--baseline-mode", train_args.baseline_mode, "none | episode-mean | ema | reference");
  train_cmd->add_option("--out", train_args.out_dir, "output directory");

  EnhanceArgs enhance_args;
  auto* enhance = app.add_subcommand("enhance", "enhance one file with a checkpoint or fixed parameters");
  add_common(enhance, common);
  auto* ck_opt = enhance->add_option("--checkpoint", enhance_args.checkpoint, "policy checkpoint");
  auto* par_opt = enhance->add_option("--params", enhance_args.params, "parameter document");
  ck_opt->excludes(par_opt);
  enhance->add_option("--reference", enhance_args.reference, "clean reference (feeds the reward input)");
  enhance->add_option("--in", enhance_args.in, "noisy WAV")->required();
  enhance->add_option("--out", enhance_args.out, "enhanced WAV")->required();
  enhance->add_option("--trace", enhance_args.trace, "per-frame parameter CSV");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "score methods on a manifest split");
  add_common(eval, common);
  eval->add_option("--manifest", eval_args.manifest, "manifest file")->required();
  eval->add_option("--split", eval_args.split, "train | val | test");
  eval->add_option("--params", eval_args.params, "tuned baseline parameter document");
  eval->add_option("--checkpoint", eval_args.checkpoints, "policy checkpoint (repeatable)");
  eval->add_option("--out", eval_args.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(common, synth_out);
    if (*mix) return cmd_mix(common, mix_args);
    if (*tune) return cmd_tune(common, tune_manifest, tune_out, tune_trace);
    if (*train_cmd) return cmd_train(common, train_args);
    if (*enhance) return cmd_enhance(common, enhance_args);
    if (*eval) return cmd_eval(common, eval_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
