// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "adenoise/config.hpp"
#include "adenoise/evaluate.hpp"
#include "adenoise/nelder_mead.hpp"
#include "adenoise/trainer.hpp"
#include "adenoise/tuning.hpp"
#include "support/bandit.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace adenoise;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Eigen::VectorXd gaussian(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = standard_normal(rng);
  return x;
}

// 1 -------------------------------------------------------------------------
Outcome stft_round_trip() {
  const auto start = Clock::now();
  Rng rng(derive_seed(1, "acceptance/stft"));
  AudioSignal x;
  x.samples.resize(kSampleRate);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.samples[i] = uniform(rng, -1.0, 1.0);
  const AudioSignal y = istft(stft(x));
  const Eigen::Index a = kHop, b = y.size() - kHop;
  const double err =
      (x.samples.segment(a, b - a) - y.samples.segment(a, b - a)).norm() / x.samples.segment(a, b - a).norm();
  const double t = seconds_since(start);
  return {err < 1e-10 && t < 1.0, fmt("relative rms error %.3g (< 1e-10), %.3f s (< 1 s)", err, t)};
}

// 2 -------------------------------------------------------------------------
Outcome cola() {
  const Eigen::VectorXd w = hann_window(512);
  const auto ref = oracle::hann(512);
  double worst = 0.0, window_err = 0.0;
  for (int k = 0; k < 256; ++k) worst = std::max(worst, std::abs(w[k] + w[k + 256] - 1.0));
  for (int k = 0; k < 512; ++k) window_err = std::max(window_err, std::abs(w[k] - ref[std::size_t(k)]));
  return {worst <= 1e-12 && window_err <= 1e-15,
          fmt("max |w[k] + w[k+256] - 1| = %.3g (<= 1e-12); window vs closed form %.3g", worst, window_err)};
}

// 3 -------------------------------------------------------------------------
Outcome gradient_check() {
  const auto start = Clock::now();
  PolicyShape shape;
  shape.hidden_size = 4;
  shape.input_size = 6;
  shape.num_heads = 2;
  Rng rng(derive_seed(1, "acceptance/gradient"));
  PolicyParameters theta(shape);
  for (Eigen::Index i = 0; i < theta.data().size(); ++i) theta.data()[i] = uniform(rng, -0.8, 0.8);

  Trajectory traj;
  HiddenState h = HiddenState::zeros(shape.hidden_size);
  for (int t = 0; t < 5; ++t) {
    TrajectoryStep s;
    s.policy_input = gaussian(shape.input_size, rng);
    h = lstm_step(theta, s.policy_input, h);
    const SampledAction a = sample_action(action_distribution(theta, h.h), rng);
    s.action = a.action;
    s.log_prob = a.log_prob;
    s.reward = uniform(rng, -1.0, 0.0);
    traj.steps.push_back(s);
  }
  std::vector<double> baseline(5);
  for (double& b : baseline) b = uniform(rng, -0.5, 0.5);

  const Eigen::VectorXd g = reinforce_gradient(theta, traj, baseline).data();
  using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const std::function<long double(const VectorXld&)> f = [&](const VectorXld& x) {
    BasicPolicyParameters<long double> p(shape);
    p.data() = x;
    return surrogate_objective(p, traj, baseline);
  };
  const Eigen::VectorXd fd =
      oracle::central_difference<long double>(f, theta.data().cast<long double>(), 1e-5L).cast<double>();
  double worst = 0.0;
  int checked = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (std::abs(g[i]) <= 1e-8) continue;
    ++checked;
    worst = std::max(worst, std::abs(g[i] - fd[i]) / std::abs(g[i]));
  }
  const double t = seconds_since(start);
  return {worst < 1e-4 && checked > 0 && t < 10.0,
          fmt("max relative error %.3g (< 1e-4) over %d of %d coordinates, %.3f s (< 10 s)", worst, checked,
              int(g.size()), t)};
}

// 4 -------------------------------------------------------------------------
Outcome adam_oracle() {
  // Hand computation of three bias-corrected Adam steps on theta^2 from 1 with
  // lr 0.1, beta1 0.9, beta2 0.999, eps 1e-8.
  const double expected[3] = {0.9000000004999999975, 0.8004122286917921452, 0.7015862729460295452};
  Eigen::VectorXd theta = Eigen::VectorXd::Ones(1);
  AdamState opt = AdamState::for_size(1, 0.1);
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    adam_update(theta, Eigen::VectorXd::Constant(1, 2.0 * theta[0]), opt);
    worst = std::max(worst, std::abs(theta[0] - expected[i]));
  }
  return {worst <= 1e-12, fmt("max deviation from hand computation %.3g (<= 1e-12), theta_3 = %.16f", worst, theta[0])};
}

// 5 -------------------------------------------------------------------------
Outcome nelder_mead_sphere() {
  const Objective sphere = [](const Eigen::VectorXd& x) { return (x.array() - 0.5).square().sum(); };
  Rng rng(derive_seed(1, "acceptance/nelder-mead"));
  Eigen::VectorXd x0(6);
  for (Eigen::Index i = 0; i < 6; ++i) x0[i] = uniform(rng, 0.05, 0.95);
  const NelderMeadResult r = nelder_mead(sphere, x0, {.max_iter = 2000});
  const double dist = (r.best.array() - 0.5).abs().maxCoeff();
  return {dist < 1e-3 && r.iterations <= 2000,
          fmt("max |x - 0.5| = %.3g (< 1e-3) after %d iterations (<= 2000)", dist, r.iterations)};
}

// 6 -------------------------------------------------------------------------
Outcome noise_tracker() {
  // White noise synthesized in the STFT domain: every bin has magnitude sigma
  // and a uniformly random phase, so its power is stationary and flat.
  Rng rng(derive_seed(1, "acceptance/noise-tracker"));
  const double sigma = 0.05;
  auto frame = [&] {
    Eigen::VectorXcd f(kNumBins);
    for (Eigen::Index k = 0; k < kNumBins; ++k) f[k] = std::polar(sigma, uniform(rng, 0.0, 2.0 * std::numbers::pi));
    return f;
  };
  Eigen::MatrixXcd lead(kNumBins, 6);
  for (int t = 0; t < 6; ++t) lead.col(t) = frame() * 2.0;
  EnhancerState state = init_state(lead);
  const ParameterSet params;
  Eigen::MatrixXcd frames(kNumBins, 200);
  int speech_frames = 0;
  for (int t = 0; t < 200; ++t) {
    frames.col(t) = frame();
    speech_frames += process_frame(state, frames.col(t), params).vad_decision;
  }
  int within = 0;
  for (Eigen::Index k = 0; k < kNumBins; ++k) {
    const Eigen::VectorXcd bin = frames.row(k).transpose();
    const std::complex<double> mean = bin.mean();
    const double variance = (bin.array() - mean).abs2().sum() / double(bin.size() - 1);
    within += std::abs(state.noise_psd[k] - variance) <= 0.1 * variance;
  }
  const double frac = double(within) / double(kNumBins);

  // Diagnostic only: Gaussian time-domain noise, whose periodogram bins
  // fluctuate far more than the tracker's averaging window can smooth.
  AudioSignal white{gaussian((200 + 5) * kHop + kFrameSize, rng) * sigma};
  const Spectrogram spec = stft(white);
  EnhancerState gauss_state = init_state(spec.frames.leftCols(6));
  for (Eigen::Index t = 6; t < spec.num_frames(); ++t) process_frame(gauss_state, spec.frame(t), params);
  const Eigen::VectorXd power = spec.frames.rightCols(spec.num_frames() - 6).cwiseAbs2().rowwise().mean();
  const int gauss_within =
      int(((gauss_state.noise_psd - power).cwiseAbs().array() <= 0.1 * power.array()).count());

  return {frac >= 0.95,
          fmt("%d/%d bins (%.1f%%, >= 95%%) within 10%% of sample variance; %d frames flagged as speech "
              "[diagnostic: Gaussian time-domain noise %d/%d bins]",
              within, int(kNumBins), 100.0 * frac, speech_frames, gauss_within, int(kNumBins))};
}

// 7 -------------------------------------------------------------------------
Outcome mixing_accuracy() {
  Rng rng(derive_seed(1, "acceptance/mixing"));
  const double grid[4] = {0.0, 10.0, 20.0, 30.0};
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    AudioSignal clean{gaussian(8000, rng) * uniform(rng, 0.01, 1.0)};
    AudioSignal noise{gaussian(12000, rng) * uniform(rng, 0.01, 1.0)};
    const double target = grid[uniform_index(rng, 4)];
    const Mixture m = mix_at_snr(clean, noise, target, rng);
    const double measured = oracle::snr_db(clean.samples, m.noisy.samples - clean.samples);
    worst = std::max(worst, std::abs(measured - target));
  }
  return {worst <= 1e-9, fmt("max |measured - target| = %.3g dB over 100 pairs (<= 1e-9)", worst)};
}

// 8 -------------------------------------------------------------------------
Outcome reward_contract() {
  Rng rng(derive_seed(1, "acceptance/reward"));
  bool iff = true;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd g = gaussian(kFeatureDim, rng).cwiseAbs();
    if (frame_reward(g, g) != 0.0) iff = false;
    Eigen::VectorXd h = g;
    const Eigen::Index k = Eigen::Index(uniform_index(rng, kFeatureDim));
    h[k] += std::max(std::abs(g[k]), 1.0) * std::pow(10.0, -uniform(rng, 0.0, 12.0));
    if (!(frame_reward(g, h) < 0.0)) iff = false;
  }
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(kFeatureDim), tiny = zero;
  tiny[0] = 1e-150;
  if (frame_reward(zero, zero) != 0.0 || !(frame_reward(zero, tiny) < 0.0)) iff = false;
  RewardNormalizer norm;
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double r = -std::exp(uniform(rng, -30.0, 10.0));
    const double v = normalize_reward(norm, r);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {iff && lo >= -1.0 && hi <= 1.0,
          fmt("zero iff identical: %s; normalized range [%.6f, %.6f] over 1e5 draws", iff ? "yes" : "no", lo, hi)};
}

// 9 -------------------------------------------------------------------------
Outcome bandit_convergence() {
  const bandit::Result r = bandit::train(1, 2000, 1e-2, 0.9);
  return {r.final_probability > 0.9 && r.episodes <= 2000,
          fmt("P(optimal) = %.4f (> 0.9) after %d episodes (<= 2000)", r.final_probability, r.episodes)};
}

// 10 ------------------------------------------------------------------------
Outcome variance_reduction() {
  const bandit::EstimatorStats s = bandit::gradient_statistics(1, 100);
  int considered = 0, reduced = 0, agree = 0;
  for (Eigen::Index i = 0; i < s.var_unbiased.size(); ++i) {
    if (s.var_unbiased[i] == 0.0 && s.var_baselined[i] == 0.0) continue;
    ++considered;
    reduced += s.var_baselined[i] <= s.var_unbiased[i];
    const double se = std::sqrt((s.var_unbiased[i] + s.var_baselined[i]) / double(s.rollouts));
    agree += std::abs(s.mean_unbiased[i] - s.mean_baselined[i]) <= 2.0 * se;
  }
  const double frac = considered ? double(reduced) / considered : 0.0;
  return {considered > 0 && frac >= 0.9 && agree == considered,
          fmt("variance not increased on %d/%d coordinates (%.1f%%, >= 90%%); means within 2 SE on %d/%d",
              reduced, considered, 100.0 * frac, agree, considered)};
}

// 11 ------------------------------------------------------------------------
Outcome end_to_end() {
  const auto start = Clock::now();
  testing::TempDir dir("acceptance-e2e");
  Config c;
  c.trainer.baseline_mode = BaselineMode::Reference;
  c.sync();
  synth_corpus(c.synth, dir.path(), derive_seed(c.seed, "corpus"));
  const Manifest m =
      build_manifest(dir / "clean", dir / "noise", std::optional<std::filesystem::path>(dir / "rir"), c.data);
  const std::vector<Utterance> train_split = render_split(m, Split::Train);
  const std::vector<Utterance> val_split = render_split(m, Split::Val);
  const std::vector<Utterance> test_split = render_split(m, Split::Test);
  std::cout << fmt("  [11] corpus %zu/%zu/%zu utterances of %.1f s\n", train_split.size(), val_split.size(),
                   test_split.size(), c.synth.duration_s)
            << std::flush;

  const TuneResult tuned = tune_baseline(train_split, ParameterSet{}, c.tune);
  std::cout << fmt("  [11] tuned baseline in %.0f s (objective %.4f from %.4f)\n", seconds_since(start),
                   tuned.objective, tuned.start_objective)
            << std::flush;

  const auto train_start = Clock::now();
  const TrainResult trained = train(c.trainer, train_split, val_split, tuned.params);
  int max_run = 0;
  for (const auto& e : trained.epochs) max_run = std::max(max_run, e.epoch);
  std::int64_t per_run = 0;
  for (const auto& r : trained.log) per_run = std::max<std::int64_t>(per_run, r.episode_id + 1);
  std::cout << fmt("  [11] trained in %.0f s: lr %.0e, epoch %d, at most %lld episodes per run\n",
                   seconds_since(train_start), trained.selected_learning_rate, trained.best.epoch,
                   static_cast<long long>(per_run))
            << std::flush;

  EvalMethod noisy, baseline, rl;
  noisy.label = "noisy";
  baseline.kind = MethodKind::FixedParams;
  baseline.label = "baseline";
  baseline.params = tuned.params;
  rl.kind = MethodKind::Policy;
  rl.label = "rl";
  rl.policy = &trained.best;
  rl.config = c.trainer;
  const MetricReport rn = evaluate(test_split, noisy);
  const MetricReport rb = evaluate(test_split, baseline);
  const MetricReport rr = evaluate(test_split, rl);

  double improvement = 0.0;
  for (std::size_t i = 0; i < rr.utterances.size(); ++i) improvement += rr.utterances[i].snr_db - rb.utterances[i].snr_db;
  improvement /= double(rr.utterances.size());
  for (const auto& [snr, b] : rb.buckets)
    std::cout << fmt("  [11] bucket %2.0f dB: noisy %.3f  baseline %.3f  rl %.3f dB\n", snr, rn.buckets.at(snr).snr_db,
                     b.snr_db, rr.buckets.at(snr).snr_db);

  const bool a = rb.overall.snr_db - rn.overall.snr_db >= 1.0;
  const bool b = rr.overall.snr_db >= rb.overall.snr_db && improvement > 0.0 && rr.overall.mse <= rb.overall.mse;
  const double t = seconds_since(start);
  return {a && b && per_run <= 500,
          fmt("SNR noisy %.3f / baseline %.3f / rl %.3f dB; (a) baseline gain %.3f dB (>= 1): %s; (b) rl - baseline "
              "mean %+.4f dB (> 0), MSE %.4g vs %.4g (<=): %s; %.0f s",
              rn.overall.snr_db, rb.overall.snr_db, rr.overall.snr_db, rb.overall.snr_db - rn.overall.snr_db,
              a ? "yes" : "no", improvement, rr.overall.mse, rb.overall.mse, b ? "yes" : "no", t)};
}

// 12 ------------------------------------------------------------------------
int run_cli(const std::string& args, const std::filesystem::path& log) {
  const std::string cmd = std::string(ADENOISE_CLI) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome train_determinism() {
  testing::TempDir dir("acceptance-determinism");
  std::ofstream(dir / "config.json") << R"({
  "seed": 12,
  "trainer": {"epochs": 2, "max_episodes": 12},
  "data": {"num_clean": 12, "num_noise": 3, "num_rir": 2, "duration_s": 1.5}
})";
  const std::string c = " --config " + (dir / "config.json").string();
  const auto log = dir / "log.txt";
  const auto d = [&](const std::string& name) { return (dir / name).string(); };
  if (run_cli("synth" + c + " --out " + d("corpus"), log) != 0 ||
      run_cli("mix" + c + " --corpus " + d("corpus") + " --out " + d("mix"), log) != 0)
    return {false, "corpus preparation failed: " + slurp(log)};
  for (const char* run : {"a", "b"})
    if (run_cli("train" + c + " --manifest " + d("mix/manifest.json") + " --out " + d(run), log) != 0)
      return {false, "train failed: " + slurp(log)};
  const std::string ck_a = slurp(dir / "a" / "checkpoint.bin"), ck_b = slurp(dir / "b" / "checkpoint.bin");
  const std::string log_a = slurp(dir / "a" / "training_log.csv"), log_b = slurp(dir / "b" / "training_log.csv");
  const bool same = !ck_a.empty() && ck_a == ck_b && !log_a.empty() && log_a == log_b;
  return {same, fmt("checkpoints %zu bytes %s, training logs %zu bytes %s", ck_a.size(),
                    ck_a == ck_b ? "identical" : "DIFFER", log_a.size(), log_a == log_b ? "identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, stft_round_trip},     {2, cola},           {3, gradient_check},      {4, adam_oracle},
      {5, nelder_mead_sphere},  {6, noise_tracker},  {7, mixing_accuracy},     {8, reward_contract},
      {9, bandit_convergence},  {10, variance_reduction}, {11, end_to_end},   {12, train_determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& [id, check] : criteria) {
    if (!only.empty() && !only.contains(id)) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "CRITERION " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
