#include "adenoise/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "adenoise/errors.hpp"

namespace adenoise {

namespace {

/// Reads keys of one JSON object and rejects any it was not asked for.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + display() + "' must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.contains(key)) throw ConfigError("config: unknown key '" + qualified(key) + "'");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: key '" + qualified(key) + "' has the wrong type");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  Section sub(const std::string& key) { return Section(j_.at(key), qualified(key)); }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config: '" + key + "' " + what);
}

}  // namespace

void Config::sync() {
  trainer.seed = seed;
  trainer.enhancer = enhancer;
  tune.enhancer = enhancer;
  data.seed = seed;
}

Config config_from_json(const nlohmann::json& j) {
  Config c;
  {
    Section root(j, "");
    root.get("seed", c.seed);
    if (root.has("dsp")) {
      Section s = root.sub("dsp");
      std::string window = "hann";
      s.get("frame_size", c.frame_size);
      s.get("hop", c.hop);
      s.get("window", window);
      require(c.frame_size == kFrameSize, "dsp.frame_size", "must be 512");
      require(c.hop == kHop, "dsp.hop", "must be 256");
      require(window == "hann", "dsp.window", "must be \"hann\"");
    }
    if (root.has("enhancer")) {
      Section s = root.sub("enhancer");
      s.get("lead_in_frames", c.enhancer.lead_in_frames);
      require(c.enhancer.lead_in_frames >= 1, "enhancer.lead_in_frames", "must be >= 1");
    }
    if (root.has("policy")) {
      Section s = root.sub("policy");
      s.get("hidden_size", c.trainer.shape.hidden_size);
      s.get("init_scale", c.trainer.init.init_scale);
      s.get("forget_bias", c.trainer.init.forget_bias);
      s.get("hold_bias", c.trainer.init.hold_bias);
      s.get("clip_norm", c.trainer.clip_norm);
      require(c.trainer.shape.hidden_size >= 1, "policy.hidden_size", "must be >= 1");
      require(c.trainer.init.init_scale >= 0.0, "policy.init_scale", "must be >= 0");
      require(std::isfinite(c.trainer.init.hold_bias), "policy.hold_bias", "must be finite");
      require(c.trainer.clip_norm > 0.0, "policy.clip_norm", "must be > 0");
    }
    if (root.has("trainer")) {
      Section s = root.sub("trainer");
      auto& t = c.trainer;
      std::string baseline = to_string(t.baseline_mode), domain = to_string(t.reward_domain),
                  eval_mode = to_string(t.eval_action_mode);
      s.get("learning_rate", t.learning_rate);
      s.get("lr_grid", t.lr_grid);
      s.get("epochs", t.epochs);
      s.get("max_episodes", t.max_episodes);
      s.get("baseline_mode", baseline);
      s.get("baseline_ema_decay", t.baseline_ema_decay);
      s.get("reward_decay", t.reward_decay);
      s.get("reward_domain", domain);
      s.get("eval_action_mode", eval_mode);
      s.get("reward_input", t.reward_input);
      try {
        t.baseline_mode = baseline_mode_from_string(baseline);
        t.reward_domain = reward_domain_from_string(domain);
        t.eval_action_mode = action_mode_from_string(eval_mode);
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config: trainer: ") + e.what());
      }
      require(t.learning_rate >= 0.0, "trainer.learning_rate", "must be >= 0");
      for (double lr : t.lr_grid) require(lr >= 0.0, "trainer.lr_grid", "entries must be >= 0");
      require(t.epochs >= 1, "trainer.epochs", "must be >= 1");
      require(t.max_episodes >= 0, "trainer.max_episodes", "must be >= 0");
      require(t.baseline_ema_decay > 0.0 && t.baseline_ema_decay < 1.0, "trainer.baseline_ema_decay", "must be in (0,1)");
      require(t.reward_decay > 0.0 && t.reward_decay <= 1.0, "trainer.reward_decay", "must be in (0,1]");
    }
    if (root.has("data")) {
      Section s = root.sub("data");
      auto& syn = c.synth;
      s.get("snr_grid", c.data.snr_grid);
      s.get("split_ratios", c.data.ratios);
      s.get("use_rir", c.use_rir);
      s.get("num_clean", syn.num_clean);
      s.get("num_noise", syn.num_noise);
      s.get("num_rir", syn.num_rir);
      s.get("duration_s", syn.duration_s);
      s.get("f0_min", syn.f0_min);
      s.get("f0_max", syn.f0_max);
      s.get("rt60_min", syn.rt60_min);
      s.get("rt60_max", syn.rt60_max);
      s.get("lead_in_s", syn.lead_in_s);
      require(!c.data.snr_grid.empty(), "data.snr_grid", "must not be empty");
      for (double r : c.data.ratios) require(r >= 0.0, "data.split_ratios", "entries must be >= 0");
      require(c.data.ratios[0] + c.data.ratios[1] + c.data.ratios[2] > 0.0, "data.split_ratios", "must not sum to 0");
      require(syn.num_clean > 0, "data.num_clean", "must be > 0");
      require(syn.num_noise > 0, "data.num_noise", "must be > 0");
      require(syn.num_rir >= 0, "data.num_rir", "must be >= 0");
      require(syn.duration_s > 0.2, "data.duration_s", "must exceed 0.2 s");
      require(syn.f0_min > 0.0 && syn.f0_max >= syn.f0_min, "data.f0_min", "must satisfy 0 < f0_min <= f0_max");
      require(syn.rt60_min > 0.0 && syn.rt60_max >= syn.rt60_min, "data.rt60_min", "must satisfy 0 < rt60_min <= rt60_max");
      require(syn.lead_in_s >= 0.0, "data.lead_in_s", "must be >= 0");
    }
    if (root.has("tune")) {
      Section s = root.sub("tune");
      s.get("max_iter", c.tune.nelder_mead.max_iter);
      s.get("tol", c.tune.nelder_mead.tol);
      s.get("initial_step", c.tune.nelder_mead.initial_step);
      s.get("weights", c.tune.weights);
      require(c.tune.nelder_mead.max_iter >= 0, "tune.max_iter", "must be >= 0");
      require(c.tune.nelder_mead.tol >= 0.0, "tune.tol", "must be >= 0");
      require(c.tune.nelder_mead.initial_step > 0.0 && c.tune.nelder_mead.initial_step <= 1.0, "tune.initial_step",
              "must be in (0,1]");
    }
  }
  c.sync();
  return c;
}

nlohmann::json to_json(const Config& c) {
  const auto& t = c.trainer;
  const auto& syn = c.synth;
  return {
      {"seed", c.seed},
      {"dsp", {{"frame_size", c.frame_size}, {"hop", c.hop}, {"window", "hann"}}},
      {"enhancer", {{"lead_in_frames", c.enhancer.lead_in_frames}}},
      {"policy",
       {{"hidden_size", t.shape.hidden_size},
        {"init_scale", t.init.init_scale},
        {"forget_bias", t.init.forget_bias},
        {"hold_bias", t.init.hold_bias},
        {"clip_norm", t.clip_norm}}},
      {"trainer",
       {{"learning_rate", t.learning_rate},
        {"lr_grid", t.lr_grid},
        {"epochs", t.epochs},
        {"max_episodes", t.max_episodes},
        {"baseline_mode", to_string(t.baseline_mode)},
        {"baseline_ema_decay", t.baseline_ema_decay},
        {"reward_decay", t.reward_decay},
        {"reward_domain", to_string(t.reward_domain)},
        {"eval_action_mode", to_string(t.eval_action_mode)},
        {"reward_input", t.reward_input}}},
      {"data",
       {{"snr_grid", c.data.snr_grid},
        {"split_ratios", c.data.ratios},
        {"use_rir", c.use_rir},
        {"num_clean", syn.num_clean},
        {"num_noise", syn.num_noise},
        {"num_rir", syn.num_rir},
        {"duration_s", syn.duration_s},
        {"f0_min", syn.f0_min},
        {"f0_max", syn.f0_max},
        {"rt60_min", syn.rt60_min},
        {"rt60_max", syn.rt60_max},
        {"lead_in_s", syn.lead_in_s}}},
      {"tune",
       {{"max_iter", c.tune.nelder_mead.max_iter},
        {"tol", c.tune.nelder_mead.tol},
        {"initial_step", c.tune.nelder_mead.initial_step},
        {"weights", c.tune.weights}}},
  };
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace adenoise
