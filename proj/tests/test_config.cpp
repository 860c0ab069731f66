#include <doctest.h>

#include <fstream>

#include "adenoise/checkpoint.hpp"
#include "adenoise/config.hpp"
#include "support/tempdir.hpp"

using namespace adenoise;
using nlohmann::json;

namespace {

std::string config_error(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

TrainingState sample_state() {
  TrainerConfig c;
  c.shape.hidden_size = 5;
  c.seed = 3;
  ParameterSet p;
  p.set(Param::GainFloorDb, -18.0);
  TrainingState s = init_training_state(c, p, 3e-3);
  s.adam.first_moment.setConstant(0.25);
  s.adam.second_moment.setConstant(1e-6);
  s.adam.step_count = 7;
  s.normalizer.running_max_abs = 12.5;
  s.baseline.ema_value = -0.75;
  s.baseline.history_mean = 0.5;
  s.baseline.history_count = 11;
  s.episodes_done = 42;
  s.epoch = 2;
  s.validation_return = -123.5;
  return s;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("an empty document gives the defaults") {
    const Config c = config_from_json(json::object());
    CHECK(c.seed == 1);
    CHECK(c.trainer.shape.hidden_size == 196);
    CHECK(c.trainer.seed == c.seed);
    CHECK(c.data.seed == c.seed);
    CHECK(c.synth.num_clean == 140);
    CHECK(c.trainer.lr_grid == std::vector<double>{1e-2, 3e-3, 1e-3, 3e-4});
    CHECK(c.trainer.baseline_mode == BaselineMode::EpisodeMean);
  }

  TEST_CASE("unknown keys are rejected by name") {
    CHECK(config_error({{"sed", 3}}).find("'sed'") != std::string::npos);
    CHECK(config_error({{"trainer", {{"epochz", 3}}}}).find("'trainer.epochz'") != std::string::npos);
    CHECK(config_error({{"bogus", {{"x", 1}}}}).find("'bogus'") != std::string::npos);
  }

  TEST_CASE("wrong types and ranges are rejected by name") {
    CHECK(config_error({{"seed", "one"}}).find("'seed'") != std::string::npos);
    CHECK(config_error({{"policy", {{"hidden_size", 0}}}}).find("policy.hidden_size") != std::string::npos);
    CHECK(config_error({{"trainer", {{"baseline_mode", "mean"}}}}).find("trainer") != std::string::npos);
    CHECK(config_error({{"dsp", {{"frame_size", 1024}}}}).find("dsp.frame_size") != std::string::npos);
    CHECK(config_error({{"data", {{"snr_grid", json::array()}}}}).find("data.snr_grid") != std::string::npos);
    CHECK_FALSE(config_error({{"policy", 3}}).empty());
  }

  TEST_CASE("config round trips through json") {
    json j = {{"seed", 9},
              {"policy", {{"hidden_size", 32}, {"hold_bias", 1.5}}},
              {"trainer", {{"baseline_mode", "ema"}, {"lr_grid", {1e-3, 1e-4}}, {"epochs", 2}}},
              {"data", {{"snr_grid", {5.0, 15.0}}, {"num_clean", 10}}},
              {"tune", {{"max_iter", 7}}}};
    const Config c = config_from_json(j);
    CHECK(c.trainer.baseline_mode == BaselineMode::Ema);
    CHECK(c.trainer.init.hold_bias == 1.5);
    CHECK(c.trainer.seed == 9);
    CHECK(to_json(config_from_json(to_json(c))) == to_json(c));
  }

  TEST_CASE("load_config reports unreadable files as config errors") {
    testing::TempDir dir("config");
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
    std::ofstream(dir / "ok.json") << R"({"seed": 4})";
    CHECK(load_config(dir / "ok.json").seed == 4);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("checkpoints round trip every field") {
    const TrainingState s = sample_state();
    const json config = {{"seed", 3}};
    const Checkpoint ck = decode_checkpoint(encode_checkpoint(s, config));
    CHECK(ck.config == config);
    CHECK(ck.state.theta.shape().hidden_size == 5);
    CHECK(ck.state.theta.data() == s.theta.data());
    CHECK(ck.state.adam.first_moment == s.adam.first_moment);
    CHECK(ck.state.adam.second_moment == s.adam.second_moment);
    CHECK(ck.state.adam.step_count == 7);
    CHECK(ck.state.adam.learning_rate == s.adam.learning_rate);
    CHECK(ck.state.normalizer.running_max_abs == 12.5);
    CHECK(ck.state.baseline.ema_value == -0.75);
    CHECK(ck.state.baseline.history_mean == 0.5);
    CHECK(ck.state.baseline.history_count == 11);
    CHECK(ck.state.initial_params.values() == s.initial_params.values());
    CHECK(ck.state.episodes_done == 42);
    CHECK(ck.state.epoch == 2);
    CHECK(ck.state.validation_return == -123.5);
    CHECK(encode_checkpoint(ck.state, ck.config) == encode_checkpoint(s, config));
  }

  TEST_CASE("corrupt checkpoints are parse errors") {
    const std::vector<std::uint8_t> good = encode_checkpoint(sample_state(), json::object());
    std::vector<std::uint8_t> bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(bad_magic), ParseError);
    std::vector<std::uint8_t> bad_version = good;
    bad_version[8] = 9;
    CHECK_THROWS_AS(decode_checkpoint(bad_version), ParseError);
    for (std::size_t cut : {std::size_t(3), std::size_t(12), std::size_t(40), good.size() - 8, good.size() - 1}) {
      const std::vector<std::uint8_t> part(good.begin(), good.begin() + std::ptrdiff_t(cut));
      CHECK_THROWS_AS(decode_checkpoint(part), ParseError);
    }
    std::vector<std::uint8_t> trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_checkpoint(trailing), ParseError);
  }

  TEST_CASE("checkpoint files") {
    testing::TempDir dir("ckpt");
    save_checkpoint(dir / "a.bin", sample_state(), json::object());
    CHECK(load_checkpoint(dir / "a.bin").state.episodes_done == 42);
    CHECK_THROWS_AS(load_checkpoint(dir / "none.bin"), NotFound);
  }
}
