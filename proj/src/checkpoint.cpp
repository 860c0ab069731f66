#include "adenoise/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "adenoise/tuning.hpp"

namespace adenoise {

namespace {

constexpr char kMagic[8] = {'A', 'D', 'N', 'Z', 'C', 'K', 'P', 'T'};

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_doubles(std::vector<std::uint8_t>& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) put_le(out, std::bit_cast<std::uint64_t>(v[i]), 8);
}

class Cursor {
 public:
  explicit Cursor(std::span<const std::uint8_t> b) : bytes_(b) {}
  std::uint64_t le(int n) {
    if (bytes_.size() - pos_ < std::size_t(n)) throw ParseError("checkpoint: truncated");
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | bytes_[pos_ + std::size_t(i)];
    pos_ += std::size_t(n);
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw ParseError("checkpoint: truncated");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  Eigen::VectorXd doubles(std::size_t n) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[Eigen::Index(i)] = std::bit_cast<double>(le(8));
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

nlohmann::json metadata(const TrainingState& s, const nlohmann::json& config) {
  const auto& shape = s.theta.shape();
  return {
      {"shape", {{"hidden_size", shape.hidden_size}, {"input_size", shape.input_size}, {"num_heads", shape.num_heads}}},
      {"adam",
       {{"step_count", s.adam.step_count},
        {"learning_rate", s.adam.learning_rate},
        {"beta1", s.adam.beta1},
        {"beta2", s.adam.beta2},
        {"epsilon", s.adam.epsilon}}},
      {"normalizer", {{"running_max_abs", s.normalizer.running_max_abs}, {"decay", s.normalizer.decay}}},
      {"baseline",
       {{"mode", to_string(s.baseline.mode)},
        {"ema_decay", s.baseline.ema_decay},
        {"ema_value", s.baseline.ema_value},
        {"history_mean", s.baseline.history_mean},
        {"history_count", s.baseline.history_count}}},
      {"initial_params", params_to_json(s.initial_params)},
      {"episodes_done", s.episodes_done},
      {"epoch", s.epoch},
      // NaN is not representable in JSON.
      {"validation_return", std::isfinite(s.validation_return) ? nlohmann::json(s.validation_return) : nlohmann::json()},
      {"config", config},
  };
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const TrainingState& state, const nlohmann::json& config) {
  const std::string meta = metadata(state, config).dump();
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  put_le(out, kCheckpointVersion, 4);
  put_le(out, meta.size(), 4);
  out.insert(out.end(), meta.begin(), meta.end());
  put_le(out, std::uint64_t(state.theta.data().size()), 8);
  put_doubles(out, state.theta.data());
  put_doubles(out, state.adam.first_moment);
  put_doubles(out, state.adam.second_moment);
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Cursor cur(bytes);
  const auto magic = cur.take(8);
  if (std::memcmp(magic.data(), kMagic, 8) != 0) throw ParseError("checkpoint: bad magic");
  const auto version = cur.le(4);
  if (version != kCheckpointVersion) throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  const auto meta_len = cur.le(4);
  const auto meta_bytes = cur.take(meta_len);

  Checkpoint ck;
  try {
    const auto meta = nlohmann::json::parse(meta_bytes.begin(), meta_bytes.end());
    PolicyShape shape;
    shape.hidden_size = meta.at("shape").at("hidden_size").get<int>();
    shape.input_size = meta.at("shape").at("input_size").get<int>();
    shape.num_heads = meta.at("shape").at("num_heads").get<int>();
    const auto count = cur.le(8);
    if (count != std::uint64_t(shape.num_weights())) throw ParseError("checkpoint: weight count does not match shape");

    auto& s = ck.state;
    s.theta = PolicyParameters(shape);
    s.theta.data() = cur.doubles(count);
    const auto& adam = meta.at("adam");
    s.adam.first_moment = cur.doubles(count);
    s.adam.second_moment = cur.doubles(count);
    s.adam.step_count = adam.at("step_count").get<std::int64_t>();
    s.adam.learning_rate = adam.at("learning_rate").get<double>();
    s.adam.beta1 = adam.at("beta1").get<double>();
    s.adam.beta2 = adam.at("beta2").get<double>();
    s.adam.epsilon = adam.at("epsilon").get<double>();
    s.normalizer.running_max_abs = meta.at("normalizer").at("running_max_abs").get<double>();
    s.normalizer.decay = meta.at("normalizer").at("decay").get<double>();
    const auto& b = meta.at("baseline");
    s.baseline.mode = baseline_mode_from_string(b.at("mode").get<std::string>());
    s.baseline.ema_decay = b.at("ema_decay").get<double>();
    s.baseline.ema_value = b.at("ema_value").get<double>();
    s.baseline.history_mean = b.at("history_mean").get<double>();
    s.baseline.history_count = b.at("history_count").get<std::int64_t>();
    s.initial_params = params_from_json(meta.at("initial_params"));
    s.episodes_done = meta.at("episodes_done").get<std::int64_t>();
    s.epoch = meta.at("epoch").get<int>();
    if (!meta.at("validation_return").is_null()) s.validation_return = meta.at("validation_return").get<double>();
    ck.config = meta.at("config");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint metadata: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("checkpoint metadata: ") + e.what());
  }
  if (!cur.done()) throw ParseError("checkpoint: trailing bytes");
  if (!ck.state.theta.all_finite()) throw ParseError("checkpoint: non-finite weights");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const TrainingState& state, const nlohmann::json& config) {
  const auto bytes = encode_checkpoint(state, config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFound("cannot create checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("checkpoint not found: " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace adenoise
