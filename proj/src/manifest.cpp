#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "adenoise/data.hpp"
#include "adenoise/errors.hpp"

namespace adenoise {

namespace fs = std::filesystem;

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw InvalidArgument("unknown split '" + s + "'");
}

std::vector<const ManifestEntry*> Manifest::split(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == s) out.push_back(&e);
  return out;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const std::array<double, 3>& ratios) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  for (double r : ratios)
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidArgument("split ratios must be finite and non-negative");
  if (!(total > 0.0)) throw InvalidArgument("split ratios must not all be zero");

  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = double(n) * ratios[i] / total;
    sizes[i] = std::size_t(std::floor(exact));
    remainders[i] = exact - double(sizes[i]);
    assigned += sizes[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[order[i % 3]];
  return sizes;
}

namespace {

std::vector<fs::path> list_wavs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidArgument("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".wav") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InvalidArgument("no .wav files in " + dir.string());
  return files;
}

}  // namespace

Manifest build_manifest(const fs::path& clean_dir, const fs::path& noise_dir, const std::optional<fs::path>& rir_dir,
                        const ManifestOptions& options) {
  if (options.snr_grid.empty()) throw InvalidArgument("build_manifest: empty SNR grid");
  auto clean = list_wavs(clean_dir);
  const auto noise = list_wavs(noise_dir);
  std::vector<fs::path> rirs;
  if (rir_dir) rirs = list_wavs(*rir_dir);

  Rng rng = make_rng(options.seed, "manifest");
  for (std::size_t i = clean.size(); i > 1; --i) std::swap(clean[i - 1], clean[uniform_index(rng, i)]);

  Manifest m;
  m.seed = options.seed;
  m.ratios = options.ratios;
  const auto sizes = split_sizes(clean.size(), options.ratios);
  std::size_t next = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t j = 0; j < sizes[s]; ++j, ++next) {
      ManifestEntry e;
      e.utterance_id = clean[next].stem().string();
      e.clean_path = clean[next].string();
      e.noise_path = noise[uniform_index(rng, noise.size())].string();
      if (!rirs.empty()) e.rir_path = rirs[uniform_index(rng, rirs.size())].string();
      e.target_snr_db = options.snr_grid[j % options.snr_grid.size()];
      e.split = static_cast<Split>(s);
      m.entries.push_back(std::move(e));
    }
  }
  return m;
}

nlohmann::json to_json(const Manifest& m) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    nlohmann::json j{{"utterance_id", e.utterance_id},
                     {"clean_path", e.clean_path},
                     {"noise_path", e.noise_path},
                     {"target_snr_db", e.target_snr_db},
                     {"split", to_string(e.split)}};
    j["rir_path"] = e.rir_path ? nlohmann::json(*e.rir_path) : nlohmann::json(nullptr);
    if (e.noisy_path) j["noisy_path"] = *e.noisy_path;
    entries.push_back(std::move(j));
  }
  return {{"schema_version", Manifest::kSchemaVersion},
          {"sample_rate", m.sample_rate},
          {"seed", m.seed},
          {"ratios", m.ratios},
          {"entries", std::move(entries)}};
}

Manifest manifest_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != Manifest::kSchemaVersion)
      throw ParseError("manifest: unsupported schema_version " + j.at("schema_version").dump());
    Manifest m;
    m.sample_rate = j.at("sample_rate").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.ratios = j.at("ratios").get<std::array<double, 3>>();
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.utterance_id = je.at("utterance_id").get<std::string>();
      e.clean_path = je.at("clean_path").get<std::string>();
      e.noise_path = je.at("noise_path").get<std::string>();
      if (je.contains("rir_path") && !je.at("rir_path").is_null()) e.rir_path = je.at("rir_path").get<std::string>();
      if (je.contains("noisy_path")) e.noisy_path = je.at("noisy_path").get<std::string>();
      e.target_snr_db = je.at("target_snr_db").get<double>();
      e.split = split_from_string(je.at("split").get<std::string>());
      m.entries.push_back(std::move(e));
    }
    std::vector<std::string> ids;
    for (const auto& e : m.entries) ids.push_back(e.utterance_id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
      throw ParseError("manifest: duplicate utterance_id");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
}

void save_manifest(const fs::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw NotFound("cannot create " + path.string());
  out << to_json(m).dump(2) << '\n';
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

Eigen::Index mixing_offset(const Manifest& m, const ManifestEntry& e, Eigen::Index noise_length,
                           Eigen::Index clean_length) {
  Rng rng = make_rng(m.seed, "mixing/" + e.utterance_id);
  const Eigen::Index span = std::max<Eigen::Index>(noise_length - clean_length + 1, 1);
  return Eigen::Index(uniform_index(rng, std::uint64_t(span)));
}

Utterance render_utterance(const Manifest& m, const ManifestEntry& e) {
  AudioSignal clean = read_wav(e.clean_path);
  AudioSignal noise = read_wav(e.noise_path);
  if (clean.sample_rate != m.sample_rate || noise.sample_rate != m.sample_rate)
    throw UnsupportedFormat("sample rate mismatch for " + e.utterance_id + " (resampling is not supported)");
  const Eigen::Index offset = mixing_offset(m, e, noise.size(), clean.size());
  AudioSignal seg{noise_segment(noise, offset, clean.size()), m.sample_rate};
  if (e.rir_path) {
    const AudioSignal rir = read_wav(*e.rir_path);
    if (rir.sample_rate != m.sample_rate) throw UnsupportedFormat("sample rate mismatch for RIR " + *e.rir_path);
    clean = convolve_rir(clean, rir);
    seg = convolve_rir(seg, rir);
  }
  Utterance u;
  u.id = e.utterance_id;
  u.snr_db = e.target_snr_db;
  u.noisy = mix_at_snr(clean, seg, e.target_snr_db, 0).noisy;
  u.clean = std::move(clean);
  return u;
}

std::vector<Utterance> render_split(const Manifest& m, Split s) {
  std::vector<Utterance> out;
  for (const auto* e : m.split(s)) out.push_back(render_utterance(m, *e));
  return out;
}

}  // namespace adenoise
