#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "adenoise/data.hpp"
#include "adenoise/errors.hpp"

namespace adenoise {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw ParseError(std::string("wav: truncated ") + what);
  }
  std::string tag() {
    need(4, "chunk tag");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return s;
  }
  std::uint32_t u32() {
    need(4, "header");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + std::size_t(i)];
    pos_ += 4;
    return v;
  }
  std::uint16_t u16() {
    need(2, "header");
    const std::uint16_t v = std::uint16_t(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  void skip(std::size_t n) {
    need(n, "chunk");
    pos_ += n;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n, "data chunk");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
}
void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

AudioSignal parse_wav(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.tag() != "RIFF") throw ParseError("wav: missing RIFF tag");
  r.u32();  // riff size; not trusted
  if (r.tag() != "WAVE") throw ParseError("wav: missing WAVE tag");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (true) {
    if (r.remaining() == 0) throw ParseError("wav: no data chunk");
    const std::string id = r.tag();
    const std::uint32_t size = r.u32();
    if (id == "fmt ") {
      if (size < 16) throw ParseError("wav: fmt chunk too small");
      r.need(size, "fmt chunk");
      format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      std::size_t consumed = 16;
      if (format == kFormatExtensible && size >= 40) {
        r.u16();  // cbSize
        r.u16();  // valid bits
        r.u32();  // channel mask
        format = r.u16();  // first two bytes of the subformat GUID carry the format tag
        consumed += 10;
      }
      r.skip(size - consumed + (size & 1u));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw ParseError("wav: data chunk before fmt chunk");
      if (channels != 1) throw UnsupportedFormat("wav: only mono is supported, file has " + std::to_string(channels) + " channels");
      if (rate == 0) throw ParseError("wav: zero sample rate");
      const auto payload = r.take(size);
      AudioSignal sig;
      sig.sample_rate = static_cast<int>(rate);
      if (format == kFormatPcm && bits == 16) {
        if (size % 2 != 0) throw ParseError("wav: odd byte count in 16-bit data");
        sig.samples.resize(size / 2);
        for (std::uint32_t i = 0; i < size / 2; ++i) {
          const auto v = std::int16_t(std::uint16_t(payload[2 * i] | (payload[2 * i + 1] << 8)));
          sig.samples[i] = double(v) / 32768.0;
        }
      } else if (format == kFormatFloat && bits == 32) {
        if (size % 4 != 0) throw ParseError("wav: byte count not a multiple of 4 in float data");
        sig.samples.resize(size / 4);
        for (std::uint32_t i = 0; i < size / 4; ++i) {
          std::uint32_t u = 0;
          for (int b = 3; b >= 0; --b) u = (u << 8) | payload[4 * i + std::uint32_t(b)];
          sig.samples[i] = double(std::bit_cast<float>(u));
        }
        if (!sig.samples.allFinite()) throw ParseError("wav: non-finite float sample");
      } else {
        throw UnsupportedFormat("wav: format tag " + std::to_string(format) + " with " + std::to_string(bits) +
                                " bits per sample is not supported");
      }
      return sig;
    } else {
      r.skip(size + (size & 1u));
    }
  }
}

AudioSignal read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("wav: cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_wav(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const AudioSignal& signal, WavFormat format) {
  if (signal.sample_rate <= 0) throw InvalidArgument("write_wav: sample_rate must be positive");
  if (!signal.samples.allFinite()) throw InvalidArgument("write_wav: non-finite sample");
  const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
  const std::uint32_t bytes_per_sample = bits / 8;
  const auto data_size = std::uint32_t(signal.size()) * bytes_per_sample;

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == WavFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, std::uint32_t(signal.sample_rate));
  put_u32(out, std::uint32_t(signal.sample_rate) * bytes_per_sample);
  put_u16(out, std::uint16_t(bytes_per_sample));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_size);
  for (Eigen::Index i = 0; i < signal.size(); ++i) {
    const double x = signal.samples[i];
    if (format == WavFormat::Pcm16) {
      const double q = std::clamp(std::nearbyint(x * 32768.0), -32768.0, 32767.0);
      put_u16(out, std::uint16_t(std::int16_t(q)));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(float(x)));
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioSignal& signal, WavFormat format) {
  const auto bytes = encode_wav(signal, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NotFound("wav: cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error("wav: write failed for " + path.string());
}

}  // namespace adenoise
