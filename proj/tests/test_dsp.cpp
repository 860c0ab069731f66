#include <doctest.h>

#include <numbers>

#include "adenoise/dsp.hpp"
#include "adenoise/rng.hpp"
#include "support/oracles.hpp"

using namespace adenoise;

namespace {

AudioSignal random_signal(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  AudioSignal s;
  s.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.samples[i] = uniform(rng, -1.0, 1.0);
  return s;
}

double interior_relative_rms(const Eigen::VectorXd& x, const Eigen::VectorXd& y, Eigen::Index begin, Eigen::Index end) {
  return (x.segment(begin, end - begin) - y.segment(begin, end - begin)).norm() / x.segment(begin, end - begin).norm();
}

}  // namespace

TEST_SUITE("dsp") {
  TEST_CASE("hann_window of length 4 matches the closed form") {
    const Eigen::VectorXd w = hann_window(4);
    const auto ref = oracle::hann(4);
    REQUIRE(w.size() == 4);
    for (int k = 0; k < 4; ++k) CHECK(w[k] == doctest::Approx(ref[std::size_t(k)]).epsilon(1e-15));
    CHECK(w[0] == 0.0);
    CHECK(w[1] == doctest::Approx(0.5));
    CHECK(w[2] == doctest::Approx(1.0));
    CHECK(w[3] == doctest::Approx(0.5));
  }

  TEST_CASE("hann_window starts at zero for any length") {
    for (int n : {2, 3, 7, 64, 512, 1001}) CHECK(hann_window(n)[0] == 0.0);
  }

  TEST_CASE("hann_window is constant-overlap-add at half overlap") {
    const Eigen::VectorXd w = hann_window(512);
    for (int k = 0; k < 256; ++k) CHECK(std::abs(w[k] + w[k + 256] - 1.0) < 1e-12);
  }

  TEST_CASE("hann_window works in single precision") {
    const Eigen::VectorXf w = hann_window<float>(8);
    CHECK(w[4] == doctest::Approx(1.0f));
  }

  TEST_CASE("hann_window rejects lengths below two") {
    CHECK_THROWS_AS(hann_window(1), InvalidArgument);
    CHECK_THROWS_AS(hann_window(0), InvalidArgument);
  }

  TEST_CASE("frame count follows floor((len - frame) / hop) + 1") {
    AudioSignal s{Eigen::VectorXd::Zero(1600)};
    CHECK(stft(s).num_frames() == 5);
    CHECK(frame_count(1600) == 5);
    CHECK(frame_count(512) == 1);
    CHECK(frame_count(511) == 0);
    CHECK(frame_count(768) == 2);
  }

  TEST_CASE("stft of silence is all zero") {
    AudioSignal s{Eigen::VectorXd::Zero(1024)};
    const Spectrogram spec = stft(s);
    CHECK(spec.num_frames() == 3);
    CHECK(spec.num_bins() == kNumBins);
    CHECK(spec.frames.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("bin-centred cosine concentrates in its bin") {
    for (int k0 : {5, 40, 100, 200}) {
      AudioSignal s;
      s.samples.resize(2048);
      for (Eigen::Index i = 0; i < s.size(); ++i) s.samples[i] = std::cos(2.0 * std::numbers::pi * k0 * double(i) / 512.0);
      const Spectrogram spec = stft(s);
      for (Eigen::Index t = 0; t < spec.num_frames(); ++t) {
        const Eigen::VectorXd p = spec.frame(t).cwiseAbs2();
        const double near = p.segment(k0 - 1, 3).sum();
        CHECK(near / p.sum() >= 0.99);
      }
    }
  }

  TEST_CASE("forward transform agrees with a brute-force DFT") {
    const AudioSignal s = random_signal(512, 3);
    const Eigen::VectorXd windowed = s.samples.cwiseProduct(hann_window(512));
    const Eigen::VectorXcd ref = oracle::dft(windowed);
    const Spectrogram spec = stft(s);
    CHECK((spec.frame(0) - ref).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("stft rejects short signals and bad geometry") {
    AudioSignal s{Eigen::VectorXd::Zero(511)};
    CHECK_THROWS_AS(stft(s), InvalidArgument);
    AudioSignal ok{Eigen::VectorXd::Zero(2048)};
    CHECK_THROWS_AS(stft(ok, 512, 128), InvalidArgument);
    CHECK_THROWS_AS(stft(ok, 511, 255), InvalidArgument);
    AudioSignal bad{Eigen::VectorXd::Zero(1024)};
    bad.samples[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(stft(bad), InvalidArgument);
  }

  TEST_CASE("istft reconstructs the interior") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const AudioSignal x = random_signal(16000, seed);
      const AudioSignal y = istft(stft(x));
      REQUIRE(y.size() == (frame_count(16000) - 1) * kHop + kFrameSize);
      CHECK(interior_relative_rms(x.samples, y.samples, kHop, y.size() - kHop) < 1e-10);
    }
  }

  TEST_CASE("istft of a zero spectrogram is silence") {
    Spectrogram spec;
    spec.frames = Eigen::MatrixXcd::Zero(kNumBins, 6);
    CHECK(istft(spec).samples.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("istft is linear in the spectrogram") {
    const AudioSignal x = random_signal(4096, 9);
    Spectrogram spec = stft(x);
    spec.frames *= 2.0;
    const AudioSignal y = istft(spec);
    CHECK(interior_relative_rms(2.0 * x.samples, y.samples, kHop, y.size() - kHop) < 1e-10);
  }

  TEST_CASE("istft rejects inconsistent geometry") {
    Spectrogram spec;
    spec.frames = Eigen::MatrixXcd::Zero(200, 3);
    CHECK_THROWS_AS(istft(spec), InvalidArgument);
    spec.frames = Eigen::MatrixXcd::Zero(kNumBins, 3);
    spec.hop = 100;
    CHECK_THROWS_AS(istft(spec), InvalidArgument);
  }

  TEST_CASE("features take magnitudes of the first 256 bins") {
    Eigen::VectorXcd f = Eigen::VectorXcd::Zero(kNumBins);
    CHECK(features(f).cwiseAbs().maxCoeff() == 0.0);
    f[3] = {3.0, 4.0};
    const FeatureVector v = features(f);
    CHECK(v.size() == kFeatureDim);
    CHECK(v[3] == doctest::Approx(5.0));
    Rng rng(4);
    for (Eigen::Index k = 0; k < f.size(); ++k) f[k] = {standard_normal(rng), standard_normal(rng)};
    CHECK(features(f).minCoeff() >= 0.0);
  }

  TEST_CASE("features reject the wrong bin count") {
    CHECK_THROWS_AS(features(Eigen::VectorXcd::Zero(256)), InvalidArgument);
    CHECK_THROWS_AS(features(Eigen::VectorXcd::Zero(513)), InvalidArgument);
  }

  TEST_CASE("per-frame spectral energy equals windowed time energy") {
    const AudioSignal x = random_signal(4096, 11);
    const Spectrogram spec = stft(x);
    const Eigen::VectorXd w = hann_window(kFrameSize);
    for (Eigen::Index t = 0; t < spec.num_frames(); ++t) {
      const double time_energy = x.samples.segment(t * kHop, kFrameSize).cwiseProduct(w).squaredNorm();
      const Eigen::VectorXd p = spec.frame(t).cwiseAbs2();
      const double spec_energy = (p[0] + p[kNumBins - 1] + 2.0 * p.segment(1, kNumBins - 2).sum()) / kFrameSize;
      CHECK(std::abs(spec_energy - time_energy) <= 1e-9 * time_energy);
    }
  }

  TEST_CASE("stft is linear") {
    const AudioSignal x = random_signal(3000, 21), y = random_signal(3000, 22);
    const double a = 0.7, b = -1.3;
    const AudioSignal z{a * x.samples + b * y.samples};
    const Eigen::MatrixXcd lhs = stft(z).frames;
    const Eigen::MatrixXcd rhs = a * stft(x).frames + b * stft(y).frames;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("round trip holds for random signals of varied length") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Index n = 1024 + Eigen::Index(uniform_index(rng, 6000));
      const AudioSignal x = random_signal(n, 100 + std::uint64_t(trial));
      const AudioSignal y = istft(stft(x));
      CHECK(interior_relative_rms(x.samples, y.samples, kHop, y.size() - kHop) < 1e-10);
    }
  }

  TEST_CASE("irfft inverts rfft") {
    const AudioSignal x = random_signal(512, 5);
    CHECK((irfft(rfft(x.samples), 512) - x.samples).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(irfft(Eigen::VectorXcd::Zero(10), 512), InvalidArgument);
  }

  TEST_CASE("audio signal validation") {
    AudioSignal s{Eigen::VectorXd::Zero(4), 0};
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.sample_rate = 16000;
    CHECK_NOTHROW(s.validate());
    s.samples[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
  }
}
