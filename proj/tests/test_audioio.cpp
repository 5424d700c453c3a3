// tests/test_audioio.cpp

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "specrec/audio_io.hpp"
#include "specrec/rng.hpp"

using namespace specrec;
using namespace specrec::io;
using specrec::testing::rel_err_arr;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("specrec_audioio_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

TimeSignal<double> random_signal(Rng& rng, Eigen::Index len, int rate) {
  TimeSignal<double> x;
  x.sample_rate = rate;
  x.samples.resize(len);
  for (Eigen::Index i = 0; i < len; ++i) x.samples[i] = rng.uniform(-0.9, 0.9);
  return x;
}

}  // namespace

TEST_CASE("wav round trip stays within one quantization step") {
  TempDir tmp;
  Rng rng(401);
  const auto x = random_signal(rng, 3000, 16000);
  write_wav(tmp.file("a.wav"), x);
  const auto y = read_wav(tmp.file("a.wav"));
  CHECK(y.sample_rate == 16000);
  REQUIRE(y.samples.size() == 3000);
  CHECK((y.samples - x.samples).abs().maxCoeff() <= 1.0 / 32768.0);
}

TEST_CASE("silence round-trips exactly") {
  TempDir tmp;
  TimeSignal<double> x{ArrayX<double>::Zero(500), 8000};
  write_wav(tmp.file("z.wav"), x);
  const auto y = read_wav(tmp.file("z.wav"));
  CHECK(y.sample_rate == 8000);
  CHECK((y.samples == 0.0).all());
}

TEST_CASE("hand-built wav bytes parse to the expected samples") {
  TempDir tmp;
  const std::int16_t pcm[8] = {0, 16384, -16384, 32767, -32768, 1, -1, 8192};
  std::string bytes;
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(char((v >> (8 * i)) & 0xFF));
  };
  auto u16 = [&](std::uint16_t v) {
    bytes.push_back(char(v & 0xFF));
    bytes.push_back(char((v >> 8) & 0xFF));
  };
  bytes += "RIFF";
  u32(36 + 16);
  bytes += "WAVEfmt ";
  u32(16);
  u16(1);
  u16(1);
  u32(16000);
  u32(32000);
  u16(2);
  u16(16);
  bytes += "data";
  u32(16);
  for (std::int16_t v : pcm) u16(std::uint16_t(v));
  std::ofstream(tmp.file("fixture.wav"), std::ios::binary) << bytes;

  const auto x = read_wav(tmp.file("fixture.wav"));
  REQUIRE(x.samples.size() == 8);
  CHECK(x.sample_rate == 16000);
  const double want[8] = {0.0,          0.5, -0.5, 32767.0 / 32768.0,
                          -1.0,         1.0 / 32768.0,
                          -1.0 / 32768.0, 0.25};
  for (int i = 0; i < 8; ++i) CHECK(x.samples[i] == want[i]);
}

TEST_CASE("unsupported wav layouts are rejected") {
  TempDir tmp;
  // stereo header
  std::string bytes;
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(char((v >> (8 * i)) & 0xFF));
  };
  auto u16 = [&](std::uint16_t v) {
    bytes.push_back(char(v & 0xFF));
    bytes.push_back(char((v >> 8) & 0xFF));
  };
  bytes += "RIFF";
  u32(36 + 4);
  bytes += "WAVEfmt ";
  u32(16);
  u16(1);
  u16(2);  // stereo
  u32(16000);
  u32(64000);
  u16(4);
  u16(16);
  bytes += "data";
  u32(4);
  u32(0);
  std::ofstream(tmp.file("stereo.wav"), std::ios::binary) << bytes;
  CHECK_THROWS_AS((void)read_wav(tmp.file("stereo.wav")), UnsupportedFormat);

  std::ofstream(tmp.file("junk.wav"), std::ios::binary) << "not a riff file at all";
  CHECK_THROWS_AS((void)read_wav(tmp.file("junk.wav")), UnsupportedFormat);
  CHECK_THROWS_AS((void)read_wav(tmp.file("missing.wav")), IoFailure);
}

TEST_CASE("resampling at the same rate is the identity") {
  Rng rng(402);
  const auto x = random_signal(rng, 1000, 16000);
  const auto y = resample(x, 16000);
  CHECK((y.samples == x.samples).all());
}

TEST_CASE("resampling preserves constants") {
  TimeSignal<double> x{ArrayX<double>::Constant(4410, 0.7), 44100};
  const auto y = resample(x, 16000);
  CHECK(y.samples.size() == Eigen::Index(std::llround(4410.0 * 16000 / 44100)));
  CHECK((y.samples - 0.7).abs().maxCoeff() < 1e-9);
}

TEST_CASE("a 1 kHz tone survives 48k->16k with clean sidebands") {
  const int src = 48000, dst = 16000;
  TimeSignal<double> x;
  x.sample_rate = src;
  x.samples.resize(12288);
  for (Eigen::Index t = 0; t < x.samples.size(); ++t)
    x.samples[t] = 0.5 * std::sin(2.0 * EIGEN_PI * 1000.0 * t / src);
  const auto y = resample(x, dst);
  REQUIRE(y.samples.size() == 4096);

  // exact-bin probe on an interior slice: 1000 Hz -> bin 128 of 2048 @ 16 kHz
  StftConfig probe;
  probe.sample_rate = dst;
  probe.win_len = 2048;
  probe.hop = 2048;
  probe.fft_size = 2048;
  probe.window_kind = WindowKind::Rectangular;
  TimeSignal<double> mid{y.samples.segment(1024, 2048).eval(), dst};
  const auto spec = stft(mid, probe);
  const double peak = std::abs(spec.values(128, 0));
  CHECK(peak > 100.0);  // ~0.5 * 2048 / 2
  double worst = 0;
  for (Eigen::Index f = 0; f < spec.bins(); ++f) {
    if (std::abs(double(f) - 128.0) <= 1.0) continue;
    worst = std::max(worst, std::abs(spec.values(f, 0)));
  }
  CHECK(worst <= 1e-3 * peak);  // >= 60 dB rejection
}

TEST_CASE("resampling is linear") {
  Rng rng(403);
  const auto x = random_signal(rng, 700, 48000);
  const auto y = random_signal(rng, 700, 48000);
  TimeSignal<double> mix{(1.7 * x.samples - 0.4 * y.samples).eval(), 48000};
  const auto rm = resample(mix, 16000);
  const auto rx = resample(x, 16000);
  const auto ry = resample(y, 16000);
  CHECK(rel_err_arr(rm.samples, (1.7 * rx.samples - 0.4 * ry.samples).eval()) < 1e-9);
}

TEST_CASE("segmentation follows the stated windows") {
  Rng rng(404);
  SUBCASE("2.0 s gives three full segments") {
    const auto segs = segment(random_signal(rng, 32000, 16000), "a");
    REQUIRE(segs.size() == 3);
    CHECK(segs[0].offset == 0);
    CHECK(segs[1].offset == 8000);
    CHECK(segs[2].offset == 16000);
    for (const auto& s : segs) {
      CHECK(s.signal.samples.size() == 16000);
      CHECK_FALSE(s.padded);
    }
  }
  SUBCASE("1.0 s gives exactly one segment") {
    const auto segs = segment(random_signal(rng, 16000, 16000), "b");
    REQUIRE(segs.size() == 1);
    CHECK_FALSE(segs[0].padded);
  }
  SUBCASE("1.3 s gives a full segment plus a padded tail") {
    const auto x = random_signal(rng, 20800, 16000);
    const auto segs = segment(x, "c");
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].offset == 0);
    CHECK_FALSE(segs[0].padded);
    CHECK(segs[1].offset == 16000);
    CHECK(segs[1].padded);
    // 4800 real samples, 11200 zeros
    CHECK((segs[1].signal.samples.head(4800) == x.samples.tail(4800)).all());
    CHECK((segs[1].signal.samples.tail(11200) == 0.0).all());
  }
}

TEST_CASE("segmentation covers every sample") {
  Rng rng(405);
  for (Eigen::Index len : {9000L, 16000L, 20800L, 30000L, 47999L}) {
    const auto x = random_signal(rng, len, 16000);
    const auto segs = segment(x, "cov");
    std::vector<bool> covered(size_t(len), false);
    Eigen::Index prev_full = -1;
    for (const auto& s : segs) {
      const Eigen::Index real_len =
          std::min<Eigen::Index>(kSegmentLen, len - s.offset);
      for (Eigen::Index i = 0; i < real_len; ++i) covered[size_t(s.offset + i)] = true;
      if (!s.padded) {
        if (prev_full >= 0) CHECK(s.offset - prev_full == 8000);
        prev_full = s.offset;
      }
    }
    for (bool c : covered) CHECK(c);
  }
}

TEST_CASE("segmentation rejects empty and mis-rated input") {
  TimeSignal<double> empty{ArrayX<double>(), 16000};
  CHECK_THROWS_AS((void)segment(empty, "x"), SignalEmpty);
  TimeSignal<double> wrong{ArrayX<double>::Zero(100), 8000};
  CHECK_THROWS_AS((void)segment(wrong, "x"), ShapeMismatch);
}

TEST_CASE("manifests load, resolve, and validate") {
  TempDir tmp;
  Rng rng(406);
  write_wav(tmp.file("u1.wav"), random_signal(rng, 800, 16000));
  write_wav(tmp.file("u2.wav"), random_signal(rng, 800, 16000));
  {
    std::ofstream m(tmp.file("ok.manifest"));
    m << "# corpus\n";
    m << "u1.wav train spk1\n";
    m << "u2.wav eval spk2\n";
    m << "\n";
  }
  const auto m = load_manifest(tmp.file("ok.manifest"));
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].split == Split::Train);
  CHECK(m.entries[1].split == Split::Eval);
  CHECK(m.split_entries(Split::Train).size() == 1);
  CHECK(read_wav(m.entries[0].path).samples.size() == 800);

  {
    std::ofstream bad(tmp.file("missing.manifest"));
    bad << "nope.wav train spk1\n";
  }
  CHECK_THROWS_AS((void)load_manifest(tmp.file("missing.manifest")), IoFailure);

  {
    std::ofstream bad(tmp.file("overlap.manifest"));
    bad << "u1.wav train spk1\n";
    bad << "u1.wav eval spk1\n";
  }
  CHECK_THROWS_AS((void)load_manifest(tmp.file("overlap.manifest")), UnsupportedFormat);

  {
    std::ofstream bad(tmp.file("split.manifest"));
    bad << "u1.wav test spk1\n";
  }
  CHECK_THROWS_AS((void)load_manifest(tmp.file("split.manifest")), UnsupportedFormat);
}
