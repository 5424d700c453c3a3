// tests/test_spectral.cpp

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "specrec/rng.hpp"
#include "specrec/spectral.hpp"

using namespace specrec;
using namespace specrec::testing;

namespace {

StftConfig small_config(int win, int hop, WindowKind kind, int fft = 0) {
  StftConfig cfg;
  cfg.sample_rate = 8000;
  cfg.win_len = win;
  cfg.hop = hop;
  cfg.window_kind = kind;
  cfg.fft_size = fft == 0 ? win : fft;
  return cfg;
}

TimeSignal<double> random_signal(Rng& rng, Eigen::Index len, int rate) {
  TimeSignal<double> x;
  x.sample_rate = rate;
  x.samples.resize(len);
  for (Eigen::Index i = 0; i < len; ++i) x.samples[i] = rng.uniform(-1.0, 1.0);
  return x;
}

ComplexSpectrogram<double> random_spectrogram(Rng& rng, const StftConfig& cfg, int frames) {
  ComplexSpectrogram<double> c;
  c.config = cfg;
  c.values.resize(cfg.bins(), frames);
  for (Eigen::Index n = 0; n < frames; ++n)
    for (Eigen::Index f = 0; f < cfg.bins(); ++f)
      c.values(f, n) = std::complex<double>(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  return c;
}

}  // namespace

TEST_CASE("rectangular window is all ones") {
  const auto w = make_window<double>(small_config(4, 2, WindowKind::Rectangular));
  REQUIRE(w.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(w[i] == 1.0);
}

TEST_CASE("blackman endpoints vanish") {
  const auto w = make_window<double>(small_config(16, 8, WindowKind::Blackman));
  CHECK(std::abs(w[0]) < 1e-12);
  CHECK(std::abs(w[15]) < 1e-12);
}

TEST_CASE("blackman midpoints match the three-cosine formula") {
  StftConfig cfg;  // default: 1024-sample blackman
  const auto w = make_window<double>(cfg);
  for (int t : {511, 512}) {
    const double a = 2.0 * EIGEN_PI * t / 1023.0;
    const double direct = 0.42 - 0.5 * std::cos(a) + 0.08 * std::cos(2.0 * a);
    CHECK(std::abs(w[t] - direct) < 1e-15);
  }
  // symmetric form
  for (int t = 0; t < 1024; ++t) CHECK(w[t] == doctest::Approx(w[1023 - t]).epsilon(1e-12));
}

TEST_CASE("hann window matches its closed form") {
  const auto w = make_window<double>(small_config(8, 4, WindowKind::Hann));
  CHECK(std::abs(w[0]) < 1e-15);
  for (int t = 0; t < 8; ++t) {
    const double direct = 0.5 - 0.5 * std::cos(2.0 * EIGEN_PI * t / 7.0);
    CHECK(w[t] == doctest::Approx(direct).epsilon(1e-14));
  }
}

TEST_CASE("stft of silence is zero with the right shape") {
  StftConfig cfg;
  TimeSignal<double> x{ArrayX<double>::Zero(3000), cfg.sample_rate};
  const auto c = stft(x, cfg);
  CHECK(c.bins() == 513);
  CHECK(c.frames() == 4);
  CHECK(c.values.abs().maxCoeff() == 0.0);
}

TEST_CASE("stft concentrates a bin-aligned cosine") {
  auto cfg = small_config(64, 32, WindowKind::Rectangular);
  const int k = 7;
  TimeSignal<double> x;
  x.sample_rate = cfg.sample_rate;
  x.samples.resize(64);
  for (int t = 0; t < 64; ++t)
    x.samples[t] = std::cos(2.0 * EIGEN_PI * k * t / 64.0);
  const auto c = stft(x, cfg);
  REQUIRE(c.frames() == 1);
  const double peak = std::abs(c.values(k, 0));
  CHECK(peak == doctest::Approx(32.0).epsilon(1e-9));
  for (int f = 0; f < c.bins(); ++f) {
    if (f == k) continue;
    CHECK(std::abs(c.values(f, 0)) <= 1e-9 * peak);
  }
}

TEST_CASE("stft matches the naive inner-product oracle") {
  Rng rng(11);
  auto cfg = small_config(16, 8, WindowKind::Blackman);
  const auto x = random_signal(rng, 32, cfg.sample_rate);
  const auto c = stft(x, cfg);
  REQUIRE(c.frames() == 3);
  const auto want = naive_stft(x.samples, cfg);
  CHECK(rel_err_arr(c.values, want) < 1e-9);
}

TEST_CASE("stft matches the naive oracle with zero padding") {
  Rng rng(12);
  auto cfg = small_config(12, 4, WindowKind::Hann, 16);
  const auto x = random_signal(rng, 28, cfg.sample_rate);
  const auto c = stft(x, cfg);
  const auto want = naive_stft(x.samples, cfg);
  CHECK(rel_err_arr(c.values, want) < 1e-9);
}

TEST_CASE("stft rejects short signals and mismatched rates") {
  StftConfig cfg;
  TimeSignal<double> shorty{ArrayX<double>::Zero(1000), cfg.sample_rate};
  CHECK_THROWS_AS((void)stft(shorty, cfg), SignalTooShort);
  TimeSignal<double> wrong{ArrayX<double>::Zero(2048), 44100};
  CHECK_THROWS_AS((void)stft(wrong, cfg), ShapeMismatch);
}

TEST_CASE("istft of silence is silence") {
  StftConfig cfg;
  ComplexSpectrogram<double> c;
  c.config = cfg;
  c.values = ArrayXXc<double>::Zero(cfg.bins(), 3);
  const auto x = istft(c);
  CHECK(x.samples.size() == synthesis_length(3, cfg));
  CHECK(x.samples.abs().maxCoeff() == 0.0);
}

TEST_CASE("istft inverts stft on interior samples") {
  Rng rng(21);
  StftConfig cfg;
  const auto x = random_signal(rng, 4096, cfg.sample_rate);
  const auto y = istft(stft(x, cfg));
  REQUIRE(y.samples.size() == 4096);
  const auto xi = x.samples.segment(cfg.win_len, 4096 - 2 * cfg.win_len);
  const auto yi = y.samples.segment(cfg.win_len, 4096 - 2 * cfg.win_len);
  CHECK(rel_err_arr(yi, xi) < 1e-6);
}

TEST_CASE("istft matches the dense normal-equations oracle") {
  Rng rng(22);
  auto cfg = small_config(8, 4, WindowKind::Hann);
  const int frames = 3;
  DenseStftOracle oracle(cfg, frames);
  const auto c = random_spectrogram(rng, cfg, frames);
  const auto x = istft(c);
  const VectorXd want = oracle.synthesize(c.values);
  CHECK(rel_err_arr(x.samples, want.array()) < 1e-6);
}

TEST_CASE("degenerate window sums on interior samples are an error") {
  // Tiled blackman frames: the window vanishes at frame joins, so interior
  // samples get no energy.
  auto cfg = small_config(8, 8, WindowKind::Blackman);
  Rng rng(23);
  ComplexSpectrogram<double> c = random_spectrogram(rng, cfg, 4);
  CHECK_THROWS_AS((void)istft(c), DegenerateWindowSum);
}

TEST_CASE("edge samples with vanishing window sum synthesize to zero") {
  auto cfg = small_config(8, 8, WindowKind::Blackman);
  Rng rng(24);
  ComplexSpectrogram<double> c = random_spectrogram(rng, cfg, 1);  // all edge
  const auto x = istft(c);
  CHECK(x.samples[0] == 0.0);
  CHECK(x.samples[7] == 0.0);
}

TEST_CASE("projection fixes consistent spectrograms") {
  Rng rng(31);
  StftConfig cfg;
  const auto x = random_signal(rng, 3000, cfg.sample_rate);
  const auto c = stft(x, cfg);
  const auto p = project_consistent(c);
  CHECK(rel_err_arr(p.values, c.values) < 1e-6);
}

TEST_CASE("projection is idempotent and non-expansive") {
  Rng rng(32);
  auto cfg = small_config(16, 4, WindowKind::Hann);
  for (int rep = 0; rep < 5; ++rep) {
    const auto c = random_spectrogram(rng, cfg, 4);
    const auto p = project_consistent(c);
    const auto pp = project_consistent(p);
    CHECK((pp.values - p.values).matrix().norm() <=
          1e-6 * p.values.matrix().norm());
    CHECK(half_spectrum_sq_norm<double>(p.values) <=
          half_spectrum_sq_norm<double>(c.values) + 1e-9);
  }
}

TEST_CASE("projection matches the dense pseudo-inverse oracle") {
  Rng rng(33);
  auto cfg = small_config(8, 2, WindowKind::Blackman);
  const int frames = 4;
  DenseStftOracle oracle(cfg, frames);
  const auto c = random_spectrogram(rng, cfg, frames);
  const auto p = project_consistent(c);
  const auto want = oracle.project(c.values);
  CHECK(rel_err_arr(p.values, want) < 1e-6);
}

TEST_CASE("magnitude and phase decompose 3+4j") {
  StftConfig cfg = small_config(4, 2, WindowKind::Rectangular);
  ComplexSpectrogram<double> c;
  c.config = cfg;
  c.values = ArrayXXc<double>::Zero(cfg.bins(), 1);
  c.values(1, 0) = std::complex<double>(3, 4);
  const auto a = magnitude(c);
  const auto phi = phase(c);
  CHECK(a.values(1, 0) == doctest::Approx(5.0));
  CHECK(phi.values(1, 0).real() == doctest::Approx(0.6));
  CHECK(phi.values(1, 0).imag() == doctest::Approx(0.8));
  // stated zero convention
  CHECK(phi.values(0, 0) == std::complex<double>(1, 0));
}

TEST_CASE("combine inverts the polar decomposition") {
  Rng rng(41);
  auto cfg = small_config(16, 8, WindowKind::Hann);
  const auto c = random_spectrogram(rng, cfg, 3);
  const auto back = combine(magnitude(c), phase(c));
  CHECK((back.values - c.values).abs().maxCoeff() < 1e-12);
}

TEST_CASE("phase values are unit modulus") {
  Rng rng(42);
  auto cfg = small_config(16, 8, WindowKind::Blackman);
  const auto phi = phase(random_spectrogram(rng, cfg, 4));
  CHECK((phi.values.abs() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("combine rejects mismatched shapes") {
  auto cfg = small_config(16, 8, WindowKind::Hann);
  Rng rng(43);
  const auto a = magnitude(random_spectrogram(rng, cfg, 3));
  const auto phi = phase(random_spectrogram(rng, cfg, 4));
  CHECK_THROWS_AS((void)combine(a, phi), ShapeMismatch);
}

TEST_CASE("consistency residual vanishes on consistent input") {
  Rng rng(51);
  StftConfig cfg;
  const auto x = random_signal(rng, 3000, cfg.sample_rate);
  const auto c = stft(x, cfg);
  CHECK(consistency_residual(c) <= 1e-9 * half_spectrum_sq_norm<double>(c.values));
}

TEST_CASE("consistency residual obeys pythagoras") {
  Rng rng(52);
  auto cfg = small_config(16, 4, WindowKind::Hann);
  const auto c = random_spectrogram(rng, cfg, 4);
  const auto p = project_consistent(c);
  const double res = consistency_residual(c);
  const double want = half_spectrum_sq_norm<double>(c.values) -
                      half_spectrum_sq_norm<double>(p.values);
  CHECK(rel_err(res, want) < 1e-6);
}

TEST_CASE("consistency residual matches the dense oracle") {
  Rng rng(53);
  auto cfg = small_config(8, 4, WindowKind::Hann);
  DenseStftOracle oracle(cfg, 3);
  const auto c = random_spectrogram(rng, cfg, 3);
  CHECK(rel_err(consistency_residual(c), oracle.residual(c.values)) < 1e-6);
}

TEST_CASE("dense-oracle equivalence across window kinds and padding") {
  Rng rng(54);
  for (auto kind : {WindowKind::Hann, WindowKind::Blackman, WindowKind::Rectangular}) {
    for (int fft : {8, 12}) {
      auto cfg = small_config(8, 3, kind, fft);
      DenseStftOracle oracle(cfg, 3);
      const auto sig = random_signal(rng, synthesis_length(3, cfg), cfg.sample_rate);
      CHECK(rel_err_arr(stft(sig, cfg).values, oracle.analyze(sig.samples.matrix())) < 1e-6);
      const auto c = random_spectrogram(rng, cfg, 3);
      CHECK(rel_err_arr(istft(c).samples, oracle.synthesize(c.values).array()) < 1e-6);
      CHECK(rel_err_arr(project_consistent(c).values, oracle.project(c.values)) < 1e-6);
    }
  }
}

TEST_CASE("float instantiation round-trips") {
  Rng rng(61);
  StftConfig cfg = small_config(64, 32, WindowKind::Hann);
  TimeSignal<float> x;
  x.sample_rate = cfg.sample_rate;
  x.samples.resize(512);
  for (int i = 0; i < 512; ++i) x.samples[i] = float(rng.uniform(-1.0, 1.0));
  const auto y = istft(stft(x, cfg));
  const auto xi = x.samples.segment(64, 512 - 128);
  const auto yi = y.samples.segment(64, 512 - 128);
  CHECK(rel_err_arr(yi, xi) < 1e-4);
}

TEST_CASE("config invariants are enforced") {
  StftConfig cfg;
  cfg.hop = 2048;
  CHECK_THROWS_AS(cfg.validate(), ShapeMismatch);
  cfg = StftConfig{};
  cfg.fft_size = 512;
  CHECK_THROWS_AS(cfg.validate(), ShapeMismatch);
  cfg = StftConfig{};
  cfg.win_len = 1023;
  CHECK_THROWS_AS(cfg.validate(), ShapeMismatch);
}
