// specrec/gan.hpp
//
// Generator/discriminator pair for learned spectrogram inversion: channel
// packing and per-frequency normalization, the Griffin-Lim warm start, the
// least-squares adversarial criteria with the feature-matching distance, and
// initial-phase augmentation. The discriminator runs behind a fixed,
// differentiable synthesis front block, so it scores waveforms.

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "specrec/griffinlim.hpp"
#include "specrec/net.hpp"
#include "specrec/nn.hpp"
#include "specrec/spectral.hpp"

namespace specrec::gan {

// Per-frequency, per-part first and second moments of the training corpus.
// Row 0 holds the real part, row 1 the imaginary part.
template <typename Scalar>
struct NormStats {
  ArrayXX<Scalar> mean;   // 2 x bins
  ArrayXX<Scalar> stdev;  // 2 x bins, clamped at 1e-8

  Eigen::Index bins() const { return mean.cols(); }
};

template <typename Scalar>
NormStats<Scalar> fit_norm_stats(const std::vector<ComplexSpectrogram<Scalar>>& corpus) {
  if (corpus.empty()) throw EmptyBatch("norm stats need a nonempty corpus");
  const Eigen::Index bins = corpus.front().bins();
  ArrayXX<double> sum = ArrayXX<double>::Zero(2, bins);
  std::int64_t count = 0;
  for (const auto& c : corpus) {
    if (c.bins() != bins) throw ShapeMismatch("corpus spectrograms disagree on bins");
    for (Eigen::Index n = 0; n < c.frames(); ++n)
      for (Eigen::Index f = 0; f < bins; ++f) {
        sum(0, f) += double(c.values(f, n).real());
        sum(1, f) += double(c.values(f, n).imag());
      }
    count += c.frames();
  }
  const ArrayXX<double> mean = sum / double(count);
  // second pass on centered values; a constant corpus gives exactly zero
  ArrayXX<double> var = ArrayXX<double>::Zero(2, bins);
  for (const auto& c : corpus)
    for (Eigen::Index n = 0; n < c.frames(); ++n)
      for (Eigen::Index f = 0; f < bins; ++f) {
        const double dre = double(c.values(f, n).real()) - mean(0, f);
        const double dim = double(c.values(f, n).imag()) - mean(1, f);
        var(0, f) += dre * dre;
        var(1, f) += dim * dim;
      }
  var /= double(count);
  NormStats<Scalar> stats;
  stats.mean = mean.template cast<Scalar>();
  stats.stdev = var.sqrt().max(1e-8).template cast<Scalar>();
  return stats;
}

// Planar channel packing: channels [0, bins) carry real parts, channels
// [bins, 2*bins) imaginary parts, one column per frame.
template <typename Scalar>
nn::Tensor<Scalar> spectrogram_to_channels(const ComplexSpectrogram<Scalar>& c) {
  const Eigen::Index bins = c.bins(), frames = c.frames();
  nn::Tensor<Scalar> t;
  t.shape = nn::Shape{1, 2 * bins, frames};
  t.values.resize(t.shape.size());
  for (Eigen::Index f = 0; f < bins; ++f)
    for (Eigen::Index n = 0; n < frames; ++n) {
      t.values[f * frames + n] = c.values(f, n).real();
      t.values[(bins + f) * frames + n] = c.values(f, n).imag();
    }
  return t;
}

template <typename Scalar>
ComplexSpectrogram<Scalar> channels_to_spectrogram(const ArrayX<Scalar>& values,
                                                   Eigen::Index bins, Eigen::Index frames,
                                                   const StftConfig& cfg) {
  if (values.size() != 2 * bins * frames)
    throw ShapeMismatch("channel buffer does not hold 2*bins*frames values");
  ComplexSpectrogram<Scalar> c;
  c.config = cfg;
  c.values.resize(bins, frames);
  for (Eigen::Index f = 0; f < bins; ++f)
    for (Eigen::Index n = 0; n < frames; ++n)
      c.values(f, n) = std::complex<Scalar>(values[f * frames + n],
                                            values[(bins + f) * frames + n]);
  return c;
}

// Per-channel affine coefficients realizing (v - mean)/std on packed
// channels, and the inverse.
template <typename Scalar>
void norm_coeffs(const NormStats<Scalar>& stats, ArrayX<Scalar>& scale,
                 ArrayX<Scalar>& offset) {
  const Eigen::Index bins = stats.bins();
  scale.resize(2 * bins);
  offset.resize(2 * bins);
  for (Eigen::Index part = 0; part < 2; ++part)
    for (Eigen::Index f = 0; f < bins; ++f) {
      scale[part * bins + f] = Scalar(1) / stats.stdev(part, f);
      offset[part * bins + f] = -stats.mean(part, f) / stats.stdev(part, f);
    }
}

template <typename Scalar>
void denorm_coeffs(const NormStats<Scalar>& stats, ArrayX<Scalar>& scale,
                   ArrayX<Scalar>& offset) {
  const Eigen::Index bins = stats.bins();
  scale.resize(2 * bins);
  offset.resize(2 * bins);
  for (Eigen::Index part = 0; part < 2; ++part)
    for (Eigen::Index f = 0; f < bins; ++f) {
      scale[part * bins + f] = stats.stdev(part, f);
      offset[part * bins + f] = stats.mean(part, f);
    }
}

template <typename Scalar>
nn::Tensor<Scalar> normalize(const ComplexSpectrogram<Scalar>& c,
                             const NormStats<Scalar>& stats) {
  if (stats.bins() != c.bins()) throw ShapeMismatch("norm stats bins mismatch");
  nn::Tensor<Scalar> t = spectrogram_to_channels(c);
  ArrayX<Scalar> scale, offset;
  norm_coeffs(stats, scale, offset);
  const Eigen::Index frames = c.frames();
  for (Eigen::Index ch = 0; ch < 2 * c.bins(); ++ch)
    t.values.segment(ch * frames, frames) =
        t.values.segment(ch * frames, frames) * scale[ch] + offset[ch];
  return t;
}

template <typename Scalar>
ComplexSpectrogram<Scalar> denormalize(const nn::Tensor<Scalar>& t,
                                       const NormStats<Scalar>& stats,
                                       const StftConfig& cfg) {
  const Eigen::Index bins = stats.bins();
  if (t.shape.channels != 2 * bins)
    throw ShapeMismatch("tensor channels do not match 2*bins");
  ArrayX<Scalar> values = t.values;
  const Eigen::Index frames = t.shape.length;
  ArrayX<Scalar> scale, offset;
  denorm_coeffs(stats, scale, offset);
  for (Eigen::Index ch = 0; ch < 2 * bins; ++ch)
    values.segment(ch * frames, frames) =
        values.segment(ch * frames, frames) * scale[ch] + offset[ch];
  return channels_to_spectrogram(values, bins, frames, cfg);
}

// Average the magnitude grid into `bands` contiguous frequency bands
// (conditioning input for the discriminator).
template <typename Scalar>
ArrayXX<Scalar> band_average(const ArrayXX<Scalar>& a, Eigen::Index bands) {
  const Eigen::Index bins = a.rows();
  if (bands < 1 || bands > bins) throw ShapeMismatch("invalid band count");
  ArrayXX<Scalar> out(bands, a.cols());
  for (Eigen::Index b = 0; b < bands; ++b) {
    const Eigen::Index s = b * bins / bands;
    const Eigen::Index e = std::max(s + 1, (b + 1) * bins / bands);
    out.row(b) = a.middleRows(s, e - s).colwise().sum() / Scalar(e - s);
  }
  return out;
}

// Pack a (bands x frames) grid as a single-item tensor.
template <typename Scalar>
nn::Tensor<Scalar> bands_to_tensor(const ArrayXX<Scalar>& bands) {
  nn::Tensor<Scalar> t;
  t.shape = nn::Shape{1, bands.rows(), bands.cols()};
  t.values.resize(t.shape.size());
  for (Eigen::Index b = 0; b < bands.rows(); ++b)
    for (Eigen::Index n = 0; n < bands.cols(); ++n)
      t.values[b * bands.cols() + n] = bands(b, n);
  return t;
}

// G input: the spectrogram after a few iterations of the classical method
// from a random (or provided) initial phase. iters = 0 returns the
// unprojected magnitude-phase combination.
template <typename Scalar>
ComplexSpectrogram<Scalar> warm_start(
    const MagnitudeSpectrogram<Scalar>& a, std::uint64_t seed, int iters,
    const std::optional<PhaseSpectrogram<Scalar>>& provided = {}) {
  GriffinLimOptions<Scalar> opts;
  opts.seed = seed;
  opts.record_objective = false;
  if (provided) {
    opts.phase_init = PhaseInit::Provided;
    opts.provided_phase = provided;
  }
  if (iters == 0) return combine(a, init_phase(a, opts));
  opts.max_iters = iters;
  return gl_reconstruct(a, opts).final_spectrogram;
}

// ---- architectures ---------------------------------------------------------

struct GeneratorArch {
  int width = 64;
  int blocks = 3;
  int io_kernel = 9;
  int block_kernel = 3;
  bool global_skip = false;
};

struct DiscriminatorArch {
  std::vector<int> channels = {16, 32, 64, 64};
  int kernel = 31;
  int stride = 4;
  int concat_after = 2;  // conv/activation pairs before the conditioning join
  int fc_units = 256;
  double slope = 0.2;
  int cond_bands = 32;
};

inline std::vector<nn::LayerSpec> generator_specs(Eigen::Index bins,
                                                  const GeneratorArch& arch) {
  using nn::LayerKind;
  using nn::LayerSpec;
  std::vector<LayerSpec> specs;
  auto conv = [](std::string name, int k, int c) {
    LayerSpec s;
    s.kind = LayerKind::Conv1D;
    s.name = std::move(name);
    s.kernel = k;
    s.stride = 1;
    s.padding = (k - 1) / 2;
    s.out_channels = c;
    return s;
  };
  specs.push_back(conv("g.in", arch.io_kernel, arch.width));
  for (int i = 0; i < arch.blocks; ++i) {
    const std::string base = "g.b" + std::to_string(i);
    const int block_input = int(specs.size()) - 1;
    specs.push_back(conv(base + ".c1", arch.block_kernel, arch.width));
    LayerSpec act;
    act.kind = LayerKind::PReLU;
    act.name = base + ".act";
    specs.push_back(act);
    specs.push_back(conv(base + ".c2", arch.block_kernel, arch.width));
    LayerSpec skip;
    skip.kind = LayerKind::ResidualAdd;
    skip.name = base + ".skip";
    skip.source_layer = block_input;
    specs.push_back(skip);
  }
  specs.push_back(conv("g.out", arch.io_kernel, int(2 * bins)));
  if (arch.global_skip) {
    nn::LayerSpec skip;
    skip.kind = LayerKind::ResidualAdd;
    skip.name = "g.skip";
    skip.source_layer = nn::kSourceNetworkInput;
    specs.push_back(skip);
  }
  return specs;
}

inline std::vector<nn::LayerSpec> discriminator_specs(const DiscriminatorArch& arch) {
  using nn::LayerKind;
  using nn::LayerSpec;
  std::vector<LayerSpec> specs;
  int block = 0;
  for (int c : arch.channels) {
    LayerSpec conv;
    conv.kind = LayerKind::Conv1D;
    conv.name = "d.c" + std::to_string(block + 1);
    conv.kernel = arch.kernel;
    conv.stride = arch.stride;
    conv.padding = (arch.kernel - 1) / 2;
    conv.out_channels = c;
    specs.push_back(conv);
    LayerSpec act;
    act.kind = LayerKind::LeakyReLU;
    act.name = "d.a" + std::to_string(block + 1);
    act.slope = arch.slope;
    specs.push_back(act);
    ++block;
    if (block == arch.concat_after) {
      LayerSpec cat;
      cat.kind = LayerKind::Concat;
      cat.name = "d.cond";
      cat.source_layer = nn::kSourceSideInput;
      specs.push_back(cat);
    }
  }
  LayerSpec fc1;
  fc1.kind = LayerKind::FullyConnected;
  fc1.name = "d.f1";
  fc1.out_units = arch.fc_units;
  specs.push_back(fc1);
  LayerSpec act;
  act.kind = LayerKind::LeakyReLU;
  act.name = "d.a" + std::to_string(block + 1);
  act.slope = arch.slope;
  specs.push_back(act);
  LayerSpec fc2;
  fc2.kind = LayerKind::FullyConnected;
  fc2.name = "d.f2";
  fc2.out_units = 1;
  specs.push_back(fc2);
  return specs;
}

// ---- networks ---------------------------------------------------------------

// Fully convolutional spectrogram-to-spectrogram map over packed channels.
template <typename Scalar>
struct Generator {
  StftConfig stft;
  NormStats<Scalar> stats;
  nn::Network<Scalar> net;

  Generator(const StftConfig& cfg, NormStats<Scalar> s, const GeneratorArch& arch)
      : stft(cfg),
        stats(std::move(s)),
        net(generator_specs(cfg.bins(), arch), nn::Shape{1, 2 * cfg.bins(), 8}) {}

  Generator(const StftConfig& cfg, NormStats<Scalar> s, std::vector<nn::LayerSpec> specs)
      : stft(cfg),
        stats(std::move(s)),
        net(std::move(specs), nn::Shape{1, 2 * cfg.bins(), 8}) {}
};

// Waveform discriminator behind the fixed synthesis front block, conditioned
// on band-averaged magnitudes injected at the Concat layer.
template <typename Scalar>
struct Discriminator {
  StftConfig stft;
  int cond_bands;
  Eigen::Index nominal_frames;  // frame count the FC head was sized for
  nn::Network<Scalar> net;

  Discriminator(const StftConfig& cfg, const DiscriminatorArch& arch,
                Eigen::Index train_frames)
      : stft(cfg),
        cond_bands(arch.cond_bands),
        nominal_frames(train_frames),
        net(discriminator_specs(arch),
            nn::Shape{1, 1, synthesis_length(train_frames, cfg)}, arch.cond_bands) {}

  Discriminator(const StftConfig& cfg, int bands, Eigen::Index train_frames,
                std::vector<nn::LayerSpec> specs)
      : stft(cfg),
        cond_bands(bands),
        nominal_frames(train_frames),
        net(std::move(specs), nn::Shape{1, 1, synthesis_length(train_frames, cfg)},
            bands) {}
};

// Record the generator on a tape from a packed (and already normalized)
// input node; returns the output node (normalized scale).
template <typename Scalar>
int generator_apply(nn::Tape<Scalar>& tape, Generator<Scalar>& G, int input_node) {
  const auto rec = G.net.forward(tape, input_node);
  const auto& in_shape = tape.node(input_node).shape;
  const auto& out_shape = tape.node(rec.output).shape;
  if (out_shape.channels != in_shape.channels || out_shape.length != in_shape.length)
    throw ShapeMismatch("generator must preserve channel count and frame count, got " +
                        out_shape.str() + " from " + in_shape.str());
  return rec.output;
}

// ĉ = denormalize(G(normalize(warm))).
template <typename Scalar>
ComplexSpectrogram<Scalar> generator_forward(Generator<Scalar>& G,
                                             const ComplexSpectrogram<Scalar>& warm) {
  nn::Tape<Scalar> tape;
  const int in = tape.input(normalize(warm, G.stats));
  const int out = generator_apply(tape, G, in);
  nn::Tensor<Scalar> t{tape.node(out).shape, tape.value(out)};
  return denormalize(t, G.stats, warm.config);
}

// Tape-level discriminator application. The feature list is D_0 = the packed
// spectrogram input, D_1 = the synthesized waveform, then the output of every
// activation layer.
template <typename Scalar>
struct DiscriminatorTaps {
  int score = -1;
  std::vector<int> features;
};

template <typename Scalar>
DiscriminatorTaps<Scalar> discriminator_apply(nn::Tape<Scalar>& tape,
                                              Discriminator<Scalar>& D,
                                              int spec_channels_node, int cond_node,
                                              bool frozen = false) {
  const int wave = tape.istft_front(spec_channels_node, D.stft);
  const auto rec = D.net.forward(tape, wave, cond_node, frozen);
  DiscriminatorTaps<Scalar> taps;
  taps.features.push_back(spec_channels_node);
  taps.features.push_back(wave);
  const auto& specs = D.net.specs();
  for (size_t i = 0; i < specs.size(); ++i)
    if (specs[i].kind == nn::LayerKind::PReLU || specs[i].kind == nn::LayerKind::LeakyReLU)
      taps.features.push_back(rec.layer_outputs[i]);
  taps.score = rec.output;
  if (tape.node(taps.score).shape.channels != 1 || tape.node(taps.score).shape.length != 1)
    throw ShapeMismatch("discriminator head must emit one scalar per item");
  return taps;
}

template <typename Scalar>
struct DiscriminatorOutput {
  Scalar score = Scalar(0);
  std::vector<ArrayX<Scalar>> features;  // D_0 .. D_L
};

// Single-item inference: synthesize, condition on band-averaged a, score.
template <typename Scalar>
DiscriminatorOutput<Scalar> discriminator_forward(Discriminator<Scalar>& D,
                                                  const ComplexSpectrogram<Scalar>& c,
                                                  const MagnitudeSpectrogram<Scalar>& a) {
  if (c.bins() != a.values.rows() || c.frames() != a.values.cols())
    throw ShapeMismatch("spectrogram and conditioning magnitude disagree on shape");
  nn::Tape<Scalar> tape;
  const int spec_node = tape.input(spectrogram_to_channels(c));
  const int cond_node = tape.input(bands_to_tensor(band_average(a.values, D.cond_bands)));
  const auto taps = discriminator_apply(tape, D, spec_node, cond_node);
  DiscriminatorOutput<Scalar> out;
  out.score = tape.value(taps.score)[0];
  for (int f : taps.features) out.features.push_back(tape.value(f));
  return out;
}

// ---- adversarial criteria ---------------------------------------------------

// 1/2 mean((s_real - 1)^2) + 1/2 mean(s_fake^2).
template <typename Scalar>
double loss_V(const std::vector<Scalar>& scores_real, const std::vector<Scalar>& scores_fake) {
  if (scores_real.empty() || scores_fake.empty())
    throw EmptyBatch("loss_V needs nonempty score batches");
  double real_term = 0, fake_term = 0;
  for (Scalar s : scores_real) real_term += (double(s) - 1.0) * (double(s) - 1.0);
  for (Scalar s : scores_fake) fake_term += double(s) * double(s);
  return 0.5 * real_term / double(scores_real.size()) +
         0.5 * fake_term / double(scores_fake.size());
}

// 1/2 mean((s_fake - 1)^2).
template <typename Scalar>
double loss_U(const std::vector<Scalar>& scores_fake) {
  if (scores_fake.empty()) throw EmptyBatch("loss_U needs a nonempty score batch");
  double acc = 0;
  for (Scalar s : scores_fake) acc += (double(s) - 1.0) * (double(s) - 1.0);
  return 0.5 * acc / double(scores_fake.size());
}

// sum_l w_l ||D_l(c) - D_l(c_hat)||^2, layer 0 included.
template <typename Scalar>
double loss_I(const std::vector<ArrayX<Scalar>>& features_target,
              const std::vector<ArrayX<Scalar>>& features_fake,
              const std::vector<double>& weights) {
  if (features_target.size() != features_fake.size() ||
      features_target.size() != weights.size())
    throw ShapeMismatch("feature lists and weights must have equal length");
  double acc = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    if (features_target[l].size() != features_fake[l].size())
      throw ShapeMismatch("feature shapes differ at layer " + std::to_string(l));
    acc += weights[l] *
           double((features_target[l] - features_fake[l]).square().sum());
  }
  return acc;
}

// Default layer weights: 0 for the input layer, 1 elsewhere.
inline std::vector<double> default_feature_weights(size_t n_features) {
  std::vector<double> w(n_features, 1.0);
  if (!w.empty()) w[0] = 0.0;
  return w;
}

// ---- data augmentation -------------------------------------------------------

// Rotate every positive-frequency component of the signal by theta; the
// zero-frequency and Nyquist components are left untouched, so energy and
// magnitude structure are preserved while the initial phase changes.
template <typename Scalar>
TimeSignal<Scalar> augment_phase_angle(const TimeSignal<Scalar>& x, double theta) {
  const Eigen::Index T = x.samples.size();
  if (T < 2) return x;
  Eigen::FFT<Scalar> fft;
  const std::size_t n = static_cast<std::size_t>(T);
  std::vector<std::complex<Scalar>> in(n), freq(n), back(n);
  for (Eigen::Index t = 0; t < T; ++t)
    in[size_t(t)] = std::complex<Scalar>(x.samples[t], Scalar(0));
  fft.fwd(freq.data(), in.data(), T);
  const std::complex<Scalar> rot(Scalar(std::cos(theta)), Scalar(std::sin(theta)));
  const Eigen::Index kmax = (T % 2 == 0) ? T / 2 - 1 : T / 2;
  for (Eigen::Index k = 1; k <= kmax; ++k) {
    freq[size_t(k)] *= rot;
    freq[size_t(T - k)] = std::conj(freq[size_t(k)]);
  }
  fft.inv(back.data(), freq.data(), T);
  TimeSignal<Scalar> out;
  out.sample_rate = x.sample_rate;
  out.samples.resize(T);
  for (Eigen::Index t = 0; t < T; ++t) out.samples[t] = back[size_t(t)].real();
  return out;
}

template <typename Scalar>
TimeSignal<Scalar> augment_phase(const TimeSignal<Scalar>& x, std::uint64_t seed) {
  Rng rng(seed);
  return augment_phase_angle(x, rng.uniform(0.0, 2.0 * EIGEN_PI));
}

}  // namespace specrec::gan
