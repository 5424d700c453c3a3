// specrec/train.hpp
//
// Adversarial training loop: per step, sample a batch with phase
// augmentation and per-item warm starts, update the discriminator on the
// least-squares criterion, then update the generator on the deception
// criterion plus the weighted feature-matching distance. Everything is
// driven by one seed; the loss log is reproducible byte for byte.

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <vector>

#include "specrec/gan.hpp"

namespace specrec::gan {

struct TrainConfig {
  double lambda = 1.0;
  std::vector<double> feature_weights;  // empty: 0 for layer 0, 1 elsewhere
  int batch_size = 10;
  int epochs = 5;  // desk-scale default; the full-corpus setting is 73
  int gl_warm_iters = 5;
  std::uint64_t seed = 0;
  int d_steps_per_g_step = 1;
  double learning_rate = 5e-5;
  double alpha = 0.5;
  double epsilon = 1e-8;
  int max_steps = 0;  // 0: bounded by epochs only

  void validate() const {
    if (lambda < 0) throw ShapeMismatch("lambda must be >= 0");
    for (double w : feature_weights)
      if (w < 0) throw ShapeMismatch("feature weights must be >= 0");
    if (batch_size < 1 || epochs < 1 || gl_warm_iters < 0 || d_steps_per_g_step < 1)
      throw ShapeMismatch("train counts must be positive");
  }
};

struct StepLog {
  int step = 0;
  double v = 0, u = 0, i = 0, g_total = 0;
};

inline void write_loss_csv(std::ostream& os, const std::vector<StepLog>& log) {
  os << "step,V,U,I,G_total\n";
  char line[192];
  for (const StepLog& s : log) {
    std::snprintf(line, sizeof line, "%d,%.12e,%.12e,%.12e,%.12e\n", s.step, s.v, s.u,
                  s.i, s.g_total);
    os << line;
  }
}

namespace detail_train {

// Stack single-item spectrograms into a (B, 2*bins, N) tensor, optionally in
// normalized scale.
template <typename Scalar>
nn::Tensor<Scalar> pack_batch(const std::vector<ComplexSpectrogram<Scalar>>& items,
                              const NormStats<Scalar>* stats) {
  const Eigen::Index B = Eigen::Index(items.size());
  const Eigen::Index bins = items.front().bins();
  const Eigen::Index frames = items.front().frames();
  nn::Tensor<Scalar> t;
  t.shape = nn::Shape{B, 2 * bins, frames};
  t.values.resize(t.shape.size());
  for (Eigen::Index b = 0; b < B; ++b) {
    if (items[size_t(b)].bins() != bins || items[size_t(b)].frames() != frames)
      throw ShapeMismatch("batch items disagree on spectrogram shape");
    const nn::Tensor<Scalar> one = stats ? normalize(items[size_t(b)], *stats)
                                         : spectrogram_to_channels(items[size_t(b)]);
    t.values.segment(b * 2 * bins * frames, 2 * bins * frames) = one.values;
  }
  return t;
}

template <typename Scalar>
nn::Tensor<Scalar> pack_cond(const std::vector<ArrayXX<Scalar>>& bands) {
  const Eigen::Index B = Eigen::Index(bands.size());
  const Eigen::Index C = bands.front().rows();
  const Eigen::Index N = bands.front().cols();
  nn::Tensor<Scalar> t;
  t.shape = nn::Shape{B, C, N};
  t.values.resize(t.shape.size());
  for (Eigen::Index b = 0; b < B; ++b)
    for (Eigen::Index c = 0; c < C; ++c)
      for (Eigen::Index n = 0; n < N; ++n)
        t.values[(b * C + c) * N + n] = bands[size_t(b)](c, n);
  return t;
}

template <typename Scalar>
std::vector<Scalar> score_vector(const nn::Tape<Scalar>& tape, int node) {
  const auto& v = tape.value(node);
  return std::vector<Scalar>(v.data(), v.data() + v.size());
}

}  // namespace detail_train

// Runs the alternating updates over the segment dataset. All items must have
// equal length; batches are drawn from a per-epoch seeded shuffle (the
// remainder after the last full batch is dropped). Returns the per-step loss
// log; the networks and normalization statistics are updated in place.
template <typename Scalar>
std::vector<StepLog> train(const std::vector<TimeSignal<Scalar>>& dataset,
                           Generator<Scalar>& G, Discriminator<Scalar>& D,
                           const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw EmptyBatch("training dataset is empty");
  for (const auto& x : dataset)
    if (x.samples.size() != dataset.front().samples.size())
      throw ShapeMismatch("training segments must share one length");

  const Eigen::Index B =
      std::min<Eigen::Index>(cfg.batch_size, Eigen::Index(dataset.size()));
  const int steps_per_epoch = int(Eigen::Index(dataset.size()) / B);
  Rng master(cfg.seed);

  nn::Rmsprop<Scalar> opt_g, opt_d;
  opt_g.learning_rate = opt_d.learning_rate = Scalar(cfg.learning_rate);
  opt_g.alpha = opt_d.alpha = Scalar(cfg.alpha);
  opt_g.epsilon = opt_d.epsilon = Scalar(cfg.epsilon);
  auto g_params = G.net.param_ptrs();
  auto d_params = D.net.param_ptrs();

  ArrayX<Scalar> denorm_scale, denorm_offset;
  denorm_coeffs(G.stats, denorm_scale, denorm_offset);

  std::vector<StepLog> log;
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<size_t> perm(dataset.size());
    std::iota(perm.begin(), perm.end(), size_t(0));
    Rng shuffle_rng = master.fork(0x5u + std::uint64_t(epoch));
    for (size_t i = perm.size() - 1; i > 0; --i)
      std::swap(perm[i], perm[size_t(shuffle_rng.uniform_int(i + 1))]);

    for (int bi = 0; bi < steps_per_epoch; ++bi) {
      if (cfg.max_steps > 0 && step >= cfg.max_steps) return log;

      std::vector<ComplexSpectrogram<Scalar>> reals, warms;
      std::vector<ArrayXX<Scalar>> conds;
      reals.reserve(size_t(B));
      warms.reserve(size_t(B));
      conds.reserve(size_t(B));
      for (Eigen::Index j = 0; j < B; ++j) {
        const size_t idx = perm[size_t(bi) * size_t(B) + size_t(j)];
        Rng item_rng = master.fork(1000003ull * std::uint64_t(step + 1) + std::uint64_t(j));
        const TimeSignal<Scalar> aug = augment_phase(dataset[idx], item_rng.next_u64());
        ComplexSpectrogram<Scalar> c = stft(aug, G.stft);
        MagnitudeSpectrogram<Scalar> a = magnitude(c);
        warms.push_back(warm_start(a, item_rng.next_u64(), cfg.gl_warm_iters));
        conds.push_back(band_average(a.values, D.cond_bands));
        reals.push_back(std::move(c));
      }
      const nn::Tensor<Scalar> real_t = detail_train::pack_batch<Scalar>(reals, nullptr);
      const nn::Tensor<Scalar> warm_t = detail_train::pack_batch<Scalar>(warms, &G.stats);
      const nn::Tensor<Scalar> cond_t = detail_train::pack_cond<Scalar>(conds);

      StepLog entry;
      entry.step = step;
      try {
        // Fake spectrograms for the discriminator update; held fixed across
        // the d_steps_per_g_step alternations.
        nn::Tensor<Scalar> fake_t;
        {
          nn::Tape<Scalar> t;
          const int gout = generator_apply(t, G, t.input(warm_t));
          const int chat = t.affine_channels(gout, denorm_scale, denorm_offset);
          fake_t = nn::Tensor<Scalar>{t.node(chat).shape, t.value(chat)};
        }

        for (int ds = 0; ds < cfg.d_steps_per_g_step; ++ds) {
          D.net.zero_grads();
          nn::Tape<Scalar> t;
          const int cond = t.input(cond_t);
          const auto real_taps = discriminator_apply(t, D, t.input(real_t), cond);
          const auto fake_taps = discriminator_apply(t, D, t.input(fake_t), cond);
          const auto s_real = detail_train::score_vector(t, real_taps.score);
          const auto s_fake = detail_train::score_vector(t, fake_taps.score);
          entry.v = loss_V(s_real, s_fake);
          if (!std::isfinite(entry.v))
            throw NonFiniteLoss("V diverged at step " + std::to_string(step));
          ArrayX<Scalar> seed_r(B), seed_f(B);
          for (Eigen::Index j = 0; j < B; ++j) {
            seed_r[j] = (s_real[size_t(j)] - Scalar(1)) / Scalar(B);
            seed_f[j] = s_fake[size_t(j)] / Scalar(B);
          }
          t.add_output_grad(real_taps.score, seed_r);
          t.add_output_grad(fake_taps.score, seed_f);
          t.backward();
          opt_d.step(d_params);
        }

        // Generator update through the frozen discriminator.
        G.net.zero_grads();
        nn::Tape<Scalar> t;
        const int cond = t.input(cond_t);
        const auto target_taps = discriminator_apply(t, D, t.input(real_t), cond, true);
        const int gout = generator_apply(t, G, t.input(warm_t));
        const int chat = t.affine_channels(gout, denorm_scale, denorm_offset);
        const auto fake_taps = discriminator_apply(t, D, chat, cond, true);

        const auto s_fake = detail_train::score_vector(t, fake_taps.score);
        entry.u = loss_U(s_fake);

        std::vector<double> weights = cfg.feature_weights.empty()
                                          ? default_feature_weights(fake_taps.features.size())
                                          : cfg.feature_weights;
        if (weights.size() != fake_taps.features.size())
          throw ShapeMismatch("feature_weights length does not match feature count");
        std::vector<ArrayX<Scalar>> f_target, f_fake;
        for (size_t l = 0; l < fake_taps.features.size(); ++l) {
          f_target.push_back(t.value(target_taps.features[l]));
          f_fake.push_back(t.value(fake_taps.features[l]));
        }
        entry.i = loss_I(f_target, f_fake, weights) / double(B);
        entry.g_total = entry.u + cfg.lambda * entry.i;
        if (!std::isfinite(entry.g_total))
          throw NonFiniteLoss("G objective diverged at step " + std::to_string(step));

        ArrayX<Scalar> seed_s(B);
        for (Eigen::Index j = 0; j < B; ++j)
          seed_s[j] = (s_fake[size_t(j)] - Scalar(1)) / Scalar(B);
        t.add_output_grad(fake_taps.score, seed_s);
        for (size_t l = 0; l < weights.size(); ++l) {
          if (weights[l] == 0.0) continue;
          const Scalar coef = Scalar(2.0 * cfg.lambda * weights[l] / double(B));
          t.add_output_grad(fake_taps.features[l],
                            (coef * (f_fake[l] - f_target[l])).eval());
        }
        t.backward();
        opt_g.step(g_params);
      } catch (const NonFiniteActivation& e) {
        throw NonFiniteLoss("step " + std::to_string(step) + ": " + e.what());
      }

      log.push_back(entry);
      ++step;
    }
  }
  return log;
}

}  // namespace specrec::gan
