// tests/oracles.hpp
//
// Independent reference implementations used only by tests: a dense
// analysis matrix with an SVD pseudo-inverse (checks stft/istft/projection
// at small sizes), a naive inner-product analysis, and a naive nested-loop
// convolution. These deliberately avoid the library's FFT/overlap-add path.

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "specrec/spectral.hpp"

namespace specrec::testing {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Full-spectrum analysis matrix, rows frame-major then bin:
// row (n*F + f) applied to x gives sum_tau win[tau] e^{-i 2 pi f tau / F} x[n*hop+tau].
inline MatrixXcd dense_analysis_matrix(const StftConfig& cfg, int frames) {
  const int F = cfg.fft_size;
  const Eigen::Index total = synthesis_length(frames, cfg);
  const ArrayX<double> win = make_window<double>(cfg);
  MatrixXcd W = MatrixXcd::Zero(static_cast<Eigen::Index>(F) * frames, total);
  for (int n = 0; n < frames; ++n)
    for (int f = 0; f < F; ++f)
      for (int tau = 0; tau < cfg.win_len; ++tau) {
        const double ang = -2.0 * EIGEN_PI * f * tau / F;
        W(static_cast<Eigen::Index>(n) * F + f, static_cast<Eigen::Index>(n) * cfg.hop + tau) =
            win[tau] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
  return W;
}

class DenseStftOracle {
 public:
  DenseStftOracle(const StftConfig& cfg, int frames)
      : cfg_(cfg),
        frames_(frames),
        W_(dense_analysis_matrix(cfg, frames)),
        svd_(W_, Eigen::ComputeThinU | Eigen::ComputeThinV) {
    svd_.setThreshold(1e-8);
  }

  // Stack the conjugate-expanded half spectrum frame-major.
  VectorXcd to_full(const ArrayXXc<double>& half) const {
    const ArrayXXc<double> full = expand_spectrum(half, cfg_.fft_size);
    VectorXcd v(static_cast<Eigen::Index>(cfg_.fft_size) * frames_);
    for (int n = 0; n < frames_; ++n)
      for (int f = 0; f < cfg_.fft_size; ++f)
        v[static_cast<Eigen::Index>(n) * cfg_.fft_size + f] = full(f, n);
    return v;
  }

  ArrayXXc<double> from_full(const VectorXcd& v) const {
    ArrayXXc<double> half(cfg_.bins(), frames_);
    for (int n = 0; n < frames_; ++n)
      for (int f = 0; f < cfg_.bins(); ++f)
        half(f, n) = v[static_cast<Eigen::Index>(n) * cfg_.fft_size + f];
    return half;
  }

  // Minimum-norm least-squares synthesis, constrained to real signals.
  VectorXd synthesize(const ArrayXXc<double>& half) const {
    return svd_.solve(to_full(half)).real();
  }

  ArrayXXc<double> project(const ArrayXXc<double>& half) const {
    return from_full(W_ * synthesize(half).cast<std::complex<double>>());
  }

  double residual(const ArrayXXc<double>& half) const {
    const VectorXcd full = to_full(half);
    return (full - W_ * synthesize(half).cast<std::complex<double>>()).squaredNorm();
  }

  ArrayXXc<double> analyze(const VectorXd& x) const {
    return from_full(W_ * x.cast<std::complex<double>>());
  }

  const MatrixXcd& matrix() const { return W_; }

 private:
  StftConfig cfg_;
  int frames_;
  MatrixXcd W_;
  Eigen::JacobiSVD<MatrixXcd> svd_;
};

// Direct per-bin inner products, no FFT.
inline ArrayXXc<double> naive_stft(const ArrayX<double>& x, const StftConfig& cfg) {
  const int frames = num_frames(x.size(), cfg);
  const ArrayX<double> win = make_window<double>(cfg);
  ArrayXXc<double> out(cfg.bins(), frames);
  for (int n = 0; n < frames; ++n)
    for (int f = 0; f < cfg.bins(); ++f) {
      std::complex<double> acc(0, 0);
      for (int tau = 0; tau < cfg.win_len; ++tau) {
        const double ang = -2.0 * EIGEN_PI * f * tau / cfg.fft_size;
        acc += win[tau] * x[static_cast<Eigen::Index>(n) * cfg.hop + tau] *
               std::complex<double>(std::cos(ang), std::sin(ang));
      }
      out(f, n) = acc;
    }
  return out;
}

// Naive nested-loop 1-D convolution in the (batch, channels, length) layout.
inline Eigen::ArrayXd naive_conv1d(const Eigen::ArrayXd& x, Eigen::Index B, Eigen::Index cin,
                                   Eigen::Index L, const Eigen::ArrayXd& w,
                                   Eigen::Index cout, Eigen::Index K,
                                   const Eigen::ArrayXd& bias, Eigen::Index stride,
                                   Eigen::Index padding) {
  const Eigen::Index lout = (L + 2 * padding - K) / stride + 1;
  Eigen::ArrayXd out(B * cout * lout);
  for (Eigen::Index b = 0; b < B; ++b)
    for (Eigen::Index o = 0; o < cout; ++o)
      for (Eigen::Index j = 0; j < lout; ++j) {
        double acc = bias[o];
        for (Eigen::Index c = 0; c < cin; ++c)
          for (Eigen::Index t = 0; t < K; ++t) {
            const Eigen::Index pos = j * stride - padding + t;
            if (pos >= 0 && pos < L)
              acc += w[(o * cin + c) * K + t] * x[(b * cin + c) * L + pos];
          }
        out[(b * cout + o) * lout + j] = acc;
      }
  return out;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

template <typename A, typename B>
double rel_err_arr(const A& got, const B& want) {
  const double denom = std::max(double(want.matrix().norm()), 1e-300);
  return double((got - want).matrix().norm()) / denom;
}

}  // namespace specrec::testing
