// specrec/spectral.hpp
//
// Least-squares STFT analysis/synthesis pair, the consistency projection,
// and magnitude/phase decomposition. Spectrograms are stored as the
// non-redundant half spectrum (bins 0..fft_size/2); norms double-weight the
// interior bins so they equal the corresponding full-spectrum norms.

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "specrec/error.hpp"

namespace specrec {

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using ArrayXX = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using ArrayXXc = Eigen::Array<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

enum class WindowKind { Blackman, Hann, Rectangular };

inline const char* window_name(WindowKind k) {
  switch (k) {
    case WindowKind::Blackman: return "blackman";
    case WindowKind::Hann: return "hann";
    case WindowKind::Rectangular: return "rect";
  }
  return "?";
}

inline WindowKind window_from_name(const std::string& s) {
  if (s == "blackman") return WindowKind::Blackman;
  if (s == "hann") return WindowKind::Hann;
  if (s == "rect" || s == "rectangular") return WindowKind::Rectangular;
  throw UnsupportedFormat("unknown window kind '" + s + "'");
}

// Analysis/synthesis framing. Defaults: 16 kHz, 64 ms Blackman window with
// 32 ms hop, no zero padding. fft_size must be even (half-spectrum storage).
struct StftConfig {
  int sample_rate = 16000;
  int win_len = 1024;
  int hop = 512;
  WindowKind window_kind = WindowKind::Blackman;
  int fft_size = 1024;

  int bins() const { return fft_size / 2 + 1; }

  void validate() const {
    if (sample_rate <= 0) throw ShapeMismatch("sample_rate must be positive");
    if (win_len <= 0 || win_len % 2 != 0)
      throw ShapeMismatch("win_len must be a positive even integer");
    if (hop <= 0) throw ShapeMismatch("hop must be positive");
    if (hop > win_len) throw ShapeMismatch("hop must not exceed win_len");
    if (fft_size < win_len) throw ShapeMismatch("fft_size must be >= win_len");
    if (fft_size % 2 != 0) throw ShapeMismatch("fft_size must be even");
  }

  bool operator==(const StftConfig&) const = default;
};

template <typename Scalar>
struct TimeSignal {
  ArrayX<Scalar> samples;
  int sample_rate = 16000;
};

template <typename Scalar>
struct ComplexSpectrogram {
  ArrayXXc<Scalar> values;  // bins() x frames
  StftConfig config;

  Eigen::Index bins() const { return values.rows(); }
  Eigen::Index frames() const { return values.cols(); }
};

template <typename Scalar>
struct MagnitudeSpectrogram {
  ArrayXX<Scalar> values;  // nonnegative, bins() x frames
  StftConfig config;
};

template <typename Scalar>
struct PhaseSpectrogram {
  ArrayXXc<Scalar> values;  // unit modulus, bins() x frames
  StftConfig config;
};

template <typename Scalar>
ArrayX<Scalar> make_window(const StftConfig& cfg) {
  cfg.validate();
  const int n = cfg.win_len;
  ArrayX<Scalar> w(n);
  const Scalar denom = Scalar(n - 1);
  switch (cfg.window_kind) {
    case WindowKind::Rectangular:
      w.setOnes();
      break;
    case WindowKind::Hann:
      for (int t = 0; t < n; ++t)
        w[t] = Scalar(0.5) - Scalar(0.5) * std::cos(Scalar(2 * EIGEN_PI) * Scalar(t) / denom);
      break;
    case WindowKind::Blackman:
      for (int t = 0; t < n; ++t) {
        const Scalar a = Scalar(2 * EIGEN_PI) * Scalar(t) / denom;
        w[t] = Scalar(0.42) - Scalar(0.5) * std::cos(a) + Scalar(0.08) * std::cos(2 * a);
      }
      break;
  }
  return w;
}

inline int num_frames(Eigen::Index signal_len, const StftConfig& cfg) {
  if (signal_len < cfg.win_len)
    throw SignalTooShort("signal of length " + std::to_string(signal_len) +
                         " is shorter than win_len " + std::to_string(cfg.win_len));
  return static_cast<int>((signal_len - cfg.win_len) / cfg.hop) + 1;
}

inline Eigen::Index synthesis_length(Eigen::Index frames, const StftConfig& cfg) {
  return (frames - 1) * static_cast<Eigen::Index>(cfg.hop) + cfg.win_len;
}

// Overlap-added squared window, length synthesis_length(frames, cfg).
template <typename Scalar>
ArrayX<Scalar> ola_window_sq(const StftConfig& cfg, Eigen::Index frames) {
  const ArrayX<Scalar> w2 = make_window<Scalar>(cfg).square();
  ArrayX<Scalar> denom = ArrayX<Scalar>::Zero(synthesis_length(frames, cfg));
  for (Eigen::Index n = 0; n < frames; ++n)
    denom.segment(n * cfg.hop, cfg.win_len) += w2;
  return denom;
}

// Analysis: frame n covers samples [n*hop, n*hop + win_len); frames are
// windowed, zero-padded to fft_size, transformed, and bins 0..fft_size/2 kept.
template <typename Scalar>
ComplexSpectrogram<Scalar> stft(const TimeSignal<Scalar>& x, const StftConfig& cfg) {
  cfg.validate();
  if (x.sample_rate != cfg.sample_rate)
    throw ShapeMismatch("signal sample rate " + std::to_string(x.sample_rate) +
                        " does not match config " + std::to_string(cfg.sample_rate));
  const int n_frames = num_frames(x.samples.size(), cfg);
  const int fft_size = cfg.fft_size;
  const ArrayX<Scalar> window = make_window<Scalar>(cfg);

  ComplexSpectrogram<Scalar> out;
  out.config = cfg;
  out.values.resize(cfg.bins(), n_frames);

  Eigen::FFT<Scalar> fft;
  std::vector<std::complex<Scalar>> in(fft_size), freq(fft_size);
  for (int n = 0; n < n_frames; ++n) {
    const Eigen::Index base = static_cast<Eigen::Index>(n) * cfg.hop;
    for (int t = 0; t < cfg.win_len; ++t)
      in[t] = std::complex<Scalar>(x.samples[base + t] * window[t], Scalar(0));
    for (int t = cfg.win_len; t < fft_size; ++t) in[t] = std::complex<Scalar>(0, 0);
    fft.fwd(freq.data(), in.data(), fft_size);
    for (int f = 0; f < cfg.bins(); ++f) out.values(f, n) = freq[f];
  }
  return out;
}

namespace detail {

// Synthesis core shared by istft() and the differentiable network front
// block. Realizes the least-squares inverse of the framed analysis operator:
// Hermitian-expand each frame, inverse transform, window, overlap-add, then
// divide by the overlap-added squared window. A window-energy sum below
// kDenomTol at an interior sample leaves the synthesis undefined there and
// raises DegenerateWindowSum. At the edges, samples below kEdgeCut carry no
// usable information and are set to zero (the minimum-norm solution); the
// cut is two decades below kDenomTol so that near-vanishing window tails
// (e.g. the second Blackman sample) still divide.
constexpr double kDenomTol = 1e-10;
constexpr double kEdgeCut = 1e-12;

template <typename Scalar>
ArrayX<Scalar> istft_core(const ArrayXXc<Scalar>& values, const StftConfig& cfg) {
  cfg.validate();
  if (values.rows() != cfg.bins())
    throw ShapeMismatch("spectrogram has " + std::to_string(values.rows()) +
                        " bins, config expects " + std::to_string(cfg.bins()));
  if (values.cols() < 1) throw ShapeMismatch("spectrogram has no frames");

  const Eigen::Index n_frames = values.cols();
  const int fft_size = cfg.fft_size;
  const int half = fft_size / 2;
  const ArrayX<Scalar> window = make_window<Scalar>(cfg);
  const Eigen::Index total = synthesis_length(n_frames, cfg);

  ArrayX<Scalar> wave = ArrayX<Scalar>::Zero(total);
  Eigen::FFT<Scalar> fft;
  std::vector<std::complex<Scalar>> full(fft_size), frame(fft_size);
  for (Eigen::Index n = 0; n < n_frames; ++n) {
    for (int f = 0; f <= half; ++f) full[f] = values(f, n);
    for (int k = 1; k < half; ++k) full[fft_size - k] = std::conj(values(k, n));
    fft.inv(frame.data(), full.data(), fft_size);
    const Eigen::Index base = n * cfg.hop;
    for (int t = 0; t < cfg.win_len; ++t)
      wave[base + t] += window[t] * frame[t].real();
  }

  const ArrayX<Scalar> denom = ola_window_sq<Scalar>(cfg, n_frames);
  for (Eigen::Index t = 0; t < total; ++t) {
    if (denom[t] < Scalar(kDenomTol) && t >= cfg.win_len && t < total - cfg.win_len)
      throw DegenerateWindowSum("window-energy sum below tolerance at interior sample " +
                                std::to_string(t));
    if (denom[t] < Scalar(kEdgeCut))
      wave[t] = Scalar(0);
    else
      wave[t] /= denom[t];
  }
  return wave;
}

// Adjoint of istft_core as a real-linear map from the stored half-spectrum
// (independent real/imag parts per bin) to the waveform. The returned array
// holds d/dRe in its real part and d/dIm in its imaginary part; the imaginary
// parts of bins 0 and fft_size/2 never reach the waveform, so their slots
// are zero.
template <typename Scalar>
ArrayXXc<Scalar> istft_adjoint(const ArrayX<Scalar>& grad_wave, const StftConfig& cfg,
                               Eigen::Index n_frames) {
  cfg.validate();
  const Eigen::Index total = synthesis_length(n_frames, cfg);
  if (grad_wave.size() != total)
    throw ShapeMismatch("gradient length " + std::to_string(grad_wave.size()) +
                        " does not match synthesis length " + std::to_string(total));
  const int fft_size = cfg.fft_size;
  const int half = fft_size / 2;
  const ArrayX<Scalar> window = make_window<Scalar>(cfg);
  const ArrayX<Scalar> denom = ola_window_sq<Scalar>(cfg, n_frames);

  ArrayX<Scalar> u(total);
  for (Eigen::Index t = 0; t < total; ++t)
    u[t] = denom[t] < Scalar(kEdgeCut) ? Scalar(0) : grad_wave[t] / denom[t];

  ArrayXXc<Scalar> out(cfg.bins(), n_frames);
  Eigen::FFT<Scalar> fft;
  std::vector<std::complex<Scalar>> in(fft_size), freq(fft_size);
  const Scalar inv_f = Scalar(1) / Scalar(fft_size);
  for (Eigen::Index n = 0; n < n_frames; ++n) {
    const Eigen::Index base = n * cfg.hop;
    for (int t = 0; t < cfg.win_len; ++t)
      in[t] = std::complex<Scalar>(u[base + t] * window[t], Scalar(0));
    for (int t = cfg.win_len; t < fft_size; ++t) in[t] = std::complex<Scalar>(0, 0);
    fft.fwd(freq.data(), in.data(), fft_size);
    for (int f = 0; f <= half; ++f) {
      const Scalar scale = (f == 0 || f == half) ? inv_f : Scalar(2) * inv_f;
      const Scalar dre = scale * freq[f].real();
      const Scalar dim = (f == 0 || f == half) ? Scalar(0) : scale * freq[f].imag();
      out(f, n) = std::complex<Scalar>(dre, dim);
    }
  }
  return out;
}

}  // namespace detail

// Least-squares synthesis W+c. Output length (frames-1)*hop + win_len.
template <typename Scalar>
TimeSignal<Scalar> istft(const ComplexSpectrogram<Scalar>& c) {
  return TimeSignal<Scalar>{detail::istft_core(c.values, c.config), c.config.sample_rate};
}

// Orthogonal projection onto the consistent subspace: stft(istft(c)), frame
// count preserved.
template <typename Scalar>
ComplexSpectrogram<Scalar> project_consistent(const ComplexSpectrogram<Scalar>& c) {
  ComplexSpectrogram<Scalar> out = stft(istft(c), c.config);
  if (out.frames() != c.frames())
    throw ShapeMismatch("projection changed frame count");  // cannot happen by construction
  return out;
}

template <typename Scalar>
MagnitudeSpectrogram<Scalar> magnitude(const ComplexSpectrogram<Scalar>& c) {
  return MagnitudeSpectrogram<Scalar>{c.values.abs(), c.config};
}

// Elementwise c/|c| with the zero convention angle(0) = 1+0j.
template <typename Scalar>
PhaseSpectrogram<Scalar> phase(const ComplexSpectrogram<Scalar>& c) {
  PhaseSpectrogram<Scalar> out;
  out.config = c.config;
  out.values = c.values.unaryExpr([](const std::complex<Scalar>& v) {
    const Scalar a = std::abs(v);
    return a == Scalar(0) ? std::complex<Scalar>(1, 0) : v / a;
  });
  return out;
}

template <typename Scalar>
ComplexSpectrogram<Scalar> combine(const MagnitudeSpectrogram<Scalar>& a,
                                   const PhaseSpectrogram<Scalar>& phi) {
  if (a.values.rows() != phi.values.rows() || a.values.cols() != phi.values.cols())
    throw ShapeMismatch("magnitude and phase dimensions differ");
  if (!(a.config == phi.config))
    throw ShapeMismatch("magnitude and phase configs differ");
  ComplexSpectrogram<Scalar> out;
  out.config = a.config;
  out.values = a.values.template cast<std::complex<Scalar>>() * phi.values;
  return out;
}

// Squared l2 norm of a half-spectrum grid, with bins 1..fft_size/2-1
// double-weighted; equals the squared norm of the conjugate-expanded full
// spectrum.
template <typename Scalar>
Scalar half_spectrum_sq_norm(const ArrayXXc<Scalar>& values) {
  const Scalar total = values.abs2().sum();
  const Scalar ends = values.row(0).abs2().sum() +
                      values.row(values.rows() - 1).abs2().sum();
  return Scalar(2) * total - ends;
}

template <typename Scalar>
Scalar half_spectrum_sq_norm(const ArrayXX<Scalar>& values) {
  const Scalar total = values.square().sum();
  const Scalar ends = values.row(0).square().sum() +
                      values.row(values.rows() - 1).square().sum();
  return Scalar(2) * total - ends;
}

// ||c - WW+c||^2 over the full (conjugate-expanded) spectrum.
template <typename Scalar>
Scalar consistency_residual(const ComplexSpectrogram<Scalar>& c) {
  const ComplexSpectrogram<Scalar> p = project_consistent(c);
  return half_spectrum_sq_norm<Scalar>((c.values - p.values).eval());
}

// Reconstruct the full fft_size x frames spectrum from the stored half by
// conjugate symmetry. Bins 0 and fft_size/2 are copied as stored.
template <typename Scalar>
ArrayXXc<Scalar> expand_spectrum(const ArrayXXc<Scalar>& half, int fft_size) {
  const int n_bins = fft_size / 2 + 1;
  if (half.rows() != n_bins)
    throw ShapeMismatch("half spectrum has " + std::to_string(half.rows()) +
                        " bins, expected " + std::to_string(n_bins));
  ArrayXXc<Scalar> full(fft_size, half.cols());
  full.topRows(n_bins) = half;
  for (int k = 1; k < fft_size / 2; ++k)
    full.row(fft_size - k) = half.row(k).conjugate();
  return full;
}

// Keep bins 0..fft_size/2 of a full spectrum. The input must satisfy the
// conjugate symmetry of a real signal's transform; violations beyond
// 1e-6 * (1 + |X[k]|) raise NonHermitianInput.
template <typename Scalar>
ArrayXXc<Scalar> reduce_spectrum(const ArrayXXc<Scalar>& full) {
  const Eigen::Index fft_size = full.rows();
  if (fft_size < 2 || fft_size % 2 != 0)
    throw ShapeMismatch("full spectrum must have an even number of bins");
  const Eigen::Index half = fft_size / 2;
  const Scalar tol = Scalar(1e-6);
  for (Eigen::Index n = 0; n < full.cols(); ++n) {
    if (std::abs(full(0, n).imag()) > tol * (1 + std::abs(full(0, n))) ||
        std::abs(full(half, n).imag()) > tol * (1 + std::abs(full(half, n))))
      throw NonHermitianInput("bins 0 and fft_size/2 must be real");
    for (Eigen::Index k = 1; k < half; ++k) {
      const std::complex<Scalar> expect = std::conj(full(k, n));
      if (std::abs(full(fft_size - k, n) - expect) > tol * (1 + std::abs(full(k, n))))
        throw NonHermitianInput("symmetry violated at bin " + std::to_string(k) +
                                ", frame " + std::to_string(n));
    }
  }
  return full.topRows(half + 1);
}

}  // namespace specrec
