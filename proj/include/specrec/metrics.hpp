// specrec/metrics.hpp
//
// Reconstruction-quality measures.

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>

#include "specrec/spectral.hpp"

namespace specrec {

// ||a - |STFT(x)||| / ||a||, plain Frobenius over the stored grid. Frame
// counts are aligned on the shorter of the two.
template <typename Scalar>
Scalar spectral_convergence(const MagnitudeSpectrogram<Scalar>& a,
                            const TimeSignal<Scalar>& x) {
  const MagnitudeSpectrogram<Scalar> ahat = magnitude(stft(x, a.config));
  const Eigen::Index frames = std::min(a.values.cols(), ahat.values.cols());
  const auto ta = a.values.leftCols(frames);
  const auto th = ahat.values.leftCols(frames);
  const Scalar denom = std::sqrt(ta.square().sum());
  if (denom == Scalar(0)) return std::sqrt(th.square().sum()) == Scalar(0) ? Scalar(0) : Scalar(1);
  return std::sqrt((ta - th).square().sum()) / denom;
}

// 10 log10(||ref||^2 / ||ref - x||^2) over the common prefix.
template <typename Scalar>
Scalar snr_db(const TimeSignal<Scalar>& ref, const TimeSignal<Scalar>& x) {
  const Eigen::Index n = std::min(ref.samples.size(), x.samples.size());
  const Scalar sig = ref.samples.head(n).square().sum();
  const Scalar err = (ref.samples.head(n) - x.samples.head(n)).square().sum();
  if (err == Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return Scalar(10) * std::log10(sig / err);
}

}  // namespace specrec
