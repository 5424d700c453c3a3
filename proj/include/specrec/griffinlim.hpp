// specrec/griffinlim.hpp
//
// Iterative signal reconstruction from a magnitude spectrogram by
// majorization-minimization of the consistency objective: alternate the
// projection onto the consistent subspace with re-imposing the given
// magnitude. The per-iteration objective trace certifies monotone descent.

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "specrec/rng.hpp"
#include "specrec/spectral.hpp"

namespace specrec {

enum class PhaseInit { ZeroPhase, RandomUniform, Provided };

template <typename Scalar>
struct GriffinLimOptions {
  int max_iters = 400;
  // Stop once (J_prev - J_cur) / (1 + J_prev) < stop_tol. 0 = run all
  // iterations.
  double stop_tol = 0.0;
  PhaseInit phase_init = PhaseInit::RandomUniform;
  std::uint64_t seed = 0;
  std::optional<PhaseSpectrogram<Scalar>> provided_phase;
  bool record_objective = true;
};

template <typename Scalar>
struct GriffinLimReport {
  std::vector<Scalar> objective_trace;  // J per iterate, length iterations_run+1
  int iterations_run = 0;
  ComplexSpectrogram<Scalar> final_spectrogram;  // auxiliary value of the last step
  TimeSignal<Scalar> final_signal;
};

// J(phi) = ||a.*phi - WW+(a.*phi)||^2.
template <typename Scalar>
Scalar gl_objective(const MagnitudeSpectrogram<Scalar>& a,
                    const PhaseSpectrogram<Scalar>& phi) {
  return consistency_residual(combine(a, phi));
}

// One majorization-minimization step: project a.*phi onto the consistent
// subspace, then take the projection's phase. Returns (phi', c~). One step
// never increases the objective.
template <typename Scalar>
std::pair<PhaseSpectrogram<Scalar>, ComplexSpectrogram<Scalar>> gl_step(
    const MagnitudeSpectrogram<Scalar>& a, const PhaseSpectrogram<Scalar>& phi) {
  ComplexSpectrogram<Scalar> aux = project_consistent(combine(a, phi));
  return {phase(aux), std::move(aux)};
}

template <typename Scalar>
PhaseSpectrogram<Scalar> init_phase(const MagnitudeSpectrogram<Scalar>& a,
                                    const GriffinLimOptions<Scalar>& opts) {
  PhaseSpectrogram<Scalar> phi;
  phi.config = a.config;
  switch (opts.phase_init) {
    case PhaseInit::ZeroPhase:
      phi.values = ArrayXXc<Scalar>::Constant(a.values.rows(), a.values.cols(),
                                              std::complex<Scalar>(1, 0));
      break;
    case PhaseInit::RandomUniform: {
      Rng rng(opts.seed);
      phi.values.resize(a.values.rows(), a.values.cols());
      // Column-major fill: frame by frame, bin-fastest.
      for (Eigen::Index n = 0; n < phi.values.cols(); ++n)
        for (Eigen::Index f = 0; f < phi.values.rows(); ++f) {
          const Scalar theta = Scalar(rng.uniform(0.0, 2.0 * EIGEN_PI));
          phi.values(f, n) = std::complex<Scalar>(std::cos(theta), std::sin(theta));
        }
      break;
    }
    case PhaseInit::Provided:
      if (!opts.provided_phase)
        throw ShapeMismatch("PhaseInit::Provided requires provided_phase");
      phi = *opts.provided_phase;
      if (phi.values.rows() != a.values.rows() || phi.values.cols() != a.values.cols())
        throw ShapeMismatch("provided phase dimensions do not match magnitude");
      break;
  }
  return phi;
}

// Run the iteration from the configured phase init. The objective is
// recorded before the first step and after each step, so the trace has
// iterations_run + 1 entries; the final spectrogram is the auxiliary value
// of the last executed step and the final signal its synthesis.
template <typename Scalar>
GriffinLimReport<Scalar> gl_reconstruct(const MagnitudeSpectrogram<Scalar>& a,
                                        const GriffinLimOptions<Scalar>& opts) {
  if (opts.max_iters < 1) throw ShapeMismatch("max_iters must be >= 1");
  if (opts.stop_tol < 0) throw ShapeMismatch("stop_tol must be >= 0");

  PhaseSpectrogram<Scalar> phi = init_phase(a, opts);
  const bool track = opts.record_objective || opts.stop_tol > 0;

  GriffinLimReport<Scalar> report;

  // Invariant entering step k: pending == P(a.*phi_{k-1}), the auxiliary
  // value the step consumes. Each iteration therefore costs one projection;
  // tracking the objective adds a single extra projection at the end.
  ComplexSpectrogram<Scalar> pending = project_consistent(combine(a, phi));
  Scalar prev_obj(0);
  if (track) {
    prev_obj = half_spectrum_sq_norm<Scalar>((combine(a, phi).values - pending.values).eval());
    if (opts.record_objective) report.objective_trace.push_back(prev_obj);
  }

  ComplexSpectrogram<Scalar> aux;
  for (int k = 1; k <= opts.max_iters; ++k) {
    aux = pending;
    phi = phase(aux);
    report.iterations_run = k;
    if (track) {
      const ComplexSpectrogram<Scalar> target = combine(a, phi);
      pending = project_consistent(target);
      const Scalar obj =
          half_spectrum_sq_norm<Scalar>((target.values - pending.values).eval());
      if (opts.record_objective) report.objective_trace.push_back(obj);
      const bool stop =
          opts.stop_tol > 0 &&
          (double(prev_obj) - double(obj)) / (1.0 + double(prev_obj)) < opts.stop_tol;
      prev_obj = obj;
      if (stop) break;
    } else if (k < opts.max_iters) {
      pending = project_consistent(combine(a, phi));
    }
  }

  report.final_spectrogram = std::move(aux);
  report.final_signal = istft(report.final_spectrogram);
  return report;
}

}  // namespace specrec
