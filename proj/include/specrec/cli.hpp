// specrec/cli.hpp
//
// Command-line entry points, reconstruction metrics reporting, the
// spectrogram file format, and the processing-time benchmark.

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "specrec/gan.hpp"
#include "specrec/model_io.hpp"
#include "specrec/spectral.hpp"
#include "specrec/train.hpp"

namespace specrec::cli {

// Spectrogram container file: a text header (kind, dimensions, framing
// config) followed by little-endian float32 planes, each frame-major.
// Magnitude files hold one plane; complex files hold the real plane then the
// imaginary plane.
struct SpectrogramFile {
  bool is_complex = false;
  StftConfig config;
  ArrayXX<double> mag;      // when !is_complex
  ArrayXXc<double> cplx;    // when is_complex
};

void write_magnitude_file(const std::string& path, const MagnitudeSpectrogram<double>& a);
void write_complex_file(const std::string& path, const ComplexSpectrogram<double>& c);
SpectrogramFile read_spectrogram_file(const std::string& path);

struct MetricsReport {
  double consistency_residual = 0;
  double spectral_convergence = 0;
  std::optional<double> snr_db;
  double elapsed_s = 0;
};

void print_report(std::ostream& os, const std::string& command, const std::string& method,
                  int iterations, const MetricsReport& report, const std::string& output);

// Training configuration file: "key value" lines, '#' comments. Unknown keys
// are rejected.
struct TrainFileConfig {
  gan::TrainConfig train;
  StftConfig stft;
  gan::GeneratorArch g_arch;
  gan::DiscriminatorArch d_arch;
};
TrainFileConfig parse_train_config(const std::string& path);

struct BenchRecord {
  std::string method;
  double length_s = 0;
  double elapsed_s = 0;
  double realtime_factor = 0;
};

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

// Synthetic benchmark input: a deterministic harmonic mixture.
TimeSignal<double> synth_bench_signal(std::uint64_t seed, double seconds, int rate);

std::vector<BenchRecord> run_bench(const std::vector<double>& lengths_s,
                                   const std::vector<std::string>& methods,
                                   const std::string& model_path, std::uint64_t seed,
                                   int gl_iters, int reps);

void write_bench_csv(const std::string& path, const std::vector<BenchRecord>& records);

// Commands (throw specrec::Error on failure; run_cli maps to exit codes
// 1=usage, 2=data, 3=numeric).
void cmd_reconstruct(const std::string& input, const std::string& output,
                     const std::string& method, int iters, const std::string& model_path,
                     std::uint64_t seed, std::ostream& out);
void cmd_train(const std::string& manifest_path, const std::string& config_path,
               const std::string& out_path, const std::string& log_path, std::ostream& out);
void cmd_bench(const std::vector<double>& lengths_s, const std::vector<std::string>& methods,
               const std::string& csv_path, const std::string& model_path,
               std::uint64_t seed, std::ostream& out);
void cmd_stft(const std::string& input, const std::string& output, bool magnitude_only,
              const StftConfig& cfg);
void cmd_istft(const std::string& input, const std::string& output);

int run_cli(int argc, const char* const* argv);

}  // namespace specrec::cli
