// src/cli.cpp

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "specrec/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "specrec/audio_io.hpp"
#include "specrec/griffinlim.hpp"
#include "specrec/metrics.hpp"

namespace specrec::cli {

namespace {

bool log_enabled() {
  const char* v = std::getenv("SPECREC_LOG");
  return v != nullptr && v[0] != '\0' && v[0] != '0';
}

void log_info(const std::string& msg) {
  if (log_enabled()) std::cerr << "[specrec] " << msg << "\n";
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void write_plane(std::string& out, const ArrayXX<double>& plane) {
  for (Eigen::Index n = 0; n < plane.cols(); ++n)
    for (Eigen::Index f = 0; f < plane.rows(); ++f) {
      const float v = float(plane(f, n));
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      out.push_back(char(bits & 0xFF));
      out.push_back(char((bits >> 8) & 0xFF));
      out.push_back(char((bits >> 16) & 0xFF));
      out.push_back(char((bits >> 24) & 0xFF));
    }
}

ArrayXX<double> read_plane(const unsigned char*& p, Eigen::Index bins, Eigen::Index frames) {
  ArrayXX<double> plane(bins, frames);
  for (Eigen::Index n = 0; n < frames; ++n)
    for (Eigen::Index f = 0; f < bins; ++f) {
      std::uint32_t bits = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                           (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
      float v;
      std::memcpy(&v, &bits, 4);
      plane(f, n) = double(v);
      p += 4;
    }
  return plane;
}

std::string spec_header(const char* kind, Eigen::Index bins, Eigen::Index frames,
                        const StftConfig& cfg) {
  std::ostringstream os;
  os << "specrec-spec v1\n";
  os << "kind " << kind << "\n";
  os << "bins " << bins << "\n";
  os << "frames " << frames << "\n";
  os << "sample_rate " << cfg.sample_rate << "\n";
  os << "win_len " << cfg.win_len << "\n";
  os << "hop " << cfg.hop << "\n";
  os << "window " << window_name(cfg.window_kind) << "\n";
  os << "fft_size " << cfg.fft_size << "\n";
  os << "data\n";
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open '" + path + "' for writing");
  f.write(content.data(), std::streamsize(content.size()));
  if (!f) throw IoFailure("write error on '" + path + "'");
}

}  // namespace

void write_magnitude_file(const std::string& path, const MagnitudeSpectrogram<double>& a) {
  std::string out = spec_header("magnitude", a.values.rows(), a.values.cols(), a.config);
  write_plane(out, a.values);
  write_file(path, out);
}

void write_complex_file(const std::string& path, const ComplexSpectrogram<double>& c) {
  std::string out = spec_header("complex", c.bins(), c.frames(), c.config);
  write_plane(out, c.values.real().cast<double>());
  write_plane(out, c.values.imag().cast<double>());
  write_file(path, out);
}

SpectrogramFile read_spectrogram_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open '" + path + "'");
  std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  size_t pos = 0;
  auto next_line = [&]() {
    const size_t end = content.find('\n', pos);
    if (end == std::string::npos) throw UnsupportedFormat("truncated spectrogram header");
    std::string line = content.substr(pos, end - pos);
    pos = end + 1;
    return line;
  };
  if (next_line() != "specrec-spec v1")
    throw UnsupportedFormat("'" + path + "' is not a spectrogram file");

  SpectrogramFile sf;
  Eigen::Index bins = -1, frames = -1;
  std::string kind;
  for (;;) {
    const std::string line = next_line();
    if (line == "data") break;
    std::istringstream ls(line);
    std::string key, value;
    ls >> key >> value;
    if (key == "kind") kind = value;
    else if (key == "bins") bins = std::stol(value);
    else if (key == "frames") frames = std::stol(value);
    else if (key == "sample_rate") sf.config.sample_rate = std::stoi(value);
    else if (key == "win_len") sf.config.win_len = std::stoi(value);
    else if (key == "hop") sf.config.hop = std::stoi(value);
    else if (key == "window") sf.config.window_kind = window_from_name(value);
    else if (key == "fft_size") sf.config.fft_size = std::stoi(value);
    else throw UnsupportedFormat("unknown spectrogram header line '" + line + "'");
  }
  sf.config.validate();
  if (bins != sf.config.bins())
    throw UnsupportedFormat("bins field disagrees with fft_size");
  if (frames < 1) throw UnsupportedFormat("frames must be positive");

  const size_t planes = kind == "complex" ? 2 : 1;
  if (kind != "complex" && kind != "magnitude")
    throw UnsupportedFormat("unknown spectrogram kind '" + kind + "'");
  if (pos + planes * 4 * size_t(bins) * size_t(frames) > content.size())
    throw UnsupportedFormat("spectrogram blob is truncated");

  const auto* raw = reinterpret_cast<const unsigned char*>(content.data()) + pos;
  if (kind == "magnitude") {
    sf.is_complex = false;
    sf.mag = read_plane(raw, bins, frames);
    if ((sf.mag < 0).any()) throw UnsupportedFormat("magnitude plane has negative values");
  } else {
    sf.is_complex = true;
    const ArrayXX<double> re = read_plane(raw, bins, frames);
    const ArrayXX<double> im = read_plane(raw, bins, frames);
    sf.cplx.resize(bins, frames);
    for (Eigen::Index n = 0; n < frames; ++n)
      for (Eigen::Index fb = 0; fb < bins; ++fb)
        sf.cplx(fb, n) = std::complex<double>(re(fb, n), im(fb, n));
  }
  return sf;
}

void print_report(std::ostream& os, const std::string& command, const std::string& method,
                  int iterations, const MetricsReport& report, const std::string& output) {
  char buf[128];
  os << "specrec-report v1\n";
  os << "command " << command << "\n";
  if (!method.empty()) os << "method " << method << "\n";
  if (iterations >= 0) os << "iterations " << iterations << "\n";
  std::snprintf(buf, sizeof buf, "consistency_residual %.10e\n", report.consistency_residual);
  os << buf;
  std::snprintf(buf, sizeof buf, "spectral_convergence %.10e\n", report.spectral_convergence);
  os << buf;
  if (report.snr_db) {
    std::snprintf(buf, sizeof buf, "snr_db %.10e\n", *report.snr_db);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "elapsed_s %.6f\n", report.elapsed_s);
  os << buf;
  os << "output " << output << "\n";
}

TrainFileConfig parse_train_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoFailure("cannot open config '" + path + "'");
  TrainFileConfig c;
  std::string line;
  int lineno = 0;
  auto parse_list = [](const std::string& v) {
    std::vector<double> out;
    std::istringstream ls(v);
    std::string tok;
    while (std::getline(ls, tok, ',')) out.push_back(std::stod(tok));
    return out;
  };
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key)) continue;
    if (!(ls >> value))
      throw UnsupportedFormat("config line " + std::to_string(lineno) + ": missing value");
    if (key == "seed") c.train.seed = std::stoull(value);
    else if (key == "epochs") c.train.epochs = std::stoi(value);
    else if (key == "batch_size") c.train.batch_size = std::stoi(value);
    else if (key == "lambda") c.train.lambda = std::stod(value);
    else if (key == "gl_warm_iters") c.train.gl_warm_iters = std::stoi(value);
    else if (key == "d_steps_per_g_step") c.train.d_steps_per_g_step = std::stoi(value);
    else if (key == "learning_rate") c.train.learning_rate = std::stod(value);
    else if (key == "alpha") c.train.alpha = std::stod(value);
    else if (key == "epsilon") c.train.epsilon = std::stod(value);
    else if (key == "max_steps") c.train.max_steps = std::stoi(value);
    else if (key == "feature_weights") c.train.feature_weights = parse_list(value);
    else if (key == "stft_sample_rate") c.stft.sample_rate = std::stoi(value);
    else if (key == "stft_win_len") c.stft.win_len = std::stoi(value);
    else if (key == "stft_hop") c.stft.hop = std::stoi(value);
    else if (key == "stft_window") c.stft.window_kind = window_from_name(value);
    else if (key == "stft_fft_size") c.stft.fft_size = std::stoi(value);
    else if (key == "g_width") c.g_arch.width = std::stoi(value);
    else if (key == "g_blocks") c.g_arch.blocks = std::stoi(value);
    else if (key == "g_io_kernel") c.g_arch.io_kernel = std::stoi(value);
    else if (key == "g_block_kernel") c.g_arch.block_kernel = std::stoi(value);
    else if (key == "g_global_skip") c.g_arch.global_skip = std::stoi(value) != 0;
    else if (key == "d_channels") {
      c.d_arch.channels.clear();
      for (double v : parse_list(value)) c.d_arch.channels.push_back(int(v));
    } else if (key == "d_kernel") c.d_arch.kernel = std::stoi(value);
    else if (key == "d_stride") c.d_arch.stride = std::stoi(value);
    else if (key == "d_concat_after") c.d_arch.concat_after = std::stoi(value);
    else if (key == "d_fc_units") c.d_arch.fc_units = std::stoi(value);
    else if (key == "d_slope") c.d_arch.slope = std::stod(value);
    else if (key == "d_cond_bands") c.d_arch.cond_bands = std::stoi(value);
    else
      throw UnsupportedFormat("config line " + std::to_string(lineno) + ": unknown key '" +
                              key + "'");
  }
  c.stft.validate();
  c.train.validate();
  return c;
}

namespace {

bool is_wav_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open '" + path + "'");
  char head[12] = {};
  f.read(head, 12);
  return f.gcount() >= 12 && std::memcmp(head, "RIFF", 4) == 0 &&
         std::memcmp(head + 8, "WAVE", 4) == 0;
}

io::ModelBundle default_bundle(std::uint64_t seed) {
  StftConfig cfg;
  gan::NormStats<double> stats;
  stats.mean = ArrayXX<double>::Zero(2, cfg.bins());
  stats.stdev = ArrayXX<double>::Ones(2, cfg.bins());
  gan::Generator<double> G(cfg, stats, gan::GeneratorArch{});
  G.net.init_params(Rng(seed).fork(1));
  const Eigen::Index frames = num_frames(io::kSegmentLen, cfg);
  gan::Discriminator<double> D(cfg, gan::DiscriminatorArch{}, frames);
  D.net.init_params(Rng(seed).fork(2));
  return io::bundle_from(G, D, 5);
}

}  // namespace

void cmd_reconstruct(const std::string& input, const std::string& output,
                     const std::string& method, int iters, const std::string& model_path,
                     std::uint64_t seed, std::ostream& out) {
  if (method != "gl" && method != "neural")
    throw UsageError("method must be 'gl' or 'neural', got '" + method + "'");
  if (method == "neural" && model_path.empty())
    throw UsageError("the neural method needs --model");
  if (iters < 1) throw UsageError("--iters must be >= 1");

  std::optional<io::ModelBundle> bundle;
  std::optional<gan::Generator<double>> G;
  StftConfig cfg;  // defaults for the gl path
  if (method == "neural") {
    bundle = io::load_model(model_path);
    cfg = bundle->stft;
    G.emplace(io::generator_from<double>(*bundle));
  }

  MagnitudeSpectrogram<double> a;
  std::optional<TimeSignal<double>> reference;
  if (is_wav_file(input)) {
    TimeSignal<double> x = io::read_wav(input);
    if (x.sample_rate != cfg.sample_rate) x = io::resample(x, cfg.sample_rate);
    a = magnitude(stft(x, cfg));
    reference = std::move(x);
  } else {
    const SpectrogramFile sf = read_spectrogram_file(input);
    if (method == "neural" && !(sf.config == cfg))
      throw ShapeMismatch("spectrogram config does not match the model bundle");
    cfg = sf.config;
    a.config = cfg;
    a.values = sf.is_complex ? sf.cplx.abs().cast<double>().eval() : sf.mag;
  }

  MetricsReport report;
  TimeSignal<double> recon;
  ComplexSpectrogram<double> out_spec;
  const double t0 = now_s();
  if (method == "gl") {
    GriffinLimOptions<double> opts;
    opts.max_iters = iters;
    opts.seed = seed;
    const auto gl = gl_reconstruct(a, opts);
    recon = gl.final_signal;
    out_spec = gl.final_spectrogram;
  } else {
    const auto warm = gan::warm_start<double>(a, seed, bundle->gl_warm_iters);
    out_spec = gan::generator_forward(*G, warm);
    recon = istft(out_spec);
  }
  report.elapsed_s = now_s() - t0;

  report.consistency_residual = consistency_residual(out_spec);
  report.spectral_convergence = double(spectral_convergence(a, recon));
  if (reference) report.snr_db = double(snr_db(*reference, recon));

  io::write_wav(output, recon);
  print_report(out, "reconstruct", method, method == "gl" ? iters : -1, report, output);
}

void cmd_train(const std::string& manifest_path, const std::string& config_path,
               const std::string& out_path, const std::string& log_path, std::ostream& out) {
  const TrainFileConfig cfg = parse_train_config(config_path);
  const io::DatasetManifest manifest = io::load_manifest(manifest_path);
  const auto train_entries = manifest.split_entries(io::Split::Train);
  if (train_entries.empty()) throw EmptyBatch("manifest has no train entries");
  if (cfg.stft.sample_rate != io::kSegmentRate)
    throw UnsupportedFormat("training expects a " + std::to_string(io::kSegmentRate) +
                            " Hz framing config");

  std::vector<TimeSignal<double>> segments;
  for (const auto& e : train_entries) {
    TimeSignal<double> x = io::read_wav(e.path);
    if (x.sample_rate != io::kSegmentRate) x = io::resample(x, io::kSegmentRate);
    for (auto& s : io::segment(x, e.id)) segments.push_back(std::move(s.signal));
  }
  log_info("training on " + std::to_string(segments.size()) + " segments");

  std::vector<ComplexSpectrogram<double>> corpus;
  corpus.reserve(segments.size());
  for (const auto& s : segments) corpus.push_back(stft(s, cfg.stft));
  auto stats = gan::fit_norm_stats(corpus);

  Rng master(cfg.train.seed);
  gan::Generator<double> G(cfg.stft, std::move(stats), cfg.g_arch);
  G.net.init_params(master.fork(1));
  gan::Discriminator<double> D(cfg.stft, cfg.d_arch, corpus.front().frames());
  D.net.init_params(master.fork(2));

  const auto log = gan::train(segments, G, D, cfg.train);

  std::ostringstream csv;
  gan::write_loss_csv(csv, log);
  write_file(log_path, csv.str());
  io::save_model(out_path, io::bundle_from(G, D, cfg.train.gl_warm_iters));

  if (log.empty()) {
    out << "no steps run\n";
  } else {
    char buf[192];
    const auto& last = log.back();
    std::snprintf(buf, sizeof buf, "final step=%d V=%.6e U=%.6e I=%.6e G_total=%.6e\n",
                  last.step, last.v, last.u, last.i, last.g_total);
    out << buf;
  }
  out << "model " << out_path << "\n";
  out << "log " << log_path << "\n";
}

LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw ShapeMismatch("linear fit needs at least two points");
  const double n = double(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  LinearFit fit;
  const double denom = n * sxx - sx * sx;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double pred = fit.slope * xs[i] + fit.intercept;
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  fit.r2 = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

TimeSignal<double> synth_bench_signal(std::uint64_t seed, double seconds, int rate) {
  Rng rng(seed);
  TimeSignal<double> x;
  x.sample_rate = rate;
  const Eigen::Index len = Eigen::Index(seconds * rate);
  x.samples = ArrayX<double>::Zero(len);
  const double f0 = rng.uniform(100.0, 220.0);
  for (int h = 1; h <= 10; ++h) {
    const double amp = rng.uniform(0.02, 0.4) / h;
    const double ph = rng.uniform(0.0, 2.0 * EIGEN_PI);
    for (Eigen::Index t = 0; t < len; ++t) {
      const double env = 0.5 + 0.5 * std::sin(2.0 * EIGEN_PI * 2.3 * t / rate + h);
      x.samples[t] += amp * env * std::sin(2.0 * EIGEN_PI * h * f0 * t / rate + ph);
    }
  }
  return x;
}

std::vector<BenchRecord> run_bench(const std::vector<double>& lengths_s,
                                   const std::vector<std::string>& methods,
                                   const std::string& model_path, std::uint64_t seed,
                                   int gl_iters, int reps) {
  if (lengths_s.empty()) throw UsageError("bench needs at least one length");
  for (double s : lengths_s)
    if (s <= 0 || s > 6.0) throw UsageError("bench lengths must lie in (0, 6] seconds");
  for (const auto& m : methods)
    if (m != "gl" && m != "neural") throw UsageError("unknown bench method '" + m + "'");

  std::optional<io::ModelBundle> bundle;
  std::optional<gan::Generator<double>> G;
  if (std::find(methods.begin(), methods.end(), std::string("neural")) != methods.end()) {
    bundle = model_path.empty() ? default_bundle(seed) : io::load_model(model_path);
    G.emplace(io::generator_from<double>(*bundle));
  }

  std::vector<BenchRecord> records;
  for (double seconds : lengths_s) {
    const StftConfig cfg = bundle ? bundle->stft : StftConfig{};
    const auto x = synth_bench_signal(seed ^ std::uint64_t(seconds * 1000), seconds,
                                      cfg.sample_rate);
    const auto a = magnitude(stft(x, cfg));
    for (const auto& m : methods) {
      std::vector<double> times;
      for (int r = 0; r < reps; ++r) {
        const double t0 = now_s();
        if (m == "gl") {
          GriffinLimOptions<double> opts;
          opts.max_iters = gl_iters;
          opts.seed = seed + std::uint64_t(r);
          opts.record_objective = false;
          (void)gl_reconstruct(a, opts);
        } else {
          const auto warm = gan::warm_start<double>(a, seed + std::uint64_t(r),
                                                    bundle->gl_warm_iters);
          (void)istft(gan::generator_forward(*G, warm));
        }
        times.push_back(now_s() - t0);
      }
      std::sort(times.begin(), times.end());
      BenchRecord rec;
      rec.method = m;
      rec.length_s = seconds;
      rec.elapsed_s = times[times.size() / 2];
      rec.realtime_factor = rec.elapsed_s / seconds;
      records.push_back(rec);
      log_info("bench " + m + " " + std::to_string(seconds) + "s -> " +
               std::to_string(rec.elapsed_s) + "s");
    }
  }
  return records;
}

void write_bench_csv(const std::string& path, const std::vector<BenchRecord>& records) {
  std::ostringstream os;
  os << "method,length_s,elapsed_s,realtime_factor\n";
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%s,%.3f,%.6f,%.6f\n", r.method.c_str(), r.length_s,
                  r.elapsed_s, r.realtime_factor);
    os << buf;
  }
  write_file(path, os.str());
}

void cmd_bench(const std::vector<double>& lengths_s, const std::vector<std::string>& methods,
               const std::string& csv_path, const std::string& model_path,
               std::uint64_t seed, std::ostream& out) {
  const auto records = run_bench(lengths_s, methods, model_path, seed, 400, 5);
  if (!csv_path.empty()) write_bench_csv(csv_path, records);
  for (const auto& m : methods) {
    std::vector<double> xs, ys;
    for (const auto& r : records)
      if (r.method == m) {
        xs.push_back(r.length_s);
        ys.push_back(r.elapsed_s);
      }
    if (xs.size() >= 2) {
      const LinearFit fit = fit_line(xs, ys);
      char buf[160];
      std::snprintf(buf, sizeof buf, "fit method=%s slope=%.6f intercept=%.6f r2=%.6f\n",
                    m.c_str(), fit.slope, fit.intercept, fit.r2);
      out << buf;
    }
  }
  for (const auto& r : records) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "bench method=%s length_s=%.3f elapsed_s=%.6f rtf=%.6f\n",
                  r.method.c_str(), r.length_s, r.elapsed_s, r.realtime_factor);
    out << buf;
  }
}

void cmd_stft(const std::string& input, const std::string& output, bool magnitude_only,
              const StftConfig& cfg) {
  TimeSignal<double> x = io::read_wav(input);
  if (x.sample_rate != cfg.sample_rate) x = io::resample(x, cfg.sample_rate);
  const auto c = stft(x, cfg);
  if (magnitude_only)
    write_magnitude_file(output, magnitude(c));
  else
    write_complex_file(output, c);
}

void cmd_istft(const std::string& input, const std::string& output) {
  const SpectrogramFile sf = read_spectrogram_file(input);
  if (!sf.is_complex)
    throw UnsupportedFormat("istft needs a complex spectrogram file; got magnitude");
  ComplexSpectrogram<double> c;
  c.config = sf.config;
  c.values = sf.cplx;
  io::write_wav(output, istft(c));
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"signal reconstruction from magnitude spectrograms"};
  app.require_subcommand(1);

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "reconstruct a waveform from a magnitude");
  std::string rec_method = "gl", rec_model, rec_in, rec_out;
  int rec_iters = 400;
  std::uint64_t rec_seed = 0;
  rec->add_option("--method", rec_method, "gl or neural");
  rec->add_option("--iters", rec_iters, "iteration count for gl");
  rec->add_option("--model", rec_model, "model bundle path (neural)");
  rec->add_option("--seed", rec_seed, "phase-init seed");
  rec->add_option("input", rec_in, "input WAV or spectrogram file")->required();
  rec->add_option("output", rec_out, "output WAV")->required();

  // train
  auto* tr = app.add_subcommand("train", "train the reconstruction networks");
  std::string tr_manifest, tr_config, tr_out, tr_log;
  tr->add_option("--manifest", tr_manifest, "dataset manifest")->required();
  tr->add_option("--config", tr_config, "training config file")->required();
  tr->add_option("--out", tr_out, "output model bundle")->required();
  tr->add_option("--log", tr_log, "loss CSV path (default <out>.loss.csv)");

  // bench
  auto* be = app.add_subcommand("bench", "processing-time benchmark");
  std::string be_lengths = "1,2,3,4,5", be_methods = "gl,neural", be_csv, be_model;
  std::uint64_t be_seed = 0;
  be->add_option("--lengths", be_lengths, "comma list of lengths in seconds (<= 6)");
  be->add_option("--methods", be_methods, "comma list of gl,neural");
  be->add_option("--csv", be_csv, "output CSV path");
  be->add_option("--model", be_model, "model bundle (neural); default random-init");
  be->add_option("--seed", be_seed, "signal/model seed");

  // stft / istft utilities
  auto* st = app.add_subcommand("stft", "analyze a WAV into a spectrogram file");
  std::string st_in, st_out;
  bool st_mag = false;
  int st_win = 1024, st_hop = 512, st_fft = 0;
  std::string st_window = "blackman";
  st->add_option("input", st_in)->required();
  st->add_option("output", st_out)->required();
  st->add_flag("--magnitude", st_mag, "write magnitudes only");
  st->add_option("--win-len", st_win);
  st->add_option("--hop", st_hop);
  st->add_option("--fft-size", st_fft, "defaults to win-len");
  st->add_option("--window", st_window, "blackman|hann|rect");

  auto* ist = app.add_subcommand("istft", "synthesize a WAV from a complex spectrogram file");
  std::string ist_in, ist_out;
  ist->add_option("input", ist_in)->required();
  ist->add_option("output", ist_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (rec->parsed()) {
      cmd_reconstruct(rec_in, rec_out, rec_method, rec_iters, rec_model, rec_seed, std::cout);
    } else if (tr->parsed()) {
      if (tr_log.empty()) tr_log = tr_out + ".loss.csv";
      cmd_train(tr_manifest, tr_config, tr_out, tr_log, std::cout);
    } else if (be->parsed()) {
      auto split_list = [](const std::string& s) {
        std::vector<std::string> out;
        std::istringstream ls(s);
        std::string tok;
        while (std::getline(ls, tok, ',')) out.push_back(tok);
        return out;
      };
      std::vector<double> lengths;
      for (const auto& tok : split_list(be_lengths)) lengths.push_back(std::stod(tok));
      cmd_bench(lengths, split_list(be_methods), be_csv, be_model, be_seed, std::cout);
    } else if (st->parsed()) {
      StftConfig cfg;
      cfg.win_len = st_win;
      cfg.hop = st_hop;
      cfg.fft_size = st_fft == 0 ? st_win : st_fft;
      cfg.window_kind = window_from_name(st_window);
      cfg.validate();
      cmd_stft(st_in, st_out, st_mag, cfg);
    } else if (ist->parsed()) {
      cmd_istft(ist_in, ist_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return int(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace specrec::cli
