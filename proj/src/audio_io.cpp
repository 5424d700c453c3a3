// src/audio_io.cpp

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "specrec/audio_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "specrec/error.hpp"

namespace specrec::io {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(char(v & 0xFF));
  s.push_back(char((v >> 8) & 0xFF));
  s.push_back(char((v >> 16) & 0xFF));
  s.push_back(char((v >> 24) & 0xFF));
}

void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(char(v & 0xFF));
  s.push_back(char((v >> 8) & 0xFF));
}

}  // namespace

TimeSignal<double> read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoFailure("read error on '" + path + "'");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw UnsupportedFormat("'" + path + "' is not a RIFF/WAVE file");

  int channels = 0, bits = 0, rate = 0, format = 0;
  const unsigned char* data = nullptr;
  size_t data_len = 0;
  size_t off = 12;
  while (off + 8 <= n) {
    const std::uint32_t chunk_len = read_u32(p + off + 4);
    const unsigned char* body = p + off + 8;
    if (off + 8 + chunk_len > n) throw UnsupportedFormat("truncated chunk in '" + path + "'");
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw UnsupportedFormat("short fmt chunk");
      format = read_u16(body);
      channels = read_u16(body + 2);
      rate = int(read_u32(body + 4));
      bits = read_u16(body + 14);
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
    }
    off += 8 + chunk_len + (chunk_len % 2);  // chunks are word-aligned
  }
  if (data == nullptr || format == 0) throw UnsupportedFormat("missing fmt/data chunk");
  if (format != 1 || bits != 16)
    throw UnsupportedFormat("only PCM 16-bit is supported, got format " +
                            std::to_string(format) + " / " + std::to_string(bits) + " bits");
  if (channels != 1)
    throw UnsupportedFormat("only mono is supported, got " + std::to_string(channels) +
                            " channels");

  TimeSignal<double> x;
  x.sample_rate = rate;
  const Eigen::Index samples = Eigen::Index(data_len / 2);
  x.samples.resize(samples);
  for (Eigen::Index i = 0; i < samples; ++i) {
    const std::int16_t v = std::int16_t(read_u16(data + 2 * i));
    x.samples[i] = double(v) / 32768.0;
  }
  return x;
}

void write_wav(const std::string& path, const TimeSignal<double>& x) {
  const Eigen::Index n = x.samples.size();
  std::string out;
  out.reserve(size_t(44 + 2 * n));
  out += "RIFF";
  put_u32(out, std::uint32_t(36 + 2 * n));
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, std::uint32_t(x.sample_rate));
  put_u32(out, std::uint32_t(x.sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, std::uint32_t(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = std::nearbyint(x.samples[i] * 32768.0);
    if (v > 32767.0) v = 32767.0;
    if (v < -32768.0) v = -32768.0;
    put_u16(out, std::uint16_t(std::int16_t(v)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open '" + path + "' for writing");
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw IoFailure("write error on '" + path + "'");
}

namespace {

// Zeroth modified Bessel function, power series.
double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / double(k * k);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

}  // namespace

TimeSignal<double> resample(const TimeSignal<double>& x, int target_rate) {
  if (x.sample_rate <= 0 || target_rate <= 0)
    throw ShapeMismatch("sample rates must be positive");
  if (target_rate == x.sample_rate) return x;
  const double src = double(x.sample_rate);
  const double dst = double(target_rate);
  const Eigen::Index in_len = x.samples.size();
  const Eigen::Index out_len = Eigen::Index(std::llround(double(in_len) * dst / src));

  // Cutoff at the smaller Nyquist frequency, in cycles per input sample.
  const double fc = 0.5 * std::min(1.0, dst / src);
  const double beta = 8.6;                      // ~85 dB stopband
  const Eigen::Index half = Eigen::Index(std::ceil(16.0 / fc));
  const double i0_beta = bessel_i0(beta);

  TimeSignal<double> y;
  y.sample_rate = target_rate;
  y.samples.resize(out_len);
  for (Eigen::Index j = 0; j < out_len; ++j) {
    const double pos = double(j) * src / dst;
    const Eigen::Index lo = std::max<Eigen::Index>(0, Eigen::Index(std::ceil(pos)) - half);
    const Eigen::Index hi =
        std::min<Eigen::Index>(in_len - 1, Eigen::Index(std::floor(pos)) + half);
    double acc = 0, norm = 0;
    for (Eigen::Index i = lo; i <= hi; ++i) {
      const double t = double(i) - pos;
      const double u = t / double(half);
      if (u <= -1.0 || u >= 1.0) continue;
      const double st = 2.0 * fc * t;
      const double sinc = st == 0.0 ? 1.0 : std::sin(EIGEN_PI * st) / (EIGEN_PI * st);
      const double w = bessel_i0(beta * std::sqrt(1.0 - u * u)) / i0_beta;
      const double k = sinc * w;
      acc += k * x.samples[i];
      norm += k;
    }
    y.samples[j] = norm == 0.0 ? 0.0 : acc / norm;
  }
  return y;
}

std::vector<Segment> segment(const TimeSignal<double>& x, const std::string& source_id) {
  if (x.samples.size() == 0) throw SignalEmpty("cannot segment an empty signal");
  if (x.sample_rate != kSegmentRate)
    throw ShapeMismatch("segmentation expects " + std::to_string(kSegmentRate) +
                        " Hz input, got " + std::to_string(x.sample_rate));
  const Eigen::Index len = x.samples.size();
  std::vector<Segment> out;
  Eigen::Index offset = 0;
  while (offset + kSegmentLen <= len) {
    Segment s;
    s.signal.sample_rate = kSegmentRate;
    s.signal.samples = x.samples.segment(offset, kSegmentLen);
    s.source_id = source_id;
    s.offset = offset;
    out.push_back(std::move(s));
    offset += kSegmentHop;
  }
  const Eigen::Index covered = out.empty() ? 0 : out.back().offset + kSegmentLen;
  if (covered < len) {
    Segment s;
    s.signal.sample_rate = kSegmentRate;
    s.signal.samples = ArrayX<double>::Zero(kSegmentLen);
    s.signal.samples.head(len - covered) = x.samples.tail(len - covered);
    s.source_id = source_id;
    s.offset = covered;
    s.padded = true;
    out.push_back(std::move(s));
  }
  return out;
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open manifest '" + path + "'");
  DatasetManifest m;
  m.root = std::filesystem::path(path).parent_path().string();

  std::set<std::string> seen_train, seen_eval;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string file, split, id;
    if (!(ls >> file)) continue;  // blank
    if (!(ls >> split >> id))
      throw UnsupportedFormat("manifest line " + std::to_string(lineno) +
                              ": expected <path> <train|eval> <id>");
    ManifestEntry e;
    std::filesystem::path fp(file);
    if (fp.is_relative()) fp = std::filesystem::path(m.root) / fp;
    e.path = fp.string();
    if (split == "train")
      e.split = Split::Train;
    else if (split == "eval")
      e.split = Split::Eval;
    else
      throw UnsupportedFormat("manifest line " + std::to_string(lineno) +
                              ": unknown split '" + split + "'");
    e.id = id;
    if (!std::filesystem::exists(e.path))
      throw IoFailure("manifest references missing file '" + e.path + "'");
    auto& mine = e.split == Split::Train ? seen_train : seen_eval;
    auto& other = e.split == Split::Train ? seen_eval : seen_train;
    if (other.count(e.path))
      throw UnsupportedFormat("file '" + e.path + "' appears in both splits");
    mine.insert(e.path);
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace specrec::io
