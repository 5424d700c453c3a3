// src/model_io.cpp

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "specrec/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace specrec::io {

namespace {

void write_layer(std::ostream& os, const nn::LayerSpec& s) {
  using nn::LayerKind;
  os << "layer " << nn::layer_kind_name(s.kind) << " name=" << s.name;
  switch (s.kind) {
    case LayerKind::Conv1D:
      os << " kernel=" << s.kernel << " stride=" << s.stride
         << " out_channels=" << s.out_channels << " padding=" << s.padding;
      break;
    case LayerKind::PReLU:
      os << " per_channel=" << (s.per_channel ? 1 : 0);
      break;
    case LayerKind::LeakyReLU: {
      char buf[48];
      std::snprintf(buf, sizeof buf, " slope=%.17g", s.slope);
      os << buf;
      break;
    }
    case LayerKind::FullyConnected:
      os << " out_units=" << s.out_units;
      break;
    case LayerKind::ResidualAdd:
    case LayerKind::Concat:
      os << " source=" << s.source_layer;
      break;
  }
  os << "\n";
}

nn::LayerSpec parse_layer(const std::string& line) {
  std::istringstream ls(line);
  std::string tag, kind;
  ls >> tag >> kind;
  nn::LayerSpec s;
  s.kind = nn::layer_kind_from_name(kind);
  std::string kv;
  while (ls >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw UnsupportedFormat("malformed layer attribute '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    if (key == "name")
      s.name = val;
    else if (key == "kernel")
      s.kernel = std::stoi(val);
    else if (key == "stride")
      s.stride = std::stoi(val);
    else if (key == "out_channels")
      s.out_channels = std::stoi(val);
    else if (key == "padding")
      s.padding = std::stoi(val);
    else if (key == "per_channel")
      s.per_channel = std::stoi(val) != 0;
    else if (key == "slope")
      s.slope = std::stod(val);
    else if (key == "out_units")
      s.out_units = std::stoi(val);
    else if (key == "source")
      s.source_layer = std::stoi(val);
    else
      throw UnsupportedFormat("unknown layer attribute '" + key + "'");
  }
  if (s.name.empty()) throw UnsupportedFormat("layer without a name");
  return s;
}

void append_f32_le(std::string& out, float v) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  out.push_back(char(bits & 0xFF));
  out.push_back(char((bits >> 8) & 0xFF));
  out.push_back(char((bits >> 16) & 0xFF));
  out.push_back(char((bits >> 24) & 0xFF));
}

float read_f32_le(const unsigned char* p) {
  const std::uint32_t bits = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                             (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

void save_model(const std::string& path, const ModelBundle& b) {
  std::ostringstream header;
  header << "specrec-model v1\n";
  header << "stft sample_rate=" << b.stft.sample_rate << " win_len=" << b.stft.win_len
         << " hop=" << b.stft.hop << " window=" << window_name(b.stft.window_kind)
         << " fft_size=" << b.stft.fft_size << "\n";
  header << "cond_bands " << b.cond_bands << "\n";
  header << "gl_warm_iters " << b.gl_warm_iters << "\n";
  header << "train_frames " << b.train_frames << "\n";
  header << "generator_layers " << b.g_layers.size() << "\n";
  for (const auto& s : b.g_layers) write_layer(header, s);
  header << "discriminator_layers " << b.d_layers.size() << "\n";
  for (const auto& s : b.d_layers) write_layer(header, s);

  std::string blob;
  auto emit_tensor = [&](const TensorBlob& t) {
    header << "tensor " << t.name << " " << t.shape.batch << " " << t.shape.channels << " "
           << t.shape.length << "\n";
    for (float v : t.data) append_f32_le(blob, v);
  };
  for (const auto& t : b.g_tensors) emit_tensor(t);
  for (const auto& t : b.d_tensors) emit_tensor(t);

  const Eigen::Index bins = b.norm_mean.cols();
  TensorBlob mean{"norm.mean", nn::Shape{2, bins, 1}, {}};
  TensorBlob stdev{"norm.std", nn::Shape{2, bins, 1}, {}};
  for (Eigen::Index part = 0; part < 2; ++part)
    for (Eigen::Index f = 0; f < bins; ++f) {
      mean.data.push_back(float(b.norm_mean(part, f)));
      stdev.data.push_back(float(b.norm_std(part, f)));
    }
  emit_tensor(mean);
  emit_tensor(stdev);

  header << "data " << blob.size() / 4 << "\n";

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot open '" + path + "' for writing");
  const std::string head = header.str();
  f.write(head.data(), std::streamsize(head.size()));
  f.write(blob.data(), std::streamsize(blob.size()));
  if (!f) throw IoFailure("write error on '" + path + "'");
}

ModelBundle load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoFailure("cannot open model '" + path + "'");
  std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  ModelBundle b;
  size_t pos = 0;
  auto next_line = [&]() {
    const size_t end = content.find('\n', pos);
    if (end == std::string::npos) throw UnsupportedFormat("truncated model header");
    std::string line = content.substr(pos, end - pos);
    pos = end + 1;
    return line;
  };

  if (next_line() != "specrec-model v1")
    throw UnsupportedFormat("'" + path + "' is not a specrec model file");

  struct PendingTensor {
    std::string name;
    nn::Shape shape;
  };
  std::vector<PendingTensor> order;
  std::vector<nn::LayerSpec>* layer_sink = nullptr;
  Eigen::Index declared_floats = -1;

  while (declared_floats < 0) {
    const std::string line = next_line();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "stft") {
      std::string kv;
      while (ls >> kv) {
        const auto eq = kv.find('=');
        const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "sample_rate") b.stft.sample_rate = std::stoi(v);
        else if (k == "win_len") b.stft.win_len = std::stoi(v);
        else if (k == "hop") b.stft.hop = std::stoi(v);
        else if (k == "window") b.stft.window_kind = window_from_name(v);
        else if (k == "fft_size") b.stft.fft_size = std::stoi(v);
        else throw UnsupportedFormat("unknown stft field '" + k + "'");
      }
    } else if (key == "cond_bands") {
      ls >> b.cond_bands;
    } else if (key == "gl_warm_iters") {
      ls >> b.gl_warm_iters;
    } else if (key == "train_frames") {
      ls >> b.train_frames;
    } else if (key == "generator_layers") {
      layer_sink = &b.g_layers;
    } else if (key == "discriminator_layers") {
      layer_sink = &b.d_layers;
    } else if (key == "layer") {
      if (layer_sink == nullptr) throw UnsupportedFormat("layer outside a network section");
      layer_sink->push_back(parse_layer(line));
    } else if (key == "tensor") {
      PendingTensor t;
      ls >> t.name >> t.shape.batch >> t.shape.channels >> t.shape.length;
      if (t.name.empty()) throw UnsupportedFormat("tensor without a name");
      order.push_back(t);
    } else if (key == "data") {
      long long n = -1;
      ls >> n;
      declared_floats = Eigen::Index(n);
    } else if (key.empty()) {
      continue;
    } else {
      throw UnsupportedFormat("unknown model header line '" + line + "'");
    }
  }

  Eigen::Index expected = 0;
  for (const auto& t : order) expected += t.shape.size();
  if (expected != declared_floats)
    throw UnsupportedFormat("declared blob size disagrees with tensor shapes");
  if (pos + size_t(declared_floats) * 4 > content.size())
    throw UnsupportedFormat("model blob is truncated");

  auto params_of = [](const std::vector<nn::LayerSpec>& layers) {
    size_t n = 0;
    for (const auto& s : layers) {
      if (s.kind == nn::LayerKind::Conv1D || s.kind == nn::LayerKind::FullyConnected)
        n += 2;
      else if (s.kind == nn::LayerKind::PReLU)
        n += 1;
    }
    return n;
  };
  const size_t n_g = params_of(b.g_layers);
  const size_t n_d = params_of(b.d_layers);
  if (order.size() != n_g + n_d + 2)
    throw UnsupportedFormat("tensor list does not match the layer graphs");

  const auto* raw = reinterpret_cast<const unsigned char*>(content.data()) + pos;
  for (size_t ti = 0; ti < order.size(); ++ti) {
    const PendingTensor& t = order[ti];
    TensorBlob blob;
    blob.name = t.name;
    blob.shape = t.shape;
    blob.data.resize(size_t(t.shape.size()));
    for (Eigen::Index i = 0; i < t.shape.size(); ++i) {
      blob.data[size_t(i)] = read_f32_le(raw);
      raw += 4;
    }
    if (ti < n_g) {
      b.g_tensors.push_back(std::move(blob));
    } else if (ti < n_g + n_d) {
      b.d_tensors.push_back(std::move(blob));
    } else if (t.name == "norm.mean" || t.name == "norm.std") {
      ArrayXX<double>& dst = t.name == "norm.mean" ? b.norm_mean : b.norm_std;
      dst.resize(2, t.shape.channels);
      for (Eigen::Index part = 0; part < 2; ++part)
        for (Eigen::Index f = 0; f < t.shape.channels; ++f)
          dst(part, f) = double(blob.data[size_t(part * t.shape.channels + f)]);
    } else {
      throw UnsupportedFormat("unexpected trailing tensor '" + t.name + "'");
    }
  }
  return b;
}

}  // namespace specrec::io
