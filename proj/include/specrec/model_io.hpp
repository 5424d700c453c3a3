// specrec/model_io.hpp
//
// Model persistence: one file per bundle, a structured-text header
// (framing config, layer graph, tensor names/shapes) followed by raw
// little-endian 32-bit float blobs in header order. Normalization statistics
// travel as the tensors "norm.mean" and "norm.std".

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "specrec/gan.hpp"
#include "specrec/net.hpp"

namespace specrec::io {

struct TensorBlob {
  std::string name;
  nn::Shape shape;
  std::vector<float> data;
};

struct ModelBundle {
  StftConfig stft;
  int cond_bands = 32;
  int gl_warm_iters = 5;
  Eigen::Index train_frames = 0;  // frame count the discriminator head was sized for
  std::vector<nn::LayerSpec> g_layers, d_layers;
  std::vector<TensorBlob> g_tensors, d_tensors;
  ArrayXX<double> norm_mean, norm_std;  // 2 x bins
};

void save_model(const std::string& path, const ModelBundle& bundle);
ModelBundle load_model(const std::string& path);

namespace detail_model {

template <typename Scalar>
TensorBlob to_blob(const nn::Parameter<Scalar>& p) {
  TensorBlob b;
  b.name = p.name;
  b.shape = p.shape;
  b.data.resize(size_t(p.value.size()));
  for (Eigen::Index i = 0; i < p.value.size(); ++i) b.data[size_t(i)] = float(p.value[i]);
  return b;
}

template <typename Scalar>
void fill_params(std::vector<nn::Parameter<Scalar>>& params,
                 const std::vector<TensorBlob>& blobs) {
  if (params.size() != blobs.size())
    throw UnsupportedFormat("bundle tensor count does not match the layer graph");
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != blobs[i].name || !(params[i].shape == blobs[i].shape))
      throw UnsupportedFormat("bundle tensor '" + blobs[i].name +
                              "' does not match parameter '" + params[i].name + "'");
    for (Eigen::Index j = 0; j < params[i].value.size(); ++j)
      params[i].value[j] = Scalar(blobs[i].data[size_t(j)]);
  }
}

}  // namespace detail_model

template <typename Scalar>
ModelBundle bundle_from(gan::Generator<Scalar>& G, gan::Discriminator<Scalar>& D,
                        int gl_warm_iters) {
  ModelBundle b;
  b.stft = G.stft;
  b.cond_bands = D.cond_bands;
  b.gl_warm_iters = gl_warm_iters;
  b.train_frames = D.nominal_frames;
  b.g_layers = G.net.specs();
  b.d_layers = D.net.specs();
  for (const auto& p : G.net.params()) b.g_tensors.push_back(detail_model::to_blob(p));
  for (const auto& p : D.net.params()) b.d_tensors.push_back(detail_model::to_blob(p));
  b.norm_mean = G.stats.mean.template cast<double>();
  b.norm_std = G.stats.stdev.template cast<double>();
  return b;
}

template <typename Scalar>
gan::Generator<Scalar> generator_from(const ModelBundle& b) {
  gan::NormStats<Scalar> stats;
  stats.mean = b.norm_mean.cast<Scalar>();
  stats.stdev = b.norm_std.cast<Scalar>();
  gan::Generator<Scalar> G(b.stft, std::move(stats), b.g_layers);
  detail_model::fill_params(G.net.params(), b.g_tensors);
  return G;
}

template <typename Scalar>
gan::Discriminator<Scalar> discriminator_from(const ModelBundle& b) {
  gan::Discriminator<Scalar> D(b.stft, b.cond_bands, b.train_frames, b.d_layers);
  detail_model::fill_params(D.net.params(), b.d_tensors);
  return D;
}

}  // namespace specrec::io
