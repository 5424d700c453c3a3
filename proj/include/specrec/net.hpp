// specrec/net.hpp
//
// Layer-graph description and its tape executor. A network is a sequence of
// layers; ResidualAdd and Concat may reference the output of any earlier
// layer, the network input, or an auxiliary side input (conditioning), which
// Concat pools along time to the current feature rate.

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

#include "specrec/nn.hpp"

namespace specrec::nn {

enum class LayerKind { Conv1D, PReLU, LeakyReLU, FullyConnected, ResidualAdd, Concat };

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv1D: return "conv1d";
    case LayerKind::PReLU: return "prelu";
    case LayerKind::LeakyReLU: return "leaky_relu";
    case LayerKind::FullyConnected: return "fully_connected";
    case LayerKind::ResidualAdd: return "residual_add";
    case LayerKind::Concat: return "concat";
  }
  return "?";
}

inline LayerKind layer_kind_from_name(const std::string& s) {
  if (s == "conv1d") return LayerKind::Conv1D;
  if (s == "prelu") return LayerKind::PReLU;
  if (s == "leaky_relu") return LayerKind::LeakyReLU;
  if (s == "fully_connected") return LayerKind::FullyConnected;
  if (s == "residual_add") return LayerKind::ResidualAdd;
  if (s == "concat") return LayerKind::Concat;
  throw UnsupportedFormat("unknown layer kind '" + s + "'");
}

// source_layer values for ResidualAdd/Concat.
constexpr int kSourceNetworkInput = -1;
constexpr int kSourceSideInput = -2;

struct LayerSpec {
  LayerKind kind = LayerKind::Conv1D;
  std::string name;
  int kernel = 1;
  int stride = 1;
  int out_channels = 1;
  int padding = 0;
  bool per_channel = true;
  double slope = 0.2;
  int out_units = 1;
  int source_layer = kSourceNetworkInput;
};

struct ForwardRecord {
  int input = -1;
  int side_input = -1;
  int output = -1;
  std::vector<int> layer_outputs;
};

template <typename Scalar>
class Network {
 public:
  // nominal_input fixes parameter shapes: convolutions use only the channel
  // count, FullyConnected also freezes the flattened length. side_channels
  // sizes Concat sources referencing the side input.
  Network(std::vector<LayerSpec> specs, Shape nominal_input, Eigen::Index side_channels = 0)
      : specs_(std::move(specs)) {
    Eigen::Index ch = nominal_input.channels;
    Eigen::Index len = nominal_input.length;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> traced;  // (channels, length)
    for (size_t i = 0; i < specs_.size(); ++i) {
      LayerSpec& s = specs_[i];
      if (s.name.empty()) s.name = std::string(layer_kind_name(s.kind)) + std::to_string(i);
      switch (s.kind) {
        case LayerKind::Conv1D: {
          if (s.kernel < 1 || s.stride < 1 || s.out_channels < 1 || s.padding < 0)
            throw ShapeMismatch("conv layer '" + s.name + "' has invalid hyperparameters");
          params_.emplace_back(s.name + ".weight", Shape{s.out_channels, ch, s.kernel});
          params_.emplace_back(s.name + ".bias", Shape{s.out_channels, 1, 1});
          len = detail_nn::conv_out_len(len, s.kernel, s.stride, s.padding);
          if (len < 1)
            throw ShapeMismatch("conv layer '" + s.name + "' empties the time axis");
          ch = s.out_channels;
          break;
        }
        case LayerKind::PReLU:
          params_.emplace_back(s.name + ".coef", Shape{s.per_channel ? ch : 1, 1, 1});
          break;
        case LayerKind::LeakyReLU:
          if (!(s.slope > 0.0 && s.slope < 1.0))
            throw ShapeMismatch("leaky_relu slope must lie in (0,1)");
          break;
        case LayerKind::FullyConnected: {
          if (s.out_units < 1) throw ShapeMismatch("fully_connected needs out_units >= 1");
          params_.emplace_back(s.name + ".weight", Shape{s.out_units, ch * len, 1});
          params_.emplace_back(s.name + ".bias", Shape{s.out_units, 1, 1});
          ch = s.out_units;
          len = 1;
          break;
        }
        case LayerKind::ResidualAdd: {
          const auto src = source_shape(s, nominal_input, traced, side_channels);
          if (src.first != ch || src.second != len)
            throw ShapeMismatch("residual source shape mismatch at layer '" + s.name + "'");
          break;
        }
        case LayerKind::Concat: {
          const auto src = source_shape(s, nominal_input, traced, side_channels);
          ch += src.first;  // side input is pooled to the current length
          break;
        }
      }
      traced.emplace_back(ch, len);
    }
  }

  const std::vector<LayerSpec>& specs() const { return specs_; }
  std::vector<Parameter<Scalar>>& params() { return params_; }
  const std::vector<Parameter<Scalar>>& params() const { return params_; }

  std::vector<Parameter<Scalar>*> param_ptrs() {
    std::vector<Parameter<Scalar>*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

  void zero_grads() {
    for (auto& p : params_) p.grad.setZero();
  }

  // Symmetric uniform init scaled by fan-in/fan-out; PReLU coefficients 0.25,
  // biases zero. Deterministic in the seed and parameter order.
  void init_params(const Rng& base) {
    for (size_t i = 0; i < params_.size(); ++i) {
      Parameter<Scalar>& p = params_[i];
      Rng rng = base.fork(i);
      if (p.name.ends_with(".bias")) {
        p.value.setZero();
      } else if (p.name.ends_with(".coef")) {
        p.value.setConstant(Scalar(0.25));
      } else {
        const auto [fan_in, fan_out] = fan_of(i);
        const double bound = std::sqrt(6.0 / double(fan_in + fan_out));
        for (Eigen::Index j = 0; j < p.value.size(); ++j)
          p.value[j] = Scalar(rng.uniform(-bound, bound));
      }
      p.grad.setZero();
    }
  }

  // frozen = true binds parameters as constants: activations still carry
  // gradients through the layers, but no parameter gradients are computed.
  ForwardRecord forward(Tape<Scalar>& tape, int input_node, int side_node = -1,
                        bool frozen = false) {
    ForwardRecord rec;
    rec.input = input_node;
    rec.side_input = side_node;
    auto bind = [&](Parameter<Scalar>& p) {
      if (frozen) return tape.input(Tensor<Scalar>{p.shape, p.value});
      return tape.leaf(p);
    };
    int cur = input_node;
    size_t pi = 0;
    for (const LayerSpec& s : specs_) {
      switch (s.kind) {
        case LayerKind::Conv1D: {
          const int w = bind(params_[pi]);
          const int b = bind(params_[pi + 1]);
          pi += 2;
          cur = tape.conv1d(cur, w, b, s.stride, s.padding);
          break;
        }
        case LayerKind::PReLU: {
          const int a = bind(params_[pi]);
          pi += 1;
          cur = tape.prelu(cur, a);
          break;
        }
        case LayerKind::LeakyReLU:
          cur = tape.leaky_relu(cur, Scalar(s.slope));
          break;
        case LayerKind::FullyConnected: {
          const int w = bind(params_[pi]);
          const int b = bind(params_[pi + 1]);
          pi += 2;
          cur = tape.fully_connected(cur, w, b);
          break;
        }
        case LayerKind::ResidualAdd:
          cur = tape.add(cur, resolve_source(s, rec));
          break;
        case LayerKind::Concat: {
          int src = resolve_source(s, rec);
          const Eigen::Index cur_len = tape.node(cur).shape.length;
          if (tape.node(src).shape.length != cur_len)
            src = tape.pool_time(src, cur_len);
          cur = tape.concat(cur, src);
          break;
        }
      }
      rec.layer_outputs.push_back(cur);
    }
    rec.output = cur;
    return rec;
  }

 private:
  static std::pair<Eigen::Index, Eigen::Index> source_shape(
      const LayerSpec& s, const Shape& input,
      const std::vector<std::pair<Eigen::Index, Eigen::Index>>& traced,
      Eigen::Index side_channels) {
    if (s.source_layer == kSourceNetworkInput) return {input.channels, input.length};
    if (s.source_layer == kSourceSideInput) {
      if (side_channels < 1)
        throw ShapeMismatch("layer '" + s.name + "' references a side input, none declared");
      return {side_channels, Eigen::Index(-1)};
    }
    if (s.source_layer < 0 || size_t(s.source_layer) >= traced.size())
      throw ShapeMismatch("layer '" + s.name + "' references layer " +
                          std::to_string(s.source_layer) + ", which is not earlier");
    return traced[size_t(s.source_layer)];
  }

  static int resolve_source(const LayerSpec& s, const ForwardRecord& rec) {
    if (s.source_layer == kSourceNetworkInput) return rec.input;
    if (s.source_layer == kSourceSideInput) {
      if (rec.side_input < 0)
        throw ShapeMismatch("layer '" + s.name + "' needs a side input node");
      return rec.side_input;
    }
    return rec.layer_outputs.at(size_t(s.source_layer));
  }

  std::pair<Eigen::Index, Eigen::Index> fan_of(size_t param_index) const {
    // Locate the owning layer by walking the same allocation order.
    size_t pi = 0;
    for (const LayerSpec& s : specs_) {
      switch (s.kind) {
        case LayerKind::Conv1D:
        case LayerKind::FullyConnected: {
          if (param_index == pi || param_index == pi + 1) {
            const Shape& w = params_[pi].shape;
            if (s.kind == LayerKind::Conv1D)
              return {w.channels * w.length, w.batch * w.length};
            return {w.channels, w.batch};
          }
          pi += 2;
          break;
        }
        case LayerKind::PReLU:
          if (param_index == pi) return {1, 1};
          pi += 1;
          break;
        default:
          break;
      }
    }
    return {1, 1};
  }

  std::vector<LayerSpec> specs_;
  std::vector<Parameter<Scalar>> params_;
};

}  // namespace specrec::nn
