// specrec/nn.hpp
//
// Minimal reverse-mode differentiation on (batch, channels, length) tensors:
// a tape of recorded ops with retained activations, the layer kernels needed
// by the reconstruction networks, and the RMSprop update. Values are stored
// flat with index ((b*channels + c)*length + l); every reduction uses a
// fixed summation order so runs with the same seed are bit-identical.

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specrec/error.hpp"
#include "specrec/rng.hpp"
#include "specrec/spectral.hpp"

namespace specrec::nn {

struct Shape {
  Eigen::Index batch = 1;
  Eigen::Index channels = 1;
  Eigen::Index length = 1;

  Eigen::Index size() const { return batch * channels * length; }
  bool operator==(const Shape&) const = default;
  std::string str() const {
    return "(" + std::to_string(batch) + "," + std::to_string(channels) + "," +
           std::to_string(length) + ")";
  }
};

template <typename Scalar>
struct Tensor {
  Shape shape;
  ArrayX<Scalar> values;
};

template <typename Scalar>
struct Parameter {
  std::string name;
  Shape shape;
  ArrayX<Scalar> value;
  ArrayX<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Shape s)
      : name(std::move(n)),
        shape(s),
        value(ArrayX<Scalar>::Zero(s.size())),
        grad(ArrayX<Scalar>::Zero(s.size())) {}
};

namespace detail_nn {

template <typename Scalar>
using RowMajorMat =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using ColMajorMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline Eigen::Index conv_out_len(Eigen::Index in_len, Eigen::Index kernel,
                                 Eigen::Index stride, Eigen::Index padding) {
  return (in_len + 2 * padding - kernel) / stride + 1;
}

}  // namespace detail_nn

// Append-only op tape. Forward activations are retained on the tape;
// backward() may be called once per recording and walks nodes in reverse.
template <typename Scalar>
class Tape {
 public:
  struct Node {
    Shape shape;
    ArrayX<Scalar> value;
    ArrayX<Scalar> grad;  // allocated on first contribution
    bool requires_grad = false;
    std::function<void(Tape&)> backprop;
  };

  int input(Tensor<Scalar> t, bool requires_grad = false) {
    if (t.shape.size() != t.values.size())
      throw ShapeMismatch("tensor values do not match declared shape " + t.shape.str());
    return push("input", t.shape, std::move(t.values), requires_grad, {});
  }

  int leaf(Parameter<Scalar>& p) {
    Parameter<Scalar>* ptr = &p;
    const int id = push("leaf:" + p.name, p.shape, ArrayX<Scalar>(p.value), true, {});
    nodes_[size_t(id)].backprop = [ptr, id](Tape& tape) {
      ptr->grad += tape.nodes_[size_t(id)].grad;
    };
    return id;
  }

  const Node& node(int id) const { return nodes_.at(size_t(id)); }
  Eigen::Index size() const { return Eigen::Index(nodes_.size()); }

  const ArrayX<Scalar>& value(int id) const { return nodes_.at(size_t(id)).value; }

  // Gradient held at a node after backward(); zero array if none flowed.
  ArrayX<Scalar> grad(int id) const {
    const Node& n = nodes_.at(size_t(id));
    if (n.grad.size() == 0) return ArrayX<Scalar>::Zero(n.shape.size());
    return n.grad;
  }

  void add_output_grad(int id, const ArrayX<Scalar>& g) {
    Node& n = nodes_.at(size_t(id));
    if (g.size() != n.shape.size())
      throw ShapeMismatch("output gradient size does not match node shape " + n.shape.str());
    accumulate(id, g);
  }

  void backward() {
    if (consumed_ || nodes_.empty())
      throw GraphNotRecorded("backward needs freshly recorded forward activations");
    consumed_ = true;
    for (int i = int(nodes_.size()) - 1; i >= 0; --i) {
      Node& n = nodes_[size_t(i)];
      if (!n.requires_grad || !n.backprop || n.grad.size() == 0) continue;
      n.backprop(*this);
    }
  }

  // ---- ops ----------------------------------------------------------------

  // x: (B, Cin, L); w: (Cout, Cin, K); b: (Cout, 1, 1). Zero padding.
  // Output length floor((L + 2*padding - K)/stride) + 1. Lowered to a GEMM
  // over the im2col expansion; the expansion is rebuilt in the backward pass
  // instead of being retained.
  int conv1d(int x, int w, int b, Eigen::Index stride, Eigen::Index padding) {
    using detail_nn::RowMajorMat;
    const Node& xn = node(x);
    const Node& wn = node(w);
    const Node& bn = node(b);
    const Eigen::Index B = xn.shape.batch, cin = xn.shape.channels, L = xn.shape.length;
    const Eigen::Index cout = wn.shape.batch, K = wn.shape.length;
    if (wn.shape.channels != cin)
      throw ShapeMismatch("conv1d weight expects " + std::to_string(wn.shape.channels) +
                          " input channels, got " + std::to_string(cin));
    if (bn.shape.size() != cout) throw ShapeMismatch("conv1d bias size != out channels");
    if (stride < 1 || padding < 0) throw ShapeMismatch("conv1d stride/padding invalid");
    const Eigen::Index Lout = detail_nn::conv_out_len(L, K, stride, padding);
    if (Lout < 1) throw ShapeMismatch("conv1d output length would be empty");

    const auto cols = im2col(xn.value, B, cin, L, K, Lout, stride, padding);
    Eigen::Map<const RowMajorMat<Scalar>> wm(wn.value.data(), cout, cin * K);
    detail_nn::ColMajorMat<Scalar> y = wm * cols;
    y.colwise() += bn.value.matrix();

    ArrayX<Scalar> out(B * cout * Lout);
    for (Eigen::Index bi = 0; bi < B; ++bi)
      for (Eigen::Index o = 0; o < cout; ++o)
        for (Eigen::Index j = 0; j < Lout; ++j)
          out[(bi * cout + o) * Lout + j] = y(o, bi * Lout + j);

    const bool rg = xn.requires_grad || wn.requires_grad || bn.requires_grad;
    const int id = push("conv1d", Shape{B, cout, Lout}, std::move(out), rg, {});
    nodes_[size_t(id)].backprop = [id, x, w, b, stride, padding](Tape& tape) {
      const Node& self = tape.nodes_[size_t(id)];
      const Node& xn2 = tape.nodes_[size_t(x)];
      const Node& wn2 = tape.nodes_[size_t(w)];
      const Node& bn2 = tape.nodes_[size_t(b)];
      const Eigen::Index B2 = xn2.shape.batch, cin2 = xn2.shape.channels,
                         L2 = xn2.shape.length;
      const Eigen::Index cout2 = wn2.shape.batch, K2 = wn2.shape.length;
      const Eigen::Index Lout2 = self.shape.length;

      detail_nn::ColMajorMat<Scalar> gy(cout2, B2 * Lout2);
      for (Eigen::Index bi = 0; bi < B2; ++bi)
        for (Eigen::Index o = 0; o < cout2; ++o)
          for (Eigen::Index j = 0; j < Lout2; ++j)
            gy(o, bi * Lout2 + j) = self.grad[(bi * cout2 + o) * Lout2 + j];

      if (wn2.requires_grad) {
        const auto cols2 = im2col(xn2.value, B2, cin2, L2, K2, Lout2, stride, padding);
        detail_nn::RowMajorMat<Scalar> dw = gy * cols2.transpose();
        tape.accumulate(w, Eigen::Map<const ArrayX<Scalar>>(dw.data(), dw.size()));
      }
      if (bn2.requires_grad)
        tape.accumulate(b, ArrayX<Scalar>(gy.rowwise().sum().array()));
      if (xn2.requires_grad) {
        Eigen::Map<const RowMajorMat<Scalar>> wm2(wn2.value.data(), cout2, cin2 * K2);
        detail_nn::ColMajorMat<Scalar> dcols = wm2.transpose() * gy;
        ArrayX<Scalar> dx = ArrayX<Scalar>::Zero(xn2.shape.size());
        for (Eigen::Index bi = 0; bi < B2; ++bi)
          for (Eigen::Index j = 0; j < Lout2; ++j) {
            const Eigen::Index col = bi * Lout2 + j;
            const Eigen::Index start = j * stride - padding;
            for (Eigen::Index c = 0; c < cin2; ++c) {
              const Eigen::Index xbase = (bi * cin2 + c) * L2;
              for (Eigen::Index t = 0; t < K2; ++t) {
                const Eigen::Index pos = start + t;
                if (pos >= 0 && pos < L2) dx[xbase + pos] += dcols(c * K2 + t, col);
              }
            }
          }
        tape.accumulate(x, dx);
      }
    };
    return id;
  }

  int prelu(int x, int a) {
    const Node& xn = node(x);
    const Node& an = node(a);
    const Eigen::Index C = xn.shape.channels;
    if (an.shape.size() != 1 && an.shape.size() != C)
      throw ShapeMismatch("prelu coefficient must be scalar or per-channel");
    const bool per_channel = an.shape.size() == C;
    const Eigen::Index B = xn.shape.batch, L = xn.shape.length;

    ArrayX<Scalar> out(xn.shape.size());
    for (Eigen::Index bi = 0; bi < B; ++bi)
      for (Eigen::Index c = 0; c < C; ++c) {
        const Scalar coef = an.value[per_channel ? c : 0];
        const Eigen::Index base = (bi * C + c) * L;
        for (Eigen::Index l = 0; l < L; ++l) {
          const Scalar v = xn.value[base + l];
          out[base + l] = v >= Scalar(0) ? v : coef * v;
        }
      }
    const bool rg = xn.requires_grad || an.requires_grad;
    const int id = push("prelu", xn.shape, std::move(out), rg, {});
    nodes_[size_t(id)].backprop = [this, id, x, a, per_channel](Tape& tape) {
      const Node& self = tape.nodes_[size_t(id)];
      const Node& xn2 = tape.nodes_[size_t(x)];
      const Node& an2 = tape.nodes_[size_t(a)];
      const Eigen::Index B2 = xn2.shape.batch, C2 = xn2.shape.channels,
                         L2 = xn2.shape.length;
      ArrayX<Scalar> dx(xn2.shape.size());
      ArrayX<Scalar> da = ArrayX<Scalar>::Zero(an2.shape.size());
      for (Eigen::Index bi = 0; bi < B2; ++bi)
        for (Eigen::Index c = 0; c < C2; ++c) {
          const Eigen::Index ai = per_channel ? c : 0;
          const Scalar coef = an2.value[ai];
          const Eigen::Index base = (bi * C2 + c) * L2;
          for (Eigen::Index l = 0; l < L2; ++l) {
            const Scalar v = xn2.value[base + l];
            const Scalar g = self.grad[base + l];
            if (v >= Scalar(0)) {
              dx[base + l] = g;  // derivative 1 at v == 0 by convention
            } else {
              dx[base + l] = g * coef;
              da[ai] += g * v;
            }
          }
        }
      if (xn2.requires_grad) tape.accumulate(x, dx);
      if (an2.requires_grad) tape.accumulate(a, da);
    };
    return id;
  }

  int leaky_relu(int x, Scalar slope) {
    const Node& xn = node(x);
    if (!(slope > Scalar(0) && slope < Scalar(1)))
      throw ShapeMismatch("leaky_relu slope must lie in (0,1)");
    ArrayX<Scalar> out = xn.value.unaryExpr(
        [slope](Scalar v) { return v >= Scalar(0) ? v : slope * v; });
    const int id = push("leaky_relu", xn.shape, std::move(out), xn.requires_grad, {});
    nodes_[size_t(id)].backprop = [this, id, x, slope](Tape& tape) {
      const Node& self = tape.nodes_[size_t(id)];
      const Node& xn2 = tape.nodes_[size_t(x)];
      if (!xn2.requires_grad) return;
      ArrayX<Scalar> dx(xn2.shape.size());
      for (Eigen::Index i = 0; i < dx.size(); ++i)
        dx[i] = xn2.value[i] >= Scalar(0) ? self.grad[i] : slope * self.grad[i];
      tape.accumulate(x, dx);
    };
    return id;
  }

  // x: (B, C, L) flattened per item; w: (U, C*L, 1); b: (U, 1, 1).
  int fully_connected(int x, int w, int b) {
    using detail_nn::RowMajorMat;
    const Node& xn = node(x);
    const Node& wn = node(w);
    const Node& bn = node(b);
    const Eigen::Index B = xn.shape.batch;
    const Eigen::Index in_dim = xn.shape.channels * xn.shape.length;
    const Eigen::Index U = wn.shape.batch;
    if (wn.shape.channels != in_dim)
      throw ShapeMismatch("fully_connected weight expects input dim " +
                          std::to_string(wn.shape.channels) + ", got " +
                          std::to_string(in_dim));
    if (bn.shape.size() != U) throw ShapeMismatch("fully_connected bias size != units");

    Eigen::Map<const detail_nn::ColMajorMat<Scalar>> xm(xn.value.data(), in_dim, B);
    Eigen::Map<const RowMajorMat<Scalar>> wm(wn.value.data(), U, in_dim);
    detail_nn::ColMajorMat<Scalar> y = wm * xm;
    y.colwise() += bn.value.matrix();

    ArrayX<Scalar> out(B * U);
    Eigen::Map<detail_nn::ColMajorMat<Scalar>>(out.data(), U, B) = y;

    const bool rg = xn.requires_grad || wn.requires_grad || bn.requires_grad;
    const int id = push("fully_connected", Shape{B, U, 1}, std::move(out), rg, {});
    nodes_[size_t(id)].backprop = [this, id, x, w, b](Tape& tape) {
      const Node& self = tape.nodes_[size_t(id)];
      const Node& xn2 = tape.nodes_[size_t(x)];
      const Node& wn2 = tape.nodes_[size_t(w)];
      const Node& bn2 = tape.nodes_[size_t(b)];
      const Eigen::Index B2 = xn2.shape.batch;
      const Eigen::Index in_dim2 = xn2.shape.channels * xn2.shape.length;
      const Eigen::Index U2 = wn2.shape.batch;
      Eigen::Map<const detail_nn::ColMajorMat<Scalar>> gm(self.grad.data(), U2, B2);
      if (wn2.requires_grad) {
        Eigen::Map<const detail_nn::ColMajorMat<Scalar>> xm2(xn2.value.data(), in_dim2, B2);
        detail_nn::RowMajorMat<Scalar> dw = gm * xm2.transpose();
        tape.accumulate(w, Eigen::Map<const ArrayX<Scalar>>(dw.data(), dw.size()));
      }
      if (bn2.requires_grad)
        tape.accumulate(b, ArrayX<Scalar>(gm.rowwise().sum().array()));
      if (xn2.requires_grad) {
        Eigen::Map<const detail_nn::RowMajorMat<Scalar>> wm2(wn2.value.data(), U2, in_dim2);
        detail_nn::ColMajorMat<Scalar> dx = wm2.transpose() * gm;
        tape.accumulate(x, Eigen::Map<const ArrayX<Scalar>>(dx.data(), dx.size()));
      }
    };
    return id;
  }

  int add(int x, int y) {
    const Node& xn = node(x);
    const Node& yn = node(y);
    if (!(xn.shape == yn.shape))
      throw ShapeMismatch("add requires equal shapes, got " + xn.shape.str() + " and " +
                          yn.shape.str());
    ArrayX<Scalar> out = xn.value + yn.value;
    const int id =
        push("add", xn.shape, std::move(out), xn.requires_grad || yn.requires_grad, {});
    nodes_[size_t(id)].backprop = [this, id, x, y](Tape& tape) {
      const Node& self = tape.nodes_[size_t(id)];
      if (tape.nodes_[size_t(x)].requires_grad) tape.accumulate(x, self.grad);
      if (tape.nodes_[size_t(y)].requires_grad) tape.accumulate(y, self.grad);
    };
    return id;
  }

  int concat(int x, int y) {
    const Node& xn = node(x);
    const Node& yn = node(y);
    if (xn.shape.batch != yn.shape.batch || xn.shape.length != yn.shape.length)
      throw ShapeMismatch("concat requires equal batch and length");
    const Eigen::Index B = xn.shape.batch, L = xn.shape.length;
    const Eigen::Index C1 = xn.shape.channels, C2 = yn.shape.channels;
    ArrayX<Scalar> out(B * (C1 + C2) * L);
    for (Eigen::Index bi = 0; bi < B; ++bi) {
      out.segment(bi * (C1 + C2) * L, C1 * L) = xn.value.segment(bi * C1 * L, C1 * L);
      out.segment(bi * (C1 + C2) * L + C1 * L, C2 * L) =
          yn.value.segment(bi * C2 * L, C2 * L);
    }
    const int id = push("concat", Shape{B, C1 + C2, L}, std::move(out),
                        xn.requires_grad || yn.requires_grad, {});
    nodes_[size_t(id)].backprop = [this, id, x, y, C1, C2, L](Tape& tape) {
      const Node& self = tape.nodes_[size_t(id)];
      const Eigen::Index B2 = self.shape.batch;
      if (tape.nodes_[size_t(x)].requires_grad) {
        ArrayX<Scalar> dx(B2 * C1 * L);
        for (Eigen::Index bi = 0; bi < B2; ++bi)
          dx.segment(bi * C1 * L, C1 * L) = self.grad.segment(bi * (C1 + C2) * L, C1 * L);
        tape.accumulate(x, dx);
      }
      if (tape.nodes_[size_t(y)].requires_grad) {
        ArrayX<Scalar> dy(B2 * C2 * L);
        for (Eigen::Index bi = 0; bi < B2; ++bi)
          dy.segment(bi * C2 * L, C2 * L) =
              self.grad.segment(bi * (C1 + C2) * L + C1 * L, C2 * L);
        tape.accumulate(y, dy);
      }
    };
    return id;
  }

  // Mean-pool (out_len < L) or nearest-repeat (out_len > L) along time.
  int pool_time(int x, Eigen::Index out_len) {
    const Node& xn = node(x);
    if (out_len < 1) throw ShapeMismatch("pool_time requires positive output length");
    const Eigen::Index B = xn.shape.batch, C = xn.shape.channels, L = xn.shape.length;
    ArrayX<Scalar> out(B * C * out_len);
    for (Eigen::Index bi = 0; bi < B; ++bi)
      for (Eigen::Index c = 0; c < C; ++c) {
        const Eigen::Index xbase = (bi * C + c) * L;
        const Eigen::Index obase = (bi * C + c) * out_len;
        for (Eigen::Index j = 0; j < out_len; ++j) {
          const Eigen::Index s = j * L / out_len;
          const Eigen::Index e = std::max(s + 1, (j + 1) * L / out_len);
          Scalar acc(0);
          for (Eigen::Index l = s; l < e; ++l) acc += xn.value[xbase + l];
          out[obase + j] = acc / Scalar(e - s);
        }
      }
    const int id =
        push("pool_time", Shape{B, C, out_len}, std::move(out), xn.requires_grad, {});
    nodes_[size_t(id)].backprop = [this, id, x, out_len](Tape& tape) {
      const Node& self = tape.nodes_[size_t(id)];
      const Node& xn2 = tape.nodes_[size_t(x)];
      if (!xn2.requires_grad) return;
      const Eigen::Index B2 = xn2.shape.batch, C2 = xn2.shape.channels,
                         L2 = xn2.shape.length;
      ArrayX<Scalar> dx = ArrayX<Scalar>::Zero(xn2.shape.size());
      for (Eigen::Index bi = 0; bi < B2; ++bi)
        for (Eigen::Index c = 0; c < C2; ++c) {
          const Eigen::Index xbase = (bi * C2 + c) * L2;
          const Eigen::Index obase = (bi * C2 + c) * out_len;
          for (Eigen::Index j = 0; j < out_len; ++j) {
            const Eigen::Index s = j * L2 / out_len;
            const Eigen::Index e = std::max(s + 1, (j + 1) * L2 / out_len);
            const Scalar share = self.grad[obase + j] / Scalar(e - s);
            for (Eigen::Index l = s; l < e; ++l) dx[xbase + l] += share;
          }
        }
      tape.accumulate(x, dx);
    };
    return id;
  }

  // Per-channel affine with constant coefficients: y = x * scale[c] + offset[c].
  int affine_channels(int x, ArrayX<Scalar> scale, ArrayX<Scalar> offset) {
    const Node& xn = node(x);
    const Eigen::Index B = xn.shape.batch, C = xn.shape.channels, L = xn.shape.length;
    if (scale.size() != C || offset.size() != C)
      throw ShapeMismatch("affine_channels coefficients must have one entry per channel");
    ArrayX<Scalar> out(xn.shape.size());
    for (Eigen::Index bi = 0; bi < B; ++bi)
      for (Eigen::Index c = 0; c < C; ++c)
        out.segment((bi * C + c) * L, L) =
            xn.value.segment((bi * C + c) * L, L) * scale[c] + offset[c];
    const int id = push("affine_channels", xn.shape, std::move(out), xn.requires_grad, {});
    auto scale_copy = std::make_shared<ArrayX<Scalar>>(std::move(scale));
    nodes_[size_t(id)].backprop = [this, id, x, scale_copy](Tape& tape) {
      const Node& self = tape.nodes_[size_t(id)];
      const Node& xn2 = tape.nodes_[size_t(x)];
      if (!xn2.requires_grad) return;
      const Eigen::Index B2 = xn2.shape.batch, C2 = xn2.shape.channels,
                         L2 = xn2.shape.length;
      ArrayX<Scalar> dx(xn2.shape.size());
      for (Eigen::Index bi = 0; bi < B2; ++bi)
        for (Eigen::Index c = 0; c < C2; ++c)
          dx.segment((bi * C2 + c) * L2, L2) =
              self.grad.segment((bi * C2 + c) * L2, L2) * (*scale_copy)[c];
      tape.accumulate(x, dx);
    };
    return id;
  }

  // Differentiable least-squares synthesis front block: (B, 2*bins, N)
  // channel tensors (real parts first, then imaginary parts) to (B, 1, T)
  // waveforms, T = (N-1)*hop + win_len.
  int istft_front(int x, const StftConfig& cfg) {
    const Node& xn = node(x);
    const Eigen::Index bins = cfg.bins();
    if (xn.shape.channels != 2 * bins)
      throw ShapeMismatch("istft_front expects " + std::to_string(2 * bins) +
                          " channels, got " + std::to_string(xn.shape.channels));
    const Eigen::Index B = xn.shape.batch, N = xn.shape.length;
    const Eigen::Index T = synthesis_length(N, cfg);
    ArrayX<Scalar> out(B * T);
    for (Eigen::Index bi = 0; bi < B; ++bi) {
      ArrayXXc<Scalar> spec(bins, N);
      for (Eigen::Index f = 0; f < bins; ++f)
        for (Eigen::Index n = 0; n < N; ++n)
          spec(f, n) = std::complex<Scalar>(
              xn.value[(bi * 2 * bins + f) * N + n],
              xn.value[(bi * 2 * bins + bins + f) * N + n]);
      out.segment(bi * T, T) = detail::istft_core(spec, cfg);
    }
    const int id = push("istft_front", Shape{B, 1, T}, std::move(out), xn.requires_grad, {});
    nodes_[size_t(id)].backprop = [this, id, x, cfg](Tape& tape) {
      const Node& self = tape.nodes_[size_t(id)];
      const Node& xn2 = tape.nodes_[size_t(x)];
      if (!xn2.requires_grad) return;
      const Eigen::Index bins2 = cfg.bins();
      const Eigen::Index B2 = xn2.shape.batch, N2 = xn2.shape.length;
      const Eigen::Index T2 = self.shape.length;
      ArrayX<Scalar> dx(xn2.shape.size());
      for (Eigen::Index bi = 0; bi < B2; ++bi) {
        const ArrayX<Scalar> g = self.grad.segment(bi * T2, T2);
        const ArrayXXc<Scalar> adj = detail::istft_adjoint(g, cfg, N2);
        for (Eigen::Index f = 0; f < bins2; ++f)
          for (Eigen::Index n = 0; n < N2; ++n) {
            dx[(bi * 2 * bins2 + f) * N2 + n] = adj(f, n).real();
            dx[(bi * 2 * bins2 + bins2 + f) * N2 + n] = adj(f, n).imag();
          }
      }
      tape.accumulate(x, dx);
    };
    return id;
  }

 private:
  static detail_nn::ColMajorMat<Scalar> im2col(const ArrayX<Scalar>& xv, Eigen::Index B,
                                               Eigen::Index cin, Eigen::Index L,
                                               Eigen::Index K, Eigen::Index Lout,
                                               Eigen::Index stride, Eigen::Index padding) {
    detail_nn::ColMajorMat<Scalar> cols(cin * K, B * Lout);
    cols.setZero();
    for (Eigen::Index bi = 0; bi < B; ++bi)
      for (Eigen::Index j = 0; j < Lout; ++j) {
        const Eigen::Index col = bi * Lout + j;
        const Eigen::Index start = j * stride - padding;
        for (Eigen::Index c = 0; c < cin; ++c) {
          const Eigen::Index xbase = (bi * cin + c) * L;
          for (Eigen::Index t = 0; t < K; ++t) {
            const Eigen::Index pos = start + t;
            if (pos >= 0 && pos < L) cols(c * K + t, col) = xv[xbase + pos];
          }
        }
      }
    return cols;
  }

  int push(const std::string& op, Shape shape, ArrayX<Scalar> value, bool requires_grad,
           std::function<void(Tape&)> backprop) {
    if (!value.isFinite().all())
      throw NonFiniteActivation(op + " produced a non-finite value");
    Node n;
    n.shape = shape;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
  }

  template <typename Derived>
  void accumulate(int id, const Eigen::ArrayBase<Derived>& g) {
    Node& n = nodes_.at(size_t(id));
    if (!n.requires_grad) return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// m <- alpha*m + (1-alpha)*g^2; theta <- theta - lr*g/sqrt(m + eps).
template <typename Scalar>
class Rmsprop {
 public:
  Scalar learning_rate = Scalar(5e-5);
  Scalar alpha = Scalar(0.5);
  Scalar epsilon = Scalar(1e-8);

  void step(std::vector<Parameter<Scalar>*>& params) {
    if (!(alpha > Scalar(0) && alpha < Scalar(1)))
      throw ShapeMismatch("rmsprop alpha must lie in (0,1)");
    if (!(learning_rate > Scalar(0)))
      throw ShapeMismatch("rmsprop learning rate must be positive");
    if (accum_.empty()) {
      accum_.reserve(params.size());
      for (auto* p : params) accum_.push_back(ArrayX<Scalar>::Zero(p->value.size()));
    }
    if (accum_.size() != params.size())
      throw ShapeMismatch("rmsprop state tracks a different parameter set");
    for (size_t i = 0; i < params.size(); ++i) {
      Parameter<Scalar>& p = *params[i];
      if (accum_[i].size() != p.value.size())
        throw ShapeMismatch("rmsprop accumulator shape mismatch for " + p.name);
      accum_[i] = alpha * accum_[i] + (Scalar(1) - alpha) * p.grad.square();
      p.value -= learning_rate * p.grad / (accum_[i] + epsilon).sqrt();
    }
  }

  const std::vector<ArrayX<Scalar>>& accumulators() const { return accum_; }

 private:
  std::vector<ArrayX<Scalar>> accum_;
};

}  // namespace specrec::nn
