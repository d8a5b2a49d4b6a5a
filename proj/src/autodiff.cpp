#include "f4flow/autodiff.hpp"

#include <cmath>
#include <cstring>

#include "f4flow/conv_kernels.hpp"

namespace f4flow {

bool all_finite(const float* p, std::size_t n) {
  uint32_t bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    uint32_t bits;
    std::memcpy(&bits, &p[i], 4);
    bad |= static_cast<uint32_t>((bits & 0x7f800000u) == 0x7f800000u);
  }
  return bad == 0;
}

bool all_finite(const double* p, std::size_t n) {
  uint64_t bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    uint64_t bits;
    std::memcpy(&bits, &p[i], 8);
    bad |= static_cast<uint64_t>((bits & 0x7ff0000000000000ull) == 0x7ff0000000000000ull);
  }
  return bad == 0;
}

namespace {

struct UpsampleAxis {
  std::vector<int> lo, hi;
  std::vector<float> wlo;  // weight of lo; hi gets 1-wlo
};

/// align-corners-false doubling: output o samples input at (o+0.5)/2 - 0.5.
UpsampleAxis upsample_axis(int n) {
  UpsampleAxis ax;
  ax.lo.resize(2 * n);
  ax.hi.resize(2 * n);
  ax.wlo.resize(2 * n);
  for (int o = 0; o < 2 * n; ++o) {
    const double pos = (o + 0.5) / 2.0 - 0.5;
    int lo = static_cast<int>(std::floor(pos));
    const double frac = pos - lo;
    int hi = lo + 1;
    double wlo = 1.0 - frac;
    if (lo < 0) {
      lo = 0;
      hi = 0;
      wlo = 1.0;
    } else if (hi > n - 1) {
      hi = n - 1;
      lo = n - 1;
      wlo = 1.0;
    }
    ax.lo[o] = lo;
    ax.hi[o] = hi;
    ax.wlo[o] = static_cast<float>(wlo);
  }
  return ax;
}

}  // namespace

template <typename S>
void Graph<S>::check_id(int id) const {
  require(id >= 0 && static_cast<std::size_t>(id) < nodes_.size(), "bad-argument",
          "graph node id out of range");
}

template <typename S>
int Graph<S>::push(Node n) {
  if (n.op != Op::param) {
    require(all_finite(n.value), "non-finite",
            "op produced NaN/Inf (node " + std::to_string(nodes_.size()) + ")");
  }
  nodes_.push_back(std::move(n));
  ran_backward_ = false;
  return static_cast<int>(nodes_.size()) - 1;
}

template <typename S>
int Graph<S>::constant(Tensor<S> value) {
  Node n;
  n.op = Op::constant;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename S>
int Graph<S>::param(const Tensor<S>* storage, std::string name) {
  require(storage != nullptr, "bad-argument", "param storage is null");
  require(all_finite(*storage), "non-finite", "parameter '" + name + "' is not finite");
  Node n;
  n.op = Op::param;
  n.pvalue = storage;
  n.requires_grad = true;
  n.name = std::move(name);
  return push(std::move(n));
}

template <typename S>
int Graph<S>::conv3d(int x, int w, int b) {
  check_id(x);
  check_id(w);
  check_id(b);
  const Tensor<S>& xv = val(x);
  const Tensor<S>& wv = val(w);
  const Tensor<S>& bv = val(b);
  require(xv.shape.size() == 4, "bad-argument", "conv3d input must be [D,H,W,C]");
  require(wv.shape.size() == 5 && wv.shape[0] == 3 && wv.shape[1] == 3 && wv.shape[2] == 3,
          "bad-argument", "conv3d weights must be [3,3,3,Ci,Co]");
  require(wv.shape[3] == xv.shape[3], "bad-argument",
          "conv3d channel mismatch: input " + xv.shape_str() + " vs weights " + wv.shape_str());
  require(bv.shape.size() == 1 && bv.shape[0] == wv.shape[4], "bad-argument",
          "conv3d bias must be [Co]");
  const int D = xv.shape[0], H = xv.shape[1], W = xv.shape[2];
  const int Ci = xv.shape[3], Co = wv.shape[4];

  Node n;
  n.op = Op::conv3d;
  n.a = x;
  n.b = w;
  n.c = b;
  n.requires_grad = nodes_[x].requires_grad || nodes_[w].requires_grad || nodes_[b].requires_grad;
  n.value = Tensor<S>({D, H, W, Co});
  kernels::conv3d_forward(xv.data.data(), D, H, W, Ci, wv.data.data(), bv.data.data(), Co,
                          n.value.data.data());
  return push(std::move(n));
}

template <typename S>
int Graph<S>::relu(int x) {
  check_id(x);
  Node n;
  n.op = Op::relu;
  n.a = x;
  n.requires_grad = nodes_[x].requires_grad;
  n.value = val(x);
  for (S& v : n.value.data) v = v > S(0) ? v : S(0);
  return push(std::move(n));
}

template <typename S>
int Graph<S>::leaky_relu(int x, S slope) {
  check_id(x);
  Node n;
  n.op = Op::leaky_relu;
  n.a = x;
  n.aux = slope;
  n.requires_grad = nodes_[x].requires_grad;
  n.value = val(x);
  for (S& v : n.value.data) v = v > S(0) ? v : slope * v;
  return push(std::move(n));
}

template <typename S>
int Graph<S>::add(int a, int b) {
  check_id(a);
  check_id(b);
  const Tensor<S>& av = val(a);
  const Tensor<S>& bv = val(b);
  require(av.shape == bv.shape, "bad-argument",
          "add shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
  Node n;
  n.op = Op::add;
  n.a = a;
  n.b = b;
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  n.value = av;
  for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] += bv.data[i];
  return push(std::move(n));
}

template <typename S>
int Graph<S>::concat_channels(int a, int b) {
  check_id(a);
  check_id(b);
  const Tensor<S>& av = val(a);
  const Tensor<S>& bv = val(b);
  require(av.shape.size() == 4 && bv.shape.size() == 4 && av.shape[0] == bv.shape[0] &&
              av.shape[1] == bv.shape[1] && av.shape[2] == bv.shape[2],
          "bad-argument", "concat_channels needs matching spatial dims");
  const int Ca = av.shape[3], Cb = bv.shape[3];
  const std::size_t vox = av.numel() / Ca;
  Node n;
  n.op = Op::concat_channels;
  n.a = a;
  n.b = b;
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  n.value = Tensor<S>({av.shape[0], av.shape[1], av.shape[2], Ca + Cb});
  for (std::size_t p = 0; p < vox; ++p) {
    S* o = n.value.data.data() + p * (Ca + Cb);
    std::memcpy(o, av.data.data() + p * Ca, sizeof(S) * Ca);
    std::memcpy(o + Ca, bv.data.data() + p * Cb, sizeof(S) * Cb);
  }
  return push(std::move(n));
}

template <typename S>
int Graph<S>::slice_channels(int x, int c0, int c1) {
  check_id(x);
  const Tensor<S>& xv = val(x);
  require(xv.shape.size() == 4, "bad-argument", "slice_channels input must be [D,H,W,C]");
  const int C = xv.shape[3];
  require(0 <= c0 && c0 < c1 && c1 <= C, "bad-argument", "slice range invalid");
  const std::size_t vox = xv.numel() / C;
  Node n;
  n.op = Op::slice_channels;
  n.a = x;
  n.c0 = c0;
  n.c1 = c1;
  n.requires_grad = nodes_[x].requires_grad;
  n.value = Tensor<S>({xv.shape[0], xv.shape[1], xv.shape[2], c1 - c0});
  for (std::size_t p = 0; p < vox; ++p) {
    std::memcpy(n.value.data.data() + p * (c1 - c0), xv.data.data() + p * C + c0,
                sizeof(S) * (c1 - c0));
  }
  return push(std::move(n));
}

template <typename S>
int Graph<S>::upsample2_trilinear(int x) {
  check_id(x);
  const Tensor<S>& xv = val(x);
  require(xv.shape.size() == 4, "bad-argument", "upsample input must be [D,H,W,C]");
  const int D = xv.shape[0], H = xv.shape[1], W = xv.shape[2], C = xv.shape[3];
  const UpsampleAxis az = upsample_axis(D), ay = upsample_axis(H), ax = upsample_axis(W);

  Node n;
  n.op = Op::upsample2;
  n.a = x;
  n.requires_grad = nodes_[x].requires_grad;
  n.value = Tensor<S>({2 * D, 2 * H, 2 * W, C});
  S* out = n.value.data.data();
  const S* in = xv.data.data();
  for (int oz = 0; oz < 2 * D; ++oz) {
    for (int oy = 0; oy < 2 * H; ++oy) {
      for (int ox = 0; ox < 2 * W; ++ox) {
        S* o = out + ((static_cast<std::size_t>(oz) * 2 * H + oy) * 2 * W + ox) * C;
        for (int c = 0; c < C; ++c) o[c] = S(0);
        for (int iz = 0; iz < 2; ++iz) {
          const int z = iz == 0 ? az.lo[oz] : az.hi[oz];
          const S wz = S(iz == 0 ? az.wlo[oz] : 1.0f - az.wlo[oz]);
          if (wz == S(0)) continue;
          for (int iy = 0; iy < 2; ++iy) {
            const int y = iy == 0 ? ay.lo[oy] : ay.hi[oy];
            const S wy = S(iy == 0 ? ay.wlo[oy] : 1.0f - ay.wlo[oy]);
            if (wy == S(0)) continue;
            for (int ix = 0; ix < 2; ++ix) {
              const int xx = ix == 0 ? ax.lo[ox] : ax.hi[ox];
              const S wx = S(ix == 0 ? ax.wlo[ox] : 1.0f - ax.wlo[ox]);
              if (wx == S(0)) continue;
              const S wgt = wz * wy * wx;
              const S* iv = in + ((static_cast<std::size_t>(z) * H + y) * W + xx) * C;
              for (int c = 0; c < C; ++c) o[c] += wgt * iv[c];
            }
          }
        }
      }
    }
  }
  return push(std::move(n));
}

template <typename S>
int Graph<S>::scale(int x, S factor) {
  check_id(x);
  Node n;
  n.op = Op::scale;
  n.a = x;
  n.aux = factor;
  n.requires_grad = nodes_[x].requires_grad;
  n.value = val(x);
  for (S& v : n.value.data) v *= factor;
  return push(std::move(n));
}

template <typename S>
int Graph<S>::sum_all(int x) {
  check_id(x);
  const Tensor<S>& xv = val(x);
  S acc = S(0);
  for (const S& v : xv.data) acc += v;
  Node n;
  n.op = Op::sum_all;
  n.a = x;
  n.requires_grad = nodes_[x].requires_grad;
  n.value = Tensor<S>::scalar(acc);
  return push(std::move(n));
}

template <typename S>
int Graph<S>::inner_product(int x, Tensor<S> weights) {
  check_id(x);
  const Tensor<S>& xv = val(x);
  require(xv.shape == weights.shape, "bad-argument",
          "inner_product shape mismatch " + xv.shape_str() + " vs " + weights.shape_str());
  S acc = S(0);
  for (std::size_t i = 0; i < xv.data.size(); ++i) acc += xv.data[i] * weights.data[i];
  Node n;
  n.op = Op::inner_product;
  n.a = x;
  n.requires_grad = nodes_[x].requires_grad;
  n.value = Tensor<S>::scalar(acc);
  n.coeffs = std::move(weights.data);
  return push(std::move(n));
}

template <typename S>
int Graph<S>::region_mse(int pred, int target, std::vector<uint8_t> region) {
  check_id(pred);
  check_id(target);
  const Tensor<S>& pv = val(pred);
  const Tensor<S>& tv = val(target);
  require(pv.shape == tv.shape, "bad-argument",
          "region_mse shape mismatch " + pv.shape_str() + " vs " + tv.shape_str());
  require(pv.shape.size() == 4, "bad-argument", "region_mse expects [D,H,W,C]");
  const int C = pv.shape[3];
  const std::size_t vox = pv.numel() / C;
  require(region.size() == vox, "bad-argument", "region length must equal voxel count");

  std::size_t count = 0;
  double acc = 0.0;
  for (std::size_t p = 0; p < vox; ++p) {
    if (!region[p]) continue;
    ++count;
    const S* pp = pv.data.data() + p * C;
    const S* tp = tv.data.data() + p * C;
    for (int c = 0; c < C; ++c) {
      const double d = static_cast<double>(pp[c]) - static_cast<double>(tp[c]);
      acc += d * d;
    }
  }
  Node n;
  n.op = Op::region_mse;
  n.a = pred;
  n.b = target;
  n.region = std::move(region);
  n.requires_grad = nodes_[pred].requires_grad || nodes_[target].requires_grad;
  n.value = Tensor<S>::scalar(count == 0 ? S(0) : static_cast<S>(acc / static_cast<double>(count)));
  return push(std::move(n));
}

template <typename S>
int Graph<S>::weighted_sum(std::vector<int> terms, std::vector<S> coeffs) {
  require(terms.size() == coeffs.size() && !terms.empty(), "bad-argument",
          "weighted_sum needs matching non-empty terms/coeffs");
  S acc = S(0);
  bool rg = false;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    check_id(terms[i]);
    require(val(terms[i]).numel() == 1, "bad-argument", "weighted_sum terms must be scalar");
    acc += coeffs[i] * val(terms[i]).data[0];
    rg = rg || nodes_[terms[i]].requires_grad;
  }
  Node n;
  n.op = Op::weighted_sum;
  n.list = std::move(terms);
  n.coeffs = std::move(coeffs);
  n.requires_grad = rg;
  n.value = Tensor<S>::scalar(acc);
  return push(std::move(n));
}

template <typename S>
int Graph<S>::l2_penalty(std::vector<int> params, S lambda) {
  require(lambda >= S(0), "bad-argument", "lambda must be >= 0");
  double acc = 0.0;
  bool rg = false;
  for (int id : params) {
    check_id(id);
    for (const S& v : val(id).data) acc += static_cast<double>(v) * static_cast<double>(v);
    rg = rg || nodes_[id].requires_grad;
  }
  Node n;
  n.op = Op::l2_penalty;
  n.list = std::move(params);
  n.aux = lambda;
  n.requires_grad = rg;
  n.value = Tensor<S>::scalar(static_cast<S>(static_cast<double>(lambda) * acc));
  return push(std::move(n));
}

template <typename S>
Tensor<S>& Graph<S>::grad_buf(int id) {
  Node& n = nodes_[id];
  if (n.grad.shape.empty()) {
    n.grad = Tensor<S>(val(id).shape);  // zero-initialized
  }
  return n.grad;
}

template <typename S>
const Tensor<S>& Graph<S>::grad(int id) const {
  check_id(id);
  require(ran_backward_, "bad-argument", "grad() requires a prior backward()");
  require(nodes_[id].requires_grad, "bad-argument", "node does not require grad");
  require(!nodes_[id].grad.shape.empty(), "bad-argument", "node not reached by backward");
  return nodes_[id].grad;
}

template <typename S>
int Graph<S>::op_count(Op op) const {
  int c = 0;
  for (const Node& n : nodes_) c += n.op == op;
  return c;
}

template <typename S>
void Graph<S>::backward(int loss) {
  check_id(loss);
  require(val(loss).numel() == 1, "bad-argument", "backward requires a scalar loss node");
  require(nodes_[loss].requires_grad, "bad-argument", "loss does not depend on any parameter");
  for (Node& n : nodes_) n.grad = Tensor<S>();
  // Ensure every parameter reports a (possibly zero) gradient.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].op == Op::param) grad_buf(static_cast<int>(i));
  }
  grad_buf(loss).data[0] = S(1);
  ran_backward_ = true;
  for (int id = loss; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.shape.empty()) continue;
    backward_node(id);
  }
}

template <typename S>
void Graph<S>::backward_node(int id) {
  Node& n = nodes_[id];
  const Tensor<S>& g = n.grad;
  auto needs = [&](int in_id) { return in_id >= 0 && nodes_[in_id].requires_grad; };

  switch (n.op) {
    case Op::constant:
    case Op::param:
      return;

    case Op::conv3d: {
      const Tensor<S>& xv = val(n.a);
      const Tensor<S>& wv = val(n.b);
      const int D = xv.shape[0], H = xv.shape[1], W = xv.shape[2];
      const int Ci = xv.shape[3], Co = wv.shape[4];
      if (needs(n.a)) {
        // input gradient = conv of gout with tap-flipped, ci/co-transposed weights
        Tensor<S> wt({3, 3, 3, Co, Ci});
        for (int tap = 0; tap < 27; ++tap) {
          const S* src = wv.data.data() + static_cast<std::size_t>(26 - tap) * Ci * Co;
          S* dst = wt.data.data() + static_cast<std::size_t>(tap) * Ci * Co;
          for (int ci = 0; ci < Ci; ++ci)
            for (int co = 0; co < Co; ++co)
              dst[static_cast<std::size_t>(co) * Ci + ci] = src[static_cast<std::size_t>(ci) * Co + co];
        }
        Tensor<S> gin({D, H, W, Ci});
        kernels::conv3d_forward(g.data.data(), D, H, W, Co, wt.data.data(),
                                static_cast<const S*>(nullptr), Ci, gin.data.data());
        Tensor<S>& acc = grad_buf(n.a);
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += gin.data[i];
      }
      if (needs(n.b) || needs(n.c)) {
        Tensor<S>& gw = grad_buf(n.b);
        Tensor<S>& gb = grad_buf(n.c);
        kernels::conv3d_grad_params(xv.data.data(), g.data.data(), D, H, W, Ci, Co,
                                    gw.data.data(), gb.data.data());
      }
      return;
    }

    case Op::relu: {
      if (!needs(n.a)) return;
      const Tensor<S>& xv = val(n.a);
      Tensor<S>& acc = grad_buf(n.a);
      for (std::size_t i = 0; i < acc.data.size(); ++i) {
        if (xv.data[i] > S(0)) acc.data[i] += g.data[i];
      }
      return;
    }

    case Op::leaky_relu: {
      if (!needs(n.a)) return;
      const Tensor<S>& xv = val(n.a);
      Tensor<S>& acc = grad_buf(n.a);
      for (std::size_t i = 0; i < acc.data.size(); ++i) {
        acc.data[i] += xv.data[i] > S(0) ? g.data[i] : n.aux * g.data[i];
      }
      return;
    }

    case Op::add: {
      for (int in_id : {n.a, n.b}) {
        if (!needs(in_id)) continue;
        Tensor<S>& acc = grad_buf(in_id);
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += g.data[i];
      }
      return;
    }

    case Op::concat_channels: {
      const int Ca = val(n.a).shape[3];
      const int Cb = val(n.b).shape[3];
      const std::size_t vox = val(n.a).numel() / Ca;
      if (needs(n.a)) {
        Tensor<S>& acc = grad_buf(n.a);
        for (std::size_t p = 0; p < vox; ++p)
          for (int c = 0; c < Ca; ++c)
            acc.data[p * Ca + c] += g.data[p * (Ca + Cb) + c];
      }
      if (needs(n.b)) {
        Tensor<S>& acc = grad_buf(n.b);
        for (std::size_t p = 0; p < vox; ++p)
          for (int c = 0; c < Cb; ++c)
            acc.data[p * Cb + c] += g.data[p * (Ca + Cb) + Ca + c];
      }
      return;
    }

    case Op::slice_channels: {
      if (!needs(n.a)) return;
      const int C = val(n.a).shape[3];
      const int Cs = n.c1 - n.c0;
      const std::size_t vox = val(n.a).numel() / C;
      Tensor<S>& acc = grad_buf(n.a);
      for (std::size_t p = 0; p < vox; ++p)
        for (int c = 0; c < Cs; ++c)
          acc.data[p * C + n.c0 + c] += g.data[p * Cs + c];
      return;
    }

    case Op::upsample2: {
      if (!needs(n.a)) return;
      const Tensor<S>& xv = val(n.a);
      const int D = xv.shape[0], H = xv.shape[1], W = xv.shape[2], C = xv.shape[3];
      const UpsampleAxis az = upsample_axis(D), ay = upsample_axis(H), ax = upsample_axis(W);
      Tensor<S>& acc = grad_buf(n.a);
      const S* go = g.data.data();
      for (int oz = 0; oz < 2 * D; ++oz) {
        for (int oy = 0; oy < 2 * H; ++oy) {
          for (int ox = 0; ox < 2 * W; ++ox) {
            const S* gv = go + ((static_cast<std::size_t>(oz) * 2 * H + oy) * 2 * W + ox) * C;
            for (int iz = 0; iz < 2; ++iz) {
              const int z = iz == 0 ? az.lo[oz] : az.hi[oz];
              const S wz = S(iz == 0 ? az.wlo[oz] : 1.0f - az.wlo[oz]);
              if (wz == S(0)) continue;
              for (int iy = 0; iy < 2; ++iy) {
                const int y = iy == 0 ? ay.lo[oy] : ay.hi[oy];
                const S wy = S(iy == 0 ? ay.wlo[oy] : 1.0f - ay.wlo[oy]);
                if (wy == S(0)) continue;
                for (int ix = 0; ix < 2; ++ix) {
                  const int xx = ix == 0 ? ax.lo[ox] : ax.hi[ox];
                  const S wx = S(ix == 0 ? ax.wlo[ox] : 1.0f - ax.wlo[ox]);
                  if (wx == S(0)) continue;
                  const S wgt = wz * wy * wx;
                  S* av = acc.data.data() + ((static_cast<std::size_t>(z) * H + y) * W + xx) * C;
                  for (int c = 0; c < C; ++c) av[c] += wgt * gv[c];
                }
              }
            }
          }
        }
      }
      return;
    }

    case Op::scale: {
      if (!needs(n.a)) return;
      Tensor<S>& acc = grad_buf(n.a);
      for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += n.aux * g.data[i];
      return;
    }

    case Op::sum_all: {
      if (!needs(n.a)) return;
      Tensor<S>& acc = grad_buf(n.a);
      const S gv = g.data[0];
      for (S& v : acc.data) v += gv;
      return;
    }

    case Op::inner_product: {
      if (!needs(n.a)) return;
      Tensor<S>& acc = grad_buf(n.a);
      const S gv = g.data[0];
      for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += gv * n.coeffs[i];
      return;
    }

    case Op::region_mse: {
      std::size_t count = 0;
      for (uint8_t r : n.region) count += (r != 0);
      if (count == 0) return;
      const Tensor<S>& pv = val(n.a);
      const Tensor<S>& tv = val(n.b);
      const int C = pv.shape[3];
      const S coeff = g.data[0] * S(2) / static_cast<S>(count);
      if (needs(n.a)) {
        Tensor<S>& acc = grad_buf(n.a);
        for (std::size_t p = 0; p < n.region.size(); ++p) {
          if (!n.region[p]) continue;
          for (int c = 0; c < C; ++c) {
            const std::size_t i = p * C + c;
            acc.data[i] += coeff * (pv.data[i] - tv.data[i]);
          }
        }
      }
      if (needs(n.b)) {
        Tensor<S>& acc = grad_buf(n.b);
        for (std::size_t p = 0; p < n.region.size(); ++p) {
          if (!n.region[p]) continue;
          for (int c = 0; c < C; ++c) {
            const std::size_t i = p * C + c;
            acc.data[i] -= coeff * (pv.data[i] - tv.data[i]);
          }
        }
      }
      return;
    }

    case Op::weighted_sum: {
      for (std::size_t i = 0; i < n.list.size(); ++i) {
        if (!needs(n.list[i])) continue;
        grad_buf(n.list[i]).data[0] += n.coeffs[i] * g.data[0];
      }
      return;
    }

    case Op::l2_penalty: {
      const S coeff = g.data[0] * S(2) * n.aux;
      for (int id_in : n.list) {
        if (!needs(id_in)) continue;
        Tensor<S>& acc = grad_buf(id_in);
        const Tensor<S>& wv = val(id_in);
        for (std::size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += coeff * wv.data[i];
      }
      return;
    }
  }
  fail("bad-argument", "unhandled op in backward");
}

template class Graph<float>;
template class Graph<double>;

}  // namespace f4flow
