#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "f4flow/tensor.hpp"

namespace f4flow {

/// Reverse-mode tape over the fixed op set the networks need: conv3d (3^3,
/// stride 1, same padding), relu/leaky_relu, add, channel concat/slice,
/// trilinear x2 upsampling, scalar scale, and the loss reductions. Values are
/// computed eagerly as ops are recorded; backward() walks the tape in
/// reverse. Every op output is checked finite (NaN/Inf raises "non-finite").
template <typename S>
class Graph {
 public:
  enum class Op {
    constant,
    param,
    conv3d,
    relu,
    leaky_relu,
    add,
    concat_channels,
    slice_channels,
    upsample2,
    scale,
    sum_all,
    inner_product,
    region_mse,
    weighted_sum,
    l2_penalty,
  };

  /// Leaf with no gradient.
  int constant(Tensor<S> value);

  /// Leaf bound to external storage; receives a gradient in backward().
  int param(const Tensor<S>* storage, std::string name = {});

  int conv3d(int x, int w, int b);
  int relu(int x);
  int leaky_relu(int x, S slope);
  int add(int a, int b);
  int concat_channels(int a, int b);
  int slice_channels(int x, int c0, int c1);
  int upsample2_trilinear(int x);
  int scale(int x, S factor);
  int sum_all(int x);

  /// Scalar node: sum of x (.) weights; the adjoint routes weights * g back.
  int inner_product(int x, Tensor<S> weights);

  /// Mean over region voxels of the channel-summed squared difference to
  /// `target`. `region` has one byte per voxel (channels excluded); an empty
  /// region yields 0 by convention.
  int region_mse(int pred, int target, std::vector<uint8_t> region);

  /// Scalar node: sum_i coeff[i] * value(terms[i]); all terms scalar.
  int weighted_sum(std::vector<int> terms, std::vector<S> coeffs);

  /// Scalar node: lambda * sum over the given tensors of the squared entries.
  int l2_penalty(std::vector<int> params, S lambda);

  const Tensor<S>& value(int id) const { return nodes_[id].pvalue != nullptr ? *nodes_[id].pvalue : nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Reverse accumulation from a scalar loss node; d loss / d loss = 1.
  void backward(int loss);

  /// Gradient of the last backward() w.r.t. node `id` (must require grad).
  const Tensor<S>& grad(int id) const;

  std::size_t size() const { return nodes_.size(); }
  int op_count(Op op) const;

 private:
  struct Node {
    Op op;
    int a = -1, b = -1, c = -1;
    std::vector<int> list;
    Tensor<S> value;
    const Tensor<S>* pvalue = nullptr;  // params alias external storage
    Tensor<S> grad;
    bool requires_grad = false;
    S aux = S(0);
    int c0 = 0, c1 = 0;
    std::vector<uint8_t> region;
    std::vector<S> coeffs;
    std::string name;
  };

  int push(Node n);
  const Tensor<S>& val(int id) const { return value(id); }
  Tensor<S>& grad_buf(int id);
  void check_id(int id) const;
  void backward_node(int id);

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace f4flow
