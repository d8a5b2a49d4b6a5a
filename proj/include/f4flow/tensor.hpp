#pragma once

#include <cstdint>
#include <cstring>
#include <numeric>
#include <string>
#include <vector>

#include "f4flow/errors.hpp"

namespace f4flow {

/// Dense tensor. Activations use [D,H,W,C] with C fastest; conv weights use
/// [3,3,3,Ci,Co]; biases [Co]; scalars [1].
template <typename S>
struct Tensor {
  std::vector<int> shape;
  std::vector<S> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> shp) : shape(std::move(shp)) {
    data.resize(numel_of(shape));
  }
  Tensor(std::vector<int> shp, std::vector<S> values)
      : shape(std::move(shp)), data(std::move(values)) {
    require(data.size() == numel_of(shape), "bad-argument",
            "tensor data length does not match shape");
  }

  static std::size_t numel_of(const std::vector<int>& shp) {
    std::size_t n = 1;
    for (int d : shp) {
      require(d >= 1, "bad-argument", "tensor dims must be positive");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  static Tensor scalar(S v) { return Tensor({1}, {v}); }

  std::size_t numel() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape[i]);
    }
    return s + "]";
  }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }
};

/// True when every element is finite (no NaN/Inf).
bool all_finite(const float* p, std::size_t n);
bool all_finite(const double* p, std::size_t n);

template <typename S>
bool all_finite(const Tensor<S>& t) {
  return all_finite(t.data.data(), t.data.size());
}

}  // namespace f4flow
