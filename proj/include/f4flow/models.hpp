#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "f4flow/autodiff.hpp"
#include "f4flow/tensor.hpp"

namespace f4flow {

enum class BlockKind { residual, dense, csp };
enum class Activation { relu, leaky };

const char* to_string(BlockKind k);
const char* to_string(Activation a);
BlockKind block_kind_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

struct BaseModelSpec {
  int channels = 16;
  int n_blocks_low = 4;
  int n_blocks_high = 4;
  BlockKind block = BlockKind::residual;
  Activation activation = Activation::leaky;
  uint64_t seed = 0;

  void validate() const;
  bool operator==(const BaseModelSpec&) const = default;
};

/// The stacking fusion network: exactly 8 conv layers, constant width.
struct MetaModelSpec {
  int n_base = 2;
  int channels = 32;
  Activation activation = Activation::leaky;
  uint64_t seed = 0;
  static constexpr int kLayers = 8;

  void validate() const;
  bool operator==(const MetaModelSpec&) const = default;
};

/// Named weight tensors in deterministic build order.
template <typename S>
struct ParameterSet {
  struct Item {
    std::string name;
    Tensor<S> tensor;
  };
  std::vector<Item> items;

  std::size_t total_params() const {
    std::size_t n = 0;
    for (const Item& it : items) n += it.tensor.numel();
    return n;
  }
  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].name == name) return static_cast<int>(i);
    }
    return -1;
  }
  template <typename T>
  ParameterSet<T> cast() const {
    ParameterSet<T> out;
    for (const Item& it : items) out.items.push_back({it.name, it.tensor.template cast<T>()});
    return out;
  }
};

template <typename S>
struct BaseModel {
  BaseModelSpec spec;
  ParameterSet<S> params;
};

template <typename S>
struct MetaModel {
  MetaModelSpec spec;
  ParameterSet<S> params;
};

/// Deterministic (spec, seed) -> parameters. He-uniform weights, zero biases.
template <typename S>
BaseModel<S> build_base(const BaseModelSpec& spec);
template <typename S>
MetaModel<S> build_meta(const MetaModelSpec& spec);

/// Records the model's forward pass on `g`. Inputs are venc-normalized
/// velocity [D,H,W,3] and magnitude [D,H,W,1]; output is normalized
/// [2D,2H,2W,3]. param_nodes[i] is the graph node of params.items[i].
template <typename S>
struct ForwardHandle {
  int output = -1;
  std::vector<int> param_nodes;
};

template <typename S>
ForwardHandle<S> base_forward(Graph<S>& g, const BaseModel<S>& m, int vel_norm, int mag);
template <typename S>
ForwardHandle<S> meta_forward(Graph<S>& g, const MetaModel<S>& m, int stacked_norm);

/// Whole normalized pipeline on physical inputs: network sees v/venc, output
/// is rescaled by venc. lr_vel [D,H,W,3] (cm/s), lr_mag [D,H,W,1].
template <typename S>
Tensor<S> forward_sr(const BaseModel<S>& m, const Tensor<S>& lr_vel, const Tensor<S>& lr_mag,
                     S venc);

/// F4DW weight container + plain-text ".spec" sidecar.
void save_params(const std::string& path, const ParameterSet<float>& params);
ParameterSet<float> load_params(const std::string& path);

/// Validates names/shapes against a freshly built spec ("spec-mismatch").
void save_base_model(const std::string& path, const BaseModel<float>& m);
BaseModel<float> load_base_model(const std::string& path);
void save_meta_model(const std::string& path, const MetaModel<float>& m);
MetaModel<float> load_meta_model(const std::string& path);

/// Central-difference verification of the reverse-mode gradients on a
/// double-precision model instance, scalar objective sum(output).
struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  int n_checked = 0;
};

GradCheckReport grad_check(const BaseModel<double>& m, const Tensor<double>& vel_norm,
                           const Tensor<double>& mag, int n_samples = 200,
                           double step = 1e-4, uint64_t seed = 0);

extern template struct ParameterSet<float>;
extern template struct ParameterSet<double>;
extern template BaseModel<float> build_base<float>(const BaseModelSpec&);
extern template BaseModel<double> build_base<double>(const BaseModelSpec&);
extern template MetaModel<float> build_meta<float>(const MetaModelSpec&);
extern template MetaModel<double> build_meta<double>(const MetaModelSpec&);
extern template ForwardHandle<float> base_forward<float>(Graph<float>&, const BaseModel<float>&, int, int);
extern template ForwardHandle<double> base_forward<double>(Graph<double>&, const BaseModel<double>&, int, int);
extern template ForwardHandle<float> meta_forward<float>(Graph<float>&, const MetaModel<float>&, int);
extern template ForwardHandle<double> meta_forward<double>(Graph<double>&, const MetaModel<double>&, int);
extern template Tensor<float> forward_sr<float>(const BaseModel<float>&, const Tensor<float>&, const Tensor<float>&, float);
extern template Tensor<double> forward_sr<double>(const BaseModel<double>&, const Tensor<double>&, const Tensor<double>&, double);

}  // namespace f4flow
