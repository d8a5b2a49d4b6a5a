#include "f4flow/models.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "f4flow/rng.hpp"

namespace f4flow {

const char* to_string(BlockKind k) {
  switch (k) {
    case BlockKind::residual: return "residual";
    case BlockKind::dense: return "dense";
    case BlockKind::csp: return "csp";
  }
  fail("bad-argument", "unknown block kind");
}

const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky: return "leaky";
  }
  fail("bad-argument", "unknown activation");
}

BlockKind block_kind_from_string(const std::string& s) {
  if (s == "residual") return BlockKind::residual;
  if (s == "dense") return BlockKind::dense;
  if (s == "csp") return BlockKind::csp;
  fail("bad-argument", "unknown block kind '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "leaky") return Activation::leaky;
  fail("bad-argument", "unknown activation '" + s + "'");
}

void BaseModelSpec::validate() const {
  require(channels >= 4, "bad-argument", "channels must be >= 4");
  require(n_blocks_low >= 1 && n_blocks_high >= 1, "bad-argument", "block counts must be >= 1");
  if (block == BlockKind::csp) {
    require(channels % 2 == 0, "bad-argument", "csp blocks need an even channel count");
  }
}

void MetaModelSpec::validate() const {
  require(n_base >= 2, "bad-argument", "meta model needs n_base >= 2");
  require(channels >= 4, "bad-argument", "channels must be >= 4");
}

namespace {

constexpr float kLeakySlope = 0.2f;

/// Builder that records parameters in a stable order and initializes conv
/// weights He-uniform over fan_in = 27*Ci, biases zero.
template <typename S>
class ParamBuilder {
 public:
  explicit ParamBuilder(uint64_t seed) : rng_(seed) {}

  void conv(ParameterSet<S>& ps, const std::string& name, int ci, int co) {
    Tensor<S> w({3, 3, 3, ci, co});
    const double bound = std::sqrt(6.0 / (27.0 * ci));
    for (S& v : w.data) v = static_cast<S>(rng_.uniform(-bound, bound));
    ps.items.push_back({name + ".w", std::move(w)});
    ps.items.push_back({name + ".b", Tensor<S>({co})});
  }

 private:
  Rng rng_;
};

template <typename S>
void build_block_params(ParamBuilder<S>& b, ParameterSet<S>& ps, const std::string& prefix,
                        BlockKind kind, int c) {
  switch (kind) {
    case BlockKind::residual:
      b.conv(ps, prefix + ".conv1", c, c);
      b.conv(ps, prefix + ".conv2", c, c);
      return;
    case BlockKind::dense:
      b.conv(ps, prefix + ".conv1", c, c);
      b.conv(ps, prefix + ".conv2", 2 * c, c);
      b.conv(ps, prefix + ".proj", 3 * c, c);
      return;
    case BlockKind::csp:
      b.conv(ps, prefix + ".res.conv1", c / 2, c / 2);
      b.conv(ps, prefix + ".res.conv2", c / 2, c / 2);
      b.conv(ps, prefix + ".proj", c, c);
      return;
  }
  fail("bad-argument", "unknown block kind");
}

}  // namespace

template <typename S>
BaseModel<S> build_base(const BaseModelSpec& spec) {
  spec.validate();
  BaseModel<S> m;
  m.spec = spec;
  ParamBuilder<S> b(spec.seed);
  const int c = spec.channels;
  b.conv(m.params, "in_phase", 3, c);
  b.conv(m.params, "in_mag", 1, c);
  for (int i = 0; i < spec.n_blocks_low; ++i) {
    build_block_params(b, m.params, "low" + std::to_string(i), spec.block, c);
  }
  b.conv(m.params, "up", c, c);
  for (int i = 0; i < spec.n_blocks_high; ++i) {
    build_block_params(b, m.params, "high" + std::to_string(i), spec.block, c);
  }
  for (const char* head : {"head_x", "head_y", "head_z"}) {
    b.conv(m.params, std::string(head) + ".conv", c, c);
    b.conv(m.params, std::string(head) + ".out", c, 1);
  }
  return m;
}

template <typename S>
MetaModel<S> build_meta(const MetaModelSpec& spec) {
  spec.validate();
  MetaModel<S> m;
  m.spec = spec;
  ParamBuilder<S> b(spec.seed);
  b.conv(m.params, "layer0", 3 * spec.n_base, spec.channels);
  for (int i = 1; i < MetaModelSpec::kLayers - 1; ++i) {
    b.conv(m.params, "layer" + std::to_string(i), spec.channels, spec.channels);
  }
  b.conv(m.params, "layer7", spec.channels, 3);
  return m;
}

namespace {

/// Tracks params registered on a graph so each forward records them in
/// ParameterSet order.
template <typename S>
class GraphWiring {
 public:
  GraphWiring(Graph<S>& g, const ParameterSet<S>& ps, std::vector<int>& nodes,
              Activation act)
      : g_(g), ps_(ps), nodes_(nodes), act_(act) {
    nodes_.assign(ps.items.size(), -1);
  }

  int p(const std::string& name) {
    const int idx = ps_.index_of(name);
    require(idx >= 0, "bad-argument", "unknown parameter '" + name + "'");
    if (nodes_[idx] < 0) nodes_[idx] = g_.param(&ps_.items[idx].tensor, name);
    return nodes_[idx];
  }

  int conv(int x, const std::string& name) { return g_.conv3d(x, p(name + ".w"), p(name + ".b")); }

  int act(int x) {
    return act_ == Activation::relu ? g_.relu(x) : g_.leaky_relu(x, S(kLeakySlope));
  }

  int conv_act(int x, const std::string& name) { return act(conv(x, name)); }

  int block(int x, const std::string& prefix, BlockKind kind, int channels) {
    switch (kind) {
      case BlockKind::residual: {
        int h = conv_act(x, prefix + ".conv1");
        h = conv(h, prefix + ".conv2");
        return g_.add(x, h);
      }
      case BlockKind::dense: {
        const int s1 = conv_act(x, prefix + ".conv1");
        const int f1 = g_.concat_channels(x, s1);
        const int s2 = conv_act(f1, prefix + ".conv2");
        const int f2 = g_.concat_channels(f1, s2);
        return conv(f2, prefix + ".proj");
      }
      case BlockKind::csp: {
        const int half = channels / 2;
        const int x1 = g_.slice_channels(x, 0, half);
        const int x2 = g_.slice_channels(x, half, channels);
        int h = conv_act(x1, prefix + ".res.conv1");
        h = conv(h, prefix + ".res.conv2");
        const int y1 = g_.add(x1, h);
        return conv(g_.concat_channels(y1, x2), prefix + ".proj");
      }
    }
    fail("bad-argument", "unknown block kind");
  }

 private:
  Graph<S>& g_;
  const ParameterSet<S>& ps_;
  std::vector<int>& nodes_;
  Activation act_;
};

}  // namespace

template <typename S>
ForwardHandle<S> base_forward(Graph<S>& g, const BaseModel<S>& m, int vel_norm, int mag) {
  const BaseModelSpec& spec = m.spec;
  ForwardHandle<S> h;
  GraphWiring<S> w(g, m.params, h.param_nodes, spec.activation);

  int x = g.add(w.conv_act(vel_norm, "in_phase"), w.conv_act(mag, "in_mag"));
  for (int i = 0; i < spec.n_blocks_low; ++i) {
    x = w.block(x, "low" + std::to_string(i), spec.block, spec.channels);
  }
  x = g.upsample2_trilinear(x);
  x = w.conv_act(x, "up");
  for (int i = 0; i < spec.n_blocks_high; ++i) {
    x = w.block(x, "high" + std::to_string(i), spec.block, spec.channels);
  }
  const int hx = w.conv(w.conv_act(x, "head_x.conv"), "head_x.out");
  const int hy = w.conv(w.conv_act(x, "head_y.conv"), "head_y.out");
  const int hz = w.conv(w.conv_act(x, "head_z.conv"), "head_z.out");
  h.output = g.concat_channels(g.concat_channels(hx, hy), hz);
  return h;
}

template <typename S>
ForwardHandle<S> meta_forward(Graph<S>& g, const MetaModel<S>& m, int stacked_norm) {
  require(g.value(stacked_norm).shape.size() == 4 &&
              g.value(stacked_norm).shape[3] == 3 * m.spec.n_base,
          "bad-argument", "meta input must have 3*n_base channels");
  ForwardHandle<S> h;
  GraphWiring<S> w(g, m.params, h.param_nodes, m.spec.activation);
  int x = stacked_norm;
  for (int i = 0; i < MetaModelSpec::kLayers - 1; ++i) {
    x = w.conv_act(x, "layer" + std::to_string(i));
  }
  h.output = w.conv(x, "layer7");
  return h;
}

template <typename S>
Tensor<S> forward_sr(const BaseModel<S>& m, const Tensor<S>& lr_vel, const Tensor<S>& lr_mag,
                     S venc) {
  require(venc > S(0), "bad-argument", "venc must be positive");
  require(lr_vel.shape.size() == 4 && lr_vel.shape[3] == 3, "bad-argument",
          "lr_vel must be [D,H,W,3]");
  require(all_finite(lr_vel) && all_finite(lr_mag), "non-finite", "forward_sr input not finite");
  Graph<S> g;
  const int vel = g.scale(g.constant(lr_vel), S(1) / venc);
  const int mag = g.constant(lr_mag);
  ForwardHandle<S> h = base_forward(g, m, vel, mag);
  const int out = g.scale(h.output, venc);
  return g.value(out);
}

// ---------------------------------------------------------------------------
// F4DW serialization

namespace {

constexpr char kMagic[4] = {'F', '4', 'D', 'W'};
constexpr uint32_t kVersion = 1;

void write_spec_sidecar(const std::string& path, const std::string& line) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp);
    require(f.good(), "io", "cannot write '" + tmp + "'");
    f << line << "\n";
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, "io", "rename failed for '" + path + "'");
}

std::map<std::string, std::string> read_spec_sidecar(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "io", "cannot read '" + path + "'");
  std::string line;
  std::getline(f, line);
  std::map<std::string, std::string> kv;
  std::istringstream ss(line);
  std::string token;
  while (ss >> token) {
    const auto eq = token.find('=');
    require(eq != std::string::npos, "bad-argument", "malformed spec line in '" + path + "'");
    kv[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return kv;
}

}  // namespace

void save_params(const std::string& path, const ParameterSet<float>& params) {
  const std::string tmp = path + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "wb");
  require(f != nullptr, "io", "cannot open '" + tmp + "' for writing");
  auto put = [&](const void* p, std::size_t n) {
    if (std::fwrite(p, 1, n, f) != n) {
      std::fclose(f);
      std::remove(tmp.c_str());
      fail("io", "short write to '" + tmp + "'");
    }
  };
  put(kMagic, 4);
  uint32_t v = kVersion;
  put(&v, 4);
  uint32_t count = static_cast<uint32_t>(params.items.size());
  put(&count, 4);
  for (const auto& item : params.items) {
    uint16_t name_len = static_cast<uint16_t>(item.name.size());
    put(&name_len, 2);
    put(item.name.data(), name_len);
    uint8_t ndim = static_cast<uint8_t>(item.tensor.shape.size());
    put(&ndim, 1);
    for (int d : item.tensor.shape) {
      uint32_t dim = static_cast<uint32_t>(d);
      put(&dim, 4);
    }
    put(item.tensor.data.data(), item.tensor.data.size() * sizeof(float));
  }
  require(std::fclose(f) == 0, "io", "close failed for '" + tmp + "'");
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, "io", "rename failed for '" + path + "'");
}

ParameterSet<float> load_params(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  require(f != nullptr, "io", "cannot open '" + path + "'");
  auto get = [&](void* p, std::size_t n) {
    if (std::fread(p, 1, n, f) != n) {
      std::fclose(f);
      fail("truncated", "unexpected end of '" + path + "'");
    }
  };
  char magic[4];
  get(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    std::fclose(f);
    fail("bad-magic", "'" + path + "' is not an F4DW file");
  }
  uint32_t version;
  get(&version, 4);
  if (version != kVersion) {
    std::fclose(f);
    fail("bad-version", "unsupported F4DW version");
  }
  uint32_t count;
  get(&count, 4);
  ParameterSet<float> ps;
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t name_len;
    get(&name_len, 2);
    std::string name(name_len, '\0');
    get(name.data(), name_len);
    uint8_t ndim;
    get(&ndim, 1);
    std::vector<int> shape(ndim);
    for (uint8_t d = 0; d < ndim; ++d) {
      uint32_t dim;
      get(&dim, 4);
      shape[d] = static_cast<int>(dim);
    }
    Tensor<float> t(shape);
    get(t.data.data(), t.data.size() * sizeof(float));
    ps.items.push_back({std::move(name), std::move(t)});
  }
  std::fclose(f);
  return ps;
}

namespace {

void load_into(ParameterSet<float>& dst, const std::string& path) {
  ParameterSet<float> loaded = load_params(path);
  require(loaded.items.size() == dst.items.size(), "spec-mismatch",
          "'" + path + "' has " + std::to_string(loaded.items.size()) + " tensors, spec needs " +
              std::to_string(dst.items.size()));
  for (std::size_t i = 0; i < dst.items.size(); ++i) {
    require(loaded.items[i].name == dst.items[i].name, "spec-mismatch",
            "tensor " + std::to_string(i) + " is '" + loaded.items[i].name + "', spec needs '" +
                dst.items[i].name + "'");
    require(loaded.items[i].tensor.shape == dst.items[i].tensor.shape, "spec-mismatch",
            "shape mismatch for '" + loaded.items[i].name + "'");
    dst.items[i].tensor = std::move(loaded.items[i].tensor);
  }
}

}  // namespace

void save_base_model(const std::string& path, const BaseModel<float>& m) {
  save_params(path, m.params);
  std::ostringstream line;
  line << "kind=base channels=" << m.spec.channels << " low=" << m.spec.n_blocks_low
       << " high=" << m.spec.n_blocks_high << " block=" << to_string(m.spec.block)
       << " act=" << to_string(m.spec.activation) << " seed=" << m.spec.seed;
  write_spec_sidecar(path + ".spec", line.str());
}

BaseModel<float> load_base_model(const std::string& path) {
  auto kv = read_spec_sidecar(path + ".spec");
  require(kv.count("kind") && kv["kind"] == "base", "spec-mismatch",
          "'" + path + "' is not a base model");
  BaseModelSpec spec;
  spec.channels = std::stoi(kv.at("channels"));
  spec.n_blocks_low = std::stoi(kv.at("low"));
  spec.n_blocks_high = std::stoi(kv.at("high"));
  spec.block = block_kind_from_string(kv.at("block"));
  spec.activation = activation_from_string(kv.at("act"));
  spec.seed = std::stoull(kv.at("seed"));
  BaseModel<float> m = build_base<float>(spec);
  load_into(m.params, path);
  return m;
}

void save_meta_model(const std::string& path, const MetaModel<float>& m) {
  save_params(path, m.params);
  std::ostringstream line;
  line << "kind=meta n_base=" << m.spec.n_base << " channels=" << m.spec.channels
       << " act=" << to_string(m.spec.activation) << " seed=" << m.spec.seed;
  write_spec_sidecar(path + ".spec", line.str());
}

MetaModel<float> load_meta_model(const std::string& path) {
  auto kv = read_spec_sidecar(path + ".spec");
  require(kv.count("kind") && kv["kind"] == "meta", "spec-mismatch",
          "'" + path + "' is not a meta model");
  MetaModelSpec spec;
  spec.n_base = std::stoi(kv.at("n_base"));
  spec.channels = std::stoi(kv.at("channels"));
  spec.activation = activation_from_string(kv.at("act"));
  spec.seed = std::stoull(kv.at("seed"));
  MetaModel<float> m = build_meta<float>(spec);
  load_into(m.params, path);
  return m;
}

GradCheckReport grad_check(const BaseModel<double>& model, const Tensor<double>& vel_norm,
                           const Tensor<double>& mag, int n_samples, double step,
                           uint64_t seed) {
  // analytic gradients
  BaseModel<double> m = model;  // local copy: FD perturbs parameters in place
  std::vector<double> analytic;
  {
    Graph<double> g;
    ForwardHandle<double> h =
        base_forward(g, m, g.constant(vel_norm), g.constant(mag));
    g.backward(g.sum_all(h.output));
    for (std::size_t i = 0; i < m.params.items.size(); ++i) {
      const Tensor<double>& gr = g.grad(h.param_nodes[i]);
      analytic.insert(analytic.end(), gr.data.begin(), gr.data.end());
    }
  }

  auto objective = [&]() {
    Graph<double> g;
    ForwardHandle<double> h =
        base_forward(g, m, g.constant(vel_norm), g.constant(mag));
    return g.value(g.sum_all(h.output)).data[0];
  };

  // flatten offsets
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (item, offset_in_item)
  std::size_t total = 0;
  for (const auto& item : m.params.items) total += item.tensor.numel();
  require(total > 0, "bad-argument", "model has no parameters");

  Rng rng(seed);
  GradCheckReport rep;
  rep.n_checked = n_samples;
  for (int s = 0; s < n_samples; ++s) {
    const std::size_t flat = rng.uniform_index(total);
    std::size_t remaining = flat;
    std::size_t item_idx = 0;
    while (remaining >= m.params.items[item_idx].tensor.numel()) {
      remaining -= m.params.items[item_idx].tensor.numel();
      ++item_idx;
    }
    double& w = m.params.items[item_idx].tensor.data[remaining];
    const double saved = w;
    w = saved + step;
    const double up = objective();
    w = saved - step;
    const double down = objective();
    w = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[flat];
    const double rel = std::fabs(a - numeric) / (std::fabs(a) + std::fabs(numeric) + 1e-12);
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_param = m.params.items[item_idx].name + "[" + std::to_string(remaining) + "]";
    }
  }
  return rep;
}

template struct ParameterSet<float>;
template struct ParameterSet<double>;
template BaseModel<float> build_base<float>(const BaseModelSpec&);
template BaseModel<double> build_base<double>(const BaseModelSpec&);
template MetaModel<float> build_meta<float>(const MetaModelSpec&);
template MetaModel<double> build_meta<double>(const MetaModelSpec&);
template ForwardHandle<float> base_forward<float>(Graph<float>&, const BaseModel<float>&, int, int);
template ForwardHandle<double> base_forward<double>(Graph<double>&, const BaseModel<double>&, int, int);
template ForwardHandle<float> meta_forward<float>(Graph<float>&, const MetaModel<float>&, int);
template ForwardHandle<double> meta_forward<double>(Graph<double>&, const MetaModel<double>&, int);
template Tensor<float> forward_sr<float>(const BaseModel<float>&, const Tensor<float>&, const Tensor<float>&, float);
template Tensor<double> forward_sr<double>(const BaseModel<double>&, const Tensor<double>&, const Tensor<double>&, double);

}  // namespace f4flow
