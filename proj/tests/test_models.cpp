#include "doctest.h"

#include <cstdio>
#include <filesystem>

#include "f4flow/models.hpp"
#include "f4flow/rng.hpp"

using namespace f4flow;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Tensor<float> random_tensor_f(std::vector<int> shape, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Tensor<float> t(std::move(shape));
  for (float& v : t.data) v = static_cast<float>(rng.uniform(-scale, scale));
  return t;
}

}  // namespace

TEST_CASE("base model maps (3+1)x12^3 to 3x24^3 for every block kind") {
  for (BlockKind kind : {BlockKind::residual, BlockKind::dense, BlockKind::csp}) {
    CAPTURE(to_string(kind));
    BaseModelSpec spec;
    spec.channels = 8;
    spec.n_blocks_low = 1;
    spec.n_blocks_high = 1;
    spec.block = kind;
    spec.seed = 5;
    BaseModel<float> m = build_base<float>(spec);
    Tensor<float> vel = random_tensor_f({12, 12, 12, 3}, 1, 50.0);
    Tensor<float> mag = random_tensor_f({12, 12, 12, 1}, 2, 1.0);
    Tensor<float> out = forward_sr(m, vel, mag, 100.0f);
    CHECK(out.shape == std::vector<int>{24, 24, 24, 3});
  }
}

TEST_CASE("default base model parameter count matches the closed form") {
  // conv c_i->c_o: 27*ci*co + co. Defaults: C=16, residual, 4 low + 4 high.
  //   in_phase 3->16: 1312      in_mag 1->16: 448
  //   8 residual blocks, 2 convs 16->16 each: 16 * 6928 = 110848
  //   up 16->16: 6928
  //   3 heads: conv 16->16 (6928) + out 16->1 (433) = 3 * 7361 = 22083
  const std::size_t expected = 1312 + 448 + 110848 + 6928 + 22083;
  BaseModel<float> m = build_base<float>(BaseModelSpec{});
  CHECK(m.params.total_params() == expected);
  CHECK(expected == 141619);
}

TEST_CASE("build determinism: same seed, identical parameters") {
  BaseModelSpec spec;
  spec.seed = 77;
  BaseModel<float> a = build_base<float>(spec);
  BaseModel<float> b = build_base<float>(spec);
  REQUIRE(a.params.items.size() == b.params.items.size());
  for (std::size_t i = 0; i < a.params.items.size(); ++i) {
    CHECK(a.params.items[i].name == b.params.items[i].name);
    CHECK(a.params.items[i].tensor.data == b.params.items[i].tensor.data);
  }
  spec.seed = 78;
  BaseModel<float> c = build_base<float>(spec);
  CHECK(a.params.items[0].tensor.data != c.params.items[0].tensor.data);
}

TEST_CASE("venc normalization equivariance is exact for power-of-two scales") {
  BaseModelSpec spec;
  spec.channels = 8;
  spec.n_blocks_low = 1;
  spec.n_blocks_high = 1;
  spec.seed = 3;
  BaseModel<float> m = build_base<float>(spec);
  Tensor<float> vel = random_tensor_f({12, 12, 12, 3}, 9, 40.0);
  Tensor<float> mag = random_tensor_f({12, 12, 12, 1}, 10, 1.0);
  Tensor<float> out1 = forward_sr(m, vel, mag, 100.0f);

  Tensor<float> vel2 = vel;
  for (float& v : vel2.data) v *= 2.0f;
  Tensor<float> out2 = forward_sr(m, vel2, mag, 200.0f);
  for (std::size_t i = 0; i < out1.data.size(); ++i) {
    CHECK(out2.data[i] == 2.0f * out1.data[i]);
  }
}

TEST_CASE("all-zero input with zero biases yields all-zero output") {
  for (BlockKind kind : {BlockKind::residual, BlockKind::dense, BlockKind::csp}) {
    BaseModelSpec spec;
    spec.channels = 8;
    spec.n_blocks_low = 1;
    spec.n_blocks_high = 1;
    spec.block = kind;
    BaseModel<float> m = build_base<float>(spec);  // biases are zero-initialized
    Tensor<float> vel({12, 12, 12, 3});
    Tensor<float> mag({12, 12, 12, 1});
    Tensor<float> out = forward_sr(m, vel, mag, 100.0f);
    for (float v : out.data) CHECK(v == 0.0f);
  }
}

TEST_CASE("untrained seeded model regression values") {
  // Frozen from the deterministic build (seed 4242, input seed 1000); guards
  // against silent architecture or initialization drift. Tolerance covers
  // FMA-contraction differences across compilers.
  BaseModelSpec spec;
  spec.channels = 8;
  spec.n_blocks_low = 2;
  spec.n_blocks_high = 2;
  spec.seed = 4242;
  BaseModel<float> m = build_base<float>(spec);
  Tensor<float> vel = random_tensor_f({12, 12, 12, 3}, 1000, 60.0);
  Tensor<float> mag = random_tensor_f({12, 12, 12, 1}, 1001, 1.0);
  Tensor<float> out = forward_sr(m, vel, mag, 150.0f);

  double sum = 0.0, sum_sq = 0.0;
  for (float v : out.data) {
    sum += v;
    sum_sq += static_cast<double>(v) * v;
  }
  // golden values recorded once; see tools/record_golden in git history
  CHECK(sum == doctest::Approx(-6011.2175902).epsilon(1e-5));
  CHECK(sum_sq == doctest::Approx(10118.412885).epsilon(1e-5));
}

TEST_CASE("meta model structure") {
  MetaModelSpec spec;
  spec.n_base = 2;
  spec.channels = 16;
  spec.seed = 11;
  MetaModel<float> m = build_meta<float>(spec);

  SUBCASE("input 3n channels at 24^3 maps to 3 channels") {
    Graph<float> g;
    const int in = g.constant(random_tensor_f({24, 24, 24, 6}, 12, 0.5));
    ForwardHandle<float> h = meta_forward(g, m, in);
    CHECK(g.value(h.output).shape == std::vector<int>{24, 24, 24, 3});
    CHECK(g.op_count(Graph<float>::Op::conv3d) == 8);
  }

  SUBCASE("zero final layer forces zero output") {
    const int wi = m.params.index_of("layer7.w");
    const int bi = m.params.index_of("layer7.b");
    REQUIRE(wi >= 0);
    for (float& v : m.params.items[wi].tensor.data) v = 0.0f;
    for (float& v : m.params.items[bi].tensor.data) v = 0.0f;
    Graph<float> g;
    const int in = g.constant(random_tensor_f({24, 24, 24, 6}, 13, 0.5));
    ForwardHandle<float> h = meta_forward(g, m, in);
    for (float v : g.value(h.output).data) CHECK(v == 0.0f);
  }

  SUBCASE("n_base below 2 is rejected") {
    MetaModelSpec bad;
    bad.n_base = 1;
    CHECK_THROWS_AS(build_meta<float>(bad), Error);
  }
}

TEST_CASE("F4DW save/load round-trip and spec validation") {
  const std::string path = temp_path("model_roundtrip.f4w");
  BaseModelSpec spec;
  spec.channels = 8;
  spec.n_blocks_low = 1;
  spec.n_blocks_high = 2;
  spec.block = BlockKind::dense;
  spec.seed = 21;
  BaseModel<float> m = build_base<float>(spec);
  save_base_model(path, m);

  SUBCASE("round-trip is bit exact and order-preserving") {
    BaseModel<float> loaded = load_base_model(path);
    CHECK(loaded.spec == spec);
    REQUIRE(loaded.params.items.size() == m.params.items.size());
    for (std::size_t i = 0; i < m.params.items.size(); ++i) {
      CHECK(loaded.params.items[i].name == m.params.items[i].name);
      CHECK(loaded.params.items[i].tensor.data == m.params.items[i].tensor.data);
    }
  }

  SUBCASE("loading weights into a mismatched spec fails") {
    BaseModelSpec other = spec;
    other.channels = 16;
    BaseModel<float> wrong = build_base<float>(other);
    CHECK_THROWS_WITH_AS(
        [&] {
          ParameterSet<float> loaded = load_params(path);
          require(loaded.items.size() == wrong.params.items.size() &&
                      loaded.items[0].tensor.shape == wrong.params.items[0].tensor.shape,
                  "spec-mismatch", "loaded weights do not match the requested spec");
        }(),
        doctest::Contains("spec-mismatch"), Error);
  }

  std::remove(path.c_str());
  std::remove((path + ".spec").c_str());
}

TEST_CASE("grad_check validates a small double-precision model") {
  BaseModelSpec spec;
  spec.channels = 8;
  spec.n_blocks_low = 1;
  spec.n_blocks_high = 1;
  spec.seed = 31;
  BaseModel<double> m = build_base<double>(spec);
  Rng rng(32);
  Tensor<double> vel({4, 4, 4, 3});
  for (double& v : vel.data) v = rng.uniform(-0.8, 0.8);
  Tensor<double> mag({4, 4, 4, 1});
  for (double& v : mag.data) v = rng.uniform(0.1, 1.0);
  GradCheckReport rep = grad_check(m, vel, mag, 60, 1e-4, 1);
  CAPTURE(rep.worst_param);
  CHECK(rep.max_rel_error < 1e-4);
  CHECK(rep.n_checked == 60);
  CHECK(!rep.worst_param.empty());
}
