#include "f4flow/volume.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

static_assert(std::endian::native == std::endian::little,
              "F4DV/F4DP/F4DW containers are little-endian; big-endian hosts are unsupported");

namespace f4flow {

const char* to_string(Compartment c) {
  switch (c) {
    case Compartment::tube_jet: return "tube-jet";
    case Compartment::branch_slow: return "branch-slow";
    case Compartment::cavity_vortex: return "cavity-vortex";
    case Compartment::dual_lumen: return "dual-lumen";
  }
  fail("bad-argument", "unknown compartment code");
}

Compartment compartment_from_string(const std::string& name) {
  if (name == "tube-jet") return Compartment::tube_jet;
  if (name == "branch-slow") return Compartment::branch_slow;
  if (name == "cavity-vortex") return Compartment::cavity_vortex;
  if (name == "dual-lumen") return Compartment::dual_lumen;
  fail("bad-argument", "unknown compartment '" + name + "'");
}

void FlowSample::validate() const {
  const VolumeGrid& g = velocity.grid;
  g.validate();
  require(magnitude.grid == g && mask.grid == g, "grid-mismatch",
          "FlowSample fields must share one grid");
  const std::size_t n = g.voxels();
  require(magnitude.values.size() == n && velocity.vx.size() == n && velocity.vy.size() == n &&
              velocity.vz.size() == n && mask.fluid.size() == n,
          "bad-argument", "field length does not match grid");
  float vmax = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    vmax = std::max({vmax, std::fabs(velocity.vx[i]), std::fabs(velocity.vy[i]),
                     std::fabs(velocity.vz[i])});
  }
  require(venc > vmax, "aliasing", "venc must exceed the maximum absolute velocity component");
}

namespace {

constexpr char kMagic[4] = {'F', '4', 'D', 'V'};
constexpr uint32_t kVersion = 1;

class FileWriter {
 public:
  explicit FileWriter(const std::string& path) : path_(path), tmp_(path + ".tmp") {
    f_ = std::fopen(tmp_.c_str(), "wb");
    require(f_ != nullptr, "io", "cannot open '" + tmp_ + "' for writing");
  }
  ~FileWriter() {
    if (f_ != nullptr) {
      std::fclose(f_);
      std::remove(tmp_.c_str());
    }
  }

  void bytes(const void* p, std::size_t n) {
    require(std::fwrite(p, 1, n, f_) == n, "io", "short write to '" + tmp_ + "'");
  }
  template <typename T>
  void pod(T v) {
    bytes(&v, sizeof(T));
  }

  /// fsync-free commit: close then rename over the destination.
  void commit() {
    require(std::fclose(f_) == 0, "io", "close failed for '" + tmp_ + "'");
    f_ = nullptr;
    std::error_code ec;
    std::filesystem::rename(tmp_, path_, ec);
    require(!ec, "io", "rename '" + tmp_ + "' -> '" + path_ + "' failed");
  }

 private:
  std::string path_, tmp_;
  std::FILE* f_ = nullptr;
};

class FileReader {
 public:
  explicit FileReader(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "rb");
    require(f_ != nullptr, "io", "cannot open '" + path + "'");
  }
  ~FileReader() {
    if (f_ != nullptr) std::fclose(f_);
  }

  void bytes(void* p, std::size_t n) {
    require(std::fread(p, 1, n, f_) == n, "truncated", "unexpected end of '" + path_ + "'");
  }
  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  bool at_eof() {
    int c = std::fgetc(f_);
    if (c == EOF) return true;
    std::ungetc(c, f_);
    return false;
  }

 private:
  std::string path_;
  std::FILE* f_ = nullptr;
};

void check_field(const NamedField& f, const VolumeGrid& grid) {
  require(!f.name.empty() && f.name.size() <= 255, "bad-argument",
          "field name must be 1..255 bytes");
  const std::size_t n = grid.voxels();
  std::visit(
      [&](const auto& field) {
        require(field.grid == grid, "grid-mismatch", "field '" + f.name + "' grid differs");
        using T = std::decay_t<decltype(field)>;
        if constexpr (std::is_same_v<T, ScalarField>) {
          require(field.values.size() == n, "bad-argument", "scalar length mismatch");
        } else if constexpr (std::is_same_v<T, VectorField>) {
          require(field.vx.size() == n && field.vy.size() == n && field.vz.size() == n,
                  "bad-argument", "vector length mismatch");
        } else {
          require(field.fluid.size() == n, "bad-argument", "mask length mismatch");
        }
      },
      f.data);
}

}  // namespace

void write_volume(const std::string& path, const std::vector<NamedField>& fields,
                  const VolumeGrid& grid) {
  grid.validate();
  require(fields.size() <= UINT16_MAX, "bad-argument", "too many fields");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    check_field(fields[i], grid);
    for (std::size_t j = i + 1; j < fields.size(); ++j) {
      require(fields[i].name != fields[j].name, "bad-argument",
              "duplicate field name '" + fields[i].name + "'");
    }
  }

  FileWriter w(path);
  w.bytes(kMagic, 4);
  w.pod<uint32_t>(kVersion);
  w.pod<uint32_t>(static_cast<uint32_t>(grid.nx));
  w.pod<uint32_t>(static_cast<uint32_t>(grid.ny));
  w.pod<uint32_t>(static_cast<uint32_t>(grid.nz));
  w.pod<float>(grid.dx);
  w.pod<uint16_t>(static_cast<uint16_t>(fields.size()));
  for (const NamedField& f : fields) {
    w.pod<uint16_t>(static_cast<uint16_t>(f.name.size()));
    w.bytes(f.name.data(), f.name.size());
    std::visit(
        [&](const auto& field) {
          using T = std::decay_t<decltype(field)>;
          if constexpr (std::is_same_v<T, ScalarField>) {
            w.pod<uint8_t>(0);
            w.bytes(field.values.data(), field.values.size() * sizeof(float));
          } else if constexpr (std::is_same_v<T, VectorField>) {
            w.pod<uint8_t>(1);
            w.bytes(field.vx.data(), field.vx.size() * sizeof(float));
            w.bytes(field.vy.data(), field.vy.size() * sizeof(float));
            w.bytes(field.vz.data(), field.vz.size() * sizeof(float));
          } else {
            w.pod<uint8_t>(2);
            w.bytes(field.fluid.data(), field.fluid.size());
          }
        },
        f.data);
  }
  w.commit();
}

std::pair<VolumeGrid, std::vector<NamedField>> read_volume(const std::string& path) {
  FileReader r(path);
  char magic[4];
  r.bytes(magic, 4);
  require(std::memcmp(magic, kMagic, 4) == 0, "bad-magic", "'" + path + "' is not an F4DV file");
  const uint32_t version = r.pod<uint32_t>();
  require(version == kVersion, "bad-version",
          "unsupported F4DV version " + std::to_string(version));
  VolumeGrid grid;
  grid.nx = static_cast<int>(r.pod<uint32_t>());
  grid.ny = static_cast<int>(r.pod<uint32_t>());
  grid.nz = static_cast<int>(r.pod<uint32_t>());
  grid.dx = r.pod<float>();
  grid.validate();
  const std::size_t n = grid.voxels();
  const uint16_t field_count = r.pod<uint16_t>();

  std::vector<NamedField> fields;
  fields.reserve(field_count);
  for (uint16_t i = 0; i < field_count; ++i) {
    const uint16_t name_len = r.pod<uint16_t>();
    std::string name(name_len, '\0');
    r.bytes(name.data(), name_len);
    const uint8_t kind = r.pod<uint8_t>();
    NamedField f;
    f.name = std::move(name);
    switch (kind) {
      case 0: {
        ScalarField s{grid, std::vector<float>(n)};
        r.bytes(s.values.data(), n * sizeof(float));
        f.data = std::move(s);
        break;
      }
      case 1: {
        VectorField v{grid, std::vector<float>(n), std::vector<float>(n), std::vector<float>(n)};
        r.bytes(v.vx.data(), n * sizeof(float));
        r.bytes(v.vy.data(), n * sizeof(float));
        r.bytes(v.vz.data(), n * sizeof(float));
        f.data = std::move(v);
        break;
      }
      case 2: {
        FluidMask m{grid, std::vector<uint8_t>(n)};
        r.bytes(m.fluid.data(), n);
        f.data = std::move(m);
        break;
      }
      default:
        fail("bad-version", "unknown field kind " + std::to_string(kind));
    }
    fields.push_back(std::move(f));
  }
  require(r.at_eof(), "io", "trailing bytes in '" + path + "'");
  return {grid, std::move(fields)};
}

void write_flow_sample(const std::string& path, const FlowSample& s) {
  s.validate();
  write_volume(path,
               {{"magnitude", s.magnitude}, {"velocity", s.velocity}, {"fluid", s.mask}},
               s.grid());
}

FlowSample read_flow_sample(const std::string& path, float venc, Compartment compartment,
                            int frame) {
  auto [grid, fields] = read_volume(path);
  FlowSample s;
  bool have_mag = false, have_vel = false, have_mask = false;
  for (NamedField& f : fields) {
    if (f.name == "magnitude") {
      s.magnitude = std::get<ScalarField>(std::move(f.data));
      have_mag = true;
    } else if (f.name == "velocity") {
      s.velocity = std::get<VectorField>(std::move(f.data));
      have_vel = true;
    } else if (f.name == "fluid") {
      s.mask = std::get<FluidMask>(std::move(f.data));
      have_mask = true;
    }
  }
  require(have_mag && have_vel && have_mask, "bad-argument",
          "'" + path + "' lacks magnitude/velocity/fluid fields");
  s.venc = venc;
  s.compartment = compartment;
  s.frame = frame;
  s.validate();
  return s;
}

}  // namespace f4flow
