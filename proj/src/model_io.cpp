#include "graphite/model_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "graphite/errors.hpp"

namespace graphite::gnn {

namespace {

constexpr std::array<char, 8> kMagic{'G', 'R', 'P', 'H', 'T', 'M', 'D', 'L'};
// Guards against absurd allocations from corrupt headers.
constexpr std::uint64_t kMaxTensorElements = std::uint64_t{1} << 32;

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (std::size_t i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (std::size_t i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 4);
}

void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw DataError("model file truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw DataError("model file truncated");
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v |= std::uint32_t{b[i]} << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::uint8_t get_u8(std::istream& in) {
  char c = 0;
  if (!in.get(c)) throw DataError("model file truncated");
  return static_cast<std::uint8_t>(c);
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
  const auto& c = model.config;
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kModelFormatVersion);
  put_u64(out, c.num_layers);
  put_u64(out, c.hidden_dim);
  put_f64(out, c.w0);
  put_f64(out, c.wX);
  put_f64(out, c.tau);
  put_f64(out, c.dropout);
  put_f64(out, c.learning_rate);
  put_u64(out, c.steps);
  put_u64(out, c.seed);
  put_u8(out, static_cast<std::uint8_t>(c.feature_mode));
  put_u8(out, static_cast<std::uint8_t>(c.metric));
  const auto tensors = model.params.tensors();
  put_u64(out, tensors.size());
  for (const auto* t : tensors) {
    put_u64(out, static_cast<std::uint64_t>(t->rows()));
    put_u64(out, static_cast<std::uint64_t>(t->cols()));
    for (Eigen::Index i = 0; i < t->size(); ++i) put_f64(out, t->data()[i]);
  }
}

Model read_model(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw DataError("not a graphite model file");
  const auto version = get_u32(in);
  if (version != kModelFormatVersion) {
    throw DataError("unsupported model format version " + std::to_string(version));
  }
  Model m;
  auto& c = m.config;
  c.num_layers = get_u64(in);
  c.hidden_dim = get_u64(in);
  c.w0 = get_f64(in);
  c.wX = get_f64(in);
  c.tau = get_f64(in);
  c.dropout = get_f64(in);
  c.learning_rate = get_f64(in);
  c.steps = get_u64(in);
  c.seed = get_u64(in);
  const auto mode = get_u8(in);
  const auto metric = get_u8(in);
  if (mode > 2 || metric > 1) throw DataError("model file has an invalid config echo");
  c.feature_mode = static_cast<FeatureMode>(mode);
  c.metric = static_cast<Metric>(metric);

  const auto count = get_u64(in);
  if (count != 4 + 6 * c.num_layers) throw DataError("model file tensor count does not match num_layers");
  m.params.layers.resize(c.num_layers);
  for (auto* t : m.params.tensors()) {
    const auto rows = get_u64(in);
    const auto cols = get_u64(in);
    if (rows * cols > kMaxTensorElements) throw DataError("model file tensor too large");
    t->resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] = get_f64(in);
  }
  return m;
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path);
  write_model(out, model);
  if (!out) throw DataError("failed writing model file " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path);
  return read_model(in);
}

}  // namespace graphite::gnn
