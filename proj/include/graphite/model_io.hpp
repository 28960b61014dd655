#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "graphite/trainer.hpp"

namespace graphite::gnn {

// Binary model container, all integers and reals little-endian:
//   magic "GRPHTMDL", u32 version,
//   config echo (u64 num_layers, u64 hidden_dim, f64 w0, f64 wX, f64 tau,
//   f64 dropout, f64 learning_rate, u64 steps, u64 seed, u8 feature_mode,
//   u8 metric),
//   u64 tensor count, then per tensor in declaration order:
//   u64 rows, u64 cols, rows·cols f64 values in row-major order.
inline constexpr std::uint32_t kModelFormatVersion = 1;

void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace graphite::gnn
