#include "bdns/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

#include "bdns/errors.hpp"

namespace bdns {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b, 4);
}

void put_f64(std::ostream& os, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b, 8);
}

void need(std::istream& is) {
  if (!is) throw ArgumentError("checkpoint: truncated stream");
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  need(is);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  need(is);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

void write_checkpoint(std::ostream& os, const PeriodicGrid& grid, const State& state) {
  check_state(state, grid);
  os.write("BDNS", 4);
  put_u32(os, kCheckpointVersion);
  put_u32(os, static_cast<std::uint32_t>(grid.dim));
  for (int a = 0; a < grid.dim; ++a) put_u32(os, static_cast<std::uint32_t>(grid.sizes[a]));
  for (int a = 0; a < grid.dim; ++a) put_f64(os, grid.lengths[a]);
  put_f64(os, state.t);
  for (double v : state.rho) put_f64(os, v);
  for (const auto& c : state.mom)
    for (double v : c) put_f64(os, v);
}

void write_checkpoint(const std::string& path, const PeriodicGrid& grid, const State& state) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ArgumentError("checkpoint: cannot open " + path + " for writing");
  write_checkpoint(os, grid, state);
  if (!os) throw ArgumentError("checkpoint: write failed for " + path);
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  need(is);
  if (std::string(magic, 4) != "BDNS") throw ArgumentError("checkpoint: bad magic");
  const auto version = get_u32(is);
  if (version != kCheckpointVersion) throw ArgumentError("checkpoint: unsupported version");
  const auto dim = get_u32(is);
  if (dim != 1 && dim != 2) throw ArgumentError("checkpoint: bad dimension");
  std::array<int, 2> sizes{1, 1};
  std::array<double, 2> lengths{1.0, 1.0};
  for (std::uint32_t a = 0; a < dim; ++a) sizes[a] = static_cast<int>(get_u32(is));
  for (std::uint32_t a = 0; a < dim; ++a) lengths[a] = get_f64(is);
  Checkpoint cp;
  cp.grid = dim == 1 ? PeriodicGrid::line(sizes[0], lengths[0])
                     : PeriodicGrid::square(sizes[0], sizes[1], lengths[0], lengths[1]);
  cp.state = make_state(cp.grid);
  cp.state.t = get_f64(is);
  for (double& v : cp.state.rho) v = get_f64(is);
  for (auto& c : cp.state.mom)
    for (double& v : c) v = get_f64(is);
  return cp;
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("checkpoint: cannot open " + path);
  return read_checkpoint(is);
}

}  // namespace bdns
