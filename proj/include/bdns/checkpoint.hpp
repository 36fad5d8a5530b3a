/// Binary state checkpoints.
///
/// Layout, all little-endian:
///   "BDNS" | u32 version | u32 dim | u32 sizes[dim] | f64 lengths[dim] | f64 time
///   | f64 rho[cells] | f64 mom_0[cells] ... f64 mom_{dim-1}[cells]
/// Arrays are in grid storage order (axis 0 slowest).
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "bdns/grid.hpp"

namespace bdns {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  PeriodicGrid grid;
  State state;
};

void write_checkpoint(std::ostream& os, const PeriodicGrid& grid, const State& state);
void write_checkpoint(const std::string& path, const PeriodicGrid& grid, const State& state);
/// Throws ArgumentError on bad magic, unknown version or truncated data.
Checkpoint read_checkpoint(std::istream& is);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace bdns
