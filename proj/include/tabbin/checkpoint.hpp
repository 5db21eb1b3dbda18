#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabbin/mlp.hpp"

namespace tabbin {

inline constexpr char kCheckpointMagic[4] = {'T', 'B', 'C', 'K'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

// Layout, all integers and doubles little-endian:
//   "TBCK" | version u16 | network count u16
//   per network: layer count u32
//   per layer:   rows u32 | cols u32 | rows*cols f64 weights (row-major)
//                | cols f64 biases
// Weights round-trip bit-exactly.
void save_checkpoint(const std::string& path,
                     const std::vector<const std::vector<DenseLayer>*>& networks);

// Shapes must match the already-constructed networks; mismatches report the
// offending network and layer.
void load_checkpoint(const std::string& path,
                     const std::vector<std::vector<DenseLayer>*>& networks);

}  // namespace tabbin
