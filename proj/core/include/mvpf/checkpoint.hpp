#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mvpf/nn.hpp"

namespace mvpf {

// Checkpoint container. Layout, all integers little-endian:
//   magic "MVPF" | version u32 | records...
// record: name_len u32 | name bytes | rank u64 | dims u64 each | f32 values.
// Values are stored as float32; a save/load/save cycle is byte-identical.

constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ParamStore& store);

// Fills an existing store; every stored record must match a param with the
// same name and shape, and every param must be present.
void load_checkpoint(const std::string& path, ParamStore& store);

// Raw records in file order, for inspection.
std::map<std::string, std::vector<float>> read_checkpoint_raw(const std::string& path);

}  // namespace mvpf
