#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "aeunmix/nn/network.hpp"

namespace aeunmix::nn {

struct CheckpointInfo {
  Architecture architecture = Architecture::Basic;
  std::size_t bands = 0;
  std::size_t endmembers = 0;
  std::size_t n1 = 1;
  NetworkOptions options;
  std::optional<InitScheme> init_scheme;
  std::uint64_t init_seed = 0;
  std::uint64_t run_seed = 0;
};

// `<stem>.json` header with layer specs, dims and seeds, plus `<stem>.f64`:
// every parameter then every buffer, column-major little-endian float64.
void save_checkpoint(const Network& net, const CheckpointInfo& info, const std::filesystem::path& header_path);

struct LoadedCheckpoint {
  Network network;
  CheckpointInfo info;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& header_path);

}  // namespace aeunmix::nn
