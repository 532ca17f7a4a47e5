#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "perfquant/stnet/model.hpp"

// STN1 checkpoint: "STN1", u64 LE manifest length, JSON manifest (tensor
// names and shapes, normalisation, architecture flags), then every tensor's
// values as LE float64 in manifest order.
namespace perfquant::stnet {

std::vector<std::uint8_t> serialize(const ModelParams& m);
ModelParams deserialize(std::span<const std::uint8_t> bytes);

void write_checkpoint(const ModelParams& m, const std::filesystem::path& path);
ModelParams read_checkpoint(const std::filesystem::path& path);

}  // namespace perfquant::stnet
