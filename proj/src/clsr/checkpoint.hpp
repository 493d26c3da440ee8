#pragma once

// Checkpoint layout (all integers u32 little-endian, floats IEEE-754 f32 LE):
//
//   "CLSR" | version | T | C | E | kernel | depth | width[depth] | dense_units
//   | dropout | bn_epsilon | bn_momentum
//   | norm_mean[C] | norm_std[C]
//   | tensor_count | { rank | dim[rank] | data[prod(dim)] } * tensor_count
//
// Tensors follow BasicEncoder::tensors() order, batch-norm running statistics
// included.

#include <cstdint>
#include <string>

#include "clsr/encoder.hpp"

namespace clsr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string checkpoint_bytes(const Encoder& model);
Encoder checkpoint_from_bytes(std::string_view bytes);

void save_checkpoint(const Encoder& model, const std::string& path);
Encoder load_checkpoint(const std::string& path);

/// Fingerprint of the serialized model; stored in embedding indexes.
std::uint64_t model_fingerprint(const Encoder& model);

}  // namespace clsr
