// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <filesystem>
#include <optional>

#include "digest.hpp"
#include "models.hpp"

namespace tkgd {

// Layout (all integers little-endian):
//   "TKGDCKPT"                    8 bytes
//   version                       u32
//   backbone, dim                 u32, u32
//   n_entities, n_relations       u32, u32
//   n_times, years[n_times]       u32, i32 * n_times
//   dataset digest, config digest 32 + 32 bytes
//   n_tensors                     u32
//   per tensor: rows, cols, data  u32, u32, f32 * rows * cols
//   SHA-256 of everything above   32 bytes
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams<float> params;
  Digest dataset_digest{};
  Digest config_digest{};
  Digest file_digest{};  // trailing SHA-256
};

std::vector<std::uint8_t> encode_checkpoint(const ModelParams<float>& params, const Digest& dataset_digest,
                                            const Digest& config_digest);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, std::string_view origin = "<memory>");

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params, const Digest& dataset_digest,
                     const Digest& config_digest);

struct CheckpointExpectations {
  std::optional<ModelDims> dims;            // mismatch is an error; dim 0 matches any
  std::optional<Digest> dataset_digest;     // mismatch is a warning
};

Checkpoint load_checkpoint(const std::filesystem::path& path, const CheckpointExpectations& expect = {});

}  // namespace tkgd
