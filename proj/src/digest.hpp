// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace tkgd {

using Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::span<const std::uint8_t> bytes);
  void update(std::string_view text);
  Digest finish();

 private:
  void* ctx_;
};

Digest sha256(std::string_view text);
Digest sha256(std::span<const std::uint8_t> bytes);
std::string to_hex(const Digest& d);
std::uint64_t digest_prefix64(const Digest& d);

}  // namespace tkgd
