// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "error.hpp"

#include <atomic>
#include <cstdio>

namespace tkgd {

namespace {
std::atomic<bool> g_warnings{true};
std::atomic<std::size_t> g_warning_count{0};
}  // namespace

void warn(const std::string& message) {
  g_warning_count.fetch_add(1);
  if (g_warnings.load()) std::fprintf(stderr, "tkgd: warning: %s\n", message.c_str());
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled); }

std::size_t warning_count() { return g_warning_count.load(); }

}  // namespace tkgd
