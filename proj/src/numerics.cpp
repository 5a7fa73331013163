// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "numerics.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "random.hpp"

namespace tkgd {

double finite_diff_check(const ScalarFn& loss, std::span<const double> x, std::span<const double> analytic,
                         const FiniteDiffOptions& options) {
  if (x.size() != analytic.size()) fail(ErrorCode::kInvalidArgument, "gradient size does not match parameter count");
  if (!(options.h > 0.0)) fail(ErrorCode::kInvalidArgument, "finite-difference step must be > 0");

  std::vector<std::size_t> coords(x.size());
  std::iota(coords.begin(), coords.end(), 0);
  if (options.max_coords != 0 && options.max_coords < coords.size()) {
    std::mt19937_64 rng(options.seed);
    for (std::size_t i = 0; i < options.max_coords; ++i) {
      std::swap(coords[i], coords[i + uniform_index(rng, coords.size() - i)]);
    }
    coords.resize(options.max_coords);
  }

  std::vector<double> probe(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t c : coords) {
    const double saved = probe[c];
    probe[c] = saved + options.h;
    const double up = loss(probe);
    probe[c] = saved - options.h;
    const double down = loss(probe);
    probe[c] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) fail(ErrorCode::kNumeric, "non-finite loss during gradient check");
    const double numeric = (up - down) / (2.0 * options.h);
    const double denom = std::max(std::abs(numeric), options.floor);
    worst = std::max(worst, std::abs(analytic[c] - numeric) / denom);
  }
  return worst;
}

}  // namespace tkgd
