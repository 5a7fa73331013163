// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace tkgd {

/// Row-major parameter matrix with its Adagrad squared-gradient accumulator.
template <class Real>
struct ParamTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Real> values;
  std::vector<Real> accum;

  ParamTensor() = default;
  ParamTensor(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, Real(0)), accum(r * c, Real(0)) {}

  std::size_t size() const { return values.size(); }
  std::span<Real> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const Real> row(std::size_t i) const { return {values.data() + i * cols, cols}; }

  template <class Other>
  ParamTensor<Other> cast() const {
    ParamTensor<Other> out(rows, cols);
    for (std::size_t i = 0; i < values.size(); ++i) {
      out.values[i] = static_cast<Other>(values[i]);
      out.accum[i] = static_cast<Other>(accum[i]);
    }
    return out;
  }
};

template <class Real>
Real dot(std::span<const Real> a, std::span<const Real> b) {
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <class Real>
Real l2_norm(std::span<const Real> a) {
  return std::sqrt(dot(a, a));
}

template <class Real>
void axpy(Real alpha, std::span<const Real> x, std::span<Real> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// softmax(logits / tau), max-subtracted.
template <class Real>
std::vector<Real> softmax_with_temperature(std::span<const Real> logits, double tau) {
  if (!(tau > 0.0)) fail(ErrorCode::kInvalidArgument, "softmax temperature must be > 0");
  if (logits.empty()) fail(ErrorCode::kInvalidArgument, "softmax of an empty vector");
  Real mx = logits[0];
  for (Real v : logits) {
    if (!std::isfinite(v)) fail(ErrorCode::kNumeric, "non-finite logit passed to softmax");
    mx = v > mx ? v : mx;
  }
  std::vector<Real> out(logits.size());
  Real total = 0;
  const Real inv_tau = static_cast<Real>(1.0 / tau);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - mx) * inv_tau);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

/// Adagrad on one row. Zero gradient entries leave both value and accumulator untouched.
template <class Real>
void adagrad_row_step(ParamTensor<Real>& param, std::size_t row, std::span<const Real> grad, double lr, double eps) {
  if (grad.size() != param.cols || row >= param.rows) fail(ErrorCode::kInvalidArgument, "adagrad row shape mismatch");
  Real* v = param.values.data() + row * param.cols;
  Real* a = param.accum.data() + row * param.cols;
  for (std::size_t j = 0; j < grad.size(); ++j) {
    const Real g = grad[j];
    if (!std::isfinite(g)) fail(ErrorCode::kNumeric, "non-finite gradient in adagrad step");
    if (g == Real(0)) continue;
    a[j] += g * g;
    v[j] -= static_cast<Real>(lr * g / (std::sqrt(static_cast<double>(a[j])) + eps));
  }
}

template <class Real>
void adagrad_step(ParamTensor<Real>& param, std::span<const Real> grad, double lr, double eps) {
  if (grad.size() != param.size()) {
    fail(ErrorCode::kInvalidArgument, "adagrad shape mismatch: " + std::to_string(grad.size()) + " vs " +
                                          std::to_string(param.size()));
  }
  if (!(lr > 0.0) || eps < 0.0) fail(ErrorCode::kInvalidArgument, "adagrad needs lr > 0 and eps >= 0");
  for (std::size_t r = 0; r < param.rows; ++r) {
    adagrad_row_step(param, r, grad.subspan(r * param.cols, param.cols), lr, eps);
  }
}

struct FiniteDiffOptions {
  double h = 1e-5;
  /// 0 checks every coordinate; otherwise a seeded random subset of this size.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
  /// Denominator floor, so coordinates with a vanishing true gradient are
  /// judged on absolute error.
  double floor = 1e-6;
};

using ScalarFn = std::function<double(std::span<const double>)>;

/// Max over coordinates of |analytic - numeric| / max(|numeric|, floor), with
/// `numeric` the central difference of `loss` at `x`.
double finite_diff_check(const ScalarFn& loss, std::span<const double> x, std::span<const double> analytic,
                         const FiniteDiffOptions& options = {});

}  // namespace tkgd
