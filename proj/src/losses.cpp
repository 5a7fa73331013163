// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "error.hpp"

namespace tkgd {

namespace {

void check_aligned(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    fail(ErrorCode::kInvalidArgument, std::string(what) + ": score vectors differ in length (" +
                                          std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) fail(ErrorCode::kInvalidArgument, std::string(what) + ": empty score vectors");
}

std::vector<double> log_softmax(std::span<const double> x, double tau) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double total = 0;
  for (double v : x) total += std::exp((v - mx) / tau);
  const double lse = std::log(total);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mx) / tau - lse;
  return out;
}

// KL(p || q) from log-probabilities, plus q - p (the gradient w.r.t. the
// logits of q times tau).
double kl_from_logs(const std::vector<double>& log_p, const std::vector<double>& log_q, std::vector<double>& q_minus_p) {
  double kl = 0;
  q_minus_p.resize(log_p.size());
  for (std::size_t i = 0; i < log_p.size(); ++i) {
    const double p = std::exp(log_p[i]);
    if (p > 0) kl += p * (log_p[i] - log_q[i]);
    q_minus_p[i] = std::exp(log_q[i]) - p;
  }
  return std::max(kl, 0.0);
}

}  // namespace

LossResult kd_soft_loss(std::span<const double> teacher, std::span<const double> student,
                        std::size_t ground_truth_index, double tau, double alpha_kd) {
  check_aligned(teacher, student, "kd_soft_loss");
  if (ground_truth_index >= student.size()) fail(ErrorCode::kInvalidArgument, "kd_soft_loss: ground truth index out of range");
  if (!(tau > 0)) fail(ErrorCode::kInvalidArgument, "kd_soft_loss: tau must be > 0");
  if (!(alpha_kd >= 0 && alpha_kd <= 1)) fail(ErrorCode::kInvalidArgument, "kd_soft_loss: alpha_kd must lie in [0, 1]");
  LossResult r;
  r.grad.assign(student.size(), 0.0);
  if (alpha_kd > 0) {
    std::vector<double> diff;
    const double kl = kl_from_logs(log_softmax(teacher, tau), log_softmax(student, tau), diff);
    r.value += alpha_kd * tau * tau * kl;
    for (std::size_t i = 0; i < diff.size(); ++i) r.grad[i] += alpha_kd * tau * diff[i];
  }
  if (alpha_kd < 1) {
    const auto log_q = log_softmax(student, 1.0);
    r.value += (1 - alpha_kd) * -log_q[ground_truth_index];
    for (std::size_t i = 0; i < log_q.size(); ++i) {
      r.grad[i] += (1 - alpha_kd) * (std::exp(log_q[i]) - (i == ground_truth_index ? 1.0 : 0.0));
    }
  }
  return r;
}

LossResult bkd_loss(std::span<const double> teacher, std::span<const double> student, double tau) {
  check_aligned(teacher, student, "bkd_loss");
  if (!(tau > 0)) fail(ErrorCode::kInvalidArgument, "bkd_loss: tau must be > 0");
  LossResult r;
  std::vector<double> diff;
  r.value = tau * tau * kl_from_logs(log_softmax(teacher, tau), log_softmax(student, tau), diff);
  r.grad.resize(diff.size());
  for (std::size_t i = 0; i < diff.size(); ++i) r.grad[i] = tau * diff[i];
  return r;
}

double huber(double residual, double delta) {
  const double a = std::abs(residual);
  return a <= delta ? 0.5 * residual * residual : delta * a - 0.5 * delta * delta;
}

double huber_slope(double residual, double delta) { return std::clamp(residual, -delta, delta); }

LossResult huber_alignment_loss(std::span<const double> llm, std::span<const double> student, double delta) {
  check_aligned(llm, student, "huber_alignment_loss");
  if (!(delta > 0)) fail(ErrorCode::kInvalidArgument, "huber_alignment_loss: delta must be > 0");
  LossResult r;
  r.grad.resize(student.size());
  const double n = static_cast<double>(student.size());
  for (std::size_t i = 0; i < student.size(); ++i) {
    const double res = llm[i] - student[i];
    r.value += huber(res, delta) / n;
    r.grad[i] = -huber_slope(res, delta) / n;
  }
  return r;
}

std::vector<double> min_max_normalize(std::span<const double> x) {
  std::vector<double> out(x.size(), 0.5);
  if (x.empty()) return out;
  auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double range = *hi - *lo;
  if (!(range > 0)) return out;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - *lo) / range;
  return out;
}

LossResult normalized_alignment_loss(std::span<const double> llm, std::span<const double> student, double delta) {
  check_aligned(llm, student, "normalized_alignment_loss");
  const auto nl = min_max_normalize(llm);
  const auto ns = min_max_normalize(student);
  LossResult inner = huber_alignment_loss(nl, ns, delta);
  LossResult r;
  r.value = inner.value;
  r.grad.assign(student.size(), 0.0);
  auto [lo, hi] = std::minmax_element(student.begin(), student.end());
  const double range = *hi - *lo;
  if (!(range > 0)) return r;
  const auto a = static_cast<std::size_t>(lo - student.begin());
  const auto b = static_cast<std::size_t>(hi - student.begin());
  double via_min = 0, via_max = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    r.grad[i] = inner.grad[i] / range;
    via_min += inner.grad[i] * (1 - ns[i]);
    via_max += inner.grad[i] * ns[i];
  }
  r.grad[a] -= via_min / range;
  r.grad[b] -= via_max / range;
  return r;
}

LossResult supervised_loss(std::span<const double> student, std::size_t ground_truth_index) {
  if (student.empty() || ground_truth_index >= student.size()) {
    fail(ErrorCode::kInvalidArgument, "supervised_loss: ground truth index out of range");
  }
  const auto log_q = log_softmax(student, 1.0);
  const double n = static_cast<double>(student.size());
  std::vector<double> q(student.size()), g(student.size());
  LossResult r;
  double gq = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    q[i] = std::exp(log_q[i]);
    const double e = q[i] - (i == ground_truth_index ? 1.0 : 0.0);
    r.value += e * e / n;
    g[i] = 2 * e / n;
    gq += g[i] * q[i];
  }
  r.grad.resize(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) r.grad[j] = q[j] * (g[j] - gq);
  return r;
}

double total_loss(double l1, double l2, double l3, const LossWeights& weights) {
  return l1 + weights.lambda_llm * l2 + weights.beta * l3;
}

FitnetResult fitnet_hint_loss(const MatrixView& student, const MatrixView& teacher, const MatrixView& regressor) {
  const std::size_t n = student.rows, ds = student.cols, dt = teacher.cols;
  if (teacher.rows != n || regressor.rows != ds || regressor.cols != dt || n == 0) {
    fail(ErrorCode::kInvalidArgument, "fitnet_hint_loss: shape mismatch (student " + std::to_string(n) + "x" +
                                          std::to_string(ds) + ", teacher " + std::to_string(teacher.rows) + "x" +
                                          std::to_string(dt) + ", regressor " + std::to_string(regressor.rows) +
                                          "x" + std::to_string(regressor.cols) + ")");
  }
  FitnetResult r;
  r.d_student.assign(n * ds, 0.0);
  r.d_regressor.assign(ds * dt, 0.0);
  std::vector<double> resid(dt);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < dt; ++c) {
      double proj = 0;
      for (std::size_t k = 0; k < ds; ++k) proj += student.at(i, k) * regressor.at(k, c);
      resid[c] = proj - teacher.at(i, c);
      r.value += resid[c] * resid[c] / static_cast<double>(n);
    }
    for (std::size_t c = 0; c < dt; ++c) {
      const double g = 2 * resid[c] / static_cast<double>(n);
      for (std::size_t k = 0; k < ds; ++k) {
        r.d_student[i * ds + k] += g * regressor.at(k, c);
        r.d_regressor[k * dt + c] += g * student.at(i, k);
      }
    }
  }
  return r;
}

namespace {

struct Geometry {
  std::size_t n = 0, d = 0;
  std::vector<double> dist;  // n x n
  std::vector<double> unit;  // n x n x d, (x_i - x_j) / |x_i - x_j|
  double mean_nonzero = 0;
  std::size_t nonzero = 0;
};

Geometry geometry(const MatrixView& x) {
  Geometry g;
  g.n = x.rows;
  g.d = x.cols;
  g.dist.assign(g.n * g.n, 0.0);
  g.unit.assign(g.n * g.n * g.d, 0.0);
  double total = 0;
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t j = 0; j < g.n; ++j) {
      if (i == j) continue;
      double s = 0;
      for (std::size_t k = 0; k < g.d; ++k) {
        const double v = x.at(i, k) - x.at(j, k);
        s += v * v;
      }
      const double dd = std::sqrt(s);
      g.dist[i * g.n + j] = dd;
      if (dd > 0) {
        total += dd;
        ++g.nonzero;
        for (std::size_t k = 0; k < g.d; ++k) g.unit[(i * g.n + j) * g.d + k] = (x.at(i, k) - x.at(j, k)) / dd;
      }
    }
  }
  g.mean_nonzero = g.nonzero ? total / static_cast<double>(g.nonzero) : 0.0;
  return g;
}

double cosine(const Geometry& g, std::size_t i, std::size_t j, std::size_t k) {
  const double* a = g.unit.data() + (i * g.n + j) * g.d;
  const double* b = g.unit.data() + (k * g.n + j) * g.d;
  double s = 0;
  for (std::size_t c = 0; c < g.d; ++c) s += a[c] * b[c];
  return s;
}

}  // namespace

RkdResult rkd_loss(const MatrixView& student, const MatrixView& teacher) {
  const std::size_t n = student.rows;
  if (teacher.rows != n) fail(ErrorCode::kInvalidArgument, "rkd_loss: student and teacher batch sizes differ");
  if (n < 3) fail(ErrorCode::kInvalidArgument, "rkd_loss: batch must contain at least 3 embeddings");
  const Geometry S = geometry(student);
  const Geometry T = geometry(teacher);
  if (S.mean_nonzero == 0 || T.mean_nonzero == 0) {
    fail(ErrorCode::kNumeric, "rkd_loss: all embeddings coincide, mean pairwise distance is zero");
  }
  const std::size_t d = S.d;
  RkdResult r;
  r.d_student.assign(n * d, 0.0);

  // distance potential
  const double pairs = static_cast<double>(n * (n - 1));
  std::vector<double> slope(n * n, 0.0);
  double weighted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double res = S.dist[i * n + j] / S.mean_nonzero - T.dist[i * n + j] / T.mean_nonzero;
      r.distance_term += huber(res, 1.0) / pairs;
      slope[i * n + j] = huber_slope(res, 1.0) / pairs;
      weighted += slope[i * n + j] * S.dist[i * n + j];
    }
  }
  const double mu = S.mean_nonzero;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || S.dist[i * n + j] == 0) continue;
      const double c = slope[i * n + j] / mu - weighted / (mu * mu * static_cast<double>(S.nonzero));
      const double* u = S.unit.data() + (i * n + j) * d;
      for (std::size_t k = 0; k < d; ++k) {
        r.d_student[i * d + k] += c * u[k];
        r.d_student[j * d + k] -= c * u[k];
      }
    }
  }

  // angle potential, vertex j
  const double triplets = static_cast<double>(n * (n - 1) * (n - 2));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double cs = cosine(S, i, j, k);
        const double res = cs - cosine(T, i, j, k);
        r.angle_term += huber(res, 1.0) / triplets;
        const double da = S.dist[i * n + j], db = S.dist[k * n + j];
        if (da == 0 || db == 0) continue;
        const double g = 2.0 * huber_slope(res, 1.0) / triplets;
        const double* e1 = S.unit.data() + (i * n + j) * d;
        const double* e2 = S.unit.data() + (k * n + j) * d;
        for (std::size_t c = 0; c < d; ++c) {
          const double ga = g * (e2[c] - cs * e1[c]) / da;
          const double gb = g * (e1[c] - cs * e2[c]) / db;
          r.d_student[i * d + c] += ga;
          r.d_student[k * d + c] += gb;
          r.d_student[j * d + c] -= ga + gb;
        }
      }
    }
  }
  r.value = r.distance_term + 2.0 * r.angle_term;
  return r;
}

}  // namespace tkgd
