// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

// Reference computations used as test oracles. Everything here is written
// straight from the definitions in extended precision and shares no code
// with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <vector>

namespace oracle {

using Real = long double;
using Vec = std::vector<Real>;

inline Vec softmax(const std::vector<double>& logits, Real tau) {
  Vec out(logits.size());
  Real z = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += std::exp(static_cast<Real>(logits[i]) / tau);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = std::exp(static_cast<Real>(logits[i]) / tau) / z;
  return out;
}

inline Real kl(const Vec& p, const Vec& q) {
  Real s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0) s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

inline Real cross_entropy(const Vec& q, std::size_t gt) { return -std::log(q[gt]); }

inline Real huber(Real r, Real delta) {
  const Real a = std::fabs(r);
  if (a <= delta) return r * r / 2;
  return delta * a - delta * delta / 2;
}

inline Real norm(const Vec& v) {
  Real s = 0;
  for (Real x : v) s += x * x;
  return std::sqrt(s);
}

/// -| s + p - o + t |
inline Real ttranse(const Vec& s, const Vec& p, const Vec& o, const Vec& t) {
  Vec v(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) v[k] = s[k] + p[k] - o[k] + t[k];
  return -norm(v);
}

inline Real sigmoid(Real x) { return 1 / (1 + std::exp(-x)); }

/// Single-layer LSTM, gate rows stacked i, f, o, g; W, U are (4d x d)
/// row-major, b has 4d entries. Returns the final hidden state.
inline Vec lstm(const std::vector<Vec>& inputs, const Vec& W, const Vec& U, const Vec& b, std::size_t d) {
  Vec h(d, 0), c(d, 0);
  for (const auto& x : inputs) {
    Vec pre(4 * d);
    for (std::size_t r = 0; r < 4 * d; ++r) {
      Real acc = b[r];
      for (std::size_t k = 0; k < d; ++k) acc += W[r * d + k] * x[k] + U[r * d + k] * h[k];
      pre[r] = acc;
    }
    Vec hn(d), cn(d);
    for (std::size_t k = 0; k < d; ++k) {
      const Real i = sigmoid(pre[k]);
      const Real f = sigmoid(pre[d + k]);
      const Real o = sigmoid(pre[2 * d + k]);
      const Real g = std::tanh(pre[3 * d + k]);
      cn[k] = f * c[k] + i * g;
      hn[k] = o * std::tanh(cn[k]);
    }
    h = hn;
    c = cn;
  }
  return h;
}

/// Position of the ground truth after a full descending sort that places it
/// last among equal scores (pessimistic rank).
inline std::size_t pessimistic_rank(const std::vector<double>& scores, std::size_t gt) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return (a == gt ? 1 : 0) < (b == gt ? 1 : 0);
  });
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), gt) - order.begin()) + 1;
}

struct Metrics {
  Real mr = 0, mrr = 0;
  std::map<int, Real> hits;
};

inline Metrics metrics(const std::vector<std::size_t>& ranks) {
  Metrics m;
  for (int k : {1, 3, 10}) m.hits[k] = 0;
  for (auto r : ranks) {
    m.mr += static_cast<Real>(r);
    m.mrr += 1 / static_cast<Real>(r);
    for (int k : {1, 3, 10}) m.hits[k] += r <= static_cast<std::size_t>(k) ? 1 : 0;
  }
  const Real n = static_cast<Real>(ranks.size());
  m.mr /= n;
  m.mrr /= n;
  for (auto& [k, v] : m.hits) v /= n;
  return m;
}

/// Relational distillation loss recomputed over every ordered pair and every
/// ordered triplet (angle at the middle point).
inline Real rkd(const std::vector<Vec>& S, const std::vector<Vec>& T) {
  const std::size_t n = S.size();
  auto dist = [](const Vec& a, const Vec& b) {
    Vec v(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) v[k] = a[k] - b[k];
    return norm(v);
  };
  auto mean_nonzero = [&](const std::vector<Vec>& X) {
    Real sum = 0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && dist(X[i], X[j]) > 0) {
          sum += dist(X[i], X[j]);
          ++cnt;
        }
    return sum / static_cast<Real>(cnt);
  };
  auto angle_cos = [](const Vec& a, const Vec& vertex, const Vec& b) {
    Real dot = 0, na = 0, nb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const Real x = a[k] - vertex[k], y = b[k] - vertex[k];
      dot += x * y;
      na += x * x;
      nb += y * y;
    }
    if (na == 0 || nb == 0) return Real(0);
    return dot / std::sqrt(na * nb);
  };
  const Real ms = mean_nonzero(S), mt = mean_nonzero(T);
  Real dterm = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      dterm += huber(dist(S[i], S[j]) / ms - dist(T[i], T[j]) / mt, 1);
      ++pairs;
    }
  Real aterm = 0;
  std::size_t triplets = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        if (i == j || j == k || i == k) continue;
        aterm += huber(angle_cos(S[i], S[j], S[k]) - angle_cos(T[i], T[j], T[k]), 1);
        ++triplets;
      }
  return dterm / static_cast<Real>(pairs) + 2 * aterm / static_cast<Real>(triplets);
}

}  // namespace oracle
