// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>

#include "random.hpp"

namespace tkgd {

std::string_view to_string(Backbone b) { return b == Backbone::kTTransE ? "ttranse" : "tadistmult"; }

Backbone parse_backbone(std::string_view name) {
  if (name == "ttranse") return Backbone::kTTransE;
  if (name == "tadistmult") return Backbone::kTADistMult;
  fail(ErrorCode::kInvalidArgument, "unknown backbone '" + std::string(name) + "' (expected ttranse|tadistmult)");
}

ModelDims dims_for(Backbone backbone, std::size_t dim, const Vocabulary& vocab) {
  return ModelDims{backbone, dim, vocab.num_entities(), vocab.num_relations(), vocab.years()};
}

std::vector<std::string> tensor_names(Backbone backbone) {
  if (backbone == Backbone::kTTransE) return {"entity", "relation", "time"};
  return {"entity", "token", "lstm_w", "lstm_u", "lstm_b"};
}

template <class Real>
std::size_t ModelParams<Real>::num_values() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

template <class Real>
ModelParams<Real> allocate_params(const ModelDims& dims) {
  if (dims.dim < 1) fail(ErrorCode::kInvalidArgument, "embedding dimension must be >= 1");
  if (dims.n_entities == 0 || dims.n_relations == 0 || dims.n_times() == 0) {
    fail(ErrorCode::kInvalidArgument, "vocabulary sizes must be non-zero");
  }
  ModelParams<Real> p;
  p.dims = dims;
  const std::size_t d = dims.dim;
  p.tensors.emplace_back(dims.n_entities, d);
  if (dims.backbone == Backbone::kTTransE) {
    p.tensors.emplace_back(dims.n_relations, d);
    p.tensors.emplace_back(dims.n_times(), d);
  } else {
    p.tensors.emplace_back(dims.n_tokens(), d);
    p.tensors.emplace_back(4 * d, d);
    p.tensors.emplace_back(4 * d, d);
    p.tensors.emplace_back(4 * d, 1);
  }
  return p;
}

template <class Real>
ModelParams<Real> init_params(const ModelDims& dims, std::uint64_t seed) {
  auto p = allocate_params<Real>(dims);
  std::mt19937_64 rng(seed);
  const double d = static_cast<double>(dims.dim);
  const double emb_bound = 6.0 / std::sqrt(d);
  const double lstm_bound = 1.0 / std::sqrt(d);
  const std::size_t n_embedding_tables = dims.backbone == Backbone::kTTransE ? 3 : 2;
  for (std::size_t k = 0; k < n_embedding_tables; ++k) {
    auto& t = p.tensors[k];
    for (auto& v : t.values) v = static_cast<Real>(uniform_real(rng, -emb_bound, emb_bound));
    for (std::size_t r = 0; r < t.rows; ++r) {
      auto row = t.row(r);
      double norm = 0;
      for (Real v : row) norm += static_cast<double>(v) * v;
      norm = std::sqrt(norm);
      if (norm > 0) {
        for (auto& v : row) v = static_cast<Real>(v / norm);
      }
    }
  }
  if (dims.backbone == Backbone::kTADistMult) {
    for (std::size_t k : {2u, 3u}) {
      for (auto& v : p.tensors[k].values) v = static_cast<Real>(uniform_real(rng, -lstm_bound, lstm_bound));
    }
    auto& b = p.tensors[4].values;
    std::fill(b.begin(), b.end(), Real(0));
    for (std::size_t j = 0; j < dims.dim; ++j) b[dims.dim + j] = Real(1);  // forget gate
  }
  return p;
}

// ---------------------------------------------------------------- Gradients

template <class Real>
Gradients<Real>::Gradients(const ModelDims& dims) {
  auto shape = allocate_params<Real>(dims);
  for (const auto& t : shape.tensors) {
    Slot s;
    s.rows = t.rows;
    s.cols = t.cols;
    s.values.assign(t.rows * t.cols, Real(0));
    s.flag.assign(t.rows, 0);
    slots_.push_back(std::move(s));
  }
}

template <class Real>
std::span<Real> Gradients<Real>::row(std::size_t tensor, std::size_t r) {
  auto& s = slots_[tensor];
  if (!s.flag[r]) {
    s.flag[r] = 1;
    s.touched.push_back(static_cast<std::uint32_t>(r));
  }
  return {s.values.data() + r * s.cols, s.cols};
}

template <class Real>
std::span<const Real> Gradients<Real>::peek(std::size_t tensor, std::size_t r) const {
  const auto& s = slots_[tensor];
  return {s.values.data() + r * s.cols, s.cols};
}

template <class Real>
void Gradients<Real>::clear() {
  for (auto& s : slots_) {
    for (auto r : s.touched) {
      std::fill_n(s.values.begin() + static_cast<std::ptrdiff_t>(r * s.cols), s.cols, Real(0));
      s.flag[r] = 0;
    }
    s.touched.clear();
  }
}

template <class Real>
void Gradients<Real>::scale(Real factor) {
  for (auto& s : slots_) {
    for (auto r : s.touched) {
      for (std::size_t j = 0; j < s.cols; ++j) s.values[r * s.cols + j] *= factor;
    }
  }
}

template <class Real>
void Gradients<Real>::apply_adagrad(ModelParams<Real>& params, double lr, double eps) const {
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    const auto& s = slots_[k];
    for (auto r : s.touched) {
      adagrad_row_step(params.tensors[k], r, std::span<const Real>(s.values.data() + r * s.cols, s.cols), lr, eps);
    }
  }
}

template <class Real>
std::vector<Real> Gradients<Real>::dense() const {
  std::vector<Real> out;
  for (const auto& s : slots_) out.insert(out.end(), s.values.begin(), s.values.end());
  return out;
}

std::vector<double> flatten(const ModelParams<double>& params) {
  std::vector<double> out;
  out.reserve(params.num_values());
  for (const auto& t : params.tensors) out.insert(out.end(), t.values.begin(), t.values.end());
  return out;
}

void unflatten(std::span<const double> values, ModelParams<double>& params) {
  if (values.size() != params.num_values()) fail(ErrorCode::kInvalidArgument, "flat parameter size mismatch");
  std::size_t k = 0;
  for (auto& t : params.tensors) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(k), t.size(), t.values.begin());
    k += t.size();
  }
}

// ---------------------------------------------------------------- LSTM

TokenSequence ta_tokenize(RelationId p, int year, std::size_t n_relations) {
  int y = std::abs(year) % 10000;
  TokenSequence seq{};
  seq[0] = p;
  for (std::size_t k = kYearDigits; k >= 1; --k) {
    seq[k] = static_cast<std::uint32_t>(n_relations + static_cast<std::size_t>(y % 10));
    y /= 10;
  }
  return seq;
}

TokenSequence ta_tokenize(RelationId p, TimeId t, const Vocabulary& vocab) {
  return ta_tokenize(p, vocab.year(t), vocab.num_relations());
}

namespace {

template <class Real>
Real sigmoid(Real z) {
  return Real(1) / (Real(1) + std::exp(-z));
}

}  // namespace

template <class Real>
LstmTrace<Real> lstm_forward(const ModelParams<Real>& params, std::span<const std::uint32_t> tokens) {
  if (params.dims.backbone != Backbone::kTADistMult) fail(ErrorCode::kInvalidArgument, "lstm_forward needs TA-DistMult params");
  if (tokens.empty()) fail(ErrorCode::kInvalidArgument, "lstm_forward on an empty token sequence");
  const std::size_t d = params.dims.dim;
  const auto& W = params.lstm_w().values;
  const auto& U = params.lstm_u().values;
  const auto& b = params.lstm_b().values;
  LstmTrace<Real> trace;
  trace.steps.reserve(tokens.size());
  std::vector<Real> h(d, Real(0)), c(d, Real(0)), z(4 * d);
  for (auto tok : tokens) {
    if (tok >= params.token().rows) fail(ErrorCode::kInvalidArgument, "token id out of range");
    LstmStep<Real> st;
    st.token = tok;
    auto x = params.token().row(tok);
    st.x.assign(x.begin(), x.end());
    st.h_prev = h;
    st.c_prev = c;
    for (std::size_t r = 0; r < 4 * d; ++r) {
      Real acc = b[r];
      const Real* w = W.data() + r * d;
      const Real* u = U.data() + r * d;
      for (std::size_t j = 0; j < d; ++j) acc += w[j] * st.x[j] + u[j] * h[j];
      z[r] = acc;
    }
    st.i.resize(d);
    st.f.resize(d);
    st.o.resize(d);
    st.g.resize(d);
    st.c.resize(d);
    st.h.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      st.i[j] = sigmoid(z[j]);
      st.f[j] = sigmoid(z[d + j]);
      st.o[j] = sigmoid(z[2 * d + j]);
      st.g[j] = std::tanh(z[3 * d + j]);
      st.c[j] = st.f[j] * c[j] + st.i[j] * st.g[j];
      st.h[j] = st.o[j] * std::tanh(st.c[j]);
    }
    h = st.h;
    c = st.c;
    trace.steps.push_back(std::move(st));
  }
  return trace;
}

template <class Real>
void lstm_backward(const ModelParams<Real>& params, const LstmTrace<Real>& trace, std::span<const Real> d_output,
                   Gradients<Real>& grads) {
  const std::size_t d = params.dims.dim;
  const auto& W = params.lstm_w().values;
  const auto& U = params.lstm_u().values;
  std::vector<Real> dh(d_output.begin(), d_output.end()), dc(d, Real(0)), dz(4 * d), dh_prev(d), dx(d);
  std::vector<std::span<Real>> dW(4 * d), dU(4 * d);
  for (std::size_t r = 0; r < 4 * d; ++r) {
    dW[r] = grads.row(2, r);
    dU[r] = grads.row(3, r);
  }
  std::vector<std::span<Real>> db(4 * d);
  for (std::size_t r = 0; r < 4 * d; ++r) db[r] = grads.row(4, r);

  for (std::size_t k = trace.steps.size(); k-- > 0;) {
    const auto& st = trace.steps[k];
    for (std::size_t j = 0; j < d; ++j) {
      const Real tc = std::tanh(st.c[j]);
      const Real d_o = dh[j] * tc;
      dc[j] += dh[j] * st.o[j] * (Real(1) - tc * tc);
      const Real d_i = dc[j] * st.g[j];
      const Real d_g = dc[j] * st.i[j];
      const Real d_f = dc[j] * st.c_prev[j];
      dz[j] = d_i * st.i[j] * (Real(1) - st.i[j]);
      dz[d + j] = d_f * st.f[j] * (Real(1) - st.f[j]);
      dz[2 * d + j] = d_o * st.o[j] * (Real(1) - st.o[j]);
      dz[3 * d + j] = d_g * (Real(1) - st.g[j] * st.g[j]);
      dc[j] *= st.f[j];  // becomes d c_prev
    }
    std::fill(dx.begin(), dx.end(), Real(0));
    std::fill(dh_prev.begin(), dh_prev.end(), Real(0));
    for (std::size_t r = 0; r < 4 * d; ++r) {
      const Real g = dz[r];
      if (g == Real(0)) continue;
      const Real* w = W.data() + r * d;
      const Real* u = U.data() + r * d;
      auto dw = dW[r];
      auto du = dU[r];
      for (std::size_t j = 0; j < d; ++j) {
        dw[j] += g * st.x[j];
        du[j] += g * st.h_prev[j];
        dx[j] += w[j] * g;
        dh_prev[j] += u[j] * g;
      }
      db[r][0] += g;
    }
    auto demb = grads.row(1, st.token);
    for (std::size_t j = 0; j < d; ++j) demb[j] += dx[j];
    dh = dh_prev;
  }
}

// ---------------------------------------------------------------- scoring

template <class Real>
Real ttranse_score(const ModelParams<Real>& params, const Quadruple& q) {
  const auto s = params.entity().row(q.s);
  const auto p = params.relation().row(q.p);
  const auto o = params.entity().row(q.o);
  const auto t = params.time().row(q.t);
  Real sum = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Real v = s[k] + p[k] - o[k] + t[k];
    sum += v * v;
  }
  return -std::sqrt(sum);
}

template <class Real>
Real tadistmult_score(const ModelParams<Real>& params, const Quadruple& q) {
  const auto seq = ta_tokenize(q.p, params.dims.years.at(q.t), params.dims.n_relations);
  const auto trace = lstm_forward(params, seq);
  const auto h = trace.output();
  const auto s = params.entity().row(q.s);
  const auto o = params.entity().row(q.o);
  Real sum = 0;
  for (std::size_t k = 0; k < h.size(); ++k) sum += s[k] * o[k] * h[k];
  return sum;
}

template <class Real>
Real score(const ModelParams<Real>& params, const Quadruple& q) {
  return params.dims.backbone == Backbone::kTTransE ? ttranse_score(params, q) : tadistmult_score(params, q);
}

template <class Real>
void score_pairs(const ModelParams<Real>& params, RelationId p, TimeId t, std::span<const EntityPair> pairs,
                 std::span<Real> out) {
  const std::size_t d = params.dims.dim;
  const auto& E = params.entity();
  if (params.dims.backbone == Backbone::kTTransE) {
    const auto rp = params.relation().row(p);
    const auto rt = params.time().row(t);
    std::vector<Real> shift(d);
    for (std::size_t k = 0; k < d; ++k) shift[k] = rp[k] + rt[k];
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const Real* s = E.values.data() + pairs[i].s * d;
      const Real* o = E.values.data() + pairs[i].o * d;
      Real sum = 0;
      for (std::size_t k = 0; k < d; ++k) {
        const Real v = s[k] + shift[k] - o[k];
        sum += v * v;
      }
      out[i] = -std::sqrt(sum);
    }
    return;
  }
  const auto seq = ta_tokenize(p, params.dims.years.at(t), params.dims.n_relations);
  const auto trace = lstm_forward(params, seq);
  const auto h = trace.output();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Real* s = E.values.data() + pairs[i].s * d;
    const Real* o = E.values.data() + pairs[i].o * d;
    Real sum = 0;
    for (std::size_t k = 0; k < d; ++k) sum += s[k] * o[k] * h[k];
    out[i] = sum;
  }
}

template <class Real>
void backprop_pairs(const ModelParams<Real>& params, RelationId p, TimeId t, std::span<const EntityPair> pairs,
                    std::span<const Real> dscores, Gradients<Real>& grads) {
  const std::size_t d = params.dims.dim;
  const auto& E = params.entity();
  if (params.dims.backbone == Backbone::kTTransE) {
    const auto rp = params.relation().row(p);
    const auto rt = params.time().row(t);
    std::vector<Real> shift(d), v(d), d_shift(d, Real(0));
    for (std::size_t k = 0; k < d; ++k) shift[k] = rp[k] + rt[k];
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const Real ds = dscores[i];
      if (ds == Real(0)) continue;
      const Real* s = E.values.data() + pairs[i].s * d;
      const Real* o = E.values.data() + pairs[i].o * d;
      Real sum = 0;
      for (std::size_t k = 0; k < d; ++k) {
        v[k] = s[k] + shift[k] - o[k];
        sum += v[k] * v[k];
      }
      const Real norm = std::sqrt(sum);
      if (!std::isfinite(norm)) fail(ErrorCode::kNumeric, "non-finite TTransE distance");
      if (norm == Real(0)) continue;  // subgradient 0 at the minimum
      const Real scale = -ds / norm;  // d(-|v|)/dv = -v/|v|
      auto gs = grads.row(0, pairs[i].s);
      for (std::size_t k = 0; k < d; ++k) gs[k] += scale * v[k];
      auto go = grads.row(0, pairs[i].o);
      for (std::size_t k = 0; k < d; ++k) {
        go[k] -= scale * v[k];
        d_shift[k] += scale * v[k];
      }
    }
    auto gp = grads.row(1, p);
    auto gt = grads.row(2, t);
    for (std::size_t k = 0; k < d; ++k) {
      gp[k] += d_shift[k];
      gt[k] += d_shift[k];
    }
    return;
  }
  const auto seq = ta_tokenize(p, params.dims.years.at(t), params.dims.n_relations);
  const auto trace = lstm_forward(params, seq);
  const auto h = trace.output();
  std::vector<Real> dh(d, Real(0));
  bool any = false;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Real ds = dscores[i];
    if (ds == Real(0)) continue;
    any = true;
    const Real* s = E.values.data() + pairs[i].s * d;
    const Real* o = E.values.data() + pairs[i].o * d;
    auto gs = grads.row(0, pairs[i].s);
    for (std::size_t k = 0; k < d; ++k) gs[k] += ds * o[k] * h[k];
    auto go = grads.row(0, pairs[i].o);
    for (std::size_t k = 0; k < d; ++k) {
      go[k] += ds * s[k] * h[k];
      dh[k] += ds * s[k] * o[k];
    }
  }
  if (any) lstm_backward(params, trace, std::span<const Real>(dh), grads);
}

std::vector<EntityPair> slot_pairs(const Quadruple& q, Slot slot, std::span<const EntityId> candidates) {
  std::vector<EntityPair> pairs(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    pairs[i] = slot == Slot::kObject ? EntityPair{q.s, candidates[i]} : EntityPair{candidates[i], q.o};
  }
  return pairs;
}

template <class Real>
std::vector<Real> score_slot(const ModelParams<Real>& params, const Quadruple& q, Slot slot,
                             std::span<const EntityId> candidates) {
  auto pairs = slot_pairs(q, slot, candidates);
  std::vector<Real> out(pairs.size());
  score_pairs<Real>(params, q.p, q.t, pairs, out);
  return out;
}

// ---------------------------------------------------------------- supervised objectives

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string describe(const Quadruple& q) {
  return "(" + std::to_string(q.s) + "," + std::to_string(q.p) + "," + std::to_string(q.o) + "," +
         std::to_string(q.t) + ")";
}

}  // namespace

template <class Real>
double backbone_loss(const ModelParams<Real>& params, const Quadruple& positive, std::span<const Quadruple> negatives,
                     const SupervisedLoss& spec, Gradients<Real>* grads, double weight) {
  if (negatives.empty()) fail(ErrorCode::kInvalidArgument, "backbone loss needs at least one negative");
  std::vector<EntityPair> pairs;
  pairs.reserve(negatives.size() + 1);
  pairs.push_back({positive.s, positive.o});
  for (const auto& n : negatives) {
    if (n.p != positive.p || n.t != positive.t) {
      fail(ErrorCode::kInvalidArgument, "negatives must share relation and time with the positive");
    }
    pairs.push_back({n.s, n.o});
  }
  std::vector<Real> scores(pairs.size());
  score_pairs<Real>(params, positive.p, positive.t, pairs, scores);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      fail(ErrorCode::kNumeric, "non-finite score for quadruple " + describe(i == 0 ? positive : negatives[i - 1]));
    }
  }
  const double n = static_cast<double>(negatives.size());
  std::vector<Real> dscores(pairs.size(), Real(0));
  double loss = 0;
  const double pos = scores[0];
  if (params.dims.backbone == Backbone::kTTransE) {
    for (std::size_t i = 1; i < scores.size(); ++i) {
      const double slack = spec.margin - pos + static_cast<double>(scores[i]);
      if (slack > 0) {
        loss += slack / n;
        dscores[0] -= static_cast<Real>(weight / n);
        dscores[i] += static_cast<Real>(weight / n);
      }
    }
  } else {
    loss += softplus(-pos);
    dscores[0] = static_cast<Real>(-weight * logistic(-pos));
    for (std::size_t i = 1; i < scores.size(); ++i) {
      const double z = scores[i];
      loss += softplus(z) / n;
      dscores[i] = static_cast<Real>(weight * logistic(z) / n);
    }
  }
  if (grads != nullptr) backprop_pairs<Real>(params, positive.p, positive.t, pairs, dscores, *grads);
  return loss;
}

// ---------------------------------------------------------------- instantiations

#define TKGD_INSTANTIATE(R)                                                                                      \
  template struct ModelParams<R>;                                                                              \
  template ModelParams<R> allocate_params<R>(const ModelDims&);                                                \
  template ModelParams<R> init_params<R>(const ModelDims&, std::uint64_t);                                     \
  template class Gradients<R>;                                                                                 \
  template LstmTrace<R> lstm_forward<R>(const ModelParams<R>&, std::span<const std::uint32_t>);                \
  template void lstm_backward<R>(const ModelParams<R>&, const LstmTrace<R>&, std::span<const R>, Gradients<R>&); \
  template R ttranse_score<R>(const ModelParams<R>&, const Quadruple&);                                        \
  template R tadistmult_score<R>(const ModelParams<R>&, const Quadruple&);                                     \
  template R score<R>(const ModelParams<R>&, const Quadruple&);                                                \
  template void score_pairs<R>(const ModelParams<R>&, RelationId, TimeId, std::span<const EntityPair>,         \
                               std::span<R>);                                                                  \
  template void backprop_pairs<R>(const ModelParams<R>&, RelationId, TimeId, std::span<const EntityPair>,      \
                                  std::span<const R>, Gradients<R>&);                                          \
  template std::vector<R> score_slot<R>(const ModelParams<R>&, const Quadruple&, Slot,                         \
                                        std::span<const EntityId>);                                            \
  template double backbone_loss<R>(const ModelParams<R>&, const Quadruple&, std::span<const Quadruple>,        \
                                   const SupervisedLoss&, Gradients<R>*, double);

TKGD_INSTANTIATE(float)
TKGD_INSTANTIATE(double)

}  // namespace tkgd
