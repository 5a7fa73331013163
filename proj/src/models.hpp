// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "graph.hpp"
#include "numerics.hpp"

namespace tkgd {

enum class Backbone : std::uint32_t { kTTransE = 1, kTADistMult = 2 };

std::string_view to_string(Backbone b);
Backbone parse_backbone(std::string_view name);

inline constexpr std::size_t kYearDigits = 4;
inline constexpr std::size_t kDigitTokens = 10;
inline constexpr std::size_t kTokenSequenceLength = 1 + kYearDigits;

struct ModelDims {
  Backbone backbone = Backbone::kTTransE;
  std::size_t dim = 0;
  std::size_t n_entities = 0;
  std::size_t n_relations = 0;
  std::vector<int> years;  // one per time bucket

  std::size_t n_times() const { return years.size(); }
  std::size_t n_tokens() const { return n_relations + kDigitTokens; }
  bool operator==(const ModelDims&) const = default;
};

ModelDims dims_for(Backbone backbone, std::size_t dim, const Vocabulary& vocab);

/// Embedding tables (and LSTM weights for TA-DistMult) in a fixed order:
///   TTransE:     entity, relation, time
///   TA-DistMult: entity, token, lstm_w (4d x d), lstm_u (4d x d), lstm_b (4d x 1)
/// LSTM gate blocks are stacked input, forget, output, candidate.
template <class Real>
struct ModelParams {
  ModelDims dims;
  std::vector<ParamTensor<Real>> tensors;

  ParamTensor<Real>& entity() { return tensors[0]; }
  const ParamTensor<Real>& entity() const { return tensors[0]; }
  const ParamTensor<Real>& relation() const { return tensors[1]; }
  const ParamTensor<Real>& time() const { return tensors[2]; }
  const ParamTensor<Real>& token() const { return tensors[1]; }
  const ParamTensor<Real>& lstm_w() const { return tensors[2]; }
  const ParamTensor<Real>& lstm_u() const { return tensors[3]; }
  const ParamTensor<Real>& lstm_b() const { return tensors[4]; }

  std::size_t num_values() const;

  template <class Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> out;
    out.dims = dims;
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<Other>());
    return out;
  }
};

std::vector<std::string> tensor_names(Backbone backbone);

/// Allocates zeroed tensors with the right shapes.
template <class Real>
ModelParams<Real> allocate_params(const ModelDims& dims);

/// Uniform init in [-6/sqrt(d), 6/sqrt(d)], every embedding row L2-normalised;
/// LSTM weights uniform in [-1/sqrt(d), 1/sqrt(d)], forget-gate bias 1.
template <class Real>
ModelParams<Real> init_params(const ModelDims& dims, std::uint64_t seed);

/// Sparse-by-row gradient buffers shaped like a ModelParams.
template <class Real>
class Gradients {
 public:
  explicit Gradients(const ModelDims& dims);

  std::span<Real> row(std::size_t tensor, std::size_t r);
  void clear();
  void scale(Real factor);
  void apply_adagrad(ModelParams<Real>& params, double lr, double eps) const;
  const std::vector<std::uint32_t>& touched(std::size_t tensor) const { return slots_[tensor].touched; }
  std::span<const Real> peek(std::size_t tensor, std::size_t r) const;
  /// Flattened in ModelParams order; untouched rows are zero.
  std::vector<Real> dense() const;

 private:
  struct Slot {
    std::size_t rows = 0, cols = 0;
    std::vector<Real> values;
    std::vector<std::uint8_t> flag;
    std::vector<std::uint32_t> touched;
  };
  std::vector<Slot> slots_;
};

std::vector<double> flatten(const ModelParams<double>& params);
void unflatten(std::span<const double> values, ModelParams<double>& params);

// ---------------------------------------------------------------- TA-DistMult encoder

using TokenSequence = std::array<std::uint32_t, kTokenSequenceLength>;

/// [relation token, four zero-padded year digits].
TokenSequence ta_tokenize(RelationId p, int year, std::size_t n_relations);
TokenSequence ta_tokenize(RelationId p, TimeId t, const Vocabulary& vocab);

template <class Real>
struct LstmStep {
  std::uint32_t token = 0;
  std::vector<Real> x, h_prev, c_prev, i, f, o, g, c, h;
};

template <class Real>
struct LstmTrace {
  std::vector<LstmStep<Real>> steps;
  std::span<const Real> output() const { return steps.back().h; }
};

template <class Real>
LstmTrace<Real> lstm_forward(const ModelParams<Real>& params, std::span<const std::uint32_t> tokens);

/// Backprop through time from d(loss)/d(final hidden state).
template <class Real>
void lstm_backward(const ModelParams<Real>& params, const LstmTrace<Real>& trace, std::span<const Real> d_output,
                   Gradients<Real>& grads);

// ---------------------------------------------------------------- scoring

template <class Real>
Real ttranse_score(const ModelParams<Real>& params, const Quadruple& q);
template <class Real>
Real tadistmult_score(const ModelParams<Real>& params, const Quadruple& q);
/// Single-fact score, recomputing everything (the unbatched path).
template <class Real>
Real score(const ModelParams<Real>& params, const Quadruple& q);

struct EntityPair {
  EntityId s = 0;
  EntityId o = 0;
};

/// Scores (s, p, o, t) for every pair sharing relation p and time t.
template <class Real>
void score_pairs(const ModelParams<Real>& params, RelationId p, TimeId t, std::span<const EntityPair> pairs,
                 std::span<Real> out);

/// Accumulates sum_i dscores[i] * d(score_i)/d(params).
template <class Real>
void backprop_pairs(const ModelParams<Real>& params, RelationId p, TimeId t, std::span<const EntityPair> pairs,
                    std::span<const Real> dscores, Gradients<Real>& grads);

std::vector<EntityPair> slot_pairs(const Quadruple& q, Slot slot, std::span<const EntityId> candidates);

template <class Real>
std::vector<Real> score_slot(const ModelParams<Real>& params, const Quadruple& q, Slot slot,
                             std::span<const EntityId> candidates);

template <class Real>
std::vector<Real> score_candidates(const ModelParams<Real>& params, const CandidateSet& cs) {
  return score_slot(params, cs.query, cs.slot, cs.candidates);
}

// ---------------------------------------------------------------- supervised objectives

struct SupervisedLoss {
  double margin = 1.0;  // TTransE only
};

/// Backbone training loss for one positive and its negatives (which must share
/// the positive's relation and time): mean hinge max(0, margin - s+ + s-) for
/// TTransE, softplus(-s+) + mean softplus(s-) for TA-DistMult. Adds
/// weight * gradient into `grads` when non-null.
template <class Real>
double backbone_loss(const ModelParams<Real>& params, const Quadruple& positive, std::span<const Quadruple> negatives,
                     const SupervisedLoss& spec, Gradients<Real>* grads, double weight = 1.0);

}  // namespace tkgd
