// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "graph.hpp"
#include "models.hpp"

namespace tkgd {

enum class TiePolicy { kPessimistic, kOptimistic, kMean };
enum class RankMode { kRaw, kFiltered };

std::string_view to_string(TiePolicy p);
std::string_view to_string(RankMode m);
TiePolicy parse_tie_policy(std::string_view name);
RankMode parse_rank_mode(std::string_view name);

/// 1 + #{strictly higher} + tie adjustment over the other candidates equal to
/// the ground truth: all of them (pessimistic), none (optimistic), or half
/// rounded down (mean).
template <class Real>
std::size_t rank_of(std::span<const Real> scores, std::size_t ground_truth_index, TiePolicy policy);

struct RankingReport {
  std::size_t n_queries = 0;
  double mr = 0.0;
  double mrr = 0.0;
  std::map<int, double> hits;  // k in {1, 3, 10}
  RankMode mode = RankMode::kRaw;
  TiePolicy tie_policy = TiePolicy::kPessimistic;
};

inline constexpr int kHitsAt[] = {1, 3, 10};

RankingReport aggregate_ranks(std::span<const std::size_t> ranks, RankMode mode, TiePolicy policy);

/// The candidate set a query is ranked over in `mode`.
CandidateSet query_candidates(const Dataset& data, const Quadruple& q, Slot slot, RankMode mode);

/// Ranks of every subject- and object-corruption query of `split`, in split
/// order (object query first). Work is spread over `threads` workers.
template <class Real>
std::vector<std::size_t> query_ranks(const ModelParams<Real>& params, const Dataset& data,
                                     std::span<const Quadruple> split, RankMode mode, TiePolicy policy,
                                     std::size_t threads = 1);

template <class Real>
RankingReport evaluate(const ModelParams<Real>& params, const Dataset& data, std::span<const Quadruple> split,
                       RankMode mode, TiePolicy policy, std::size_t threads = 1);

template <class Real>
RankingReport evaluate(const ModelParams<Real>& params, const Dataset& data, Split split, RankMode mode,
                       TiePolicy policy, std::size_t threads = 1) {
  return evaluate(params, data, data.split(split), mode, policy, threads);
}

inline constexpr std::size_t kOracleMaxEntities = 64;
inline constexpr std::size_t kOracleMaxFacts = 256;

/// Independent re-evaluation: 64-bit scores through the per-fact scorer,
/// full sort, pessimistic ties.
template <class Real>
RankingReport brute_force_oracle(const ModelParams<Real>& params, const Dataset& data,
                                 std::span<const Quadruple> split, RankMode mode);

}  // namespace tkgd
