// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "eval.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <thread>

#include "error.hpp"

namespace tkgd {

std::string_view to_string(TiePolicy p) {
  switch (p) {
    case TiePolicy::kPessimistic: return "pessimistic";
    case TiePolicy::kOptimistic: return "optimistic";
    case TiePolicy::kMean: return "mean";
  }
  return "?";
}

std::string_view to_string(RankMode m) { return m == RankMode::kRaw ? "raw" : "filtered"; }

TiePolicy parse_tie_policy(std::string_view name) {
  if (name == "pessimistic") return TiePolicy::kPessimistic;
  if (name == "optimistic") return TiePolicy::kOptimistic;
  if (name == "mean") return TiePolicy::kMean;
  fail(ErrorCode::kInvalidArgument, "unknown tie policy '" + std::string(name) + "'");
}

RankMode parse_rank_mode(std::string_view name) {
  if (name == "raw") return RankMode::kRaw;
  if (name == "filtered") return RankMode::kFiltered;
  fail(ErrorCode::kInvalidArgument, "unknown ranking mode '" + std::string(name) + "'");
}

template <class Real>
std::size_t rank_of(std::span<const Real> scores, std::size_t ground_truth_index, TiePolicy policy) {
  if (ground_truth_index >= scores.size()) fail(ErrorCode::kInvalidArgument, "rank_of: ground truth index out of range");
  const Real truth = scores[ground_truth_index];
  std::size_t higher = 0, ties = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == ground_truth_index) continue;
    if (scores[i] > truth) {
      ++higher;
    } else if (scores[i] == truth) {
      ++ties;
    }
  }
  switch (policy) {
    case TiePolicy::kPessimistic: return 1 + higher + ties;
    case TiePolicy::kOptimistic: return 1 + higher;
    case TiePolicy::kMean: return 1 + higher + ties / 2;
  }
  return 1 + higher + ties;
}

RankingReport aggregate_ranks(std::span<const std::size_t> ranks, RankMode mode, TiePolicy policy) {
  if (ranks.empty()) fail(ErrorCode::kInvalidArgument, "cannot aggregate an empty rank list");
  RankingReport r;
  r.mode = mode;
  r.tie_policy = policy;
  r.n_queries = ranks.size();
  double sum_rank = 0, sum_rr = 0;
  std::map<int, std::size_t> hit_counts;
  for (auto rank : ranks) {
    sum_rank += static_cast<double>(rank);
    sum_rr += 1.0 / static_cast<double>(rank);
    for (int k : kHitsAt) {
      if (rank <= static_cast<std::size_t>(k)) ++hit_counts[k];
    }
  }
  const double n = static_cast<double>(ranks.size());
  r.mr = sum_rank / n;
  r.mrr = sum_rr / n;
  for (int k : kHitsAt) r.hits[k] = static_cast<double>(hit_counts[k]) / n;
  return r;
}

CandidateSet query_candidates(const Dataset& data, const Quadruple& q, Slot slot, RankMode mode) {
  auto cs = build_candidates(q, slot, data.vocab);
  return mode == RankMode::kFiltered ? filter_candidates(cs, data.known) : cs;
}

template <class Real>
std::vector<std::size_t> query_ranks(const ModelParams<Real>& params, const Dataset& data,
                                     std::span<const Quadruple> split, RankMode mode, TiePolicy policy,
                                     std::size_t threads) {
  std::vector<std::size_t> ranks(split.size() * 2);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (Slot slot : {Slot::kObject, Slot::kSubject}) {
        const auto cs = query_candidates(data, split[i], slot, mode);
        const auto scores = score_candidates(params, cs);
        ranks[2 * i + (slot == Slot::kObject ? 0 : 1)] =
            rank_of<Real>(scores, cs.ground_truth_index, policy);
      }
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, split.size()));
  if (threads == 1) {
    work(0, split.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (split.size() + threads - 1) / threads;
    for (std::size_t w = 0; w < threads; ++w) {
      const std::size_t b = w * chunk, e = std::min(split.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
  }
  return ranks;
}

template <class Real>
RankingReport evaluate(const ModelParams<Real>& params, const Dataset& data, std::span<const Quadruple> split,
                       RankMode mode, TiePolicy policy, std::size_t threads) {
  if (split.empty()) fail(ErrorCode::kInvalidArgument, "cannot evaluate an empty split");
  const auto ranks = query_ranks(params, data, split, mode, policy, threads);
  return aggregate_ranks(ranks, mode, policy);
}

template <class Real>
RankingReport brute_force_oracle(const ModelParams<Real>& params, const Dataset& data,
                                 std::span<const Quadruple> split, RankMode mode) {
  if (data.vocab.num_entities() > kOracleMaxEntities || split.size() > kOracleMaxFacts) {
    fail(ErrorCode::kInvalidArgument, "brute_force_oracle is limited to " + std::to_string(kOracleMaxEntities) +
                                          " entities and " + std::to_string(kOracleMaxFacts) + " facts");
  }
  if (split.empty()) fail(ErrorCode::kInvalidArgument, "cannot evaluate an empty split");
  const auto exact = params.template cast<double>();
  std::vector<std::size_t> ranks;
  for (const auto& q : split) {
    for (Slot slot : {Slot::kObject, Slot::kSubject}) {
      const EntityId truth = slot_entity(q, slot);
      std::vector<std::pair<double, EntityId>> scored;
      for (EntityId e = 0; e < data.vocab.num_entities(); ++e) {
        const Quadruple candidate = substitute(q, slot, e);
        if (mode == RankMode::kFiltered && e != truth && data.known.contains(candidate)) continue;
        scored.emplace_back(score(exact, candidate), e);
      }
      // descending score; among equal scores the ground truth goes last
      std::sort(scored.begin(), scored.end(), [truth](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        if ((a.second == truth) != (b.second == truth)) return b.second == truth;
        return a.second < b.second;
      });
      std::size_t pos = 0;
      while (scored[pos].second != truth) ++pos;
      ranks.push_back(pos + 1);
    }
  }
  RankingReport r;
  r.mode = mode;
  r.tie_policy = TiePolicy::kPessimistic;
  r.n_queries = ranks.size();
  double sr = 0, srr = 0;
  for (auto k : ranks) {
    sr += static_cast<double>(k);
    srr += 1.0 / static_cast<double>(k);
  }
  r.mr = sr / static_cast<double>(ranks.size());
  r.mrr = srr / static_cast<double>(ranks.size());
  for (int k : kHitsAt) {
    r.hits[k] = static_cast<double>(std::count_if(ranks.begin(), ranks.end(),
                                                  [k](std::size_t x) { return x <= static_cast<std::size_t>(k); })) /
                static_cast<double>(ranks.size());
  }
  return r;
}

template std::size_t rank_of<float>(std::span<const float>, std::size_t, TiePolicy);
template std::size_t rank_of<double>(std::span<const double>, std::size_t, TiePolicy);
template std::vector<std::size_t> query_ranks<float>(const ModelParams<float>&, const Dataset&,
                                                     std::span<const Quadruple>, RankMode, TiePolicy, std::size_t);
template std::vector<std::size_t> query_ranks<double>(const ModelParams<double>&, const Dataset&,
                                                      std::span<const Quadruple>, RankMode, TiePolicy, std::size_t);
template RankingReport evaluate<float>(const ModelParams<float>&, const Dataset&, std::span<const Quadruple>, RankMode,
                                       TiePolicy, std::size_t);
template RankingReport evaluate<double>(const ModelParams<double>&, const Dataset&, std::span<const Quadruple>,
                                        RankMode, TiePolicy, std::size_t);
template RankingReport brute_force_oracle<float>(const ModelParams<float>&, const Dataset&,
                                                 std::span<const Quadruple>, RankMode);
template RankingReport brute_force_oracle<double>(const ModelParams<double>&, const Dataset&,
                                                  std::span<const Quadruple>, RankMode);

}  // namespace tkgd
