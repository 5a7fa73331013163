// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "digest.hpp"

namespace tkgd {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using TimeId = std::uint32_t;

/// One timestamped fact (subject, relation, object, time bucket).
struct Quadruple {
  EntityId s = 0;
  RelationId p = 0;
  EntityId o = 0;
  TimeId t = 0;

  friend auto operator<=>(const Quadruple&, const Quadruple&) = default;
};

struct QuadrupleHash {
  std::size_t operator()(const Quadruple& q) const noexcept;
};

enum class Slot { kSubject, kObject };
enum class Split { kTrain, kValid, kTest };
enum class TimeField { kBegin, kEnd };

std::string_view to_string(Slot slot);
std::string_view to_string(Split split);
Split parse_split(std::string_view name);

/// Bidirectional name <-> id maps. Entity and relation ids follow first
/// insertion; time buckets are the sorted distinct training years.
class Vocabulary {
 public:
  EntityId add_entity(std::string_view name);
  RelationId add_relation(std::string_view name);
  /// Replaces the bucket list. `years` must be strictly ascending.
  void set_years(std::vector<int> years);

  std::size_t num_entities() const { return entity_names_.size(); }
  std::size_t num_relations() const { return relation_names_.size(); }
  std::size_t num_times() const { return years_.size(); }

  const std::string& entity_name(EntityId id) const { return entity_names_.at(id); }
  const std::string& relation_name(RelationId id) const { return relation_names_.at(id); }
  int year(TimeId id) const { return years_.at(id); }
  const std::vector<int>& years() const { return years_; }
  const std::vector<std::string>& entity_names() const { return entity_names_; }
  const std::vector<std::string>& relation_names() const { return relation_names_; }

  std::optional<EntityId> find_entity(std::string_view name) const;
  std::optional<RelationId> find_relation(std::string_view name) const;
  std::optional<TimeId> find_year(int year) const;
  /// Nearest known bucket; ties resolve to the later bucket.
  TimeId clamp_year(int year) const;

  bool contains(const Quadruple& q) const {
    return q.s < num_entities() && q.o < num_entities() && q.p < num_relations() &&
           q.t < num_times();
  }

 private:
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::vector<int> years_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

/// Index over every known fact: (s,p,t) -> {o} and (p,o,t) -> {s}.
class KnownFacts {
 public:
  void insert(const Quadruple& q);
  bool contains(const Quadruple& q) const { return facts_.contains(q); }
  std::size_t size() const { return facts_.size(); }
  /// Entities known to fill `slot` given the other three fields of `q`.
  std::span<const EntityId> completions(const Quadruple& q, Slot slot) const;

 private:
  struct Key {
    std::uint32_t a, b, c;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  std::unordered_set<Quadruple, QuadrupleHash> facts_;
  std::unordered_map<Key, std::vector<EntityId>, KeyHash> objects_;
  std::unordered_map<Key, std::vector<EntityId>, KeyHash> subjects_;
};

struct Dataset {
  Vocabulary vocab;
  std::vector<Quadruple> train;
  std::vector<Quadruple> valid;
  std::vector<Quadruple> test;
  KnownFacts known;

  std::span<const Quadruple> split(Split which) const;
  /// Facts of one split grouped by time bucket (one snapshot per bucket).
  std::vector<std::vector<Quadruple>> snapshots(Split which) const;
  Digest digest() const;
};

/// One parsed line before id assignment.
struct RawFact {
  std::string subject;
  std::string relation;
  std::string object;
  int year = 0;
};

/// Assigns ids (train -> valid -> test, first appearance), builds time buckets
/// from training years, clamps unseen years, drops in-split duplicates.
Dataset build_dataset(const std::vector<RawFact>& train, const std::vector<RawFact>& valid,
                      const std::vector<RawFact>& test);

struct LoadOptions {
  TimeField time_field = TimeField::kBegin;
};

/// Parses a time token (`YYYY-MM-DD`, `YYYY`, wildcards such as `19##-##-##`).
/// Returns nullopt for a wildcarded year; throws on malformed tokens.
std::optional<int> parse_year(std::string_view token);

std::vector<RawFact> read_split_file(const std::filesystem::path& file, const LoadOptions& options);

/// Loads `train.txt`, `valid.txt`, `test.txt` from `dir`.
Dataset load_quadruples(const std::filesystem::path& dir, const LoadOptions& options = {});

/// Writes the dataset back in split-file format (one year per fact).
void write_dataset(const Dataset& data, const std::filesystem::path& dir);

struct CandidateSet {
  Quadruple query;
  Slot slot = Slot::kObject;
  std::vector<EntityId> candidates;
  std::size_t ground_truth_index = 0;

  EntityId ground_truth() const { return candidates[ground_truth_index]; }
};

/// The entity filling `slot` in `q`.
inline EntityId slot_entity(const Quadruple& q, Slot slot) {
  return slot == Slot::kSubject ? q.s : q.o;
}

/// `q` with the entity at `slot` replaced.
inline Quadruple substitute(Quadruple q, Slot slot, EntityId e) {
  (slot == Slot::kSubject ? q.s : q.o) = e;
  return q;
}

/// Every entity at `slot`, ascending id.
CandidateSet build_candidates(const Quadruple& q, Slot slot, std::size_t num_entities);
CandidateSet build_candidates(const Quadruple& q, Slot slot, const Vocabulary& vocab);

/// Drops candidates that complete a known fact other than the query itself.
CandidateSet filter_candidates(const CandidateSet& cs, const KnownFacts& known);

/// Corrupts subject or object (fair coin) with a different uniform entity.
std::vector<Quadruple> sample_negatives(const Quadruple& q, std::size_t n, std::size_t num_entities,
                                        std::mt19937_64& rng);

}  // namespace tkgd
