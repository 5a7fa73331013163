// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "graph.hpp"

namespace tkgd {

struct SyntheticSpec {
  std::size_t n_entities = 50;
  std::size_t n_relations = 4;
  std::size_t n_buckets = 20;
  std::size_t n_facts = 2000;
  double pattern_strength = 0.9;
  std::uint64_t seed = 1;
  int base_year = 2000;
};

/// Planted rule table in name space: (relation, subject) -> object.
/// Entities sit on a hidden line and relation r maps the entity at
/// position i to the one at i + offset(r), independent of time.
struct PlantedRule {
  std::string relation;
  std::string subject;
  std::string object;
};

struct SyntheticDataset {
  Dataset data;
  std::vector<PlantedRule> rules;
};

/// Facts are spread evenly over buckets. A bucket holds each planted
/// (relation, subject) pair at most once; once a bucket has used them all,
/// its remaining facts are noise.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

void write_rules(const std::vector<PlantedRule>& rules, const std::filesystem::path& file);
std::vector<PlantedRule> read_rules(const std::filesystem::path& file);

/// Id-space view of the planted rules for one vocabulary.
class RuleIndex {
 public:
  RuleIndex(const std::vector<PlantedRule>& rules, const Vocabulary& vocab);

  /// The entity the rule places at `slot` given the rest of `q`, if any.
  std::optional<EntityId> expected(const Quadruple& q, Slot slot) const;
  bool satisfies(const Quadruple& q) const;

 private:
  static constexpr EntityId kNone = ~EntityId{0};
  std::size_t num_entities_;
  std::vector<EntityId> object_of_;   // [p * E + s]
  std::vector<EntityId> subject_of_;  // [p * E + o]
};

}  // namespace tkgd
