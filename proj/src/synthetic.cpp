// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "error.hpp"
#include "random.hpp"

namespace tkgd {

namespace {

std::string entity_label(std::size_t k) { return "ent_" + std::to_string(k); }
std::string relation_label(std::size_t k) { return "rel_" + std::to_string(k); }

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  const std::size_t E = spec.n_entities, R = spec.n_relations, B = spec.n_buckets;
  if (E < 1 || R < 1 || B < 1 || spec.n_facts < 1) {
    fail(ErrorCode::kInvalidArgument, "synthetic counts must all be >= 1");
  }
  if (!(spec.pattern_strength >= 0.0 && spec.pattern_strength <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "pattern_strength must lie in [0, 1]");
  }
  const double capacity = static_cast<double>(E) * E * R * B;
  if (static_cast<double>(spec.n_facts) > capacity) {
    fail(ErrorCode::kInvalidArgument, "requested " + std::to_string(spec.n_facts) +
                                          " facts exceeds |E|^2*|R|*|T| = " + std::to_string(static_cast<long long>(capacity)));
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<std::size_t> line(E);
  std::iota(line.begin(), line.end(), 0);
  shuffle(line, rng);
  std::vector<std::size_t> offset(R);
  const std::size_t max_offset = std::max<std::size_t>(1, std::min<std::size_t>(5, E > 1 ? E - 1 : 1));
  for (auto& k : offset) k = 1 + uniform_index(rng, max_offset);

  // (relation, line position) pairs for which the rule is defined
  std::vector<std::pair<std::size_t, std::size_t>> domain;
  for (std::size_t p = 0; p < R; ++p) {
    for (std::size_t i = 0; i + offset[p] < E; ++i) domain.emplace_back(p, i);
  }

  SyntheticDataset out;
  for (const auto& [p, i] : domain) {
    out.rules.push_back({relation_label(p), entity_label(line[i]), entity_label(line[i + offset[p]])});
  }

  struct Fact {
    std::size_t s, p, o, b;
  };
  auto key = [&](const Fact& f) { return ((f.b * R + f.p) * E + f.s) * E + f.o; };
  std::unordered_set<std::size_t> used;
  std::vector<Fact> facts;
  facts.reserve(spec.n_facts);

  std::vector<std::size_t> order(domain.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  std::size_t cursor = 0;

  for (std::size_t n = 0; n < spec.n_facts; ++n) {
    const std::size_t b = n * B / spec.n_facts;
    bool placed = false;
    if (!domain.empty() && uniform_unit(rng) < spec.pattern_strength) {
      // walk the shuffled domain cyclically so every pair appears early
      for (std::size_t tries = 0; tries < domain.size() && !placed; ++tries) {
        if (cursor == order.size()) {
          shuffle(order, rng);
          cursor = 0;
        }
        const auto [p, i] = domain[order[cursor++]];
        Fact f{line[i], p, line[i + offset[p]], b};
        if (used.insert(key(f)).second) {
          facts.push_back(f);
          placed = true;
        }
      }
    }
    if (placed) continue;
    Fact f{uniform_index(rng, E), uniform_index(rng, R), uniform_index(rng, E), b};
    for (std::size_t tries = 0; !used.insert(key(f)).second; ++tries) {
      if (tries < 64) {
        f = Fact{uniform_index(rng, E), uniform_index(rng, R), uniform_index(rng, E), b};
      } else {
        // dense corner: scan for the next free slot in any bucket
        std::size_t k = key(f);
        do {
          k = (k + 1) % static_cast<std::size_t>(capacity);
        } while (used.contains(k));
        f = Fact{(k / E) % E, (k / (E * E)) % R, k % E, k / (E * E * R)};
        used.insert(k);
        break;
      }
    }
    facts.push_back(f);
  }
  std::stable_sort(facts.begin(), facts.end(), [](const Fact& a, const Fact& b) { return a.b < b.b; });

  const std::size_t n_train = std::max<std::size_t>(1, facts.size() * 8 / 10);
  const std::size_t n_valid = std::min(facts.size() - n_train, facts.size() / 10);
  std::vector<RawFact> train, valid, test;
  for (std::size_t n = 0; n < facts.size(); ++n) {
    const auto& f = facts[n];
    RawFact raw{entity_label(f.s), relation_label(f.p), entity_label(f.o), spec.base_year + static_cast<int>(f.b)};
    (n < n_train ? train : n < n_train + n_valid ? valid : test).push_back(std::move(raw));
  }
  out.data = build_dataset(train, valid, test);
  return out;
}

void write_rules(const std::vector<PlantedRule>& rules, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) fail(ErrorCode::kIo, "cannot write " + file.string());
  for (const auto& r : rules) out << r.relation << '\t' << r.subject << '\t' << r.object << '\n';
}

std::vector<PlantedRule> read_rules(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::kIo, "cannot open rules file " + file.string());
  std::vector<PlantedRule> rules;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto a = line.find('\t');
    auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) {
      fail(ErrorCode::kParse, file.string() + ":" + std::to_string(lineno) + ": expected 3 tab-separated fields");
    }
    rules.push_back({line.substr(0, a), line.substr(a + 1, b - a - 1), line.substr(b + 1)});
  }
  return rules;
}

RuleIndex::RuleIndex(const std::vector<PlantedRule>& rules, const Vocabulary& vocab)
    : num_entities_(vocab.num_entities()),
      object_of_(vocab.num_relations() * vocab.num_entities(), kNone),
      subject_of_(vocab.num_relations() * vocab.num_entities(), kNone) {
  for (const auto& r : rules) {
    auto p = vocab.find_relation(r.relation);
    auto s = vocab.find_entity(r.subject);
    auto o = vocab.find_entity(r.object);
    if (!p || !s || !o) continue;  // rule mentions symbols absent from this dataset
    object_of_[*p * num_entities_ + *s] = *o;
    subject_of_[*p * num_entities_ + *o] = *s;
  }
}

std::optional<EntityId> RuleIndex::expected(const Quadruple& q, Slot slot) const {
  EntityId e = slot == Slot::kObject ? object_of_[q.p * num_entities_ + q.s] : subject_of_[q.p * num_entities_ + q.o];
  if (e == kNone) return std::nullopt;
  return e;
}

bool RuleIndex::satisfies(const Quadruple& q) const {
  auto e = expected(q, Slot::kObject);
  return e && *e == q.o;
}

}  // namespace tkgd
