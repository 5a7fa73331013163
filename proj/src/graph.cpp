// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tkgd Authors

#include "graph.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "error.hpp"
#include "random.hpp"

namespace tkgd {

namespace {

inline std::size_t mix(std::size_t h, std::uint64_t v) {
  // splitmix-style combine
  v += 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return static_cast<std::size_t>(v ^ (v >> 31));
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace

std::size_t QuadrupleHash::operator()(const Quadruple& q) const noexcept {
  std::size_t h = mix(0, q.s);
  h = mix(h, q.p);
  h = mix(h, q.o);
  return mix(h, q.t);
}

std::size_t KnownFacts::KeyHash::operator()(const Key& k) const noexcept {
  return mix(mix(mix(0, k.a), k.b), k.c);
}

std::string_view to_string(Slot slot) { return slot == Slot::kSubject ? "subject" : "object"; }

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  fail(ErrorCode::kInvalidArgument, "unknown split '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- Vocabulary

EntityId Vocabulary::add_entity(std::string_view name) {
  auto [it, inserted] = entity_ids_.try_emplace(std::string(name), static_cast<EntityId>(entity_names_.size()));
  if (inserted) entity_names_.emplace_back(name);
  return it->second;
}

RelationId Vocabulary::add_relation(std::string_view name) {
  auto [it, inserted] =
      relation_ids_.try_emplace(std::string(name), static_cast<RelationId>(relation_names_.size()));
  if (inserted) relation_names_.emplace_back(name);
  return it->second;
}

void Vocabulary::set_years(std::vector<int> years) {
  for (std::size_t i = 1; i < years.size(); ++i) {
    if (years[i] <= years[i - 1]) fail(ErrorCode::kInvalidArgument, "time buckets must be strictly ascending");
  }
  years_ = std::move(years);
}

std::optional<EntityId> Vocabulary::find_entity(std::string_view name) const {
  auto it = entity_ids_.find(std::string(name));
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Vocabulary::find_relation(std::string_view name) const {
  auto it = relation_ids_.find(std::string(name));
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<TimeId> Vocabulary::find_year(int year) const {
  auto it = std::lower_bound(years_.begin(), years_.end(), year);
  if (it == years_.end() || *it != year) return std::nullopt;
  return static_cast<TimeId>(it - years_.begin());
}

TimeId Vocabulary::clamp_year(int year) const {
  if (years_.empty()) fail(ErrorCode::kInvalidArgument, "no time buckets to clamp into");
  auto it = std::lower_bound(years_.begin(), years_.end(), year);
  if (it == years_.begin()) return 0;
  if (it == years_.end()) return static_cast<TimeId>(years_.size() - 1);
  auto hi = static_cast<TimeId>(it - years_.begin());
  // ties go to the later bucket
  return (year - years_[hi - 1] < years_[hi] - year) ? hi - 1 : hi;
}

// ---------------------------------------------------------------- KnownFacts

void KnownFacts::insert(const Quadruple& q) {
  if (!facts_.insert(q).second) return;
  objects_[Key{q.s, q.p, q.t}].push_back(q.o);
  subjects_[Key{q.p, q.o, q.t}].push_back(q.s);
}

std::span<const EntityId> KnownFacts::completions(const Quadruple& q, Slot slot) const {
  const auto& index = slot == Slot::kObject ? objects_ : subjects_;
  Key key = slot == Slot::kObject ? Key{q.s, q.p, q.t} : Key{q.p, q.o, q.t};
  auto it = index.find(key);
  if (it == index.end()) return {};
  return it->second;
}

// ---------------------------------------------------------------- Dataset

std::span<const Quadruple> Dataset::split(Split which) const {
  switch (which) {
    case Split::kTrain: return train;
    case Split::kValid: return valid;
    case Split::kTest: return test;
  }
  return {};
}

std::vector<std::vector<Quadruple>> Dataset::snapshots(Split which) const {
  std::vector<std::vector<Quadruple>> out(vocab.num_times());
  for (const auto& q : split(which)) out[q.t].push_back(q);
  return out;
}

Digest Dataset::digest() const {
  Sha256 h;
  auto put_u32 = [&h](std::uint32_t v) {
    std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                         static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
    h.update(std::span<const std::uint8_t>(b, 4));
  };
  auto put_str = [&](const std::string& s) {
    put_u32(static_cast<std::uint32_t>(s.size()));
    h.update(s);
  };
  put_u32(static_cast<std::uint32_t>(vocab.num_entities()));
  for (const auto& n : vocab.entity_names()) put_str(n);
  put_u32(static_cast<std::uint32_t>(vocab.num_relations()));
  for (const auto& n : vocab.relation_names()) put_str(n);
  put_u32(static_cast<std::uint32_t>(vocab.num_times()));
  for (int y : vocab.years()) put_u32(static_cast<std::uint32_t>(y));
  for (auto which : {Split::kTrain, Split::kValid, Split::kTest}) {
    auto quads = split(which);
    put_u32(static_cast<std::uint32_t>(quads.size()));
    for (const auto& q : quads) {
      put_u32(q.s);
      put_u32(q.p);
      put_u32(q.o);
      put_u32(q.t);
    }
  }
  return h.finish();
}

Dataset build_dataset(const std::vector<RawFact>& train, const std::vector<RawFact>& valid,
                      const std::vector<RawFact>& test) {
  if (train.empty()) fail(ErrorCode::kParse, "training split is empty");
  Dataset data;
  std::set<int> train_years;
  for (const auto& f : train) train_years.insert(f.year);
  data.vocab.set_years(std::vector<int>(train_years.begin(), train_years.end()));

  auto convert = [&](const std::vector<RawFact>& raw, std::vector<Quadruple>& out, Split which) {
    std::unordered_set<Quadruple, QuadrupleHash> seen;
    std::size_t duplicates = 0;
    for (const auto& f : raw) {
      Quadruple q;
      q.s = data.vocab.add_entity(f.subject);
      q.p = data.vocab.add_relation(f.relation);
      q.o = data.vocab.add_entity(f.object);
      q.t = data.vocab.clamp_year(f.year);
      if (!seen.insert(q).second) {
        ++duplicates;
        continue;
      }
      out.push_back(q);
    }
    if (duplicates > 0) {
      warn("dropped " + std::to_string(duplicates) + " duplicate fact(s) in " +
           std::string(to_string(which)) + " split");
    }
  };
  convert(train, data.train, Split::kTrain);
  convert(valid, data.valid, Split::kValid);
  convert(test, data.test, Split::kTest);
  for (auto which : {Split::kTrain, Split::kValid, Split::kTest}) {
    for (const auto& q : data.split(which)) data.known.insert(q);
  }
  return data;
}

// ---------------------------------------------------------------- parsing

std::optional<int> parse_year(std::string_view token) {
  auto bad = [&]() -> std::optional<int> {
    fail(ErrorCode::kParse, "unparseable timestamp '" + std::string(token) + "'");
  };
  std::string_view rest = token;
  bool negative = false;
  if (!rest.empty() && rest.front() == '-') {
    negative = true;
    rest.remove_prefix(1);
  }
  auto dash = rest.find('-');
  std::string_view year = rest.substr(0, dash);
  if (year.empty() || year.size() > 4) return bad();
  bool wildcard = false;
  int value = 0;
  for (char c : year) {
    if (c == '#') {
      wildcard = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      value = value * 10 + (c - '0');
    } else {
      return bad();
    }
  }
  if (dash != std::string_view::npos) {
    // month/day: digits or '#', separated by '-'
    std::string_view md = rest.substr(dash + 1);
    if (md.empty()) return bad();
    for (char c : md) {
      if (c != '-' && c != '#' && !std::isdigit(static_cast<unsigned char>(c))) return bad();
    }
  }
  if (wildcard) return std::nullopt;
  return negative ? -value : value;
}

std::vector<RawFact> read_split_file(const std::filesystem::path& file, const LoadOptions& options) {
  std::ifstream in(file);
  if (!in) fail(ErrorCode::kIo, "cannot open split file " + file.string());
  std::vector<RawFact> facts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() < 4) {
      fail(ErrorCode::kParse, file.string() + ":" + std::to_string(lineno) + ": expected at least 4 tab-separated fields, got " +
                                  std::to_string(fields.size()));
    }
    std::optional<int> begin;
    std::optional<int> end;
    try {
      begin = parse_year(fields[3]);
      if (fields.size() > 4 && !fields[4].empty()) end = parse_year(fields[4]);
    } catch (const Error& e) {
      fail(ErrorCode::kParse, file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    auto primary = options.time_field == TimeField::kBegin ? begin : end;
    auto fallback = options.time_field == TimeField::kBegin ? end : begin;
    auto year = primary ? primary : fallback;
    if (!year) {
      fail(ErrorCode::kParse, file.string() + ":" + std::to_string(lineno) + ": unparseable timestamp '" +
                                  std::string(fields[3]) + "' (year fully wildcarded)");
    }
    facts.push_back(RawFact{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]), *year});
  }
  return facts;
}

Dataset load_quadruples(const std::filesystem::path& dir, const LoadOptions& options) {
  auto train = read_split_file(dir / "train.txt", options);
  auto valid = read_split_file(dir / "valid.txt", options);
  auto test = read_split_file(dir / "test.txt", options);
  return build_dataset(train, valid, test);
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (auto which : {Split::kTrain, Split::kValid, Split::kTest}) {
    auto path = dir / (std::string(to_string(which)) + ".txt");
    std::ofstream out(path);
    if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
    for (const auto& q : data.split(which)) {
      out << data.vocab.entity_name(q.s) << '\t' << data.vocab.relation_name(q.p) << '\t'
          << data.vocab.entity_name(q.o) << '\t' << data.vocab.year(q.t) << '\n';
    }
  }
}

// ---------------------------------------------------------------- candidates

CandidateSet build_candidates(const Quadruple& q, Slot slot, std::size_t num_entities) {
  CandidateSet cs;
  cs.query = q;
  cs.slot = slot;
  cs.candidates.resize(num_entities);
  for (std::size_t i = 0; i < num_entities; ++i) cs.candidates[i] = static_cast<EntityId>(i);
  cs.ground_truth_index = slot_entity(q, slot);
  if (cs.ground_truth_index >= num_entities) fail(ErrorCode::kInvalidArgument, "query entity out of range");
  return cs;
}

CandidateSet build_candidates(const Quadruple& q, Slot slot, const Vocabulary& vocab) {
  if (!vocab.contains(q)) fail(ErrorCode::kInvalidArgument, "quadruple ids out of vocabulary bounds");
  return build_candidates(q, slot, vocab.num_entities());
}

CandidateSet filter_candidates(const CandidateSet& cs, const KnownFacts& known) {
  auto completions = known.completions(cs.query, cs.slot);
  if (completions.empty()) return cs;
  const EntityId truth = cs.ground_truth();
  std::unordered_set<EntityId> drop(completions.begin(), completions.end());
  drop.erase(truth);
  CandidateSet out;
  out.query = cs.query;
  out.slot = cs.slot;
  out.candidates.reserve(cs.candidates.size());
  for (EntityId e : cs.candidates) {
    if (drop.contains(e)) continue;
    if (e == truth) out.ground_truth_index = out.candidates.size();
    out.candidates.push_back(e);
  }
  return out;
}

std::vector<Quadruple> sample_negatives(const Quadruple& q, std::size_t n, std::size_t num_entities,
                                        std::mt19937_64& rng) {
  if (num_entities < 2) fail(ErrorCode::kInvalidArgument, "negative sampling needs at least 2 entities");
  if (n == 0) fail(ErrorCode::kInvalidArgument, "negative sample count must be >= 1");
  std::vector<Quadruple> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Slot slot = coin(rng) ? Slot::kSubject : Slot::kObject;
    EntityId original = slot_entity(q, slot);
    auto e = static_cast<EntityId>(uniform_index(rng, num_entities - 1));
    if (e >= original) ++e;
    out.push_back(substitute(q, slot, e));
  }
  return out;
}

}  // namespace tkgd
