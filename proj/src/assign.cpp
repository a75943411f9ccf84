// Copyright 2026 The SemID Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "semid/assign.hpp"

#include <algorithm>
#include <chrono>
#include <optional>

#include "semid/rng.hpp"

namespace semid {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void validate_kvec(const CandidateProvider& provider,
                   std::span<const std::uint32_t> kvec) {
  if (kvec.size() != provider.levels())
    throw ValidationError("assign: kvec length " +
                          std::to_string(kvec.size()) +
                          " does not match index levels " +
                          std::to_string(provider.levels()));
  for (std::uint32_t l = 1; l <= kvec.size(); ++l) {
    std::uint32_t k = kvec[l - 1];
    if (k < 1 || k > provider.level_size(l))
      throw ValidationError("assign: k_" + std::to_string(l) + "=" +
                            std::to_string(k) + " out of range [1, " +
                            std::to_string(provider.level_size(l)) + "]");
  }
}

// One doubling step, capped per level; false when already at the cap.
bool widen_kvec(const CandidateProvider& provider,
                std::vector<std::uint32_t>& kvec) {
  bool changed = false;
  for (std::uint32_t l = 1; l <= kvec.size(); ++l) {
    std::uint32_t cap = provider.level_size(l);
    std::uint32_t next = std::min<std::uint32_t>(cap, kvec[l - 1] * 2);
    if (next != kvec[l - 1]) {
      kvec[l - 1] = next;
      changed = true;
    }
  }
  return changed;
}

std::uint64_t embedding_rng_seed(std::uint64_t ranking_seed, std::size_t i) {
  return derive_seed(ranking_seed, 0x52616e6bULL + i);
}

// Odometer product of the fixed per-level slices (RQ path of ECM).
void enumerate_product(const std::vector<CandidateSlice>& slices,
                       std::vector<EcmCandidate>& out) {
  const std::size_t levels = slices.size();
  std::size_t total = 1;
  for (const CandidateSlice& s : slices) total *= s.size();
  out.reserve(total);

  std::vector<std::uint32_t> ranks(levels, 0);
  for (std::size_t c = 0; c < total; ++c) {
    EcmCandidate cand;
    cand.ranks = ranks;
    cand.id.tokens.resize(levels);
    cand.level_dists.resize(levels);
    for (std::size_t l = 0; l < levels; ++l) {
      cand.id.tokens[l] = slices[l].indices[ranks[l]];
      cand.level_dists[l] = slices[l].distances[ranks[l]];
    }
    cand.score = score_candidate(cand.level_dists);
    out.push_back(std::move(cand));
    for (std::size_t l = levels; l-- > 0;) {  // last level fastest
      if (++ranks[l] < slices[l].size()) break;
      ranks[l] = 0;
    }
  }
}

// Recursive expansion of the per-node candidate tree (HC path of ECM).
// Emission order is the same odometer order over ranks.
void enumerate_tree(const CandidateProvider& provider,
                    std::span<const float> e,
                    std::span<const std::uint32_t> kvec,
                    std::vector<std::uint32_t>& prefix,
                    std::vector<std::uint32_t>& ranks,
                    std::vector<double>& dists,
                    std::vector<EcmCandidate>& out) {
  const std::uint32_t level = static_cast<std::uint32_t>(prefix.size()) + 1;
  CandidateSlice slice = provider.candidates(level, prefix, e, kvec[level - 1]);
  for (std::uint32_t r = 0; r < slice.size(); ++r) {
    prefix.push_back(slice.indices[r]);
    ranks.push_back(r);
    dists.push_back(slice.distances[r]);
    if (level == kvec.size()) {
      EcmCandidate cand;
      cand.id.tokens = prefix;
      cand.ranks = ranks;
      cand.level_dists = dists;
      cand.score = score_candidate(dists);
      out.push_back(std::move(cand));
    } else {
      enumerate_tree(provider, e, kvec, prefix, ranks, dists, out);
    }
    prefix.pop_back();
    ranks.pop_back();
    dists.pop_back();
  }
}

void apply_ranking(std::vector<EcmCandidate>& cands, Ranking ranking,
                   std::uint64_t rng_seed) {
  switch (ranking) {
    case Ranking::CombinationOrder:
      break;  // generation order is already odometer order
    case Ranking::ResidualScore:
      std::sort(cands.begin(), cands.end(),
                [](const EcmCandidate& a, const EcmCandidate& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.ranks < b.ranks;
                });
      break;
    case Ranking::Random: {
      Rng rng(rng_seed);
      for (std::size_t i = cands.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
        std::swap(cands[i - 1], cands[j]);
      }
      break;
    }
  }
}

struct Grant {
  SemanticId id;
  std::vector<std::uint32_t> ranks;
  std::vector<double> level_dists;
  double score = 0.0;
};

// Depth-first search over candidate ranks, residuals recomputed per
// branch; returns the first depth-L id absent from the registry.
std::optional<Grant> rrs_search(const CandidateProvider& provider,
                                const UsedIdRegistry& registry,
                                std::span<const std::uint32_t> kvec,
                                std::span<const float> x,
                                std::vector<std::uint32_t>& prefix,
                                std::vector<std::uint32_t>& ranks,
                                std::vector<double>& dists) {
  const std::uint32_t level = static_cast<std::uint32_t>(prefix.size()) + 1;
  CandidateSlice slice = provider.candidates(level, prefix, x, kvec[level - 1]);
  for (std::uint32_t r = 0; r < slice.size(); ++r) {
    prefix.push_back(slice.indices[r]);
    ranks.push_back(r);
    dists.push_back(slice.distances[r]);
    std::optional<Grant> found;
    if (level == kvec.size()) {
      SemanticId id{{prefix.begin(), prefix.end()}};
      if (!registry.contains(id))
        found = Grant{std::move(id),
                      {ranks.begin(), ranks.end()},
                      {dists.begin(), dists.end()},
                      score_candidate(dists)};
    } else {
      found = rrs_search(provider, registry, kvec, slice.residual(r), prefix,
                         ranks, dists);
    }
    prefix.pop_back();
    ranks.pop_back();
    dists.pop_back();
    if (found) return found;
  }
  return std::nullopt;
}

AssignReport make_report(Strategy strategy, const EmbeddingSet& set) {
  AssignReport report;
  report.strategy = strategy;
  report.keys = set.keys;
  report.ids.reserve(set.size());
  report.chosen_ranks.reserve(set.size());
  report.scores.reserve(set.size());
  return report;
}

}  // namespace

double score_candidate(std::span<const double> level_norms) {
  double sum = 0.0;
  for (double n : level_norms) sum += n;
  return -sum;
}

std::vector<EcmCandidate> enumerate_ecm_candidates(
    const CandidateProvider& provider, const GreedyChain& chain,
    std::span<const std::uint32_t> kvec, Ranking ranking,
    std::uint64_t rng_seed) {
  std::vector<EcmCandidate> cands;
  if (provider.mode() == CandidateProvider::Mode::RQ) {
    // Per-level lists are fixed against the greedy-chain residuals;
    // combinations cannot re-derive residuals level by level, since all
    // levels are allocated before any combination is scored.
    std::vector<CandidateSlice> slices;
    slices.reserve(kvec.size());
    for (std::uint32_t l = 0; l < kvec.size(); ++l)
      slices.push_back(provider.candidates(
          l + 1, std::span<const std::uint32_t>{}, chain.residual(l),
          kvec[l]));
    enumerate_product(slices, cands);
  } else {
    std::vector<std::uint32_t> prefix, ranks;
    std::vector<double> dists;
    enumerate_tree(provider, chain.residual(0), kvec, prefix, ranks, dists,
                   cands);
  }
  apply_ranking(cands, ranking, rng_seed);
  return cands;
}

AssignReport assign_greedy(const EmbeddingSet& set,
                           const CandidateProvider& provider) {
  auto start = Clock::now();
  AssignReport report = make_report(Strategy::Greedy, set);
  const std::uint32_t levels = provider.levels();
  for (std::size_t i = 0; i < set.size(); ++i) {
    GreedyChain chain = provider.chain(set.vec(i));
    report.ids.push_back(std::move(chain.id));
    report.chosen_ranks.emplace_back(levels, 0);
    report.scores.push_back(score_candidate(chain.level_dists));
  }
  report.assign_seconds = seconds_since(start);
  return report;
}

AssignReport assign_suffix(const EmbeddingSet& set,
                           const CandidateProvider& provider) {
  auto start = Clock::now();
  AssignReport report = make_report(Strategy::Suffix, set);
  report.suffixes.reserve(set.size());
  UsedIdRegistry registry;
  const std::uint32_t levels = provider.levels();
  for (std::size_t i = 0; i < set.size(); ++i) {
    GreedyChain chain = provider.chain(set.vec(i));
    report.suffixes.push_back(registry.next_suffix(chain.id));
    report.ids.push_back(std::move(chain.id));
    report.chosen_ranks.emplace_back(levels, 0);
    report.scores.push_back(score_candidate(chain.level_dists));
  }
  report.assign_seconds = seconds_since(start);
  return report;
}

AssignReport assign_ecm(const EmbeddingSet& set,
                        const CandidateProvider& provider,
                        const AssignConfig& cfg, UsedIdRegistry registry) {
  validate_kvec(provider, cfg.kvec);
  if (provider.mode() == CandidateProvider::Mode::RQ)
    capacity_check(set.size() + registry.size(), *provider.stack());
  else
    capacity_check(set.size() + registry.size(), *provider.tree());

  auto start = Clock::now();
  AssignReport report = make_report(Strategy::Ecm, set);

  for (std::size_t i = 0; i < set.size(); ++i) {
    GreedyChain chain = provider.chain(set.vec(i));

    // Fast path: the greedy id ranks first under score and combination
    // order, so granting it directly when free is output-equivalent.
    if (cfg.ranking != Ranking::Random && !registry.contains(chain.id)) {
      registry.insert(chain.id);
      report.chosen_ranks.emplace_back(provider.levels(), 0);
      report.scores.push_back(score_candidate(chain.level_dists));
      report.ids.push_back(std::move(chain.id));
      continue;
    }

    std::vector<std::uint32_t> kvec = cfg.kvec;
    bool granted = false;
    bool first_try = true;
    while (!granted) {
      std::vector<EcmCandidate> cands = enumerate_ecm_candidates(
          provider, chain, kvec, cfg.ranking,
          embedding_rng_seed(cfg.ranking_seed, i));
      for (EcmCandidate& cand : cands) {
        if (registry.contains(cand.id)) continue;
        registry.insert(cand.id);
        report.ids.push_back(std::move(cand.id));
        report.chosen_ranks.push_back(std::move(cand.ranks));
        report.scores.push_back(cand.score);
        granted = true;
        break;
      }
      if (granted) break;
      if (cfg.on_exhausted == OnExhausted::Fail || !widen_kvec(provider, kvec))
        throw ExhaustedError(set.keys[i]);
      if (first_try) {
        ++report.widened;
        first_try = false;
      }
    }
  }
  report.assign_seconds = seconds_since(start);
  return report;
}

AssignReport assign_rrs(const EmbeddingSet& set,
                        const CandidateProvider& provider,
                        const AssignConfig& cfg, UsedIdRegistry registry) {
  validate_kvec(provider, cfg.kvec);
  if (provider.mode() == CandidateProvider::Mode::RQ)
    capacity_check(set.size() + registry.size(), *provider.stack());
  else
    capacity_check(set.size() + registry.size(), *provider.tree());

  auto start = Clock::now();
  AssignReport report = make_report(Strategy::Rrs, set);

  std::vector<std::uint32_t> prefix, ranks;
  std::vector<double> dists;
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::vector<std::uint32_t> kvec = cfg.kvec;
    bool first_try = true;
    for (;;) {
      prefix.clear();
      ranks.clear();
      dists.clear();
      std::optional<Grant> found = rrs_search(provider, registry, kvec,
                                              set.vec(i), prefix, ranks, dists);
      if (found) {
        registry.insert(found->id);
        report.ids.push_back(std::move(found->id));
        report.chosen_ranks.push_back(std::move(found->ranks));
        report.scores.push_back(found->score);
        break;
      }
      if (cfg.on_exhausted == OnExhausted::Fail || !widen_kvec(provider, kvec))
        throw ExhaustedError(set.keys[i]);
      if (first_try) {
        ++report.widened;
        first_try = false;
      }
    }
  }
  report.assign_seconds = seconds_since(start);
  return report;
}

AssignReport assign(const EmbeddingSet& set, const CandidateProvider& provider,
                    const AssignConfig& cfg, UsedIdRegistry registry) {
  switch (cfg.strategy) {
    case Strategy::Greedy:
      return assign_greedy(set, provider);
    case Strategy::Suffix:
      return assign_suffix(set, provider);
    case Strategy::Ecm:
      return assign_ecm(set, provider, cfg, std::move(registry));
    case Strategy::Rrs:
      return assign_rrs(set, provider, cfg, std::move(registry));
  }
  throw ValidationError("assign: unknown strategy");
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Greedy: return "greedy";
    case Strategy::Suffix: return "suffix";
    case Strategy::Ecm: return "ecm";
    case Strategy::Rrs: return "rrs";
  }
  return "unknown";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "greedy") return Strategy::Greedy;
  if (name == "suffix") return Strategy::Suffix;
  if (name == "ecm") return Strategy::Ecm;
  if (name == "rrs") return Strategy::Rrs;
  throw ValidationError("unknown strategy '" + name + "'");
}

std::string ranking_name(Ranking r) {
  switch (r) {
    case Ranking::ResidualScore: return "score";
    case Ranking::CombinationOrder: return "order";
    case Ranking::Random: return "random";
  }
  return "unknown";
}

Ranking ranking_from_name(const std::string& name) {
  if (name == "score") return Ranking::ResidualScore;
  if (name == "order") return Ranking::CombinationOrder;
  if (name == "random") return Ranking::Random;
  throw ValidationError("unknown ranking '" + name + "'");
}

}  // namespace semid
