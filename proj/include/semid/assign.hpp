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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semid/alloc.hpp"
#include "semid/types.hpp"

namespace semid {

enum class Strategy { Greedy, Suffix, Ecm, Rrs };

// Candidate orderings for ECM. ResidualScore sorts by descending
// negative-residual-norm score; CombinationOrder keeps odometer order
// over candidate ranks (last level fastest); Random is a seeded shuffle.
enum class Ranking { ResidualScore, CombinationOrder, Random };

enum class OnExhausted { Fail, WidenK };

struct AssignConfig {
  std::vector<std::uint32_t> kvec;  // per-level candidate counts
  Strategy strategy = Strategy::Ecm;
  Ranking ranking = Ranking::ResidualScore;
  std::uint64_t ranking_seed = 0;
  OnExhausted on_exhausted = OnExhausted::Fail;
};

/// Outcome of one assignment run over a set, rows aligned with the
/// set's processing order.
struct AssignReport {
  Strategy strategy = Strategy::Greedy;
  std::vector<std::string> keys;
  std::vector<SemanticId> ids;
  std::vector<std::uint32_t> suffixes;  // filled only by the suffix baseline
  // 0-based candidate rank chosen per level (all zeros for greedy/suffix).
  std::vector<std::vector<std::uint32_t>> chosen_ranks;
  // Negative sum of the granted id's per-level residual norms.
  std::vector<double> scores;
  std::size_t widened = 0;  // embeddings that needed a wider kvec
  double assign_seconds = 0.0;

  std::size_t size() const { return keys.size(); }
};

double score_candidate(std::span<const double> level_norms);

struct EcmCandidate {
  SemanticId id;
  std::vector<std::uint32_t> ranks;
  std::vector<double> level_dists;
  double score = 0.0;
};

/// Every candidate id combination for one embedding, ordered by the
/// ranking strategy. RQ scores all combinations against the fixed
/// greedy-chain residuals; HC expands the per-node candidate tree and
/// scores by path distances.
std::vector<EcmCandidate> enumerate_ecm_candidates(
    const CandidateProvider& provider, const GreedyChain& chain,
    std::span<const std::uint32_t> kvec, Ranking ranking,
    std::uint64_t rng_seed);

// Nearest id per embedding; conflicts allowed and preserved.
AssignReport assign_greedy(const EmbeddingSet& set,
                           const CandidateProvider& provider);

// Greedy prefix plus zero-based occurrence rank; never conflicts.
AssignReport assign_suffix(const EmbeddingSet& set,
                           const CandidateProvider& provider);

// Exhaustive candidate matching: grants the best-ranked unused
// combination per embedding.
AssignReport assign_ecm(const EmbeddingSet& set,
                        const CandidateProvider& provider,
                        const AssignConfig& cfg,
                        UsedIdRegistry registry = UsedIdRegistry{});

// Recursive residual searching: depth-first over candidate ranks with
// branch-local residual updates; grants the first unused complete id.
AssignReport assign_rrs(const EmbeddingSet& set,
                        const CandidateProvider& provider,
                        const AssignConfig& cfg,
                        UsedIdRegistry registry = UsedIdRegistry{});

AssignReport assign(const EmbeddingSet& set, const CandidateProvider& provider,
                    const AssignConfig& cfg,
                    UsedIdRegistry registry = UsedIdRegistry{});

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);
std::string ranking_name(Ranking r);
Ranking ranking_from_name(const std::string& name);

}  // namespace semid
