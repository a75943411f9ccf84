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
#include <utility>
#include <vector>

#include "semid/alloc.hpp"
#include "semid/assign.hpp"
#include "semid/types.hpp"

namespace semid {

struct ConflictStats {
  std::size_t n = 0;
  std::size_t conflicting = 0;  // embeddings whose id is shared
  std::size_t groups = 0;       // shared-id groups
  double proportion = 0.0;
};

// Exact grouping of a greedy report's ids by equality.
ConflictStats conflict_stats(const AssignReport& greedy_report);

/// Reconstruction error of a granted id: RQ measures the distance
/// between the embedding and the sum of its centroids; HC has no
/// reconstruction, so it sums the node-centroid distances along the path.
double id_distortion(std::span<const float> e, const SemanticId& id,
                     const CandidateProvider& provider);

struct StrategyDistortion {
  Strategy strategy;
  double mean = 0.0;
  double total = 0.0;
  double overhead_vs_greedy = 1.0;
};

struct DistortionReport {
  std::vector<StrategyDistortion> entries;
  // Per-strategy per-embedding errors, aligned with `entries`.
  std::vector<std::vector<double>> per_embedding;
};

DistortionReport distortion_report(
    const EmbeddingSet& set, const CandidateProvider& provider,
    std::span<const AssignReport* const> reports);

/// Per-level histogram of chosen candidate ranks: counts[l][r] is how
/// many embeddings took the (r+1)-nearest choice at level l+1.
struct RankHistogram {
  std::vector<std::vector<std::uint64_t>> counts;
};

RankHistogram rank_displacement(const AssignReport& report);

struct TimingReport {
  std::vector<std::pair<std::string, double>> phases;  // name, seconds

  void add(std::string phase, double seconds) {
    phases.emplace_back(std::move(phase), seconds);
  }
};

}  // namespace semid
