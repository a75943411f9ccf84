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

#include "semid/metrics.hpp"

#include <limits>
#include <unordered_map>

#include "semid/quantizer.hpp"
#include "semid/vecmath.hpp"

namespace semid {

ConflictStats conflict_stats(const AssignReport& report) {
  std::unordered_map<SemanticId, std::size_t, SemanticIdHash> counts;
  counts.reserve(report.size());
  for (const SemanticId& id : report.ids) counts[id]++;

  ConflictStats stats;
  stats.n = report.size();
  for (const auto& [id, count] : counts) {
    if (count < 2) continue;
    stats.groups++;
    stats.conflicting += count;
  }
  stats.proportion =
      stats.n == 0 ? 0.0
                   : static_cast<double>(stats.conflicting) /
                         static_cast<double>(stats.n);
  return stats;
}

double id_distortion(std::span<const float> e, const SemanticId& id,
                     const CandidateProvider& provider) {
  if (provider.mode() == CandidateProvider::Mode::RQ) {
    std::vector<float> rec = reconstruct(id, *provider.stack());
    return std::sqrt(squared_l2(e, rec));
  }
  const HcTree& tree = *provider.tree();
  double sum = 0.0;
  const HcNode* node = &tree.root;
  for (std::uint32_t token : id.tokens) {
    if (token >= node->children.size())
      throw ValidationError("id_distortion: token out of range for tree");
    node = &node->children[token];
    sum += std::sqrt(squared_l2(e, node->centroid));
  }
  return sum;
}

DistortionReport distortion_report(
    const EmbeddingSet& set, const CandidateProvider& provider,
    std::span<const AssignReport* const> reports) {
  DistortionReport out;
  double greedy_mean = std::numeric_limits<double>::quiet_NaN();

  for (const AssignReport* report : reports) {
    if (report->size() != set.size())
      throw ValidationError("distortion_report: report size mismatch");
    std::vector<double> errors(set.size());
    double total = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      errors[i] = id_distortion(set.vec(i), report->ids[i], provider);
      total += errors[i];
    }
    StrategyDistortion entry;
    entry.strategy = report->strategy;
    entry.total = total;
    entry.mean = set.size() == 0 ? 0.0 : total / static_cast<double>(set.size());
    if (report->strategy == Strategy::Greedy) greedy_mean = entry.mean;
    out.entries.push_back(entry);
    out.per_embedding.push_back(std::move(errors));
  }

  for (StrategyDistortion& entry : out.entries) {
    if (std::isnan(greedy_mean)) {
      entry.overhead_vs_greedy = std::numeric_limits<double>::quiet_NaN();
    } else if (greedy_mean == 0.0) {
      entry.overhead_vs_greedy =
          entry.mean == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    } else {
      entry.overhead_vs_greedy = entry.mean / greedy_mean;
    }
  }
  return out;
}

RankHistogram rank_displacement(const AssignReport& report) {
  RankHistogram hist;
  if (report.chosen_ranks.empty()) return hist;
  hist.counts.resize(report.chosen_ranks.front().size());
  for (const std::vector<std::uint32_t>& ranks : report.chosen_ranks) {
    for (std::size_t l = 0; l < ranks.size(); ++l) {
      if (ranks[l] >= hist.counts[l].size())
        hist.counts[l].resize(ranks[l] + 1, 0);
      hist.counts[l][ranks[l]]++;
    }
  }
  return hist;
}

}  // namespace semid
