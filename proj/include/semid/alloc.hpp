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
#include <vector>

#include "semid/types.hpp"

namespace semid {

/// k nearest centroids of one codebook by Euclidean distance, ascending,
/// ties by ascending centroid index. Residual rows are query - centroid.
/// The scan is exhaustive; codebooks are small enough that exactness is
/// cheaper than any index.
CandidateSlice alloc_topk(std::span<const float> query, const Codebook& cb,
                          std::uint32_t k);

/// Nearest-centroid descent through a stack: token l is the nearest
/// level-l centroid to the running residual. Keeps every intermediate
/// residual r^(1) = e .. r^(L+1) = final.
struct GreedyChain {
  SemanticId id;
  std::vector<float> residuals;    // (L+1) x dim, row l is r^(l+1)
  std::vector<double> level_dists; // distance of the chosen centroid per level
  std::uint32_t dim = 0;

  std::span<const float> residual(std::size_t l) const {  // l in 0..L
    return {residuals.data() + l * dim, dim};
  }
  std::span<const float> final_residual() const {
    return residual(level_dists.size());
  }
};

GreedyChain greedy_chain(std::span<const float> e, const CodebookStack& stack);

/// k nearest children of the tree node identified by `prefix`, measured
/// from the original query (HC never forms residuals; the residual slot
/// carries the query unchanged). k larger than the child count is
/// clamped, visible as a shorter slice.
CandidateSlice hc_candidates(std::span<const std::uint32_t> prefix,
                             std::span<const float> query, std::uint32_t k,
                             const HcTree& tree);

/// Uniform candidate surface over the two indexer kinds, so assignment
/// strategies run unchanged on RQ stacks and HC trees. The vector `x`
/// threads the per-branch state: RQ passes the running residual, HC the
/// unchanged query.
class CandidateProvider {
 public:
  enum class Mode { RQ, HC };

  explicit CandidateProvider(const CodebookStack& stack);
  explicit CandidateProvider(const HcTree& tree);

  Mode mode() const { return mode_; }
  std::uint32_t levels() const;
  std::uint32_t dim() const;
  std::uint64_t capacity() const;
  // Upper bound on tokens available at this level (HC nodes may have fewer).
  std::uint32_t level_size(std::uint32_t level) const;  // level is 1-based

  // `level` is 1-based; `prefix` must hold the level-1 tokens chosen so
  // far (HC walks it to the node; RQ ignores it).
  CandidateSlice candidates(std::uint32_t level,
                            std::span<const std::uint32_t> prefix,
                            std::span<const float> x, std::uint32_t k) const;

  GreedyChain chain(std::span<const float> e) const;

  const CodebookStack* stack() const { return stack_; }
  const HcTree* tree() const { return tree_; }

 private:
  Mode mode_;
  const CodebookStack* stack_ = nullptr;
  const HcTree* tree_ = nullptr;
};

}  // namespace semid
