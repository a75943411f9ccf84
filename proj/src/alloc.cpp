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

#include "semid/alloc.hpp"

#include <algorithm>
#include <cmath>

#include "semid/vecmath.hpp"

namespace semid {
namespace {

struct Scored {
  double d2;
  std::uint32_t index;
};

// Shared by both indexer kinds: pick k best (d2, index) pairs and lay
// out a slice. `centroid_of` maps a candidate index to its row.
template <typename CentroidOf>
CandidateSlice make_slice(std::span<const float> x, std::uint32_t dim,
                          std::vector<Scored>& scored, std::uint32_t k,
                          bool rq_residuals, CentroidOf centroid_of) {
  auto cmp = [](const Scored& a, const Scored& b) {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    return a.index < b.index;
  };
  if (k < scored.size())
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), cmp);
  else
    std::sort(scored.begin(), scored.end(), cmp);

  CandidateSlice slice;
  slice.dim = dim;
  slice.indices.reserve(k);
  slice.distances.reserve(k);
  slice.residuals.reserve(static_cast<std::size_t>(k) * dim);
  for (std::uint32_t r = 0; r < k; ++r) {
    slice.indices.push_back(scored[r].index);
    slice.distances.push_back(std::sqrt(scored[r].d2));
    if (rq_residuals) {
      std::span<const float> c = centroid_of(scored[r].index);
      for (std::uint32_t j = 0; j < dim; ++j)
        slice.residuals.push_back(x[j] - c[j]);
    } else {
      slice.residuals.insert(slice.residuals.end(), x.begin(), x.end());
    }
  }
  return slice;
}

}  // namespace

CandidateSlice alloc_topk(std::span<const float> query, const Codebook& cb,
                          std::uint32_t k) {
  const std::uint32_t m = cb.size();
  if (k < 1 || k > m)
    throw ValidationError("alloc_topk: k=" + std::to_string(k) +
                          " out of range for codebook of size " +
                          std::to_string(m));
  if (query.size() != cb.dim)
    throw ValidationError("alloc_topk: query dim mismatch");

  std::vector<Scored> scored(m);
  for (std::uint32_t c = 0; c < m; ++c)
    scored[c] = {squared_l2(query, cb.centroid(c)), c};
  return make_slice(query, cb.dim, scored, k, /*rq_residuals=*/true,
                    [&](std::uint32_t idx) { return cb.centroid(idx); });
}

GreedyChain greedy_chain(std::span<const float> e, const CodebookStack& stack) {
  const std::uint32_t dim = stack.dim;
  const std::uint32_t levels = stack.num_levels();
  GreedyChain chain;
  chain.dim = dim;
  chain.residuals.reserve(static_cast<std::size_t>(levels + 1) * dim);
  chain.residuals.insert(chain.residuals.end(), e.begin(), e.end());
  chain.level_dists.reserve(levels);
  chain.id.tokens.reserve(levels);

  for (std::uint32_t l = 0; l < levels; ++l) {
    std::span<const float> r{chain.residuals.data() + l * dim, dim};
    CandidateSlice top = alloc_topk(r, stack.levels[l], 1);
    chain.id.tokens.push_back(top.indices[0]);
    chain.level_dists.push_back(top.distances[0]);
    std::span<const float> next = top.residual(0);
    chain.residuals.insert(chain.residuals.end(), next.begin(), next.end());
  }
  return chain;
}

CandidateSlice hc_candidates(std::span<const std::uint32_t> prefix,
                             std::span<const float> query, std::uint32_t k,
                             const HcTree& tree) {
  const HcNode* node = tree.node_at(prefix);
  if (node == nullptr)
    throw ValidationError("hc_candidates: prefix [" +
                          to_string(SemanticId{{prefix.begin(), prefix.end()}}) +
                          "] does not identify a node");
  if (node->children.empty())
    throw ValidationError("hc_candidates: prefix reaches a leaf");
  if (k < 1) throw ValidationError("hc_candidates: k must be >= 1");
  if (query.size() != tree.dim)
    throw ValidationError("hc_candidates: query dim mismatch");

  const std::uint32_t n_children =
      static_cast<std::uint32_t>(node->children.size());
  const std::uint32_t k_eff = std::min(k, n_children);

  std::vector<Scored> scored(n_children);
  for (std::uint32_t c = 0; c < n_children; ++c)
    scored[c] = {squared_l2(query, node->children[c].centroid), c};
  return make_slice(query, tree.dim, scored, k_eff, /*rq_residuals=*/false,
                    [&](std::uint32_t idx) {
                      return std::span<const float>(
                          node->children[idx].centroid);
                    });
}

CandidateProvider::CandidateProvider(const CodebookStack& stack)
    : mode_(Mode::RQ), stack_(&stack) {
  if (stack.num_levels() == 0)
    throw ValidationError("provider: stack has no levels");
}

CandidateProvider::CandidateProvider(const HcTree& tree)
    : mode_(Mode::HC), tree_(&tree) {
  if (tree.depth == 0) throw ValidationError("provider: tree has depth 0");
}

std::uint32_t CandidateProvider::levels() const {
  return mode_ == Mode::RQ ? stack_->num_levels() : tree_->depth;
}

std::uint32_t CandidateProvider::dim() const {
  return mode_ == Mode::RQ ? stack_->dim : tree_->dim;
}

std::uint64_t CandidateProvider::capacity() const {
  return mode_ == Mode::RQ ? stack_->capacity() : tree_->leaf_count();
}

std::uint32_t CandidateProvider::level_size(std::uint32_t level) const {
  if (level < 1 || level > levels())
    throw ValidationError("provider: level out of range");
  return mode_ == Mode::RQ ? stack_->levels[level - 1].size()
                           : tree_->branching;
}

CandidateSlice CandidateProvider::candidates(
    std::uint32_t level, std::span<const std::uint32_t> prefix,
    std::span<const float> x, std::uint32_t k) const {
  if (level < 1 || level > levels())
    throw ValidationError("provider: level out of range");
  if (mode_ == Mode::RQ) return alloc_topk(x, stack_->levels[level - 1], k);
  if (prefix.size() + 1 != level)
    throw ValidationError("provider: prefix length does not match level");
  return hc_candidates(prefix, x, k, *tree_);
}

GreedyChain CandidateProvider::chain(std::span<const float> e) const {
  if (mode_ == Mode::RQ) return greedy_chain(e, *stack_);

  // HC descent: x never changes, every residual row is e itself.
  GreedyChain chain;
  chain.dim = tree_->dim;
  const std::uint32_t depth = tree_->depth;
  chain.residuals.reserve(static_cast<std::size_t>(depth + 1) * chain.dim);
  chain.residuals.insert(chain.residuals.end(), e.begin(), e.end());
  for (std::uint32_t l = 0; l < depth; ++l) {
    CandidateSlice top = hc_candidates(chain.id.tokens, e, 1, *tree_);
    chain.id.tokens.push_back(top.indices[0]);
    chain.level_dists.push_back(top.distances[0]);
    chain.residuals.insert(chain.residuals.end(), e.begin(), e.end());
  }
  return chain;
}

}  // namespace semid
