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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace semid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent input: file contents, configs, token ranges.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// More embeddings than the index has distinct ids.
class CapacityError : public Error {
 public:
  CapacityError(std::size_t n, std::uint64_t capacity);
  std::size_t n;
  std::uint64_t capacity;
};

// Every candidate id for an embedding was already granted.
class ExhaustedError : public Error {
 public:
  explicit ExhaustedError(std::string key);
  std::string key;
};

/// Ordered collection of (document key, vector) pairs with uniform
/// dimension. Ingestion order is the processing order everywhere
/// downstream: earlier rows are assigned ids first.
struct EmbeddingSet {
  std::vector<std::string> keys;
  std::vector<float> data;  // row-major size() x dim
  std::uint32_t dim = 0;

  std::size_t size() const { return keys.size(); }
  std::span<const float> vec(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }

  // Checks uniform dimension, key uniqueness and finiteness.
  void validate() const;
};

/// One quantization level: M centroid rows of dimension dim.
struct Codebook {
  std::uint32_t level = 1;  // 1-based
  std::uint32_t dim = 0;
  std::vector<float> centroids;  // row-major size() x dim

  std::uint32_t size() const {
    return dim == 0 ? 0 : static_cast<std::uint32_t>(centroids.size() / dim);
  }
  std::span<const float> centroid(std::uint32_t idx) const {
    return {centroids.data() + static_cast<std::size_t>(idx) * dim, dim};
  }
};

// Training knobs recorded alongside a trained index so runs are
// reproducible from the persisted file alone.
struct TrainMeta {
  std::uint32_t max_iters = 100;
  double tol = 1e-4;
  std::uint64_t seed = 0;
  bool normalize = false;
};

/// Stack of L per-level codebooks sharing one dimension; the
/// residual-quantization indexer.
struct CodebookStack {
  std::vector<Codebook> levels;
  std::uint32_t dim = 0;
  TrainMeta meta;

  std::uint32_t num_levels() const {
    return static_cast<std::uint32_t>(levels.size());
  }
  // Product of level sizes, saturated at uint64 max.
  std::uint64_t capacity() const;
};

struct HcNode {
  std::vector<float> centroid;
  std::size_t train_count = 0;  // points routed here during training
  std::vector<HcNode> children; // empty iff leaf
};

/// Fixed-depth hierarchical-clustering tree. Every root-to-leaf path has
/// exactly `depth` edges; internal nodes have at most `branching`
/// children (fewer only when a training cluster had fewer points).
struct HcTree {
  std::uint32_t depth = 0;
  std::uint32_t branching = 0;
  std::uint32_t dim = 0;
  HcNode root;
  TrainMeta meta;

  std::uint64_t leaf_count() const;
  // Node reached by following child indices from the root, or nullptr.
  const HcNode* node_at(std::span<const std::uint32_t> prefix) const;
};

/// Length-L sequence of token indices. Ordering and equality are purely
/// lexicographic on tokens.
struct SemanticId {
  std::vector<std::uint32_t> tokens;

  auto operator<=>(const SemanticId&) const = default;
  std::size_t size() const { return tokens.size(); }
};

std::string to_string(const SemanticId& id);

struct SemanticIdHash {
  std::size_t operator()(const SemanticId& id) const;
};

/// Semantic prefix plus a non-semantic conflict index: the baseline id
/// scheme this toolkit exists to replace.
struct SuffixedId {
  SemanticId prefix;
  std::uint32_t suffix = 0;

  auto operator<=>(const SuffixedId&) const = default;
};

/// Top-k candidates of a single level for a single query: centroid
/// indices ascending by (distance, index), their distances, and the
/// residual rows (RQ: query - centroid; HC: the query unchanged).
struct CandidateSlice {
  std::vector<std::uint32_t> indices;
  std::vector<double> distances;
  std::vector<float> residuals;  // row-major size() x dim
  std::uint32_t dim = 0;

  std::size_t size() const { return indices.size(); }
  std::span<const float> residual(std::size_t r) const {
    return {residuals.data() + r * dim, dim};
  }
};

/// All per-level candidate slices for one embedding plus the requested
/// k vector (slices may be shorter where HC nodes had fewer children).
struct CandidateSet {
  std::vector<CandidateSlice> levels;
  std::vector<std::uint32_t> kvec;
};

/// Set of granted ids plus the per-prefix occurrence counter used by the
/// conflict-suffix baseline. Mutated only by the assignment driver.
class UsedIdRegistry {
 public:
  // Returns true iff id was newly inserted.
  bool insert(const SemanticId& id);
  bool contains(const SemanticId& id) const;
  std::size_t size() const { return used_.size(); }

  // Zero-based occurrence rank of `prefix`, advancing the counter.
  std::uint32_t next_suffix(const SemanticId& prefix);
  std::uint32_t suffix_count(const SemanticId& prefix) const;

 private:
  std::unordered_set<SemanticId, SemanticIdHash> used_;
  std::unordered_map<SemanticId, std::uint32_t, SemanticIdHash> prefix_counts_;
};

bool registry_insert(UsedIdRegistry& registry, const SemanticId& id);

// Throws CapacityError unless n distinct ids fit in the index.
void capacity_check(std::size_t n, const CodebookStack& stack);
void capacity_check(std::size_t n, const HcTree& tree);

}  // namespace semid
