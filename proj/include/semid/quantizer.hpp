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

struct KMeansConfig {
  std::uint32_t k = 1;
  std::uint32_t max_iters = 100;
  double tol = 1e-4;  // relative inertia-improvement stop threshold
  std::uint64_t seed = 0;
  // Non-empty (k x dim) matrix skips kmeans++ and starts from these.
  std::vector<float> init_centroids;
};

struct KMeansResult {
  std::vector<float> centroids;  // k x dim
  std::vector<std::uint32_t> assignments;
  double inertia = 0.0;
  // Inertia after each assignment pass; non-increasing by construction.
  std::vector<double> inertia_history;
  std::uint32_t iterations = 0;
};

/// Lloyd's algorithm with kmeans++ seeding. Deterministic given
/// (points, cfg): single-threaded scans in index order, distance ties
/// broken by lower centroid index. Clusters that lose all points are
/// reseeded to the point currently farthest from its centroid. The
/// returned assignments are a fresh pass against the final centroids.
KMeansResult kmeans(std::span<const float> points, std::size_t n,
                    std::uint32_t dim, const KMeansConfig& cfg);

/// Residual k-means stack: level 1 clusters the vectors, each further
/// level clusters the residuals left by the previous one.
CodebookStack train_rq(const EmbeddingSet& set, std::uint32_t levels,
                       std::uint32_t codebook_size, const TrainMeta& meta);

/// Recursive k-means tree of fixed depth: every node partitions its
/// points into at most `branching` clusters; single-point clusters still
/// grow a chain of single-child nodes so all ids have length `depth`.
/// Node centroids are the exact means of the points routed to them.
HcTree train_hc(const EmbeddingSet& set, std::uint32_t depth,
                std::uint32_t branching, const TrainMeta& meta);

// Sum of the centroid rows the id selects, one per level.
std::vector<float> reconstruct(const SemanticId& id,
                               const CodebookStack& stack);

// Copy with every row scaled to unit L2 norm (zero rows left alone).
// Applied before training and assignment when TrainMeta::normalize is set.
EmbeddingSet normalized_copy(const EmbeddingSet& set);

}  // namespace semid
