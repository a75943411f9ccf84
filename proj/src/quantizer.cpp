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

#include "semid/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semid/rng.hpp"
#include "semid/vecmath.hpp"

namespace semid {
namespace {

std::span<const float> row(std::span<const float> m, std::size_t i,
                           std::uint32_t dim) {
  return m.subspan(i * dim, dim);
}

// kmeans++: first center uniform, then D^2-weighted picks by prefix walk.
std::vector<float> kmeanspp_init(std::span<const float> points, std::size_t n,
                                 std::uint32_t dim, std::uint32_t k,
                                 Rng& rng) {
  std::vector<float> centroids;
  centroids.reserve(static_cast<std::size_t>(k) * dim);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());

  std::size_t first = static_cast<std::size_t>(rng.uniform_below(n));
  auto push_center = [&](std::size_t idx) {
    std::span<const float> p = row(points, idx, dim);
    centroids.insert(centroids.end(), p.begin(), p.end());
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = squared_l2(row(points, i, dim), p);
      if (d2 < min_d2[i]) min_d2[i] = d2;
    }
  };
  push_center(first);

  for (std::uint32_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += min_d2[i];
    std::size_t pick;
    if (total > 0.0) {
      double target = rng.uniform01() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      // All points coincide with a chosen center; duplicates are the
      // only option left.
      pick = static_cast<std::size_t>(rng.uniform_below(n));
    }
    push_center(pick);
  }
  return centroids;
}

struct AssignPass {
  double inertia = 0.0;
  std::vector<std::uint32_t> assignments;
  std::vector<double> best_d2;
};

AssignPass assign_points(std::span<const float> points, std::size_t n,
                         std::uint32_t dim,
                         std::span<const float> centroids, std::uint32_t k) {
  AssignPass pass;
  pass.assignments.resize(n);
  pass.best_d2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const float> p = row(points, i, dim);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_c = 0;
    for (std::uint32_t c = 0; c < k; ++c) {
      double d2 = squared_l2(p, row(centroids, c, dim));
      if (d2 < best) {
        best = d2;
        best_c = c;
      }
    }
    pass.assignments[i] = best_c;
    pass.best_d2[i] = best;
    pass.inertia += best;
  }
  return pass;
}

}  // namespace

KMeansResult kmeans(std::span<const float> points, std::size_t n,
                    std::uint32_t dim, const KMeansConfig& cfg) {
  if (n == 0) throw ValidationError("DegenerateInput: kmeans over 0 points");
  if (dim == 0 || points.size() != n * static_cast<std::size_t>(dim))
    throw ValidationError("kmeans: points size does not match n*dim");
  if (cfg.k == 0) throw ValidationError("kmeans: k must be >= 1");
  if (cfg.max_iters == 0) throw ValidationError("kmeans: max_iters must be >= 1");
  if (cfg.tol < 0.0) throw ValidationError("kmeans: tol must be >= 0");

  const std::uint32_t k = cfg.k;
  Rng rng(cfg.seed);

  KMeansResult res;
  if (!cfg.init_centroids.empty()) {
    if (cfg.init_centroids.size() != static_cast<std::size_t>(k) * dim)
      throw ValidationError("kmeans: init_centroids size does not match k*dim");
    res.centroids = cfg.init_centroids;
  } else {
    res.centroids = kmeanspp_init(points, n, dim, k, rng);
  }

  double prev_inertia = std::numeric_limits<double>::infinity();
  for (std::uint32_t iter = 0; iter < cfg.max_iters; ++iter) {
    AssignPass pass = assign_points(points, n, dim, res.centroids, k);
    res.inertia_history.push_back(pass.inertia);
    res.assignments = std::move(pass.assignments);
    res.inertia = pass.inertia;

    bool converged =
        iter > 0 && prev_inertia - pass.inertia <= cfg.tol * prev_inertia;
    prev_inertia = pass.inertia;
    if (converged || iter + 1 == cfg.max_iters) break;

    // M-step: means in double, rounded to float.
    std::vector<double> sums(static_cast<std::size_t>(k) * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t c = res.assignments[i];
      counts[c]++;
      std::span<const float> p = row(points, i, dim);
      double* dst = sums.data() + static_cast<std::size_t>(c) * dim;
      for (std::uint32_t j = 0; j < dim; ++j) dst[j] += p[j];
    }
    for (std::uint32_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[c]);
      float* dst = res.centroids.data() + static_cast<std::size_t>(c) * dim;
      const double* src = sums.data() + static_cast<std::size_t>(c) * dim;
      for (std::uint32_t j = 0; j < dim; ++j)
        dst[j] = static_cast<float>(src[j] * inv);
    }

    // Reseed empty clusters to the farthest points, one point each,
    // ties by lower point index.
    std::vector<std::size_t> empties;
    for (std::uint32_t c = 0; c < k; ++c)
      if (counts[c] == 0) empties.push_back(c);
    if (!empties.empty()) {
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (pass.best_d2[a] != pass.best_d2[b])
          return pass.best_d2[a] > pass.best_d2[b];
        return a < b;
      });
      for (std::size_t e = 0; e < empties.size(); ++e) {
        std::size_t src_point = order[e % n];
        std::span<const float> p = row(points, src_point, dim);
        std::copy(p.begin(), p.end(),
                  res.centroids.begin() +
                      static_cast<std::size_t>(empties[e]) * dim);
      }
    }
  }

  res.iterations = static_cast<std::uint32_t>(res.inertia_history.size());
  return res;
}

CodebookStack train_rq(const EmbeddingSet& set, std::uint32_t levels,
                       std::uint32_t codebook_size, const TrainMeta& meta) {
  if (levels == 0) throw ValidationError("train_rq: levels must be >= 1");
  if (codebook_size == 0)
    throw ValidationError("train_rq: codebook size must be >= 1");
  if (set.size() == 0)
    throw ValidationError("DegenerateInput: train_rq over empty set");

  const EmbeddingSet& input = set;
  std::vector<float> work;
  if (meta.normalize) {
    EmbeddingSet norm = normalized_copy(input);
    work = std::move(norm.data);
  } else {
    work = input.data;
  }
  const std::size_t n = set.size();
  const std::uint32_t dim = set.dim;

  CodebookStack stack;
  stack.dim = dim;
  stack.meta = meta;
  stack.levels.reserve(levels);

  for (std::uint32_t level = 1; level <= levels; ++level) {
    KMeansConfig cfg;
    cfg.k = codebook_size;
    cfg.max_iters = meta.max_iters;
    cfg.tol = meta.tol;
    cfg.seed = derive_seed(meta.seed, level);
    KMeansResult km = kmeans(work, n, dim, cfg);

    Codebook cb;
    cb.level = level;
    cb.dim = dim;
    cb.centroids = km.centroids;
    stack.levels.push_back(std::move(cb));

    if (level == levels) break;
    for (std::size_t i = 0; i < n; ++i) {
      const float* c = km.centroids.data() +
                       static_cast<std::size_t>(km.assignments[i]) * dim;
      float* r = work.data() + i * dim;
      for (std::uint32_t j = 0; j < dim; ++j) r[j] -= c[j];
    }
  }
  return stack;
}

namespace {

constexpr std::uint64_t kHcRootSalt = 0x4863547265655221ULL;

// Builds the subtree over the points selected by `members`. The node
// centroid is the exact mean of its members, so the trained-tree
// invariant (centroid == mean of routed points) holds by construction.
HcNode build_hc_node(std::span<const float> points, std::uint32_t dim,
                     const std::vector<std::size_t>& members,
                     std::uint32_t depth_left, std::uint32_t branching,
                     const TrainMeta& meta, std::uint64_t salt) {
  HcNode node;
  node.train_count = members.size();
  node.centroid.resize(dim);
  {
    std::vector<double> sum(dim, 0.0);
    for (std::size_t i : members) {
      const float* p = points.data() + i * dim;
      for (std::uint32_t j = 0; j < dim; ++j) sum[j] += p[j];
    }
    const double inv = 1.0 / static_cast<double>(members.size());
    for (std::uint32_t j = 0; j < dim; ++j)
      node.centroid[j] = static_cast<float>(sum[j] * inv);
  }
  if (depth_left == 0) return node;

  const std::uint32_t k = static_cast<std::uint32_t>(
      std::min<std::size_t>(branching, members.size()));

  std::vector<std::vector<std::size_t>> groups(k);
  if (k == 1) {
    groups[0] = members;
  } else {
    std::vector<float> local(members.size() * static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < members.size(); ++i)
      std::copy_n(points.data() + members[i] * dim, dim,
                  local.data() + i * dim);
    KMeansConfig cfg;
    cfg.k = k;
    cfg.max_iters = meta.max_iters;
    cfg.tol = meta.tol;
    cfg.seed = derive_seed(meta.seed, salt);
    KMeansResult km = kmeans(local, members.size(), dim, cfg);
    for (std::size_t i = 0; i < members.size(); ++i)
      groups[km.assignments[i]].push_back(members[i]);
  }

  // Children keep cluster index order; empty clusters (possible only
  // with duplicate points) are dropped, which is what leaves a node
  // with fewer than `branching` children.
  std::uint32_t child_idx = 0;
  for (std::uint32_t c = 0; c < k; ++c) {
    if (groups[c].empty()) continue;
    node.children.push_back(build_hc_node(
        points, dim, groups[c], depth_left - 1, branching, meta,
        splitmix64(salt ^ (0x9e3779b97f4a7c15ULL * (child_idx + 1)))));
    ++child_idx;
  }
  return node;
}

}  // namespace

HcTree train_hc(const EmbeddingSet& set, std::uint32_t depth,
                std::uint32_t branching, const TrainMeta& meta) {
  if (depth == 0) throw ValidationError("train_hc: depth must be >= 1");
  if (branching < 2) throw ValidationError("train_hc: branching must be >= 2");
  if (set.size() == 0)
    throw ValidationError("DegenerateInput: train_hc over empty set");

  std::vector<float> work;
  if (meta.normalize) {
    EmbeddingSet norm = normalized_copy(set);
    work = std::move(norm.data);
  } else {
    work = set.data;
  }

  std::vector<std::size_t> all(set.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  HcTree tree;
  tree.depth = depth;
  tree.branching = branching;
  tree.dim = set.dim;
  tree.meta = meta;
  tree.root = build_hc_node(work, set.dim, all, depth, branching, meta,
                            splitmix64(meta.seed ^ kHcRootSalt));
  return tree;
}

std::vector<float> reconstruct(const SemanticId& id,
                               const CodebookStack& stack) {
  if (id.tokens.size() != stack.levels.size())
    throw ValidationError("reconstruct: id length " +
                          std::to_string(id.tokens.size()) +
                          " does not match stack levels " +
                          std::to_string(stack.levels.size()));
  std::vector<double> acc(stack.dim, 0.0);
  for (std::size_t l = 0; l < id.tokens.size(); ++l) {
    const Codebook& cb = stack.levels[l];
    if (id.tokens[l] >= cb.size())
      throw ValidationError("reconstruct: token " +
                            std::to_string(id.tokens[l]) +
                            " out of range for level " + std::to_string(l + 1));
    std::span<const float> c = cb.centroid(id.tokens[l]);
    for (std::uint32_t j = 0; j < stack.dim; ++j) acc[j] += c[j];
  }
  std::vector<float> out(stack.dim);
  for (std::uint32_t j = 0; j < stack.dim; ++j)
    out[j] = static_cast<float>(acc[j]);
  return out;
}

EmbeddingSet normalized_copy(const EmbeddingSet& set) {
  EmbeddingSet out = set;
  for (std::size_t i = 0; i < out.size(); ++i) {
    float* p = out.data.data() + i * static_cast<std::size_t>(out.dim);
    double norm = l2_norm({p, out.dim});
    if (norm == 0.0) continue;
    const double inv = 1.0 / norm;
    for (std::uint32_t j = 0; j < out.dim; ++j)
      p[j] = static_cast<float>(p[j] * inv);
  }
  return out;
}

}  // namespace semid
