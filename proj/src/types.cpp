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

#include "semid/types.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace semid {

CapacityError::CapacityError(std::size_t n_, std::uint64_t capacity_)
    : Error("CapacityExceeded: " + std::to_string(n_) +
            " embeddings exceed index capacity " + std::to_string(capacity_)),
      n(n_),
      capacity(capacity_) {}

ExhaustedError::ExhaustedError(std::string key_)
    : Error("ExhaustedCandidates: no unused candidate id left for key '" +
            key_ + "'"),
      key(std::move(key_)) {}

void EmbeddingSet::validate() const {
  if (dim == 0) throw ValidationError("embedding set has dim 0");
  if (data.size() != keys.size() * static_cast<std::size_t>(dim))
    throw ValidationError("embedding set: data size does not match count*dim");
  std::unordered_set<std::string> seen;
  seen.reserve(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!seen.insert(keys[i]).second)
      throw ValidationError("DuplicateKey: '" + keys[i] + "' at row " +
                            std::to_string(i));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i]))
      throw ValidationError("NonFiniteValue: row " + std::to_string(i / dim) +
                            " component " + std::to_string(i % dim));
  }
}

std::uint64_t CodebookStack::capacity() const {
  std::uint64_t cap = 1;
  for (const Codebook& cb : levels) {
    std::uint64_t m = cb.size();
    if (m == 0) return 0;
    if (cap > std::numeric_limits<std::uint64_t>::max() / m)
      return std::numeric_limits<std::uint64_t>::max();
    cap *= m;
  }
  return cap;
}

namespace {

std::uint64_t count_leaves(const HcNode& node) {
  if (node.children.empty()) return 1;
  std::uint64_t n = 0;
  for (const HcNode& child : node.children) n += count_leaves(child);
  return n;
}

}  // namespace

std::uint64_t HcTree::leaf_count() const { return count_leaves(root); }

const HcNode* HcTree::node_at(std::span<const std::uint32_t> prefix) const {
  const HcNode* node = &root;
  for (std::uint32_t token : prefix) {
    if (token >= node->children.size()) return nullptr;
    node = &node->children[token];
  }
  return node;
}

std::string to_string(const SemanticId& id) {
  std::ostringstream out;
  for (std::size_t i = 0; i < id.tokens.size(); ++i) {
    if (i) out << ' ';
    out << id.tokens[i];
  }
  return out.str();
}

std::size_t SemanticIdHash::operator()(const SemanticId& id) const {
  // FNV-1a over the token words.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint32_t t : id.tokens) {
    h ^= t;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h);
}

bool UsedIdRegistry::insert(const SemanticId& id) {
  return used_.insert(id).second;
}

bool UsedIdRegistry::contains(const SemanticId& id) const {
  return used_.find(id) != used_.end();
}

std::uint32_t UsedIdRegistry::next_suffix(const SemanticId& prefix) {
  return prefix_counts_[prefix]++;
}

std::uint32_t UsedIdRegistry::suffix_count(const SemanticId& prefix) const {
  auto it = prefix_counts_.find(prefix);
  return it == prefix_counts_.end() ? 0 : it->second;
}

bool registry_insert(UsedIdRegistry& registry, const SemanticId& id) {
  return registry.insert(id);
}

void capacity_check(std::size_t n, const CodebookStack& stack) {
  std::uint64_t cap = stack.capacity();
  if (n > cap) throw CapacityError(n, cap);
}

void capacity_check(std::size_t n, const HcTree& tree) {
  std::uint64_t cap = tree.leaf_count();
  if (n > cap) throw CapacityError(n, cap);
}

}  // namespace semid
