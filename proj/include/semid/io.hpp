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
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semid/alloc.hpp"
#include "semid/assign.hpp"
#include "semid/types.hpp"

namespace semid {

// Embedding container formats:
//  - Bin: magic "SEMID\0", u32 LE version (=1), u64 LE count, u32 LE dim,
//    then per record a u16 LE key length, the UTF-8 key bytes, and dim
//    IEEE-754 32-bit LE floats.
//  - Lines: optional leading '#' comment lines, then one record per
//    line: key TAB comma-separated decimals.
enum class EmbeddingFormat { Bin, Lines, Auto };

EmbeddingSet read_embeddings(const std::string& path,
                             EmbeddingFormat format = EmbeddingFormat::Auto);
void write_embeddings(const EmbeddingSet& set, const std::string& path,
                      EmbeddingFormat format,
                      const std::string& comment = "");

// Index persistence. Both formats round-trip centroids losslessly: text
// prints floats at 9 significant digits, binary stores the raw 32-bit
// words. Levels/branching and the training config travel with the file.
enum class IndexFormat { Text, Bin };

void write_index(const CodebookStack& stack, const std::string& path,
                 IndexFormat format = IndexFormat::Text);
void write_index(const HcTree& tree, const std::string& path,
                 IndexFormat format = IndexFormat::Text);

struct LoadedIndex {
  std::optional<CodebookStack> stack;
  std::optional<HcTree> tree;

  bool is_rq() const { return stack.has_value(); }
  CandidateProvider provider() const {
    return is_rq() ? CandidateProvider(*stack) : CandidateProvider(*tree);
  }
};

LoadedIndex read_index(const std::string& path);

/// Seeded Gaussian-mixture corpus. Cluster means are random unit
/// directions scaled by 1/spread and each point adds noise with
/// standard deviation `spread`, so shrinking the spread separates the
/// clusters and tightens them at once; in the limit the float32 cast
/// collapses each cluster onto identical vectors, the canonical
/// greedy-conflict case.
EmbeddingSet gen_synthetic(std::size_t n, std::uint32_t dim,
                           std::uint32_t clusters, double spread,
                           std::uint64_t seed);

// Tab-separated id-map table. A '#' meta line records strategy and
// config key=value pairs; the column header row follows; then one record
// per embedding: key, space-separated id tokens, the suffix column (only
// for the suffix baseline), comma-separated chosen ranks, and the score.
void write_idmap(const std::string& path, const AssignReport& report,
                 const std::vector<std::pair<std::string, std::string>>& meta);

struct IdMap {
  std::map<std::string, std::string> meta;
  AssignReport report;  // keys/ids/suffixes/ranks/scores reassembled
};

IdMap read_idmap(const std::string& path);

}  // namespace semid
