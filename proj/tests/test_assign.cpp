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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <map>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "semid/assign.hpp"
#include "semid/quantizer.hpp"

using namespace semid;

namespace {

// The shared two-level worked setup: level-1 {(0,0),(1,0)}, level-2
// {(0,0),(0.5,0)}, query (0.6,0).
CodebookStack worked_stack() {
  return oracle::stack_from(
      {{{0.0f, 0.0f}, {1.0f, 0.0f}}, {{0.0f, 0.0f}, {0.5f, 0.0f}}});
}

EmbeddingSet duplicate_pair() {
  return oracle::make_set({{0.6f, 0.0f}, {0.6f, 0.0f}});
}

AssignConfig config(Strategy strategy, std::vector<std::uint32_t> kvec,
                    Ranking ranking = Ranking::ResidualScore) {
  AssignConfig cfg;
  cfg.strategy = strategy;
  cfg.kvec = std::move(kvec);
  cfg.ranking = ranking;
  return cfg;
}

std::size_t distinct_ids(const AssignReport& report) {
  std::set<std::vector<std::uint32_t>> seen;
  for (const SemanticId& id : report.ids) seen.insert(id.tokens);
  return seen.size();
}

// Corpus with heavy bitwise duplication: every other row repeats an
// earlier one.
EmbeddingSet duplicated_corpus(std::size_t n, std::uint32_t dim,
                               std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingSet set;
  set.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    set.keys.push_back("e" + std::to_string(i));
    if (i > 0 && rng.uniform01() < 0.5) {
      std::size_t src = rng.uniform_below(i);
      std::span<const float> v = set.vec(src);
      set.data.insert(set.data.end(), v.begin(), v.end());
    } else {
      for (std::uint32_t j = 0; j < dim; ++j)
        set.data.push_back(float(rng.normal()) * 2.0f);
    }
  }
  return set;
}

}  // namespace

TEST_CASE("score_candidate is the negative norm sum") {
  std::vector<double> norms{0.1, 0.2, 0.3};
  CHECK(score_candidate(norms) == doctest::Approx(-0.6).epsilon(1e-12));
  std::vector<double> zeros{0.0, 0.0};
  CHECK(score_candidate(zeros) == 0.0);
  std::vector<double> one{1.0};
  CHECK(score_candidate(one) == -1.0);
}

TEST_CASE("enumerate_ecm_candidates sizes and ordering") {
  CodebookStack stack = worked_stack();
  CandidateProvider provider(stack);
  std::vector<float> e{0.6f, 0.0f};
  GreedyChain chain = provider.chain(e);

  std::vector<std::uint32_t> k22{2, 2};
  std::vector<EcmCandidate> cands =
      enumerate_ecm_candidates(provider, chain, k22, Ranking::ResidualScore, 0);
  REQUIRE(cands.size() == 4);

  // Per-level residual norms {0.4, 0.6} and {0.4, 0.9} yield scores
  // -0.8, -1.0, -1.3, -1.5 in descending order.
  CHECK(cands[0].score == doctest::Approx(-0.8).epsilon(1e-6));
  CHECK(cands[1].score == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(cands[2].score == doctest::Approx(-1.3).epsilon(1e-6));
  CHECK(cands[3].score == doctest::Approx(-1.5).epsilon(1e-6));
  CHECK(cands[0].id == SemanticId{{1, 0}});
  CHECK(cands[1].id == SemanticId{{0, 0}});
  CHECK(cands[2].id == SemanticId{{1, 1}});
  CHECK(cands[3].id == SemanticId{{0, 1}});

  std::vector<std::uint32_t> k11{1, 1};
  std::vector<EcmCandidate> only =
      enumerate_ecm_candidates(provider, chain, k11, Ranking::ResidualScore, 0);
  REQUIRE(only.size() == 1);
  CHECK(only[0].id == chain.id);  // no relaxation, just the greedy id

  // Combination order: odometer over ranks, last level fastest.
  std::vector<EcmCandidate> odo = enumerate_ecm_candidates(
      provider, chain, k22, Ranking::CombinationOrder, 0);
  CHECK(odo[0].ranks == std::vector<std::uint32_t>{0, 0});
  CHECK(odo[1].ranks == std::vector<std::uint32_t>{0, 1});
  CHECK(odo[2].ranks == std::vector<std::uint32_t>{1, 0});
  CHECK(odo[3].ranks == std::vector<std::uint32_t>{1, 1});

  // Random ranking permutes the same candidate multiset, reproducibly.
  std::vector<EcmCandidate> ra =
      enumerate_ecm_candidates(provider, chain, k22, Ranking::Random, 7);
  std::vector<EcmCandidate> rb =
      enumerate_ecm_candidates(provider, chain, k22, Ranking::Random, 7);
  REQUIRE(ra.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(ra[i].id == rb[i].id);
  std::set<std::vector<std::uint32_t>> tokens;
  for (const EcmCandidate& c : ra) tokens.insert(c.id.tokens);
  CHECK(tokens.size() == 4);
}

TEST_CASE("ecm resolves a single-level duplicate pair") {
  CodebookStack stack =
      oracle::stack_from({{{0.0f, 0.0f}, {2.0f, 0.0f}}});
  CandidateProvider provider(stack);
  EmbeddingSet set = oracle::make_set({{0.1f, 0.0f}, {0.1f, 0.0f}});

  AssignReport report =
      assign_ecm(set, provider, config(Strategy::Ecm, {2}));
  CHECK(report.ids[0] == SemanticId{{0}});
  CHECK(report.ids[1] == SemanticId{{1}});
  CHECK(report.chosen_ranks[0] == std::vector<std::uint32_t>{0});
  CHECK(report.chosen_ranks[1] == std::vector<std::uint32_t>{1});
}

TEST_CASE("ecm two-level duplicate pair takes the best-scoring free combo") {
  CodebookStack stack = worked_stack();
  CandidateProvider provider(stack);
  EmbeddingSet set = duplicate_pair();

  AssignReport report =
      assign_ecm(set, provider, config(Strategy::Ecm, {2, 2}));
  CHECK(report.ids[0] == SemanticId{{1, 0}});  // greedy
  // Fixed-chain scoring puts (0,0) at -1.0 ahead of (1,1) at -1.3.
  CHECK(report.ids[1] == SemanticId{{0, 0}});
  CHECK(report.scores[0] == doctest::Approx(-0.8).epsilon(1e-6));
  CHECK(report.scores[1] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("rrs single level matches ecm") {
  CodebookStack stack =
      oracle::stack_from({{{0.0f, 0.0f}, {2.0f, 0.0f}}});
  CandidateProvider provider(stack);
  EmbeddingSet set = oracle::make_set({{0.1f, 0.0f}, {0.1f, 0.0f}});

  AssignReport report =
      assign_rrs(set, provider, config(Strategy::Rrs, {2}));
  CHECK(report.ids[0] == SemanticId{{0}});
  CHECK(report.ids[1] == SemanticId{{1}});
}

TEST_CASE("rrs two-level duplicate pair stays in the greedy branch") {
  CodebookStack stack = worked_stack();
  CandidateProvider provider(stack);
  EmbeddingSet set = duplicate_pair();

  AssignReport report =
      assign_rrs(set, provider, config(Strategy::Rrs, {2, 2}));
  CHECK(report.ids[0] == SemanticId{{1, 0}});
  // Depth-first search exhausts the level-1 branch before backtracking,
  // so the second duplicate lands on (1,1), not ECM's (0,0).
  CHECK(report.ids[1] == SemanticId{{1, 1}});
  CHECK(report.chosen_ranks[1] == std::vector<std::uint32_t>{0, 1});
  CHECK(report.scores[1] == doctest::Approx(-1.3).epsilon(1e-6));
}

TEST_CASE("suffix baseline counts occurrences in processing order") {
  CodebookStack stack = worked_stack();
  CandidateProvider provider(stack);
  EmbeddingSet set = oracle::make_set(
      {{0.6f, 0.0f}, {0.6f, 0.0f}, {0.6f, 0.0f}});
  AssignReport report = assign_suffix(set, provider);
  CHECK(report.suffixes == std::vector<std::uint32_t>{0, 1, 2});
  for (const SemanticId& id : report.ids) CHECK(id == SemanticId{{1, 0}});

  // Unique prefixes everywhere: all suffixes zero.
  EmbeddingSet apart = oracle::make_set({{0.0f, 0.0f}, {1.5f, 0.0f}});
  AssignReport zero = assign_suffix(apart, provider);
  CHECK(zero.suffixes == std::vector<std::uint32_t>{0, 0});
}

TEST_CASE("suffix counts are permutation invariant per prefix") {
  EmbeddingSet set = duplicated_corpus(60, 3, 17);
  TrainMeta meta;
  meta.seed = 6;
  CodebookStack stack = train_rq(set, 2, 4, meta);
  CandidateProvider provider(stack);

  AssignReport base = assign_suffix(set, provider);

  // Shuffle the rows and recount: the multiset of per-prefix group
  // sizes must be unchanged, and within each prefix the suffixes stay
  // 0..g-1 in the new processing order.
  Rng rng(18);
  std::vector<std::size_t> perm(set.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[rng.uniform_below(i)]);
  EmbeddingSet shuffled;
  shuffled.dim = set.dim;
  for (std::size_t i : perm) {
    shuffled.keys.push_back(set.keys[i]);
    std::span<const float> v = set.vec(i);
    shuffled.data.insert(shuffled.data.end(), v.begin(), v.end());
  }
  AssignReport moved = assign_suffix(shuffled, provider);

  auto group_sizes = [](const AssignReport& report) {
    std::map<std::vector<std::uint32_t>, std::uint32_t> max_suffix;
    for (std::size_t i = 0; i < report.size(); ++i) {
      auto& s = max_suffix[report.ids[i].tokens];
      s = std::max(s, report.suffixes[i] + 1);
    }
    std::multiset<std::uint32_t> sizes;
    for (const auto& [prefix, size] : max_suffix) sizes.insert(size);
    return sizes;
  };
  CHECK(group_sizes(base) == group_sizes(moved));

  std::map<std::vector<std::uint32_t>, std::uint32_t> next;
  for (std::size_t i = 0; i < moved.size(); ++i)
    CHECK(moved.suffixes[i] == next[moved.ids[i].tokens]++);
}

TEST_CASE("suffix prefixes reproduce the greedy map") {
  EmbeddingSet set = duplicated_corpus(80, 4, 23);
  TrainMeta meta;
  meta.seed = 9;
  CodebookStack stack = train_rq(set, 2, 8, meta);
  CandidateProvider provider(stack);
  AssignReport greedy = assign_greedy(set, provider);
  AssignReport suffix = assign_suffix(set, provider);
  CHECK(greedy.ids == suffix.ids);
  // Suffixed ids are pairwise distinct even though prefixes collide.
  std::set<std::pair<std::vector<std::uint32_t>, std::uint32_t>> seen;
  for (std::size_t i = 0; i < suffix.size(); ++i)
    CHECK(seen.insert({suffix.ids[i].tokens, suffix.suffixes[i]}).second);
}

TEST_CASE("greedy preserves conflicts and counts ranks as zero") {
  CodebookStack stack = worked_stack();
  CandidateProvider provider(stack);
  EmbeddingSet set = duplicate_pair();
  AssignReport report = assign_greedy(set, provider);
  CHECK(report.ids[0] == report.ids[1]);
  CHECK(report.chosen_ranks[0] == std::vector<std::uint32_t>{0, 0});
  CHECK(distinct_ids(report) == 1);
}

TEST_CASE("ecm and rrs equal greedy whenever greedy is conflict-free") {
  // Greedy chains are per-row pure functions, so dropping the rows of
  // each conflict group beyond the first leaves a corpus where greedy
  // is injective without touching anyone else's id.
  Rng meta(31);
  for (int trial = 0; trial < 12; ++trial) {
    EmbeddingSet raw = oracle::random_set(80, 6, meta.next(), 10.0f);
    TrainMeta train;
    train.seed = meta.next();
    CodebookStack stack = train_rq(raw, 2, 16, train);
    CandidateProvider provider(stack);

    AssignReport raw_greedy = assign_greedy(raw, provider);
    std::set<std::vector<std::uint32_t>> seen;
    EmbeddingSet set;
    set.dim = raw.dim;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!seen.insert(raw_greedy.ids[i].tokens).second) continue;
      set.keys.push_back(raw.keys[i]);
      std::span<const float> v = raw.vec(i);
      set.data.insert(set.data.end(), v.begin(), v.end());
    }
    REQUIRE(set.size() >= 20);

    AssignReport greedy = assign_greedy(set, provider);
    REQUIRE(distinct_ids(greedy) == set.size());
    for (std::vector<std::uint32_t> kvec :
         {std::vector<std::uint32_t>{1, 1}, {2, 2}, {3, 1}, {4, 4}}) {
      AssignReport ecm =
          assign_ecm(set, provider, config(Strategy::Ecm, kvec));
      AssignReport rrs =
          assign_rrs(set, provider, config(Strategy::Rrs, kvec));
      CHECK(ecm.ids == greedy.ids);
      CHECK(rrs.ids == greedy.ids);
    }
  }
}

TEST_CASE("ecm grants match the brute-force oracle on small instances") {
  Rng meta(2001);
  for (int inst = 0; inst < 40; ++inst) {
    const std::uint32_t levels = 2 + std::uint32_t(meta.uniform_below(2));
    const std::uint32_t m = 4 + std::uint32_t(meta.uniform_below(5));
    const std::uint32_t dim = 2 + std::uint32_t(meta.uniform_below(4));
    std::size_t n = 5 + meta.uniform_below(46);
    std::uint64_t capacity = 1;
    for (std::uint32_t l = 0; l < levels; ++l) capacity *= m;
    n = std::min<std::size_t>(n, capacity);
    std::vector<std::uint32_t> kvec(levels);
    for (auto& k : kvec) k = 2 + std::uint32_t(meta.uniform_below(2));

    EmbeddingSet set = duplicated_corpus(n, dim, meta.next());
    CodebookStack stack = oracle::random_stack(levels, m, dim, meta.next());
    CandidateProvider provider(stack);

    std::set<std::vector<std::uint32_t>> used_ref;
    std::vector<std::vector<std::uint32_t>> expected;
    bool oracle_exhausted = false;
    std::string exhausted_key;
    for (std::size_t i = 0; i < set.size(); ++i) {
      auto grant = oracle::ecm_grant_ref(set.vec(i), stack, kvec, used_ref);
      if (!grant) {
        oracle_exhausted = true;
        exhausted_key = set.keys[i];
        break;
      }
      expected.push_back(*grant);
    }

    if (oracle_exhausted) {
      CHECK_THROWS_AS(
          assign_ecm(set, provider, config(Strategy::Ecm, kvec)),
          ExhaustedError);
    } else {
      AssignReport report =
          assign_ecm(set, provider, config(Strategy::Ecm, kvec));
      for (std::size_t i = 0; i < set.size(); ++i)
        CHECK(report.ids[i].tokens == expected[i]);
    }
  }
}

TEST_CASE("rrs grants match the brute-force dfs oracle on small instances") {
  Rng meta(3001);
  for (int inst = 0; inst < 40; ++inst) {
    const std::uint32_t levels = 2 + std::uint32_t(meta.uniform_below(2));
    const std::uint32_t m = 4 + std::uint32_t(meta.uniform_below(5));
    const std::uint32_t dim = 2 + std::uint32_t(meta.uniform_below(4));
    std::size_t n = 5 + meta.uniform_below(46);
    std::uint64_t capacity = 1;
    for (std::uint32_t l = 0; l < levels; ++l) capacity *= m;
    n = std::min<std::size_t>(n, capacity);
    std::vector<std::uint32_t> kvec(levels);
    for (auto& k : kvec) k = 2 + std::uint32_t(meta.uniform_below(2));

    EmbeddingSet set = duplicated_corpus(n, dim, meta.next());
    CodebookStack stack = oracle::random_stack(levels, m, dim, meta.next());
    CandidateProvider provider(stack);

    std::set<std::vector<std::uint32_t>> used_ref;
    std::vector<std::vector<std::uint32_t>> expected;
    bool oracle_exhausted = false;
    for (std::size_t i = 0; i < set.size(); ++i) {
      std::vector<std::uint32_t> prefix;
      auto grant =
          oracle::rrs_grant_ref(set.vec(i), stack, kvec, 0, prefix, used_ref);
      if (!grant) {
        oracle_exhausted = true;
        break;
      }
      expected.push_back(*grant);
    }

    if (oracle_exhausted) {
      CHECK_THROWS_AS(
          assign_rrs(set, provider, config(Strategy::Rrs, kvec)),
          ExhaustedError);
    } else {
      AssignReport report =
          assign_rrs(set, provider, config(Strategy::Rrs, kvec));
      for (std::size_t i = 0; i < set.size(); ++i)
        CHECK(report.ids[i].tokens == expected[i]);
    }
  }
}

TEST_CASE("ecm scores never beat the greedy score") {
  EmbeddingSet set = duplicated_corpus(120, 4, 47);
  TrainMeta meta;
  meta.seed = 3;
  CodebookStack stack = train_rq(set, 3, 8, meta);
  CandidateProvider provider(stack);

  AssignReport greedy = assign_greedy(set, provider);
  AssignConfig mono_cfg = config(Strategy::Ecm, {3, 3, 3});
  mono_cfg.on_exhausted = OnExhausted::WidenK;
  AssignReport ecm = assign_ecm(set, provider, mono_cfg);
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(ecm.scores[i] <= greedy.scores[i] + 1e-12);
    bool all_zero =
        std::all_of(ecm.chosen_ranks[i].begin(), ecm.chosen_ranks[i].end(),
                    [](std::uint32_t r) { return r == 0; });
    if (all_zero) {
      CHECK(ecm.ids[i] == greedy.ids[i]);
      CHECK(ecm.scores[i] == greedy.scores[i]);
    } else {
      CHECK(ecm.ids[i] != greedy.ids[i]);
    }
  }
}

TEST_CASE("ecm and rrs produce injective id maps") {
  EmbeddingSet set = duplicated_corpus(400, 5, 83);
  TrainMeta meta;
  meta.seed = 29;
  CodebookStack stack = train_rq(set, 2, 32, meta);  // capacity 1024
  CandidateProvider provider(stack);

  AssignConfig ecm_cfg = config(Strategy::Ecm, {3, 3});
  ecm_cfg.on_exhausted = OnExhausted::WidenK;
  AssignConfig rrs_cfg = ecm_cfg;
  rrs_cfg.strategy = Strategy::Rrs;
  AssignReport ecm = assign_ecm(set, provider, ecm_cfg);
  AssignReport rrs = assign_rrs(set, provider, rrs_cfg);
  CHECK(distinct_ids(ecm) == set.size());
  CHECK(distinct_ids(rrs) == set.size());
}

TEST_CASE("assign runs are deterministic, random ranking included") {
  EmbeddingSet set = duplicated_corpus(100, 4, 59);
  TrainMeta meta;
  meta.seed = 1;
  CodebookStack stack = train_rq(set, 2, 16, meta);
  CandidateProvider provider(stack);

  for (Ranking ranking : {Ranking::ResidualScore, Ranking::CombinationOrder,
                          Ranking::Random}) {
    AssignConfig cfg = config(Strategy::Ecm, {3, 3}, ranking);
    cfg.ranking_seed = 12345;
    cfg.on_exhausted = OnExhausted::WidenK;
    AssignReport a = assign_ecm(set, provider, cfg);
    AssignReport b = assign_ecm(set, provider, cfg);
    CHECK(a.ids == b.ids);
    CHECK(a.scores == b.scores);
    CHECK(a.chosen_ranks == b.chosen_ranks);
  }

  // A different random seed reorders at least one grant on a corpus
  // with this much duplication.
  AssignConfig c1 = config(Strategy::Ecm, {3, 3}, Ranking::Random);
  c1.ranking_seed = 1;
  c1.on_exhausted = OnExhausted::WidenK;
  AssignConfig c2 = c1;
  c2.ranking_seed = 2;
  AssignReport r1 = assign_ecm(set, provider, c1);
  AssignReport r2 = assign_ecm(set, provider, c2);
  CHECK(r1.ids != r2.ids);
}

TEST_CASE("exhaustion fails with the offending key or widens when allowed") {
  CodebookStack stack =
      oracle::stack_from({{{0.0f, 0.0f}, {2.0f, 0.0f}}});
  CandidateProvider provider(stack);
  EmbeddingSet three = oracle::make_set(
      {{0.1f, 0.0f}, {0.1f, 0.0f}, {0.1f, 0.0f}});

  // Two centroids, three identical embeddings: nothing can save the third.
  CHECK(three.size() > stack.capacity());
  CHECK_THROWS_AS(assign_ecm(three, provider, config(Strategy::Ecm, {2})),
                  CapacityError);

  EmbeddingSet pair = oracle::make_set({{0.1f, 0.0f}, {0.1f, 0.0f}});
  CodebookStack wide = oracle::stack_from(
      {{{0.0f, 0.0f}, {2.0f, 0.0f}, {4.0f, 0.0f}, {6.0f, 0.0f}}});
  CandidateProvider wide_provider(wide);
  try {
    AssignConfig cfg = config(Strategy::Ecm, {1});
    UsedIdRegistry taken;
    taken.insert(SemanticId{{0}});  // the only k=1 candidate
    assign_ecm(pair, wide_provider, cfg, std::move(taken));
    FAIL("expected ExhaustedError");
  } catch (const ExhaustedError& e) {
    CHECK(e.key == "e0");
  }

  // kvec=(1) exhausts on the duplicate, widening to k=2 rescues it.
  AssignConfig fail_cfg = config(Strategy::Ecm, {1});
  CHECK_THROWS_AS(assign_ecm(pair, provider, fail_cfg), ExhaustedError);
  AssignConfig widen_cfg = fail_cfg;
  widen_cfg.on_exhausted = OnExhausted::WidenK;
  AssignReport widened = assign_ecm(pair, provider, widen_cfg);
  CHECK(widened.ids[1] == SemanticId{{1}});
  CHECK(widened.widened == 1);

  AssignConfig rrs_widen = config(Strategy::Rrs, {1});
  rrs_widen.on_exhausted = OnExhausted::WidenK;
  AssignReport rrs_report = assign_rrs(pair, provider, rrs_widen);
  CHECK(rrs_report.ids[1] == SemanticId{{1}});
}

TEST_CASE("a preseeded registry blocks prior ids") {
  CodebookStack stack = worked_stack();
  CandidateProvider provider(stack);
  EmbeddingSet one = oracle::make_set({{0.6f, 0.0f}});

  UsedIdRegistry prior;
  prior.insert(SemanticId{{1, 0}});  // the greedy id
  AssignReport report =
      assign_ecm(one, provider, config(Strategy::Ecm, {2, 2}), std::move(prior));
  CHECK(report.ids[0] == SemanticId{{0, 0}});
}

TEST_CASE("kvec validation") {
  CodebookStack stack = worked_stack();
  CandidateProvider provider(stack);
  EmbeddingSet set = duplicate_pair();
  CHECK_THROWS_AS(assign_ecm(set, provider, config(Strategy::Ecm, {2})),
                  ValidationError);
  CHECK_THROWS_AS(assign_ecm(set, provider, config(Strategy::Ecm, {2, 3})),
                  ValidationError);
  CHECK_THROWS_AS(assign_ecm(set, provider, config(Strategy::Ecm, {0, 2})),
                  ValidationError);
}

TEST_CASE("hc mode: strategies stay unique and scores follow path sums") {
  // Well-separated sites, each carrying up to three jittered copies:
  // every vector stays distinct and no bottom node outgrows the
  // branching factor, so the trained tree reaches one leaf per point.
  Rng rng(433);
  EmbeddingSet set;
  set.dim = 4;
  std::size_t i = 0;
  while (i < 150) {
    std::vector<float> site(4);
    for (float& v : site) v = float(rng.normal()) * 5.0f;
    std::size_t copies = 1 + rng.uniform_below(3);
    for (std::size_t c = 0; c < copies && i < 150; ++c, ++i) {
      set.keys.push_back("e" + std::to_string(i));
      for (std::uint32_t j = 0; j < 4; ++j)
        set.data.push_back(site[j] + 1e-3f * float(rng.normal()));
    }
  }
  TrainMeta meta;
  meta.seed = 19;
  HcTree tree = train_hc(set, 3, 8, meta);
  CandidateProvider provider(tree);
  REQUIRE(tree.leaf_count() >= 100);

  // Unbalanced bottom splits can leave slightly fewer leaves than
  // points; assign over the prefix that fits the tree's capacity.
  if (tree.leaf_count() < set.size()) {
    std::size_t fit = static_cast<std::size_t>(tree.leaf_count());
    set.keys.resize(fit);
    set.data.resize(fit * std::size_t(set.dim));
  }

  AssignReport greedy = assign_greedy(set, provider);
  AssignConfig hc_cfg = config(Strategy::Ecm, {3, 3, 3});
  hc_cfg.on_exhausted = OnExhausted::WidenK;
  AssignReport ecm = assign_ecm(set, provider, hc_cfg);
  hc_cfg.strategy = Strategy::Rrs;
  AssignReport rrs = assign_rrs(set, provider, hc_cfg);
  CHECK(distinct_ids(ecm) == set.size());
  CHECK(distinct_ids(rrs) == set.size());

  // HC scores are negative sums of node-centroid distances along the
  // granted path; recompute them by walking the tree.
  for (const AssignReport* report : {&greedy, &ecm, &rrs}) {
    for (std::size_t i = 0; i < set.size(); ++i) {
      const HcNode* node = &tree.root;
      double sum = 0.0;
      for (std::uint32_t token : report->ids[i].tokens) {
        node = &node->children[token];
        sum += std::sqrt(oracle::sq_dist(set.vec(i), node->centroid));
      }
      CHECK(report->scores[i] == doctest::Approx(-sum).epsilon(1e-9));
    }
  }

  // RRS in HC mode keeps DFS order: the first grant per query equals
  // greedy descent when free.
  for (std::size_t i = 0; i < set.size(); ++i) {
    bool all_zero = std::all_of(rrs.chosen_ranks[i].begin(),
                                rrs.chosen_ranks[i].end(),
                                [](std::uint32_t r) { return r == 0; });
    if (all_zero) CHECK(rrs.ids[i] == greedy.ids[i]);
  }
}

TEST_CASE("hc mode: duplicates are pushed to sibling leaves") {
  HcTree tree;
  tree.depth = 2;
  tree.branching = 2;
  tree.dim = 2;
  tree.root.centroid = {5.0f, 0.0f};
  tree.root.children.resize(2);
  HcNode& a = tree.root.children[0];
  HcNode& b = tree.root.children[1];
  a.centroid = {0.0f, 0.0f};
  a.children.resize(2);
  a.children[0].centroid = {0.0f, -1.0f};
  a.children[1].centroid = {0.0f, 1.0f};
  b.centroid = {10.0f, 0.0f};
  b.children.resize(2);
  b.children[0].centroid = {9.0f, 0.0f};
  b.children[1].centroid = {11.0f, 0.0f};
  CandidateProvider provider(tree);

  EmbeddingSet set = oracle::make_set({{0.0f, -0.9f}, {0.0f, -0.9f}});
  AssignReport ecm = assign_ecm(set, provider, config(Strategy::Ecm, {2, 2}));
  CHECK(ecm.ids[0] == SemanticId{{0, 0}});
  CHECK(ecm.ids[1] == SemanticId{{0, 1}});  // sibling leaf, same branch
  AssignReport rrs = assign_rrs(set, provider, config(Strategy::Rrs, {2, 2}));
  CHECK(rrs.ids[0] == SemanticId{{0, 0}});
  CHECK(rrs.ids[1] == SemanticId{{0, 1}});

  // HC score of (0,0) for this query: -(dist to A + dist to a0).
  double expect_score =
      -(std::sqrt(oracle::sq_dist(set.vec(0), a.centroid)) +
        std::sqrt(oracle::sq_dist(set.vec(0), a.children[0].centroid)));
  CHECK(ecm.scores[0] == doctest::Approx(expect_score).epsilon(1e-9));
}

TEST_CASE("assign dispatcher routes strategies") {
  CodebookStack stack = worked_stack();
  CandidateProvider provider(stack);
  EmbeddingSet set = duplicate_pair();

  AssignConfig cfg = config(Strategy::Greedy, {1, 1});
  CHECK(assign(set, provider, cfg).ids == assign_greedy(set, provider).ids);
  cfg.strategy = Strategy::Suffix;
  CHECK(assign(set, provider, cfg).suffixes ==
        assign_suffix(set, provider).suffixes);
  cfg.strategy = Strategy::Ecm;
  cfg.kvec = {2, 2};
  CHECK(assign(set, provider, cfg).ids[1] == SemanticId{{0, 0}});
  cfg.strategy = Strategy::Rrs;
  CHECK(assign(set, provider, cfg).ids[1] == SemanticId{{1, 1}});
}

TEST_CASE("strategy and ranking names round-trip") {
  for (Strategy s : {Strategy::Greedy, Strategy::Suffix, Strategy::Ecm,
                     Strategy::Rrs})
    CHECK(strategy_from_name(strategy_name(s)) == s);
  for (Ranking r : {Ranking::ResidualScore, Ranking::CombinationOrder,
                    Ranking::Random})
    CHECK(ranking_from_name(ranking_name(r)) == r);
  CHECK_THROWS_AS(strategy_from_name("nope"), ValidationError);
  CHECK_THROWS_AS(ranking_from_name("nope"), ValidationError);
}
