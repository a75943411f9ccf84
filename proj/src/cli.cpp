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

#include "semid/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "semid/io.hpp"
#include "semid/metrics.hpp"
#include "semid/quantizer.hpp"

namespace semid {
namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<std::uint32_t> parse_kvec(const std::string& text,
                                      std::uint32_t levels) {
  std::vector<std::uint32_t> kvec;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(part, &pos);
    } catch (const std::exception&) {
      throw ValidationError("--k: bad value '" + part + "'");
    }
    if (pos != part.size() || v == 0)
      throw ValidationError("--k: bad value '" + part + "'");
    kvec.push_back(static_cast<std::uint32_t>(v));
  }
  if (kvec.empty()) throw ValidationError("--k: empty");
  if (kvec.size() == 1) kvec.assign(levels, kvec[0]);  // broadcast scalar
  if (kvec.size() != levels)
    throw ValidationError("--k: got " + std::to_string(kvec.size()) +
                          " entries for an index with " +
                          std::to_string(levels) + " levels");
  return kvec;
}

EmbeddingFormat embedding_format(const std::string& name) {
  if (name == "auto") return EmbeddingFormat::Auto;
  if (name == "bin") return EmbeddingFormat::Bin;
  if (name == "lines") return EmbeddingFormat::Lines;
  throw ValidationError("unknown embedding format '" + name + "'");
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw ValidationError("cannot open '" + out_path + "' for writing");
  out << text;
}

struct GenArgs {
  std::string out;
  std::size_t n = 1000;
  std::uint32_t dim = 16;
  std::uint32_t clusters = 16;
  double spread = 1.0;
  std::uint64_t seed = 0;
  std::string format = "bin";
};

struct TrainArgs {
  std::string embeddings;
  std::string embedding_format = "auto";
  std::string out;
  std::uint32_t levels = 3;
  std::uint32_t width = 256;  // codebook size or branching
  TrainMeta meta;
  std::string index_format = "text";
};

struct AssignArgs {
  std::string embeddings;
  std::string embedding_format = "auto";
  std::string index;
  std::string out;
  std::string method = "ecm";
  std::string k = "1";
  std::string ranking = "score";
  std::uint64_t ranking_seed = 0;
  std::string on_exhausted = "fail";
  std::string pre_registry;
};

struct EvalArgs {
  std::string embeddings;
  std::string embedding_format = "auto";
  std::string index;
  std::vector<std::string> idmaps;
  std::string out;
};

struct BenchArgs {
  std::size_t n = 10000;
  std::uint32_t dim = 32;
  std::uint32_t clusters = 64;
  double spread = 1.0;
  std::uint64_t seed = 0;
  std::string indexer = "rq";
  std::uint32_t levels = 3;
  std::uint32_t width = 256;
  std::uint32_t max_iters = 25;
  std::string k = "2";
  std::string methods = "greedy,suffix,ecm,rrs";
  std::string on_exhausted = "fail";
  std::string out;
};

int do_gen(const GenArgs& a) {
  EmbeddingSet set = gen_synthetic(a.n, a.dim, a.clusters, a.spread, a.seed);
  std::string comment = "semid gen n=" + std::to_string(a.n) +
                        " dim=" + std::to_string(a.dim) +
                        " clusters=" + std::to_string(a.clusters) +
                        " spread=" + std::to_string(a.spread) +
                        " seed=" + std::to_string(a.seed);
  write_embeddings(set, a.out,
                   a.format == "lines" ? EmbeddingFormat::Lines
                                       : EmbeddingFormat::Bin,
                   comment);
  std::cerr << "wrote " << set.size() << " embeddings (dim " << set.dim
            << ") to " << a.out << "\n";
  return 0;
}

int do_train(const TrainArgs& a, bool hc) {
  EmbeddingSet set =
      read_embeddings(a.embeddings, embedding_format(a.embedding_format));
  IndexFormat format =
      a.index_format == "bin" ? IndexFormat::Bin : IndexFormat::Text;
  auto start = Clock::now();
  if (hc) {
    HcTree tree = train_hc(set, a.levels, a.width, a.meta);
    write_index(tree, a.out, format);
  } else {
    CodebookStack stack = train_rq(set, a.levels, a.width, a.meta);
    write_index(stack, a.out, format);
  }
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::cerr << "trained " << (hc ? "hc" : "rq") << " index in " << fmt(secs)
            << " s, wrote " << a.out << "\n";
  return 0;
}

AssignConfig make_assign_config(const AssignArgs& a, std::uint32_t levels) {
  AssignConfig cfg;
  cfg.strategy = strategy_from_name(a.method);
  cfg.kvec = parse_kvec(a.k, levels);
  cfg.ranking = ranking_from_name(a.ranking);
  cfg.ranking_seed = a.ranking_seed;
  if (a.on_exhausted == "fail")
    cfg.on_exhausted = OnExhausted::Fail;
  else if (a.on_exhausted == "widen")
    cfg.on_exhausted = OnExhausted::WidenK;
  else
    throw ValidationError("unknown --on-exhausted '" + a.on_exhausted + "'");
  return cfg;
}

int do_assign(const AssignArgs& a) {
  EmbeddingSet set =
      read_embeddings(a.embeddings, embedding_format(a.embedding_format));
  LoadedIndex index = read_index(a.index);
  CandidateProvider provider = index.provider();
  const TrainMeta& meta = index.is_rq() ? index.stack->meta : index.tree->meta;
  if (meta.normalize) set = normalized_copy(set);

  AssignConfig cfg = make_assign_config(a, provider.levels());
  UsedIdRegistry registry;
  if (!a.pre_registry.empty()) {
    IdMap prior = read_idmap(a.pre_registry);
    for (const SemanticId& id : prior.report.ids) registry.insert(id);
  }

  AssignReport report = assign(set, provider, cfg, std::move(registry));

  std::vector<std::pair<std::string, std::string>> file_meta;
  std::string kvec_text;
  for (std::size_t l = 0; l < cfg.kvec.size(); ++l) {
    if (l) kvec_text += ',';
    kvec_text += std::to_string(cfg.kvec[l]);
  }
  file_meta.emplace_back("k", kvec_text);
  file_meta.emplace_back("ranking", ranking_name(cfg.ranking));
  file_meta.emplace_back("ranking_seed", std::to_string(cfg.ranking_seed));
  file_meta.emplace_back("on_exhausted", a.on_exhausted);
  file_meta.emplace_back("index", a.index);
  file_meta.emplace_back("embeddings", a.embeddings);
  if (!a.pre_registry.empty())
    file_meta.emplace_back("pre_registry", a.pre_registry);
  file_meta.emplace_back("widened", std::to_string(report.widened));
  file_meta.emplace_back("assign_seconds", fmt(report.assign_seconds));
  write_idmap(a.out, report, file_meta);
  std::cerr << "assigned " << report.size() << " ids (" << a.method << ") in "
            << fmt(report.assign_seconds) << " s, wrote " << a.out << "\n";
  return 0;
}

int do_eval(const EvalArgs& a) {
  EmbeddingSet set =
      read_embeddings(a.embeddings, embedding_format(a.embedding_format));
  LoadedIndex index = read_index(a.index);
  CandidateProvider provider = index.provider();
  const TrainMeta& meta = index.is_rq() ? index.stack->meta : index.tree->meta;
  if (meta.normalize) set = normalized_copy(set);

  AssignReport greedy = assign_greedy(set, provider);
  std::vector<IdMap> maps;
  maps.reserve(a.idmaps.size());
  for (const std::string& path : a.idmaps) {
    IdMap map = read_idmap(path);
    if (map.report.keys != set.keys)
      throw ValidationError("idmap '" + path +
                            "' keys do not match the embedding set");
    maps.push_back(std::move(map));
  }

  std::string out = "# semid-eval\tembeddings=" + a.embeddings +
                    "\tindex=" + a.index + "\n";

  ConflictStats conflicts = conflict_stats(greedy);
  out += "# conflict\n";
  out += "n\tconflicting\tgroups\tproportion\n";
  out += std::to_string(conflicts.n) + "\t" +
         std::to_string(conflicts.conflicting) + "\t" +
         std::to_string(conflicts.groups) + "\t" + fmt(conflicts.proportion) +
         "\n";

  std::vector<const AssignReport*> reports{&greedy};
  for (const IdMap& map : maps) reports.push_back(&map.report);
  DistortionReport distortion = distortion_report(set, provider, reports);
  out += "# distortion\n";
  out += "strategy\tmean\ttotal\toverhead_vs_greedy\n";
  for (const StrategyDistortion& entry : distortion.entries) {
    out += strategy_name(entry.strategy) + "\t" + fmt(entry.mean) + "\t" +
           fmt(entry.total) + "\t" + fmt(entry.overhead_vs_greedy) + "\n";
  }

  for (std::size_t m = 0; m < maps.size(); ++m) {
    const IdMap& map = maps[m];
    RankHistogram hist = rank_displacement(map.report);
    out += "# displacement\tstrategy=" + strategy_name(map.report.strategy) +
           "\tfile=" + a.idmaps[m] + "\n";
    out += "level\trank\tcount\n";
    for (std::size_t l = 0; l < hist.counts.size(); ++l)
      for (std::size_t r = 0; r < hist.counts[l].size(); ++r)
        out += std::to_string(l + 1) + "\t" + std::to_string(r + 1) + "\t" +
               std::to_string(hist.counts[l][r]) + "\n";
  }

  // Token search space per id scheme: the axis behind comparing pure
  // semantic ids against prefix + conflict-index ids.
  out += "# searchspace\n";
  out += "file\tscheme\tlevels\tspace\n";
  for (std::size_t m = 0; m < maps.size(); ++m) {
    const IdMap& map = maps[m];
    const std::uint64_t base = provider.capacity();
    if (map.report.strategy == Strategy::Suffix) {
      std::uint32_t max_suffix = 0;
      for (std::uint32_t s : map.report.suffixes)
        max_suffix = std::max(max_suffix, s);
      out += a.idmaps[m] + "\tsuffix\t" + std::to_string(provider.levels()) +
             "+1\t" + std::to_string(base * (max_suffix + 1)) + "\n";
    } else {
      out += a.idmaps[m] + "\tsemantic\t" + std::to_string(provider.levels()) +
             "\t" + std::to_string(base) + "\n";
    }
  }

  emit(a.out, out);
  return 0;
}

int do_bench(const BenchArgs& a) {
  TimingReport timing;
  auto t0 = Clock::now();
  EmbeddingSet set = gen_synthetic(a.n, a.dim, a.clusters, a.spread, a.seed);
  timing.add("gen", std::chrono::duration<double>(Clock::now() - t0).count());

  TrainMeta meta;
  meta.seed = a.seed;
  meta.max_iters = a.max_iters;
  std::optional<CodebookStack> stack;
  std::optional<HcTree> tree;
  t0 = Clock::now();
  if (a.indexer == "rq") {
    stack = train_rq(set, a.levels, a.width, meta);
  } else if (a.indexer == "hc") {
    tree = train_hc(set, a.levels, a.width, meta);
  } else {
    throw ValidationError("unknown --indexer '" + a.indexer + "'");
  }
  timing.add("train_" + a.indexer,
             std::chrono::duration<double>(Clock::now() - t0).count());
  CandidateProvider provider =
      stack ? CandidateProvider(*stack) : CandidateProvider(*tree);

  std::string counts_table = "# counts\nstrategy\tdistinct_ids\tconflicting\n";
  std::stringstream methods(a.methods);
  std::string method;
  while (std::getline(methods, method, ',')) {
    AssignConfig cfg;
    cfg.strategy = strategy_from_name(method);
    cfg.kvec = parse_kvec(a.k, provider.levels());
    if (a.on_exhausted == "widen") cfg.on_exhausted = OnExhausted::WidenK;
    AssignReport report = assign(set, provider, cfg);
    timing.add("assign_" + method, report.assign_seconds);

    std::unordered_set<SemanticId, SemanticIdHash> distinct(
        report.ids.begin(), report.ids.end());
    ConflictStats stats = conflict_stats(report);
    std::size_t distinct_count = report.strategy == Strategy::Suffix
                                     ? report.size()
                                     : distinct.size();
    counts_table += method + "\t" + std::to_string(distinct_count) + "\t" +
                    std::to_string(stats.conflicting) + "\n";
  }

  std::string out = "# semid-bench\tn=" + std::to_string(a.n) +
                    "\tdim=" + std::to_string(a.dim) +
                    "\tclusters=" + std::to_string(a.clusters) +
                    "\tspread=" + std::to_string(a.spread) +
                    "\tseed=" + std::to_string(a.seed) +
                    "\tindexer=" + a.indexer +
                    "\tlevels=" + std::to_string(a.levels) +
                    "\twidth=" + std::to_string(a.width) + "\tk=" + a.k + "\n";
  out += "# timing\nphase\tseconds\n";
  for (const auto& [phase, seconds] : timing.phases)
    out += phase + "\t" + fmt(seconds) + "\n";
  out += counts_table;
  emit(a.out, out);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"purely semantic id toolkit"};
  app.require_subcommand(1);

  GenArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic corpus");
  gen->add_option("--out", gen_args.out, "output embedding file")->required();
  gen->add_option("--n", gen_args.n, "number of embeddings");
  gen->add_option("--dim", gen_args.dim, "dimension");
  gen->add_option("--clusters", gen_args.clusters, "mixture components");
  gen->add_option("--spread", gen_args.spread,
                  "cluster tightness; smaller means tighter and more "
                  "greedy conflicts");
  gen->add_option("--seed", gen_args.seed, "rng seed");
  gen->add_option("--format", gen_args.format, "bin|lines")
      ->check(CLI::IsMember({"bin", "lines"}));

  auto add_train = [&](const char* name, const char* help, const char* width,
                       TrainArgs& args) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("--embeddings", args.embeddings, "input embeddings")
        ->required();
    cmd->add_option("--embedding-format", args.embedding_format,
                    "auto|bin|lines");
    cmd->add_option("--out", args.out, "output index file")->required();
    cmd->add_option("--levels", args.levels, "id length L");
    cmd->add_option(width, args.width, "tokens per level");
    cmd->add_option("--seed", args.meta.seed, "rng seed");
    cmd->add_option("--max-iters", args.meta.max_iters, "kmeans iteration cap");
    cmd->add_option("--tol", args.meta.tol, "kmeans relative improvement stop");
    cmd->add_flag("--normalize", args.meta.normalize,
                  "unit-normalize vectors before training");
    cmd->add_option("--index-format", args.index_format, "text|bin")
        ->check(CLI::IsMember({"text", "bin"}));
    return cmd;
  };
  TrainArgs rq_args, hc_args;
  CLI::App* train_rq_cmd = add_train(
      "train-rq", "train a residual k-means codebook stack", "--codebook-size",
      rq_args);
  CLI::App* train_hc_cmd = add_train(
      "train-hc", "train a hierarchical clustering tree", "--branching",
      hc_args);

  AssignArgs assign_args;
  CLI::App* assign_cmd = app.add_subcommand("assign", "assign semantic ids");
  assign_cmd->add_option("--embeddings", assign_args.embeddings, "embeddings")
      ->required();
  assign_cmd->add_option("--embedding-format", assign_args.embedding_format,
                         "auto|bin|lines");
  assign_cmd->add_option("--index", assign_args.index, "trained index")
      ->required();
  assign_cmd->add_option("--out", assign_args.out, "output id map")->required();
  assign_cmd->add_option("--method", assign_args.method,
                         "greedy|suffix|ecm|rrs");
  assign_cmd->add_option("--k", assign_args.k,
                         "per-level candidate counts, comma list or scalar");
  assign_cmd->add_option("--ranking", assign_args.ranking,
                         "score|order|random (ecm only)");
  assign_cmd->add_option("--ranking-seed", assign_args.ranking_seed,
                         "seed for random ranking");
  assign_cmd->add_option("--on-exhausted", assign_args.on_exhausted,
                         "fail|widen");
  assign_cmd->add_option("--pre-registry", assign_args.pre_registry,
                         "id map whose ids are treated as already granted");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "conflict/distortion report");
  eval_cmd->add_option("--embeddings", eval_args.embeddings, "embeddings")
      ->required();
  eval_cmd->add_option("--embedding-format", eval_args.embedding_format,
                       "auto|bin|lines");
  eval_cmd->add_option("--index", eval_args.index, "trained index")->required();
  eval_cmd->add_option("--idmap", eval_args.idmaps, "id map(s) to evaluate")
      ->required();
  eval_cmd->add_option("--out", eval_args.out, "output file (default stdout)");

  BenchArgs bench_args;
  CLI::App* bench_cmd =
      app.add_subcommand("bench", "time a full train+assign pipeline");
  bench_cmd->add_option("--n", bench_args.n, "corpus size");
  bench_cmd->add_option("--dim", bench_args.dim, "dimension");
  bench_cmd->add_option("--clusters", bench_args.clusters, "mixture components");
  bench_cmd->add_option("--spread", bench_args.spread, "cluster tightness");
  bench_cmd->add_option("--seed", bench_args.seed, "rng seed");
  bench_cmd->add_option("--indexer", bench_args.indexer, "rq|hc");
  bench_cmd->add_option("--levels", bench_args.levels, "id length L");
  bench_cmd->add_option("--codebook-size", bench_args.width,
                        "tokens per level (or branching for hc)");
  bench_cmd->add_option("--max-iters", bench_args.max_iters,
                        "kmeans iteration cap");
  bench_cmd->add_option("--k", bench_args.k, "per-level candidate counts");
  bench_cmd->add_option("--methods", bench_args.methods,
                        "comma list of strategies to time");
  bench_cmd->add_option("--on-exhausted", bench_args.on_exhausted,
                        "fail|widen");
  bench_cmd->add_option("--out", bench_args.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return do_gen(gen_args);
    if (train_rq_cmd->parsed()) return do_train(rq_args, /*hc=*/false);
    if (train_hc_cmd->parsed()) return do_train(hc_args, /*hc=*/true);
    if (assign_cmd->parsed()) return do_assign(assign_args);
    if (eval_cmd->parsed()) return do_eval(eval_args);
    if (bench_cmd->parsed()) return do_bench(bench_args);
  } catch (const CapacityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ExhaustedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("semid");
  for (const std::string& arg : args) argv.push_back(arg.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace semid
