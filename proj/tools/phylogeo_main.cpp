// Copyright 2026 phylogeo project contributors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "phylogeo/bench.hpp"
#include "phylogeo/checkpoint.hpp"
#include "phylogeo/common.hpp"
#include "phylogeo/embed.hpp"
#include "phylogeo/estimators.hpp"
#include "phylogeo/likelihood.hpp"
#include "phylogeo/seqdata.hpp"
#include "phylogeo/trainer.hpp"
#include "phylogeo/tree.hpp"

namespace {

namespace fs = std::filesystem;
using namespace phylogeo;

std::string VersionLine() { return std::string("# phylogeo ") + kVersion; }

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteTextFile(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot open " + path + " for writing");
  }
  out << content;
  if (!out) {
    throw DataError("cannot write " + path);
  }
}

void EnsureDirectory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DataError("cannot create directory " + dir + ": " + ec.message());
  }
}

std::string FormatDouble(double value) {
  char buffer[48];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

// First tree line of a file, skipping blanks and '#' comments.
std::string FirstTreeLine(const std::string& path) {
  std::istringstream in(ReadTextFile(path));
  std::string line;
  while (std::getline(in, line)) {
    const size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    return line;
  }
  throw DataError("no tree found in " + path);
}

// Tree-file parsing failures are data errors regardless of which layer threw.
template <typename Fn>
auto AsDataError(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DataError&) {
    throw;
  } catch (const PhylogeoError& e) {
    throw DataError(path + ": " + e.what());
  }
}

// Rows reordered to the checkpoint's taxon order; the name sets must match.
Alignment ReorderToTaxa(const Alignment& alignment,
                        const std::vector<std::string>& taxa) {
  if (alignment.TaxonCount() != taxa.size()) {
    throw DataError("alignment has " + std::to_string(alignment.TaxonCount()) +
                    " taxa but the checkpoint has " +
                    std::to_string(taxa.size()));
  }
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < alignment.taxa.size(); ++i) {
    index[alignment.taxa[i]] = i;
  }
  Alignment out;
  out.taxa = taxa;
  for (const std::string& name : taxa) {
    const auto it = index.find(name);
    if (it == index.end()) {
      throw DataError("checkpoint taxon '" + name + "' not in the alignment");
    }
    out.rows.push_back(alignment.rows[it->second]);
  }
  return out;
}

int DefaultThreads() {
  const unsigned cores = std::thread::hardware_concurrency();
  return cores == 0 ? 1 : static_cast<int>(cores);
}

struct InferOptions {
  std::string config;
  std::string data;
  std::string out;
  std::string space = "euclidean";
  std::string cov = "diag";
  int dim = 2;
  std::string estimator = "loo";
  int sample_count = 2;
  bool lax_drop_entropy = false;
  std::string link = "nj";
  double lr = 0.001;
  double lr_decay = 0.75;
  int64_t lr_decay_every = 200000;
  int64_t anneal_samples = 100000;
  double beta_start = 0.001;
  int64_t nle_budget = 1000000;
  uint64_t seed = 0;
  int64_t trace_every = 1000;
  int threads = DefaultThreads();
  int mll_samples = 1000;
  int mll_reps = 1;
  int topology_samples = 1000;
};

int64_t ConfigInt(const std::string& value) {
  size_t used = 0;
  int64_t parsed = 0;
  try {
    parsed = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  Assert(!value.empty() && used == value.size(),
         "bad integer value '" + value + "' in configuration file");
  return parsed;
}

double ConfigDouble(const std::string& value) {
  size_t used = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  Assert(!value.empty() && used == value.size(),
         "bad numeric value '" + value + "' in configuration file");
  return parsed;
}

bool ConfigBool(const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  Failwith("bad boolean value '" + value + "' in configuration file");
}

std::string TrimmedCopy(const std::string& text) {
  const size_t first = text.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const size_t last = text.find_last_not_of(" \t\r");
  return text.substr(first, last - first + 1);
}

// Config files are key=value lines using the long flag names without dashes.
// Keys already given as explicit flags keep their command line values, so
// precedence is flags, then the file, then built-in defaults.
void ApplyConfigFile(const CLI::App& cmd, InferOptions& opt) {
  using Setter = std::function<void(InferOptions&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"data", [](InferOptions& o, const std::string& v) { o.data = v; }},
      {"space", [](InferOptions& o, const std::string& v) { o.space = v; }},
      {"cov", [](InferOptions& o, const std::string& v) { o.cov = v; }},
      {"dim",
       [](InferOptions& o, const std::string& v) {
         o.dim = static_cast<int>(ConfigInt(v));
       }},
      {"estimator",
       [](InferOptions& o, const std::string& v) { o.estimator = v; }},
      {"K",
       [](InferOptions& o, const std::string& v) {
         o.sample_count = static_cast<int>(ConfigInt(v));
       }},
      {"lax-drop-entropy",
       [](InferOptions& o, const std::string& v) {
         o.lax_drop_entropy = ConfigBool(v);
       }},
      {"link", [](InferOptions& o, const std::string& v) { o.link = v; }},
      {"lr",
       [](InferOptions& o, const std::string& v) { o.lr = ConfigDouble(v); }},
      {"lr-decay",
       [](InferOptions& o, const std::string& v) {
         o.lr_decay = ConfigDouble(v);
       }},
      {"lr-decay-every",
       [](InferOptions& o, const std::string& v) {
         o.lr_decay_every = ConfigInt(v);
       }},
      {"anneal-samples",
       [](InferOptions& o, const std::string& v) {
         o.anneal_samples = ConfigInt(v);
       }},
      {"beta-start",
       [](InferOptions& o, const std::string& v) {
         o.beta_start = ConfigDouble(v);
       }},
      {"nle-budget",
       [](InferOptions& o, const std::string& v) {
         o.nle_budget = ConfigInt(v);
       }},
      {"seed",
       [](InferOptions& o, const std::string& v) {
         o.seed = static_cast<uint64_t>(ConfigInt(v));
       }},
      {"trace-every",
       [](InferOptions& o, const std::string& v) {
         o.trace_every = ConfigInt(v);
       }},
      {"threads",
       [](InferOptions& o, const std::string& v) {
         o.threads = static_cast<int>(ConfigInt(v));
       }},
      {"mll-samples",
       [](InferOptions& o, const std::string& v) {
         o.mll_samples = static_cast<int>(ConfigInt(v));
       }},
      {"mll-reps",
       [](InferOptions& o, const std::string& v) {
         o.mll_reps = static_cast<int>(ConfigInt(v));
       }},
      {"topology-samples",
       [](InferOptions& o, const std::string& v) {
         o.topology_samples = static_cast<int>(ConfigInt(v));
       }},
  };
  if (opt.config.empty()) return;
  std::ifstream in(opt.config);
  if (!in) {
    throw DataError("cannot open configuration file '" + opt.config + "'");
  }
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string trimmed = TrimmedCopy(line);
    if (trimmed.empty()) continue;
    const size_t eq = trimmed.find('=');
    Assert(eq != std::string::npos,
           "configuration line without '=': " + trimmed);
    const std::string key = TrimmedCopy(trimmed.substr(0, eq));
    const std::string value = TrimmedCopy(trimmed.substr(eq + 1));
    const auto it = setters.find(key);
    Assert(it != setters.end(), "unknown configuration key '" + key + "'");
    Assert(!value.empty(), "empty value for configuration key '" + key + "'");
    if (cmd.count("--" + key) > 0) continue;
    it->second(opt, value);
  }
}

TrainConfig BuildTrainConfig(const InferOptions& opt) {
  TrainConfig config;
  config.space = ParseSpace(opt.space);
  config.cov = ParseCovType(opt.cov);
  config.dim = opt.dim;
  config.estimator = ParseEstimatorKind(opt.estimator);
  config.lax_drop_entropy = opt.lax_drop_entropy;
  config.sample_count = opt.sample_count;
  config.link = ParseLinkMethod(opt.link);
  config.lr = opt.lr;
  config.lr_decay = opt.lr_decay;
  config.lr_decay_every = opt.lr_decay_every;
  config.anneal_samples = opt.anneal_samples;
  config.beta_start = opt.beta_start;
  config.nle_budget = opt.nle_budget;
  config.seed = opt.seed;
  config.trace_every = opt.trace_every;
  config.threads = opt.threads;
  config.mll_samples = opt.mll_samples;
  config.mll_reps = opt.mll_reps;
  config.topology_sample_count = opt.topology_samples;
  // Argument-level checks that must fail before any data is read.
  Assert(config.sample_count >= 1, "--K must be at least 1");
  Assert(!NeedsMultipleSamples(config.estimator) || config.sample_count >= 2,
         "estimator " + opt.estimator + " needs --K of at least 2");
  Assert(config.nle_budget >= config.sample_count,
         "--nle-budget must cover at least one step");
  return config;
}

int CmdInfer(const InferOptions& opt) {
  const TrainConfig config = BuildTrainConfig(opt);
  const Alignment alignment = ReadAlignmentFile(opt.data);
  const TrainResult result = Train(config, alignment);
  const std::vector<std::string>& taxa = result.state.taxa;
  EnsureDirectory(opt.out);
  const fs::path out(opt.out);

  WriteTextFile((out / "trace.csv").string(),
                VersionLine() + "\n" + TraceCsv(result.trace.rows));

  std::string topologies = VersionLine() + "\n";
  for (const Topology& topology : result.trace.topology_samples) {
    topologies += WriteNewick(topology, taxa) + "\n";
  }
  WriteTextFile((out / "topologies.nwk").string(), topologies);

  WriteTextFile((out / "consensus.nwk").string(),
                VersionLine() + "\n" + result.trace.consensus.ToNewick(taxa) +
                    "\n");

  TrainingMeta meta;
  meta.step = static_cast<uint64_t>(result.trace.steps);
  meta.nle_count = result.trace.nle_count;
  meta.beta = AnnealedBeta(config, result.trace.nle_count);
  meta.lr = DecayedLearningRate(config, result.trace.steps);
  meta.estimator = EstimatorKindName(config.estimator);
  meta.sample_count = config.sample_count;
  meta.seed = config.seed;
  WriteCheckpointFile((out / "checkpoint.json").string(), result.state, meta);

  const double simpson = SimpsonDiversity(result.trace.topology_samples);
  std::string mll = VersionLine() + "\n";
  mll += "mll_mean=" + FormatDouble(result.trace.mll.mean) + "\n";
  mll += "mll_std=" + FormatDouble(result.trace.mll.std_dev) + "\n";
  mll += "mll_reps=" + std::to_string(result.trace.mll.reps) + "\n";
  mll += "mll_samples=" + std::to_string(config.mll_samples) + "\n";
  mll += "steps=" + std::to_string(result.trace.steps) + "\n";
  mll += "nle=" + std::to_string(result.trace.nle_count) + "\n";
  mll += "skipped_steps=" + std::to_string(result.trace.skipped_steps) + "\n";
  mll += "simpson=" + FormatDouble(simpson) + "\n";
  WriteTextFile((out / "mll.txt").string(), mll);

  const Eigen::MatrixXd coords = PlotCoordinates(
      result.state.spec, result.state.q_theta.Params(), result.state.TipCount());
  std::string coord_csv = VersionLine() + "\ntip";
  for (int a = 0; a < config.dim; ++a) {
    coord_csv += ",dim" + std::to_string(a);
  }
  coord_csv += "\n";
  for (int tip = 0; tip < result.state.TipCount(); ++tip) {
    coord_csv += taxa[tip];
    for (int a = 0; a < config.dim; ++a) {
      coord_csv += "," + FormatDouble(coords(tip, a));
    }
    coord_csv += "\n";
  }
  WriteTextFile((out / "coords.csv").string(), coord_csv);

  std::cout << VersionLine() << "\n"
            << "steps=" << result.trace.steps << "\n"
            << "nle=" << result.trace.nle_count << "\n"
            << "skipped_steps=" << result.trace.skipped_steps << "\n"
            << "mll_mean=" << FormatDouble(result.trace.mll.mean) << "\n"
            << "mll_std=" << FormatDouble(result.trace.mll.std_dev) << "\n"
            << "consensus=" << result.trace.consensus.ToNewick(taxa) << "\n"
            << "out=" << opt.out << "\n";
  return 0;
}

struct MllOptions {
  std::string checkpoint;
  std::string data;
  int samples = 1000;
  int reps = 1;
  uint64_t seed = 0;
  int threads = DefaultThreads();
};

int CmdMll(const MllOptions& opt) {
  Checkpoint checkpoint = ReadCheckpointFile(opt.checkpoint);
  const Alignment raw = ReadAlignmentFile(opt.data);
  const Alignment alignment = ReorderToTaxa(raw, checkpoint.state.taxa);
  const PruningEngine pruning(CompressSitePatterns(alignment));
  const MllReport report = EstimateMll(checkpoint.state, pruning, opt.samples,
                                       opt.reps, opt.seed, opt.threads);
  std::cout << VersionLine() << "\n"
            << "mll_mean=" << FormatDouble(report.mean) << "\n"
            << "mll_std=" << FormatDouble(report.std_dev) << "\n"
            << "mll_reps=" << report.reps << "\n"
            << "mll_samples=" << opt.samples << "\n";
  return 0;
}

struct ConsensusOptions {
  std::string trees;
  std::string out;
};

int CmdConsensus(const ConsensusOptions& opt) {
  const std::string text = ReadTextFile(opt.trees);
  const std::vector<NewickTree> trees =
      AsDataError(opt.trees, [&] { return ParseNewickLines(text); });
  const std::vector<std::string>& taxa = trees[0].taxa;
  std::vector<Topology> topologies;
  topologies.reserve(trees.size());
  for (const NewickTree& tree : trees) {
    topologies.push_back(tree.topology);
  }
  const ConsensusTree consensus = MajorityConsensus(topologies);
  const auto frequencies = BipartitionFrequencies(topologies);
  const double simpson = SimpsonDiversity(topologies);

  if (!opt.out.empty()) {
    EnsureDirectory(opt.out);
    const fs::path out(opt.out);
    WriteTextFile((out / "consensus.nwk").string(),
                  VersionLine() + "\n" + consensus.ToNewick(taxa) + "\n");
    std::string csv = VersionLine() + "\nsplit,frequency,tips\n";
    for (const auto& [split, frequency] : frequencies) {
      csv += split.ToHex() + "," + FormatDouble(frequency) + ",";
      bool first = true;
      for (size_t tip = 0; tip < split.TipCount(); ++tip) {
        if (!split.Test(tip)) continue;
        if (!first) csv += "|";
        csv += taxa[tip];
        first = false;
      }
      csv += "\n";
    }
    WriteTextFile((out / "bipartitions.csv").string(), csv);
  }

  std::cout << VersionLine() << "\n"
            << "consensus=" << consensus.ToNewick(taxa) << "\n"
            << "samples=" << topologies.size() << "\n"
            << "majority_splits=" << consensus.splits.size() << "\n"
            << "distinct_bipartitions=" << frequencies.size() << "\n"
            << "simpson=" << FormatDouble(simpson) << "\n";
  return 0;
}

struct CompareOptions {
  std::string file_a;
  std::string file_b;
};

int CmdCompare(const CompareOptions& opt) {
  const SplitTree a = AsDataError(
      opt.file_a, [&] { return ParseNewickSplits(FirstTreeLine(opt.file_a)); });
  const SplitTree b = AsDataError(opt.file_b, [&] {
    return ParseNewickSplits(FirstTreeLine(opt.file_b), a.taxa);
  });
  const size_t raw = RfDistance(a.splits, b.splits);
  const size_t max_rf = 2 * (a.tip_count - 3);
  const double normalized =
      max_rf == 0 ? 0.0
                  : static_cast<double>(raw) / static_cast<double>(max_rf);
  std::cout << VersionLine() << "\n"
            << "rf=" << raw << "\n"
            << "rf_normalized=" << FormatDouble(normalized) << "\n"
            << "max_rf=" << max_rf << "\n"
            << "tips=" << a.tip_count << "\n";
  return 0;
}

struct SimulateOptions {
  std::string tree;
  int sites = 500;
  uint64_t seed = 0;
  std::string out;
};

int CmdSimulate(const SimulateOptions& opt) {
  const NewickTree tree = AsDataError(
      opt.tree, [&] { return ParseNewick(FirstTreeLine(opt.tree)); });
  if (!tree.lengths.has_value()) {
    throw DataError("tree in " + opt.tree +
                    " must carry branch lengths on every edge");
  }
  const Alignment alignment = SimulateAlignment(
      tree.topology, *tree.lengths, tree.taxa, opt.sites, opt.seed);
  std::string fasta = "; phylogeo " + std::string(kVersion) + "\n";
  for (size_t i = 0; i < alignment.taxa.size(); ++i) {
    fasta += ">" + alignment.taxa[i] + "\n";
    const std::string& row = alignment.rows[i];
    for (size_t pos = 0; pos < row.size(); pos += 80) {
      fasta += row.substr(pos, 80) + "\n";
    }
  }
  WriteTextFile(opt.out, fasta);
  std::cout << VersionLine() << "\n"
            << "taxa=" << alignment.TaxonCount() << "\n"
            << "sites=" << alignment.SiteCount() << "\n"
            << "out=" << opt.out << "\n";
  return 0;
}

struct BenchOptions {
  std::string matrix;
  std::string report = "bench_report.csv";
  std::string work_dir = "bench_runs";
  std::string exe;
};

int CmdBench(const BenchOptions& opt) {
  const BenchReport report =
      RunMatrix(opt.matrix, opt.report, opt.exe, opt.work_dir);
  std::cout << VersionLine() << "\n"
            << "attempted=" << report.attempted << "\n"
            << "completed=" << report.completed << "\n"
            << "skipped=" << report.skipped << "\n"
            << "report=" << opt.report << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational phylogenetic inference over tip-coordinate "
               "distributions"};
  app.set_version_flag("--version", std::string("phylogeo ") + kVersion);
  app.require_subcommand(1);

  InferOptions infer_opt;
  CLI::App* infer = app.add_subcommand(
      "infer", "Train the variational posterior on an alignment");
  infer->add_option("--config", infer_opt.config,
                    "Configuration file with key=value lines; explicit flags "
                    "take precedence");
  infer->add_option("--data", infer_opt.data, "Alignment file (FASTA or NEXUS)")
      ->required();
  infer->add_option("--out", infer_opt.out, "Output directory")->required();
  infer->add_option("--space", infer_opt.space, "Coordinate space")
      ->check(CLI::IsMember({"euclidean", "hyperbolic"}))
      ->capture_default_str();
  infer->add_option("--cov", infer_opt.cov, "Covariance structure")
      ->check(CLI::IsMember({"diag", "full"}))
      ->capture_default_str();
  infer->add_option("--dim", infer_opt.dim, "Coordinate dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_option("--estimator", infer_opt.estimator, "Gradient estimator")
      ->check(CLI::IsMember({"plain", "loo", "lax", "loo_lax", "iw", "vimco"}))
      ->capture_default_str();
  infer->add_option("--K", infer_opt.sample_count,
                    "Monte Carlo samples per step")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_flag("--lax-drop-entropy", infer_opt.lax_drop_entropy,
                  "Drop the analytic entropy term from the LAX estimators");
  infer->add_option("--link", infer_opt.link, "Topology link function")
      ->check(CLI::IsMember({"nj", "upgma"}))
      ->capture_default_str();
  infer->add_option("--lr", infer_opt.lr,
                    "Adam learning rate (0.0001 is a documented alternative)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_option("--lr-decay", infer_opt.lr_decay, "Learning rate decay")
      ->capture_default_str();
  infer->add_option("--lr-decay-every", infer_opt.lr_decay_every,
                    "Steps between learning rate decays")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_option("--anneal-samples", infer_opt.anneal_samples,
                    "Likelihood evaluations until beta reaches 1 (0 disables)")
      ->capture_default_str();
  infer->add_option("--beta-start", infer_opt.beta_start,
                    "Initial inverse temperature")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_option("--nle-budget", infer_opt.nle_budget,
                    "Training budget in likelihood evaluations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_option("--seed", infer_opt.seed, "Random seed")
      ->capture_default_str();
  infer->add_option("--trace-every", infer_opt.trace_every,
                    "Steps between trace rows")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_option("--threads", infer_opt.threads,
                    "Evaluation threads; results are thread-count independent")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_option("--mll-samples", infer_opt.mll_samples,
                    "Importance samples per marginal likelihood repetition")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_option("--mll-reps", infer_opt.mll_reps,
                    "Marginal likelihood repetitions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  infer->add_option("--topology-samples", infer_opt.topology_samples,
                    "Topologies drawn from the trained posterior")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  MllOptions mll_opt;
  CLI::App* mll = app.add_subcommand(
      "mll", "Estimate the marginal log-likelihood from a checkpoint");
  mll->add_option("--checkpoint", mll_opt.checkpoint, "Checkpoint file")
      ->required();
  mll->add_option("--data", mll_opt.data, "Alignment file")->required();
  mll->add_option("--samples", mll_opt.samples, "Importance samples")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  mll->add_option("--reps", mll_opt.reps, "Independent repetitions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  mll->add_option("--seed", mll_opt.seed, "Random seed")
      ->capture_default_str();
  mll->add_option("--threads", mll_opt.threads, "Evaluation threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  ConsensusOptions consensus_opt;
  CLI::App* consensus = app.add_subcommand(
      "consensus", "Majority-rule consensus of a tree sample file");
  consensus->add_option("--trees", consensus_opt.trees,
                        "File with one Newick tree per line")
      ->required();
  consensus->add_option("--out", consensus_opt.out,
                        "Directory for consensus.nwk and bipartitions.csv");

  CompareOptions compare_opt;
  CLI::App* compare = app.add_subcommand(
      "compare", "Robinson-Foulds distance between two tree files");
  compare->add_option("tree_a", compare_opt.file_a, "First tree file")
      ->required();
  compare->add_option("tree_b", compare_opt.file_b, "Second tree file")
      ->required();

  SimulateOptions simulate_opt;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Simulate an alignment along a tree with branch lengths");
  simulate->add_option("--tree", simulate_opt.tree,
                       "Newick file with branch lengths")
      ->required();
  simulate->add_option("--sites", simulate_opt.sites, "Alignment length")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--seed", simulate_opt.seed, "Random seed")
      ->capture_default_str();
  simulate->add_option("--out", simulate_opt.out, "Output FASTA path")
      ->required();

  BenchOptions bench_opt;
  CLI::App* bench = app.add_subcommand(
      "bench", "Run a key=value grid of configurations as child processes");
  bench->add_option("--matrix", bench_opt.matrix, "Grid definition file")
      ->required();
  bench->add_option("--report", bench_opt.report, "Append-only report CSV")
      ->capture_default_str();
  bench->add_option("--work-dir", bench_opt.work_dir,
                    "Directory for per-run artifacts")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (infer->parsed()) {
      ApplyConfigFile(*infer, infer_opt);
      return CmdInfer(infer_opt);
    }
    if (mll->parsed()) return CmdMll(mll_opt);
    if (consensus->parsed()) return CmdConsensus(consensus_opt);
    if (compare->parsed()) return CmdCompare(compare_opt);
    if (simulate->parsed()) return CmdSimulate(simulate_opt);
    if (bench->parsed()) {
      std::error_code ec;
      const fs::path canon = fs::canonical(argv[0], ec);
      bench_opt.exe = ec ? argv[0] : canon.string();
      return CmdBench(bench_opt);
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const TrainingError& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return 4;
  } catch (const PhylogeoError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
