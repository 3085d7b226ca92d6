#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include "pcf/bucc_eval.hpp"
#include "pcf/embedding_store.hpp"
#include "pcf/error.hpp"
#include "pcf/langid.hpp"
#include "pcf/margin_scorer.hpp"
#include "pcf/negative_sampler.hpp"
#include "pcf/pair_classifier.hpp"
#include "pcf/pipeline.hpp"
#include "pcf/score_combiner.hpp"
#include "pcf/score_table.hpp"

namespace pcf::cli {
namespace {

using nlohmann::json;

std::optional<Index> dim_flag(Index dim) {
  return dim > 0 ? std::optional<Index>(dim) : std::nullopt;
}

std::vector<IndexPair> pairs_or_identity(const std::string& path, Index src_rows,
                                         Index tgt_rows) {
  if (!path.empty()) return read_index_pairs(path);
  if (src_rows != tgt_rows) {
    throw Error(Errc::RowCountMismatch,
                "without --pairs both embedding files must have the same row count");
  }
  std::vector<IndexPair> pairs(static_cast<std::size_t>(src_rows));
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = {i, i};
  return pairs;
}

std::array<double, 3> parse_weights(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 3) {
    throw Error(Errc::UsageError, "--weights needs three comma-separated values");
  }
  std::array<double, 3> w{};
  for (std::size_t i = 0; i < 3; ++i) {
    try {
      std::size_t used = 0;
      w[i] = std::stod(std::string(parts[i]), &used);
      if (used != parts[i].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(Errc::UsageError, "bad weight '" + std::string(parts[i]) + "'");
    }
  }
  return w;
}

struct LangIdTrainArgs {
  std::vector<std::string> corpora;
  int order = 3;
  std::string out;
};

struct LangIdScoreArgs {
  std::string model, input, verdicts, lang, out;
  double threshold = 0.8;
  std::size_t window = 20;
  std::size_t stride = 10;
};

struct MarginArgs {
  std::string src, tgt, pairs, out, variant = "ratio";
  Index k = 4;
  double epsilon = 1e-9;
  Index dim = 0;
  unsigned threads = 0;
};

struct NegativesArgs {
  std::string pairs, out, weights = "1,1,1";
  std::size_t window = 2;
  std::uint64_t seed = 0;
  double lo = 0.3;
  double hi = 0.7;
};

struct ClassifierTrainArgs {
  std::string data, src, tgt, out;
  Index hidden = TrainConfig{}.hidden_dim;
  double lr = TrainConfig{}.learning_rate;
  Index batch = TrainConfig{}.batch_size;
  std::uint32_t epochs = TrainConfig{}.max_epochs;
  std::uint32_t patience = TrainConfig{}.patience;
  std::uint64_t seed = 0;
  Index dim = 0;
};

struct ClassifierScoreArgs {
  std::string model, pairs, src, tgt, out;
  Index dim = 0;
  unsigned threads = 0;
};

struct CombineArgs {
  std::string base, custom, cls, mask, out, normalize = "none";
  double sentinel = -1e30;
};

struct SelectArgs {
  std::string scores, english, out, report, source, submission;
  std::size_t budget = 5'000'000;
};

struct BuccArgs {
  std::string src, tgt;
  Index dim = 0;
  Index cap = 20000;
  unsigned threads = 0;
};

void run_langid_train(const LangIdTrainArgs& a, std::ostream& out) {
  std::map<std::string, std::vector<std::string>> corpora;
  for (const auto& spec : a.corpora) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(Errc::UsageError, "--corpus expects LANG=FILE, got '" + spec + "'");
    }
    auto& lines = corpora[spec.substr(0, eq)];
    for (auto& l : read_lines(spec.substr(eq + 1))) lines.push_back(std::move(l));
  }
  const LangIdModel model = train_langid(corpora, a.order);
  write_langid_model(model, a.out);
  out << "trained " << model.languages.size() << " languages, order " << a.order
      << " -> " << a.out << "\n";
}

void run_langid_score(const LangIdScoreArgs& a, std::ostream& out) {
  std::vector<VerdictRecord> records;
  if (!a.verdicts.empty()) {
    records = read_verdicts(a.verdicts);
    for (auto& r : records) r.pass = gate(r.verdict, a.lang, a.threshold);
  } else {
    if (a.model.empty() || a.input.empty()) {
      throw Error(Errc::UsageError, "langid score needs --model and --input, or --verdicts");
    }
    const LangIdModel model = read_langid_model(a.model);
    model.language_index(a.lang);
    const auto sentences = read_lines(a.input);
    records.resize(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      records[i].verdict = identify(sentences[i], model, {a.window, a.stride});
      records[i].pass = gate(records[i].verdict, a.lang, a.threshold);
    }
  }
  write_verdicts(records, a.out);
  std::size_t pass = 0;
  for (const auto& r : records) pass += r.pass;
  out << pass << "/" << records.size() << " sentences pass -> " << a.out << "\n";
}

void run_margin(const MarginArgs& a, std::ostream& out) {
  const auto src = load_embeddings(a.src, dim_flag(a.dim));
  const auto tgt = load_embeddings(a.tgt, dim_flag(a.dim));
  const auto pairs = pairs_or_identity(a.pairs, src.rows(), tgt.rows());
  MarginConfig config;
  config.k = a.k;
  config.variant = parse_margin_variant(a.variant);
  config.epsilon = a.epsilon;
  config.threads = a.threads;
  write_score_table(score_corpus(src, tgt, pairs, config), a.out);
  out << "scored " << pairs.size() << " pairs -> " << a.out << "\n";
}

void run_negatives(const NegativesArgs& a, std::ostream& out) {
  CorruptionSpec spec;
  spec.window = a.window;
  spec.seed = a.seed;
  spec.fraction_range = {a.lo, a.hi};
  spec.strategy_weights = parse_weights(a.weights);
  const auto positives = read_sentence_pairs(a.pairs);
  const LabeledPairSet set = build_training_set(positives, spec);
  write_labeled_pairs(set.train, a.out);
  const auto val = validation_path(a.out);
  write_labeled_pairs(set.validation, val);
  out << set.train.size() << " training and " << set.validation.size()
      << " validation examples -> " << a.out << ", " << val.string() << "\n";
}

void run_classifier_train(const ClassifierTrainArgs& a, std::ostream& out) {
  LabeledPairSet data;
  data.train = read_labeled_pairs(a.data);
  data.validation = read_labeled_pairs(validation_path(a.data));
  const auto src = load_embeddings(a.src, dim_flag(a.dim));
  const auto tgt = load_embeddings(a.tgt, dim_flag(a.dim));
  TrainConfig config;
  config.hidden_dim = a.hidden;
  config.learning_rate = a.lr;
  config.batch_size = a.batch;
  config.max_epochs = a.epochs;
  config.patience = a.patience;
  config.seed = a.seed;
  const ClassifierModel model = train(data, src, tgt, config);
  write_classifier(model, a.out);
  out << json{{"epochs", model.epochs}, {"val_accuracy", model.val_accuracy}}.dump()
      << "\n";
}

void run_classifier_score(const ClassifierScoreArgs& a, std::ostream& out) {
  const auto model = read_classifier(a.model);
  const auto src = load_embeddings(a.src, dim_flag(a.dim));
  const auto tgt = load_embeddings(a.tgt, dim_flag(a.dim));
  const auto pairs = pairs_or_identity(a.pairs, src.rows(), tgt.rows());
  write_score_table(score_corpus_classifier(pairs, src, tgt, model, a.threads), a.out);
  out << "scored " << pairs.size() << " pairs -> " << a.out << "\n";
}

void run_combine(const CombineArgs& a, std::ostream& out) {
  CombineConfig config;
  config.normalization = parse_normalization(a.normalize);
  config.sentinel = a.sentinel;
  std::vector<std::uint8_t> mask;
  if (!a.mask.empty()) {
    for (const auto& r : read_verdicts(a.mask)) mask.push_back(r.pass ? 1 : 0);
  }
  const ScoreTable combined =
      combine(read_score_table(a.base), read_score_table(a.custom),
              read_score_table(a.cls), mask, config);
  write_score_table(combined, a.out);
  out << "combined " << combined.size() << " pairs -> " << a.out << "\n";
}

void run_select(const SelectArgs& a, std::ostream& out) {
  const ScoreTable scores = read_score_table(a.scores);
  const auto english = read_lines(a.english);
  const auto tokens = count_english_tokens(english);
  const SelectionReport report = select_by_budget(scores, tokens, a.budget);
  std::string kept;
  for (std::size_t i : report.kept_indices) {
    kept += std::to_string(i) + '\t' + format_score(scores[i].score) + '\t' +
            std::to_string(tokens[i]) + '\n';
  }
  write_text(a.out, kept);
  if (!a.submission.empty()) {
    if (a.source.empty()) throw Error(Errc::UsageError, "--submission needs --source");
    write_submission(scores, read_lines(a.source), english, a.submission);
  }
  const json summary = {
      {"kept", report.kept_indices.size()},
      {"cumulative_tokens", report.cumulative_tokens},
      {"cutoff_score",
       report.kept_indices.empty() ? json(nullptr) : json(report.cutoff_score)},
      {"rejected_by_langid", report.rejected_by_langid}};
  if (!a.report.empty()) write_text(a.report, summary.dump(2) + "\n");
  out << summary.dump() << "\n";
}

void run_bucc(const BuccArgs& a, std::ostream& out) {
  const auto src = load_embeddings(a.src, dim_flag(a.dim));
  const auto tgt = load_embeddings(a.tgt, dim_flag(a.dim));
  BuccOptions options;
  options.materialize_cap = a.cap;
  options.threads = a.threads;
  const double acc = bucc_accuracy(src, tgt, options);
  out << json{{"n", src.rows()}, {"accuracy", acc}}.dump() << "\n";
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Parallel corpus filtering: language-ID gate, margin and classifier "
               "scoring, score fusion and token-budget selection.",
               "pcfilter"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  // langid
  auto* langid = app.add_subcommand("langid", "Character n-gram language identification");
  langid->require_subcommand(1);
  LangIdTrainArgs lt;
  auto* lid_train = langid->add_subcommand("train", "Train a model from per-language corpora");
  lid_train->add_option("--corpus", lt.corpora, "LANG=FILE, one sentence per line")
      ->required()
      ->expected(1, -1);
  lid_train->add_option("--order", lt.order, "Highest n-gram order")->check(CLI::Range(1, 9));
  lid_train->add_option("--out", lt.out, "Model file")->required();

  LangIdScoreArgs ls;
  auto* lid_score = langid->add_subcommand("score", "Write per-sentence verdicts");
  lid_score->add_option("--model", ls.model, "Model file");
  lid_score->add_option("--input", ls.input, "Sentences, one per line");
  lid_score->add_option("--verdicts", ls.verdicts, "Re-gate an existing verdict file");
  lid_score->add_option("--lang", ls.lang, "Source language code")->required();
  lid_score->add_option("--threshold", ls.threshold, "Minimum source fraction")
      ->check(CLI::Range(0.0, 1.0));
  lid_score->add_option("--window", ls.window, "Window width in characters")
      ->check(CLI::PositiveNumber);
  lid_score->add_option("--stride", ls.stride, "Window stride in characters")
      ->check(CLI::PositiveNumber);
  lid_score->add_option("--out", ls.out, "Verdict TSV")->required();

  // margin
  MarginArgs ma;
  auto* margin = app.add_subcommand("margin", "Margin-score candidate pairs");
  margin->add_option("--src-emb", ma.src, "Source embeddings")->required();
  margin->add_option("--tgt-emb", ma.tgt, "Target embeddings")->required();
  margin->add_option("--pairs", ma.pairs, "src_index<TAB>tgt_index file (default: row i with row i)");
  margin->add_option("--k", ma.k, "Neighbourhood size")->check(CLI::PositiveNumber);
  margin->add_option("--variant", ma.variant, "Margin function")
      ->check(CLI::IsMember({"ratio", "distance", "absolute"}));
  margin->add_option("--epsilon", ma.epsilon, "Ratio denominator guard");
  margin->add_option("--dim", ma.dim, "Row width for headerless files (0 = header)");
  margin->add_option("--threads", ma.threads, "Worker threads (0 = all cores)");
  margin->add_option("--out", ma.out, "Score table TSV")->required();

  // negatives
  NegativesArgs na;
  auto* negatives = app.add_subcommand("negatives", "Build a labeled pair set with negatives");
  negatives->add_option("--pairs", na.pairs, "src<TAB>tgt positive pairs")->required();
  negatives->add_option("--window", na.window, "Adjacent-sentence window")
      ->check(CLI::PositiveNumber);
  negatives->add_option("--seed", na.seed, "Random seed");
  negatives->add_option("--weights", na.weights, "adjacent,truncate,swap weights");
  negatives->add_option("--min-frac", na.lo, "Lowest corrupted word fraction")
      ->check(CLI::Range(0.0, 1.0));
  negatives->add_option("--max-frac", na.hi, "Highest corrupted word fraction")
      ->check(CLI::Range(0.0, 1.0));
  negatives->add_option("--out", na.out, "Training TSV; validation goes to <out>.val.tsv")
      ->required();

  // classifier
  auto* classifier = app.add_subcommand("classifier", "Pair classifier");
  classifier->require_subcommand(1);
  ClassifierTrainArgs ct;
  auto* cls_train = classifier->add_subcommand("train", "Train on a labeled pair set");
  cls_train->add_option("--data", ct.data, "Training TSV (validation read from <data>.val.tsv)")
      ->required();
  cls_train->add_option("--src-emb", ct.src, "Source embeddings: training rows, then validation rows")
      ->required();
  cls_train->add_option("--tgt-emb", ct.tgt, "Target embeddings: training rows, then validation rows")
      ->required();
  cls_train->add_option("--hidden", ct.hidden, "Hidden width")->check(CLI::PositiveNumber);
  cls_train->add_option("--lr", ct.lr, "Learning rate")->check(CLI::PositiveNumber);
  cls_train->add_option("--batch", ct.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  cls_train->add_option("--epochs", ct.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  cls_train->add_option("--patience", ct.patience, "Early-stopping patience")
      ->check(CLI::PositiveNumber);
  cls_train->add_option("--seed", ct.seed, "Random seed");
  cls_train->add_option("--dim", ct.dim, "Row width for headerless files (0 = header)");
  cls_train->add_option("--out", ct.out, "Model file")->required();

  ClassifierScoreArgs cs;
  auto* cls_score = classifier->add_subcommand("score", "Score candidate pairs");
  cls_score->add_option("--model", cs.model, "Model file")->required();
  cls_score->add_option("--pairs", cs.pairs, "src_index<TAB>tgt_index file (default: row i with row i)");
  cls_score->add_option("--src-emb", cs.src, "Source embeddings")->required();
  cls_score->add_option("--tgt-emb", cs.tgt, "Target embeddings")->required();
  cls_score->add_option("--dim", cs.dim, "Row width for headerless files (0 = header)");
  cls_score->add_option("--threads", cs.threads, "Worker threads (0 = all cores)");
  cls_score->add_option("--out", cs.out, "Score table TSV")->required();

  // combine
  CombineArgs ca;
  auto* comb = app.add_subcommand("combine", "Sum baseline, custom and classifier scores");
  comb->add_option("--base", ca.base, "Pretrained-embedding margin scores")->required();
  comb->add_option("--custom", ca.custom, "Custom-embedding margin scores")->required();
  comb->add_option("--cls", ca.cls, "Classifier scores")->required();
  comb->add_option("--mask", ca.mask, "Language-ID verdict TSV");
  comb->add_option("--normalize", ca.normalize, "Per-component normalization")
      ->check(CLI::IsMember({"none", "minmax"}));
  comb->add_option("--sentinel", ca.sentinel, "Score given to rejected pairs");
  comb->add_option("--out", ca.out, "Combined score TSV")->required();

  // select
  SelectArgs sa;
  auto* sel = app.add_subcommand("select", "Keep the best pairs up to an English token budget");
  sel->add_option("--scores", sa.scores, "Score table TSV")->required();
  sel->add_option("--english", sa.english, "English sentences, one per pair")->required();
  sel->add_option("--budget", sa.budget, "English token budget");
  sel->add_option("--out", sa.out, "Kept pairs: pair_index<TAB>score<TAB>tokens")->required();
  sel->add_option("--report", sa.report, "JSON selection summary");
  sel->add_option("--source", sa.source, "Source sentences, one per pair");
  sel->add_option("--submission", sa.submission, "score<TAB>src<TAB>tgt file, best first");

  // eval-bucc
  BuccArgs ba;
  auto* bucc = app.add_subcommand("eval-bucc", "Bidirectional top-1 retrieval accuracy");
  bucc->add_option("--src-emb", ba.src, "Source embeddings (aligned dev set)")->required();
  bucc->add_option("--tgt-emb", ba.tgt, "Target embeddings (aligned dev set)")->required();
  bucc->add_option("--dim", ba.dim, "Row width for headerless files (0 = header)");
  bucc->add_option("--cap", ba.cap, "Largest n for which the full matrix is built")
      ->check(CLI::PositiveNumber);
  bucc->add_option("--threads", ba.threads, "Worker threads (0 = all cores)");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "End-to-end runs");
  pipeline->require_subcommand(1);
  std::string manifest;
  auto* pipe_run = pipeline->add_subcommand("run", "Run every stage from a manifest");
  pipe_run->add_option("--manifest", manifest, "Pipeline manifest (JSON)")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (lid_train->parsed()) run_langid_train(lt, out);
    else if (lid_score->parsed()) run_langid_score(ls, out);
    else if (margin->parsed()) run_margin(ma, out);
    else if (negatives->parsed()) run_negatives(na, out);
    else if (cls_train->parsed()) run_classifier_train(ct, out);
    else if (cls_score->parsed()) run_classifier_score(cs, out);
    else if (comb->parsed()) run_combine(ca, out);
    else if (sel->parsed()) run_select(sa, out);
    else if (bucc->parsed()) run_bucc(ba, out);
    else if (pipe_run->parsed()) {
      const SelectionReport r = run_pipeline(load_manifest(manifest));
      out << json{{"kept", r.kept_indices.size()},
                  {"cumulative_tokens", r.cumulative_tokens},
                  {"rejected_by_langid", r.rejected_by_langid}}
                 .dump()
          << "\n";
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == Errc::UsageError ? kExitUsage : kExitStageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitStageError;
  }
  return kExitOk;
}

}  // namespace pcf::cli
