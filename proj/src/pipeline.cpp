#include "pcf/pipeline.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pcf/pair_classifier.hpp"
#include "pcf/score_table.hpp"

namespace pcf {
namespace {

using nlohmann::json;

const std::set<std::string> kRequiredInputs = {
    "pretrained_src_emb", "pretrained_tgt_emb", "custom_src_emb",
    "custom_tgt_emb",     "classifier_model",   "english_text"};
const std::set<std::string> kOptionalInputs = {"pairs", "source_text", "langid_model",
                                               "langid_verdicts"};

void reject_unknown(const json& object, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) {
      throw Error(Errc::UsageError, "unknown key '" + key + "' in " + where);
    }
  }
}

const json& section(const json& parent, const char* key) {
  static const json empty = json::object();
  if (!parent.contains(key)) return empty;
  const json& s = parent.at(key);
  if (!s.is_object()) {
    throw Error(Errc::UsageError, std::string("'") + key + "' must be an object");
  }
  return s;
}

// Runs one stage, tagging any failure with the stage name.
template <typename F>
auto stage(const std::string& name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.code(), "stage '" + name + "': " + e.message());
  }
}

const std::filesystem::path& input(const PipelineManifest& m, const std::string& name) {
  const auto it = m.inputs.find(name);
  if (it == m.inputs.end()) {
    throw Error(Errc::IoError, "manifest has no input '" + name + "'");
  }
  if (!std::filesystem::exists(it->second)) {
    throw Error(Errc::IoError, "input '" + name + "' not found: " + it->second.string());
  }
  return it->second;
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::IoError, "sha256 unavailable");
  }
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) {
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
  }
  if (in.bad()) throw Error(Errc::IoError, "read failed: " + path.string());
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::string hex;
  char byte[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

PipelineManifest parse_manifest(const std::string& json_text,
                                const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::UsageError, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::UsageError, "manifest must be a JSON object");
  reject_unknown(doc, {"output_dir", "seed", "inputs", "digests", "config"}, "manifest");

  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  PipelineManifest m;
  try {
    m.output_dir = resolve(doc.at("output_dir").get<std::string>());
    m.seed = doc.value("seed", std::uint64_t{0});

    const json& inputs = section(doc, "inputs");
    for (const auto& [name, value] : inputs.items()) {
      if (!kRequiredInputs.contains(name) && !kOptionalInputs.contains(name)) {
        throw Error(Errc::UsageError, "unknown input '" + name + "'");
      }
      m.inputs[name] = resolve(value.get<std::string>());
    }
    for (const auto& name : kRequiredInputs) {
      if (!m.inputs.contains(name)) {
        throw Error(Errc::UsageError, "manifest is missing input '" + name + "'");
      }
    }
    for (const auto& [name, value] : section(doc, "digests").items()) {
      if (!m.inputs.contains(name)) {
        throw Error(Errc::UsageError, "digest for unknown input '" + name + "'");
      }
      m.digests[name] = value.get<std::string>();
    }

    const json& config = section(doc, "config");
    reject_unknown(config, {"dim", "threads", "langid", "margin", "combine", "select"},
                   "config");
    if (config.contains("dim") && !config.at("dim").is_null()) {
      m.raw_dim = config.at("dim").get<Index>();
    }
    m.threads = config.value("threads", 0u);

    const json& lid = section(config, "langid");
    reject_unknown(lid, {"enabled", "lang", "threshold", "window", "stride"}, "config.langid");
    m.langid_enabled = lid.value("enabled", true);
    m.source_lang = lid.value("lang", std::string());
    m.threshold = lid.value("threshold", 0.8);
    m.windows.width = lid.value("window", std::size_t{20});
    m.windows.stride = lid.value("stride", std::size_t{10});

    const json& margin = section(config, "margin");
    reject_unknown(margin, {"k", "variant", "epsilon"}, "config.margin");
    m.margin.k = margin.value("k", Index{4});
    m.margin.variant = parse_margin_variant(margin.value("variant", std::string("ratio")));
    m.margin.epsilon = margin.value("epsilon", 1e-9);

    const json& comb = section(config, "combine");
    reject_unknown(comb, {"normalize"}, "config.combine");
    m.normalization = parse_normalization(comb.value("normalize", std::string("none")));

    const json& sel = section(config, "select");
    reject_unknown(sel, {"budget"}, "config.select");
    m.budget = sel.value("budget", std::size_t{5'000'000});
  } catch (const json::exception& e) {
    throw Error(Errc::UsageError, std::string("bad manifest value: ") + e.what());
  }

  if (m.margin.k < 1) throw Error(Errc::UsageError, "margin k must be >= 1");
  if (!(m.threshold >= 0.0 && m.threshold <= 1.0)) {
    throw Error(Errc::UsageError, "langid threshold must be in [0, 1]");
  }
  if (m.windows.width < 1 || m.windows.stride < 1) {
    throw Error(Errc::UsageError, "langid window and stride must be >= 1");
  }
  m.margin.threads = m.threads;
  return m;
}

PipelineManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open manifest " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_manifest(text.str(), std::filesystem::absolute(path).parent_path());
}

SelectionReport run_pipeline(const PipelineManifest& m) {
  json report;
  report["tool"] = "pcfilter";
  report["version"] = std::string(kToolVersion);
  report["seed"] = m.seed;

  stage("inputs", [&] {
    json inputs = json::object();
    for (const auto& [name, path] : m.inputs) {
      const std::string digest = sha256_file(input(m, name));
      const auto pinned = m.digests.find(name);
      if (pinned != m.digests.end() && pinned->second != digest) {
        throw Error(Errc::StaleInput, "input '" + name + "' has sha256 " + digest +
                                          ", manifest pins " + pinned->second);
      }
      inputs[name] = {{"file", path.filename().string()}, {"sha256", digest}};
    }
    report["inputs"] = inputs;
    std::error_code ec;
    std::filesystem::create_directories(m.output_dir, ec);
    if (ec) {
      throw Error(Errc::IoError, "cannot create " + m.output_dir.string() + ": " + ec.message());
    }
  });

  json stages = json::array();
  auto record = [&](const std::string& name, const std::string& file) {
    stages.push_back({{"name", name},
                      {"output", file},
                      {"sha256", sha256_file(m.output_dir / file)}});
  };

  const auto english = stage("inputs", [&] { return read_lines(input(m, "english_text")); });
  const auto pairs = stage("inputs", [&] {
    if (m.inputs.contains("pairs")) return read_index_pairs(input(m, "pairs"));
    std::vector<IndexPair> identity(english.size());
    for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = {i, i};
    return identity;
  });
  if (english.size() != pairs.size()) {
    throw Error(Errc::LengthMismatch, "stage 'inputs': english_text has " +
                                          std::to_string(english.size()) + " lines for " +
                                          std::to_string(pairs.size()) + " pairs");
  }

  std::vector<std::uint8_t> mask;
  const bool use_model = m.inputs.contains("langid_model");
  const bool use_verdicts = m.inputs.contains("langid_verdicts");
  if (m.langid_enabled && (use_model || use_verdicts)) {
    stage("langid", [&] {
      std::vector<VerdictRecord> verdicts;
      if (use_verdicts) {
        verdicts = read_verdicts(input(m, "langid_verdicts"));
        if (!m.source_lang.empty()) {
          for (auto& v : verdicts) v.pass = gate(v.verdict, m.source_lang, m.threshold);
        }
      } else {
        if (m.source_lang.empty()) {
          throw Error(Errc::UsageError, "config.langid.lang is required with a model");
        }
        const LangIdModel model = read_langid_model(input(m, "langid_model"));
        model.language_index(m.source_lang);
        const auto sentences = read_lines(input(m, "source_text"));
        verdicts.resize(sentences.size());
        for (std::size_t i = 0; i < sentences.size(); ++i) {
          verdicts[i].verdict = identify(sentences[i], model, m.windows);
          verdicts[i].pass = gate(verdicts[i].verdict, m.source_lang, m.threshold);
        }
      }
      if (verdicts.size() != pairs.size()) {
        throw Error(Errc::LengthMismatch, std::to_string(verdicts.size()) +
                                              " verdicts for " + std::to_string(pairs.size()) +
                                              " pairs");
      }
      write_verdicts(verdicts, m.output_dir / "langid_verdicts.tsv");
      record("langid", "langid_verdicts.tsv");
      mask.reserve(verdicts.size());
      for (const auto& v : verdicts) mask.push_back(v.pass ? 1 : 0);
    });
  }

  auto margin_stage = [&](const std::string& name, const std::string& role) {
    return stage(name, [&] {
      const auto src = load_embeddings(input(m, role + "_src_emb"), m.raw_dim);
      const auto tgt = load_embeddings(input(m, role + "_tgt_emb"), m.raw_dim);
      ScoreTable table = score_corpus(src, tgt, pairs, m.margin);
      write_score_table(table, m.output_dir / (name + ".tsv"));
      record(name, name + ".tsv");
      return table;
    });
  };
  const ScoreTable base = margin_stage("margin_pretrained", "pretrained");
  const ScoreTable custom = margin_stage("margin_custom", "custom");

  const ScoreTable cls = stage("classifier", [&] {
    const auto model = read_classifier(input(m, "classifier_model"));
    const auto src = load_embeddings(input(m, "pretrained_src_emb"), m.raw_dim);
    const auto tgt = load_embeddings(input(m, "pretrained_tgt_emb"), m.raw_dim);
    ScoreTable table = score_corpus_classifier(pairs, src, tgt, model, m.threads);
    write_score_table(table, m.output_dir / "classifier.tsv");
    record("classifier", "classifier.tsv");
    return table;
  });

  const ScoreTable combined = stage("combine", [&] {
    CombineConfig config;
    config.normalization = m.normalization;
    ScoreTable table = combine(base, custom, cls, mask, config);
    write_score_table(table, m.output_dir / "combined.tsv");
    record("combine", "combined.tsv");
    return table;
  });

  const SelectionReport selection = stage("select", [&] {
    const auto tokens = count_english_tokens(english);
    SelectionReport sel = select_by_budget(combined, tokens, m.budget);
    std::string out;
    for (std::size_t i : sel.kept_indices) {
      out += std::to_string(i) + '\t' + format_score(combined[i].score) + '\t' +
             std::to_string(tokens[i]) + '\n';
    }
    write_text(m.output_dir / "selection.tsv", out);
    record("select", "selection.tsv");
    if (m.inputs.contains("source_text")) {
      const auto source = read_lines(input(m, "source_text"));
      write_submission(combined, source, english, m.output_dir / "submission.tsv");
      record("submission", "submission.tsv");
    }
    return sel;
  });

  report["stages"] = stages;
  report["config"] = {
      {"langid",
       {{"enabled", m.langid_enabled && (use_model || use_verdicts)},
        {"lang", m.source_lang},
        {"threshold", m.threshold},
        {"window", m.windows.width},
        {"stride", m.windows.stride}}},
      {"margin",
       {{"k", m.margin.k},
        {"variant", std::string(margin_variant_name(m.margin.variant))},
        {"epsilon", m.margin.epsilon}}},
      {"combine", {{"normalize", std::string(normalization_name(m.normalization))}}},
      {"select", {{"budget", m.budget}}}};
  report["selection"] = {
      {"pairs", pairs.size()},
      {"kept", selection.kept_indices.size()},
      {"cumulative_tokens", selection.cumulative_tokens},
      {"cutoff_score", selection.kept_indices.empty() ? json(nullptr)
                                                      : json(selection.cutoff_score)},
      {"rejected_by_langid", selection.rejected_by_langid}};
  stage("report", [&] { write_text(m.output_dir / "report.json", report.dump(2) + "\n"); });
  return selection;
}

}  // namespace pcf
