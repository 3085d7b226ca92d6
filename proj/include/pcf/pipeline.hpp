#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "pcf/embedding_store.hpp"
#include "pcf/langid.hpp"
#include "pcf/margin_scorer.hpp"
#include "pcf/score_combiner.hpp"

namespace pcf {

inline constexpr std::string_view kToolVersion = "1.0.0";

// Everything `pipeline run` needs. Paths are absolute after loading; digests
// (lowercase hex SHA-256) are optional and keyed by input name.
struct PipelineManifest {
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;

  // Input name -> path. Required: pretrained_src_emb, pretrained_tgt_emb,
  // custom_src_emb, custom_tgt_emb, classifier_model, english_text.
  // Optional: pairs (default: row i with row i), source_text, langid_model,
  // langid_verdicts.
  std::map<std::string, std::filesystem::path> inputs;
  std::map<std::string, std::string> digests;

  std::optional<Index> raw_dim;
  bool langid_enabled = true;
  std::string source_lang;
  double threshold = 0.8;
  WindowConfig windows;
  MarginConfig margin;
  Normalization normalization = Normalization::None;
  std::size_t budget = 5'000'000;
  unsigned threads = 0;
};

// Relative paths in the JSON are resolved against `base_dir`.
PipelineManifest parse_manifest(const std::string& json_text,
                                const std::filesystem::path& base_dir);
PipelineManifest load_manifest(const std::filesystem::path& path);

// langid -> margin (pretrained) -> margin (custom) -> classifier -> combine
// -> select. Every intermediate goes to output_dir along with report.json.
// Failures are rethrown with the stage name in the message.
SelectionReport run_pipeline(const PipelineManifest& manifest);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace pcf
