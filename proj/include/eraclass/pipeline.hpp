#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "eraclass/baselines.hpp"
#include "eraclass/corpus.hpp"
#include "eraclass/dataset.hpp"
#include "eraclass/features.hpp"
#include "eraclass/model.hpp"
#include "eraclass/periodization.hpp"
#include "json.hpp"

namespace eraclass {

enum class ModelFamily { ann, rnn, cnn, logreg };
ModelFamily parse_model_family(std::string_view s);
std::string_view to_string(ModelFamily f);

/// Fully resolved experiment configuration. Every key has a default, so an
/// empty config file only needs the corpus path.
struct ExperimentConfig {
  // corpus
  DocKind corpus_kind = DocKind::prose;
  std::filesystem::path corpus_path;
  ProseFormat prose_format = ProseFormat::jsonl;
  ProseSampling sampling;
  std::size_t verses_per_sample = 1;

  // preprocessing
  bool remove_stopwords = false;
  bool lemmatize = false;
  std::optional<std::filesystem::path> lemma_table;
  std::optional<std::filesystem::path> stopword_list;  // builtin list when unset

  // periodization
  EraScheme scheme;
  std::string scheme_source;  // id, file path or custom-bin description
  std::vector<std::vector<std::size_t>> merge_groups;  // applied to the scheme when set

  // split
  SplitSpec split;
  bool balance = true;

  // features
  FeatureKind feature = FeatureKind::bow;
  std::size_t vocab_size = 15000;
  std::size_t max_len = 0;  // 0 = longest training sample

  // model
  ModelFamily family = ModelFamily::ann;
  AnnOptions ann;
  RnnOptions rnn;
  CnnSpec cnn;
  LogRegSpec logreg;
  OptimizerSpec optimizer;
  std::size_t batch_size = 512;
  std::size_t epochs = 10;
  std::size_t patience = 0;

  // evaluation
  double z = 1.96;

  std::filesystem::path output_dir = "runs/default";
  std::uint64_t seed = 42;

  // Canonical JSON of every setting that influences results (output_dir is
  // left out so a run can be reproduced elsewhere).
  nlohmann::ordered_json canonical() const;
  std::string hash() const;  // hex FNV-1a of canonical().dump()
};

// Parses a JSON config; relative paths resolve against `base_dir`. Throws
// ConfigError on unknown keys, bad values or a feature/model mismatch.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Stage runner over one output directory. Each stage reads the artifacts of
/// the previous one and throws DataError naming the missing stage when they
/// are absent.
class Pipeline {
 public:
  Pipeline(ExperimentConfig config, std::ostream& log);

  const ExperimentConfig& config() const { return cfg_; }
  std::filesystem::path path(const std::string& artifact) const { return cfg_.output_dir / artifact; }

  void ingest();   // samples.jsonl, ingest_report.json
  void prep();     // prepped.jsonl
  void split();    // split_manifest.tsv, scheme.tsv, dataset.json
  void train();    // vocab.tsv, model.ckpt, history.json
  void eval();     // predictions.tsv, eval_report.json, confusion*.csv, confusion.svg
  void analyze_merge(const std::vector<std::vector<std::size_t>>& groups);     // merge_analysis.json
  void analyze_wordfreq(const std::vector<std::string>& sample_ids);          // wordfreq.tsv
  // Prints a summary; throws DataError listing every missing artifact.
  void report();
  // All stages in order plus repro.json. On failure a FAILED marker with the
  // message is written and the exception is rethrown.
  void run();

  static const std::vector<std::string>& run_artifacts();

 private:
  std::string header_comment() const;  // "# config_hash=<hash>\n"
  void write_text(const std::string& artifact, const std::string& contents) const;
  void write_json(const std::string& artifact, nlohmann::ordered_json j) const;
  std::string require(const std::string& artifact, const std::string& stage) const;

  std::vector<Sample> load_samples(const std::string& artifact, const std::string& stage) const;
  DatasetSplit load_split() const;
  Featurizer fit_featurizer(const DatasetSplit& split) const;

  ExperimentConfig cfg_;
  std::string hash_;
  std::ostream& log_;
};

// Samples as JSONL (id, author, year_hijri, tokens, optional label).
std::string samples_to_jsonl(const std::vector<Sample>& samples);
std::vector<Sample> samples_from_jsonl(std::string_view contents);

inline constexpr const char* kVersion = "1.0.0";

}  // namespace eraclass
