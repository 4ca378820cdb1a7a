#include "eraclass/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <unordered_map>

#include "eraclass/error.hpp"
#include "eraclass/evaluation.hpp"
#include "eraclass/hash.hpp"
#include "eraclass/rng.hpp"
#include "io_util.hpp"

namespace eraclass {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

ModelFamily parse_model_family(std::string_view s) {
  if (s == "ann") return ModelFamily::ann;
  if (s == "rnn") return ModelFamily::rnn;
  if (s == "cnn") return ModelFamily::cnn;
  if (s == "logreg") return ModelFamily::logreg;
  throw ConfigError("unknown model family '" + std::string(s) + "' (ann, rnn, cnn, logreg)");
}

std::string_view to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::ann: return "ann";
    case ModelFamily::rnn: return "rnn";
    case ModelFamily::cnn: return "cnn";
    case ModelFamily::logreg: return "logreg";
  }
  return "?";
}

// ---- configuration --------------------------------------------------------

namespace {

// Reads keys from one config section, rejecting any it was not asked about.
class Section {
 public:
  Section(const json& j, std::string name) : name_(std::move(name)) {
    if (j.is_null()) return;
    if (!j.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    j_ = j;
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  template <typename T>
  T get(const char* key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + name_ + "." + key + "' has the wrong type");
    }
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + name_ + "." + k + "'");
    }
  }

 private:
  json j_ = json::object();
  std::string name_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

bool features_fit_family(FeatureKind f, ModelFamily m) {
  const bool seq = is_sequence(f);
  return (m == ModelFamily::rnn || m == ModelFamily::cnn) ? seq : !seq;
}

}  // namespace

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  Section top(j, "config");
  c.seed = top.get<std::uint64_t>("seed", c.seed);
  if (top.has("output_dir")) c.output_dir = resolve(base_dir, top.get<std::string>("output_dir", ""));

  {
    Section s(top.has("corpus") ? top.raw("corpus") : json(), "corpus");
    const std::string kind = s.get<std::string>("kind", "prose");
    if (kind == "prose") {
      c.corpus_kind = DocKind::prose;
    } else if (kind == "poetry") {
      c.corpus_kind = DocKind::poetry;
    } else {
      throw ConfigError("corpus.kind must be 'prose' or 'poetry'");
    }
    if (!s.has("path")) throw ConfigError("corpus.path is required");
    c.corpus_path = resolve(base_dir, s.get<std::string>("path", ""));
    const std::string format = s.get<std::string>("format", "jsonl");
    if (format == "jsonl") {
      c.prose_format = ProseFormat::jsonl;
    } else if (format == "tsv") {
      c.prose_format = ProseFormat::tsv;
    } else {
      throw ConfigError("corpus.format must be 'jsonl' or 'tsv'");
    }
    c.sampling.max_words = s.get<std::size_t>("max_words", c.sampling.max_words);
    c.sampling.skip_head_words = s.get<std::size_t>("skip_head_words", c.sampling.skip_head_words);
    if (s.has("per_author_quota")) c.sampling.per_author_quota = s.get<std::size_t>("per_author_quota", 0);
    c.verses_per_sample = s.get<std::size_t>("verses_per_sample", c.verses_per_sample);
    if (c.sampling.max_words == 0) throw ConfigError("corpus.max_words must be positive");
    if (c.verses_per_sample < 1 || c.verses_per_sample > 16) {
      throw ConfigError("corpus.verses_per_sample must be in 1..16");
    }
    s.finish();
  }

  {
    Section s(top.has("prep") ? top.raw("prep") : json(), "prep");
    c.remove_stopwords = s.get<bool>("remove_stopwords", false);
    c.lemmatize = s.get<bool>("lemmatize", false);
    if (s.has("lemma_table")) c.lemma_table = resolve(base_dir, s.get<std::string>("lemma_table", ""));
    if (s.has("stopwords")) c.stopword_list = resolve(base_dir, s.get<std::string>("stopwords", ""));
    if (c.lemmatize && !c.lemma_table) throw ConfigError("prep.lemmatize needs prep.lemma_table");
    s.finish();
  }

  std::string scheme_id = "openiti5";
  {
    Section s(top.has("scheme") ? top.raw("scheme") : json(), "scheme");
    const int sources = s.has("id") + s.has("file") + s.has("custom_bin_years");
    if (sources > 1) throw ConfigError("scheme: give only one of id, file, custom_bin_years");
    if (s.has("file")) {
      const fs::path file = resolve(base_dir, s.get<std::string>("file", ""));
      try {
        c.scheme = load_scheme(file);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("scheme file: ") + e.what());
      }
      c.scheme_source = "file:" + file.filename().string();
      scheme_id.clear();
    } else if (s.has("custom_bin_years")) {
      const int width = s.get<int>("custom_bin_years", 0);
      const auto range = s.get<std::vector<int>>("range", {0, 1500});
      if (range.size() != 2) throw ConfigError("scheme.range must be [start, end]");
      try {
        c.scheme = custom_bins(width, range[0], range[1]);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("scheme: ") + e.what());
      }
      c.scheme_source = "custom:" + std::to_string(width) + ":" + std::to_string(range[0]) + ":" +
                        std::to_string(range[1]);
      scheme_id.clear();
    } else {
      scheme_id = s.get<std::string>("id", scheme_id);
      try {
        c.scheme = builtin_scheme(std::string_view(scheme_id));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      c.scheme_source = scheme_id;
    }
    if (s.has("merge")) {
      try {
        c.merge_groups = parse_groups(s.get<std::string>("merge", ""));
        c.scheme = merge_adjacent(c.scheme, c.merge_groups);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("scheme.merge: ") + e.what());
      }
    }
    s.finish();
  }

  {
    Section s(top.has("split") ? top.raw("split") : json(), "split");
    c.split.protocol = parse_split_protocol(s.get<std::string>("protocol", "author_disjoint"));
    c.split.test_frac = s.get<double>("test_frac", c.split.test_frac);
    c.split.val_frac_of_train = s.get<double>("val_frac_of_train", c.split.val_frac_of_train);
    c.balance = s.get<bool>("balance", true);
    c.split.validate();
    s.finish();
  }

  Section model(top.has("model") ? top.raw("model") : json(), "model");
  c.family = parse_model_family(model.get<std::string>("family", "ann"));
  const bool sequence_family = c.family == ModelFamily::rnn || c.family == ModelFamily::cnn;

  {
    Section s(top.has("features") ? top.raw("features") : json(), "features");
    c.feature = parse_feature_kind(s.get<std::string>("kind", sequence_family ? "word_seq" : "bow"));
    c.vocab_size = s.get<std::size_t>("vocab_size", sequence_family ? 20000 : 15000);
    c.max_len = s.get<std::size_t>("max_len", 0);
    if (c.vocab_size == 0) throw ConfigError("features.vocab_size must be positive");
    s.finish();
  }
  if (!features_fit_family(c.feature, c.family)) {
    throw ConfigError("feature kind '" + std::string(to_string(c.feature)) + "' cannot feed model family '" +
                      std::string(to_string(c.family)) +
                      "' (bow/tfidf go with ann/logreg, word_seq/char_seq with rnn/cnn)");
  }

  // Adam is the default for the poetry schemes, RMSProp elsewhere.
  const bool apcd = scheme_id.rfind("apcd", 0) == 0;
  c.optimizer.kind = parse_optimizer(model.get<std::string>("optimizer", apcd ? "adam" : "rmsprop"));
  c.optimizer.learning_rate = model.get<double>("learning_rate", c.optimizer.learning_rate);
  c.optimizer.rho = model.get<double>("rho", c.optimizer.rho);
  c.optimizer.beta1 = model.get<double>("beta1", c.optimizer.beta1);
  c.optimizer.beta2 = model.get<double>("beta2", c.optimizer.beta2);
  c.optimizer.epsilon = model.get<double>("epsilon", c.optimizer.epsilon);
  c.batch_size = model.get<std::size_t>("batch_size", sequence_family ? 128 : 512);
  c.epochs = model.get<std::size_t>("epochs", 10);
  c.patience = model.get<std::size_t>("patience", 0);

  const double dropout = model.get<double>("dropout", c.family == ModelFamily::cnn ? 0.0 : 0.7);
  c.ann.hidden_blocks = model.get<std::size_t>("hidden_blocks", c.ann.hidden_blocks);
  c.ann.units = model.get<std::size_t>("units", c.ann.units);
  c.ann.dropout = dropout;
  c.rnn.units = c.ann.units;
  c.rnn.dropout = dropout;
  c.rnn.embedding_dim = model.get<std::size_t>("embedding_dim", c.rnn.embedding_dim);
  const std::string cell = model.get<std::string>("cell", "gru");
  if (cell != "gru" && cell != "lstm") throw ConfigError("model.cell must be 'gru' or 'lstm'");
  c.rnn.cell = cell == "gru" ? CellType::gru : CellType::lstm;
  c.rnn.recurrent_layers = model.get<std::size_t>("recurrent_layers", c.rnn.recurrent_layers);
  c.rnn.bidirectional = model.get<bool>("bidirectional", c.rnn.bidirectional);
  c.rnn.dense_widths = model.get<std::vector<std::size_t>>("dense_widths", {});
  c.cnn.embedding_dim = c.rnn.embedding_dim;
  c.cnn.filters = model.get<std::size_t>("filters", c.cnn.filters);
  c.cnn.kernel_width = model.get<std::size_t>("kernel_width", c.cnn.kernel_width);
  c.cnn.dense_widths = c.rnn.dense_widths;
  c.cnn.dropout = dropout;
  c.logreg.C = model.get<double>("C", c.logreg.C);
  c.logreg.max_iterations = model.get<std::size_t>("max_iterations", c.logreg.max_iterations);
  c.logreg.tolerance = model.get<double>("tolerance", c.logreg.tolerance);
  model.finish();

  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must be in [0, 1)");
  if (c.batch_size == 0) throw ConfigError("model.batch_size must be positive");
  if (c.ann.units == 0 || c.rnn.embedding_dim == 0) throw ConfigError("model widths must be positive");
  if (c.rnn.recurrent_layers == 0) throw ConfigError("model.recurrent_layers must be positive");
  if (c.family == ModelFamily::cnn && c.max_len != 0 && c.cnn.kernel_width > c.max_len) {
    throw ConfigError("model.kernel_width exceeds features.max_len");
  }
  c.optimizer.validate();
  c.logreg.validate();

  {
    Section s(top.has("evaluation") ? top.raw("evaluation") : json(), "evaluation");
    c.z = s.get<double>("z", c.z);
    if (!(c.z > 0.0)) throw ConfigError("evaluation.z must be positive");
    s.finish();
  }
  top.finish();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

ordered_json ExperimentConfig::canonical() const {
  ordered_json j;
  j["version"] = kVersion;
  j["seed"] = seed;
  j["corpus"] = {{"kind", corpus_kind == DocKind::prose ? "prose" : "poetry"},
                 {"path", corpus_path.generic_string()},
                 {"format", prose_format == ProseFormat::jsonl ? "jsonl" : "tsv"},
                 {"max_words", sampling.max_words},
                 {"skip_head_words", sampling.skip_head_words},
                 {"per_author_quota", sampling.per_author_quota ? json(*sampling.per_author_quota) : json()},
                 {"verses_per_sample", verses_per_sample}};
  j["prep"] = {{"remove_stopwords", remove_stopwords},
               {"lemmatize", lemmatize},
               {"lemma_table", lemma_table ? json(lemma_table->generic_string()) : json()},
               {"stopwords", stopword_list ? json(stopword_list->generic_string()) : json("builtin")}};
  j["scheme"] = {{"source", scheme_source}, {"name", scheme.name()}, {"bins", format_scheme(scheme)}};
  j["split"] = {{"protocol", to_string(split.protocol)},
                {"test_frac", split.test_frac},
                {"val_frac_of_train", split.val_frac_of_train},
                {"balance", balance}};
  j["features"] = {{"kind", to_string(feature)}, {"vocab_size", vocab_size}, {"max_len", max_len}};
  j["model"] = {{"family", to_string(family)},
                {"optimizer", to_string(optimizer.kind)},
                {"learning_rate", optimizer.learning_rate},
                {"rho", optimizer.rho},
                {"beta1", optimizer.beta1},
                {"beta2", optimizer.beta2},
                {"epsilon", optimizer.epsilon},
                {"batch_size", batch_size},
                {"epochs", epochs},
                {"patience", patience},
                {"hidden_blocks", ann.hidden_blocks},
                {"units", ann.units},
                {"dropout", ann.dropout},
                {"embedding_dim", rnn.embedding_dim},
                {"cell", rnn.cell == CellType::gru ? "gru" : "lstm"},
                {"recurrent_layers", rnn.recurrent_layers},
                {"bidirectional", rnn.bidirectional},
                {"dense_widths", rnn.dense_widths},
                {"filters", cnn.filters},
                {"kernel_width", cnn.kernel_width},
                {"C", logreg.C},
                {"max_iterations", logreg.max_iterations},
                {"tolerance", logreg.tolerance}};
  j["evaluation"] = {{"z", z}};
  return j;
}

std::string ExperimentConfig::hash() const { return to_hex(fnv1a64(canonical().dump())); }

// ---- sample files -----------------------------------------------------------

std::string samples_to_jsonl(const std::vector<Sample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    ordered_json j;
    j["id"] = s.sample_id;
    j["author"] = s.author_id;
    j["year_hijri"] = s.year_hijri;
    j["tokens"] = s.tokens;
    if (s.label) j["label"] = *s.label;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<Sample> samples_from_jsonl(std::string_view contents) {
  std::vector<Sample> out;
  std::size_t line_no = 0;
  for (auto line : detail::lines(contents)) {
    ++line_no;
    if (detail::is_comment_or_blank(line)) continue;
    try {
      const json j = json::parse(line);
      Sample s;
      s.sample_id = j.at("id").get<std::string>();
      s.author_id = j.at("author").get<std::string>();
      s.year_hijri = j.at("year_hijri").get<int>();
      s.tokens = j.at("tokens").get<std::vector<std::string>>();
      if (j.contains("label")) s.label = j.at("label").get<std::size_t>();
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw DataError("sample line " + std::to_string(line_no) + " is malformed: " + e.what());
    }
  }
  return out;
}

// ---- pipeline -------------------------------------------------------------

const std::vector<std::string>& Pipeline::run_artifacts() {
  static const std::vector<std::string> names = {"split_manifest.tsv", "vocab.tsv",     "model.ckpt", "eval_report.json",
                                                 "confusion.csv",      "confusion.svg", "repro.json"};
  return names;
}

Pipeline::Pipeline(ExperimentConfig config, std::ostream& log)
    : cfg_(std::move(config)), hash_(cfg_.hash()), log_(log) {}

std::string Pipeline::header_comment() const { return "# config_hash=" + hash_ + "\n"; }

void Pipeline::write_text(const std::string& artifact, const std::string& contents) const {
  fs::create_directories(cfg_.output_dir);
  detail::write_file(path(artifact), contents);
}

void Pipeline::write_json(const std::string& artifact, ordered_json j) const {
  ordered_json out;
  out["config_hash"] = hash_;
  for (auto& [k, v] : j.items()) out[k] = std::move(v);
  write_text(artifact, out.dump(2) + "\n");
}

std::string Pipeline::require(const std::string& artifact, const std::string& stage) const {
  if (!fs::exists(path(artifact))) {
    throw DataError("missing " + path(artifact).string() + "; run `eraclass " + stage + "` first");
  }
  return detail::read_file(path(artifact));
}

std::vector<Sample> Pipeline::load_samples(const std::string& artifact, const std::string& stage) const {
  return samples_from_jsonl(require(artifact, stage));
}

void Pipeline::ingest() {
  IngestResult r = cfg_.corpus_kind == DocKind::prose ? ingest_prose(cfg_.corpus_path, cfg_.prose_format, &cfg_.scheme)
                                                      : ingest_poetry(cfg_.corpus_path, &cfg_.scheme);
  std::vector<Sample> samples;
  if (cfg_.corpus_kind == DocKind::prose) {
    ProseSampling p = cfg_.sampling;
    p.seed = Rng::mix(cfg_.seed, 1);
    samples = sample_prose_corpus(r.documents, p);
  } else {
    samples = sample_poetry_corpus(r.documents, cfg_.verses_per_sample);
  }
  ordered_json skipped = ordered_json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"line", s.line}, {"reason", s.reason}});
  write_json("ingest_report.json",
             {{"documents", r.documents.size()}, {"samples", samples.size()}, {"skipped", skipped}});
  if (samples.empty()) throw DataError("ingest produced no samples from " + cfg_.corpus_path.string());
  write_text("samples.jsonl", header_comment() + samples_to_jsonl(samples));
  log_ << "ingest: " << r.documents.size() << " documents, " << r.skipped.size() << " skipped records, "
       << samples.size() << " samples\n";
}

void Pipeline::prep() {
  const auto samples = load_samples("samples.jsonl", "ingest");
  PrepConfig pc;
  pc.remove_stopwords = cfg_.remove_stopwords;
  pc.apply_lemmas = cfg_.lemmatize;
  if (cfg_.remove_stopwords) pc.stopword_list = cfg_.stopword_list ? load_stopwords(*cfg_.stopword_list) : builtin_stopwords();
  if (cfg_.lemma_table) pc.lemma_table = load_lemma_table(*cfg_.lemma_table);
  const auto prepped = preprocess_samples(samples, pc);
  if (prepped.empty()) throw DataError("preprocessing left no non-empty samples");
  write_text("prepped.jsonl", header_comment() + samples_to_jsonl(prepped));
  log_ << "prep: " << prepped.size() << " samples kept, " << samples.size() - prepped.size() << " emptied\n";
}

void Pipeline::split() {
  auto samples = load_samples("prepped.jsonl", "prep");
  const LabeledDataset ds = label_dataset(std::move(samples), cfg_.scheme);
  SplitSpec spec = cfg_.split;
  spec.seed = Rng::mix(cfg_.seed, 2);
  const DatasetSplit sp = build_splits(ds, spec, cfg_.balance);
  write_text("split_manifest.tsv", header_comment() + format_split_manifest(sp));
  write_text("scheme.tsv", header_comment() + format_scheme(cfg_.scheme));
  write_json("dataset.json", {{"scheme", cfg_.scheme.name()},
                              {"labels", cfg_.scheme.labels()},
                              {"labeled", ds.size()},
                              {"excluded", ds.excluded},
                              {"clamped_below", ds.clamped_below},
                              {"clamped_above", ds.clamped_above},
                              {"class_counts", ds.class_counts},
                              {"train", sp.train.class_counts},
                              {"val", sp.val.class_counts},
                              {"test", sp.test.class_counts}});
  log_ << "split: " << sp.train.size() << " train, " << sp.val.size() << " val, " << sp.test.size() << " test ("
       << to_string(cfg_.split.protocol) << ")\n";
}

DatasetSplit Pipeline::load_split() const {
  const auto samples = load_samples("prepped.jsonl", "prep");
  const auto entries = parse_split_manifest(require("split_manifest.tsv", "split"));
  std::unordered_map<std::string, const Sample*> by_id;
  for (const auto& s : samples) by_id.emplace(s.sample_id, &s);
  DatasetSplit out;
  out.train.scheme = out.val.scheme = out.test.scheme = cfg_.scheme;
  for (const auto& e : entries) {
    const auto it = by_id.find(e.sample_id);
    if (it == by_id.end()) throw DataError("split manifest names unknown sample '" + e.sample_id + "'");
    if (e.label >= cfg_.scheme.size()) throw DataError("split manifest label out of range for " + e.sample_id);
    Sample s = *it->second;
    s.label = e.label;
    LabeledDataset* target = e.split == "train" ? &out.train : e.split == "val" ? &out.val : e.split == "test" ? &out.test : nullptr;
    if (!target) throw DataError("split manifest has unknown split '" + e.split + "'");
    target->samples.push_back(std::move(s));
  }
  out.train.recount();
  out.val.recount();
  out.test.recount();
  if (out.train.samples.empty()) throw DataError("split manifest has an empty training split");
  return out;
}

Featurizer Pipeline::fit_featurizer(const DatasetSplit& sp) const {
  return Featurizer::fit(sp.train.samples, cfg_.feature, cfg_.vocab_size, cfg_.max_len);
}

namespace {

std::vector<std::size_t> labels_of(const LabeledDataset& ds) {
  std::vector<std::size_t> y;
  y.reserve(ds.size());
  for (const auto& s : ds.samples) y.push_back(*s.label);
  return y;
}

}  // namespace

void Pipeline::train() {
  const DatasetSplit sp = load_split();
  const Featurizer feat = fit_featurizer(sp);
  write_text("vocab.tsv", header_comment() + feat.vocab.dump());
  const FeatureMatrix xtr = feat.transform(sp.train.samples);
  const FeatureMatrix xva = feat.transform(sp.val.samples);
  const auto ytr = labels_of(sp.train);
  const auto yva = labels_of(sp.val);
  const std::size_t classes = cfg_.scheme.size();

  json meta = {{"config_hash", hash_},
               {"feature_kind", to_string(feat.kind)},
               {"max_len", feat.max_len},
               {"vocab_fingerprint", to_hex(feat.vocab.fingerprint())},
               {"labels", cfg_.scheme.labels()}};

  if (cfg_.family == ModelFamily::logreg) {
    const LogRegFit fit = logreg_fit(xtr, ytr, classes, cfg_.logreg);
    save_checkpoint(path("model.ckpt").string(), to_checkpoint(fit.model, meta));
    write_json("history.json", {{"model", "logreg"},
                                {"converged", fit.converged},
                                {"iterations", fit.iterations},
                                {"gradient_norm", fit.gradient_norm},
                                {"objective_trace", fit.objective_trace}});
    log_ << "train: logistic regression, " << fit.iterations << " iterations, "
         << (fit.converged ? "converged" : "NOT converged (best iterate kept)") << "\n";
    return;
  }

  ModelSpec spec;
  switch (cfg_.family) {
    case ModelFamily::ann: spec = ann_spec(classes, cfg_.ann); break;
    case ModelFamily::rnn: spec = rnn_spec(classes, feat.vocab.size() + kFirstTokenIndex, cfg_.rnn); break;
    case ModelFamily::cnn: spec = cnn_spec(cfg_.cnn, classes, feat.vocab.size() + kFirstTokenIndex, feat.max_len); break;
    case ModelFamily::logreg: break;
  }
  spec.optimizer = cfg_.optimizer;
  spec.batch_size = cfg_.batch_size;
  spec.epochs = cfg_.epochs;
  spec.patience = cfg_.patience;
  spec.seed = Rng::mix(cfg_.seed, 3);
  Model model(spec, feat.width());
  const TrainHistory h = model.fit(xtr, ytr, xva, yva);
  save_checkpoint(path("model.ckpt").string(), to_checkpoint(model, meta));
  ordered_json hj = to_json(h);
  hj["model"] = to_string(cfg_.family);
  write_json("history.json", hj);
  log_ << "train: " << to_string(cfg_.family) << ", " << h.epochs.size() << " epochs, best epoch " << h.best_epoch
       << " (val accuracy " << h.best_val_accuracy << ")\n";
}

void Pipeline::eval() {
  const DatasetSplit sp = load_split();
  if (sp.test.samples.empty()) throw DataError("test split is empty");
  const Checkpoint ckpt = decode_checkpoint(require("model.ckpt", "train"));
  const Featurizer feat = fit_featurizer(sp);
  if (ckpt.meta.value("vocab_fingerprint", "") != to_hex(feat.vocab.fingerprint())) {
    throw DataError("model.ckpt was trained on a different vocabulary; rerun `eraclass train`");
  }
  const FeatureMatrix xte = feat.transform(sp.test.samples);
  std::vector<std::size_t> pred;
  if (ckpt.kind == "logreg") {
    pred = logreg_from_checkpoint(ckpt).predict(xte);
  } else {
    pred = model_from_checkpoint(ckpt).predict(xte);
  }
  const auto actual = labels_of(sp.test);
  const EvalReport r = compute_metrics(actual, pred, cfg_.scheme.size(), cfg_.z);
  const auto labels = cfg_.scheme.labels();

  std::string preds = header_comment() + "sample_id\tactual\tpredicted\n";
  for (std::size_t i = 0; i < actual.size(); ++i) {
    preds += sp.test.samples[i].sample_id + "\t" + labels[actual[i]] + "\t" + labels[pred[i]] + "\n";
  }
  write_text("predictions.tsv", preds);
  ordered_json rj = to_json(r, labels);
  rj["scheme"] = cfg_.scheme.name();
  rj["model"] = to_string(cfg_.family);
  write_json("eval_report.json", rj);
  write_text("confusion.csv", header_comment() + confusion_csv(r.confusion, labels, false));
  write_text("confusion_normalized.csv", header_comment() + confusion_csv(r.confusion, labels, true));
  write_text("confusion.svg", "<!-- config_hash=" + hash_ + " -->\n" + confusion_svg(r.confusion, labels, false));

  ordered_json artifacts;
  for (const auto& name : run_artifacts()) {
    if (name != "repro.json" && fs::exists(path(name))) artifacts[name] = to_hex(fnv1a64(detail::read_file(path(name))));
  }
  write_json("repro.json", {{"seed", cfg_.seed},
                            {"version", kVersion},
                            {"compiler", __VERSION__},
                            {"cxx_standard", __cplusplus},
                            {"config", cfg_.canonical()},
                            {"artifact_fnv1a64", artifacts}});

  char line[160];
  std::snprintf(line, sizeof line, "eval: accuracy %.4f +/- %.4f, macro F1 %.4f on %zu test samples\n", r.accuracy,
                r.interval95, r.macro_f1, r.n);
  log_ << line;
}

void Pipeline::analyze_merge(const std::vector<std::vector<std::size_t>>& groups) {
  const json j = json::parse(require("eval_report.json", "eval"));
  const EvalReport r = report_from_json(j);
  double merged = 0.0;
  std::vector<std::string> merged_labels;
  try {
    merged = merged_accuracy(r.confusion, groups);
    if (r.confusion.classes == cfg_.scheme.size()) merged_labels = merge_adjacent(cfg_.scheme, groups).labels();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("merge groups: ") + e.what());
  }
  write_json("merge_analysis.json",
             {{"groups", groups}, {"labels", merged_labels}, {"accuracy", r.accuracy}, {"merged_accuracy", merged}});
  char line[128];
  std::snprintf(line, sizeof line, "merge: accuracy %.4f -> %.4f after merging\n", r.accuracy, merged);
  log_ << line;
  for (const auto& l : merged_labels) log_ << "  " << l << "\n";
}

void Pipeline::analyze_wordfreq(const std::vector<std::string>& sample_ids) {
  const DatasetSplit sp = load_split();
  const std::size_t eras = cfg_.scheme.size();
  const EraTokenCounts counts = era_token_counts(sp.train.samples, eras);
  const auto labels = cfg_.scheme.labels();

  std::vector<const Sample*> chosen;
  if (sample_ids.empty()) {
    if (sp.test.samples.empty()) throw DataError("no test samples to analyze");
    chosen.push_back(&sp.test.samples.front());
  } else {
    for (const auto& id : sample_ids) {
      const Sample* found = nullptr;
      for (const auto* ds : {&sp.train, &sp.val, &sp.test}) {
        for (const auto& s : ds->samples) {
          if (s.sample_id == id) found = &s;
        }
      }
      if (!found) throw DataError("sample '" + id + "' is not in the split manifest");
      chosen.push_back(found);
    }
  }

  std::string tsv = header_comment() + "sample_id\ttoken";
  for (const auto& l : labels) tsv += "\t" + l;
  tsv += "\n";
  for (const Sample* s : chosen) {
    log_ << "sample " << s->sample_id << " (actual " << labels[*s->label] << ")\n";
    for (const auto& t : s->tokens) {
      tsv += s->sample_id + "\t" + t;
      for (std::size_t e = 0; e < eras; ++e) {
        const auto it = counts[e].find(t);
        tsv += "\t" + std::to_string(it == counts[e].end() ? 0 : it->second);
      }
      tsv += "\n";
    }
    const auto totals = word_freq_by_era(s->tokens, counts);
    tsv += s->sample_id + "\tTOTAL";
    for (std::size_t e = 0; e < eras; ++e) {
      tsv += "\t" + std::to_string(totals[e]);
      log_ << "  " << labels[e] << ": " << totals[e] << "\n";
    }
    tsv += "\n";
  }
  write_text("wordfreq.tsv", tsv);
}

void Pipeline::report() {
  std::vector<std::string> missing;
  for (const auto& name : run_artifacts()) {
    if (!fs::exists(path(name))) missing.push_back(name);
  }
  if (!missing.empty()) {
    std::string msg = "missing artifacts in " + cfg_.output_dir.string() + ":";
    for (const auto& m : missing) msg += " " + m;
    throw DataError(msg);
  }
  const json j = json::parse(detail::read_file(path("eval_report.json")));
  const EvalReport r = report_from_json(j);
  const auto& per_class = j.at("per_class");
  char line[200];
  log_ << "run " << cfg_.output_dir.string() << " (config " << j.value("config_hash", "?") << ")\n";
  std::snprintf(line, sizeof line, "accuracy %.4f +/- %.4f  macro P %.4f  R %.4f  F1 %.4f  n=%zu\n", r.accuracy,
                r.interval95, r.macro_precision, r.macro_recall, r.macro_f1, r.n);
  log_ << line;
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    std::snprintf(line, sizeof line, "  %-32s P %6.2f  R %6.2f  F1 %6.2f  support %zu\n",
                  per_class[c].at("label").get<std::string>().c_str(), 100 * r.per_class[c].precision,
                  100 * r.per_class[c].recall, 100 * r.per_class[c].f1, r.per_class[c].support);
    log_ << line;
  }
}

void Pipeline::run() {
  fs::create_directories(cfg_.output_dir);
  fs::remove(path("FAILED"));
  try {
    ingest();
    prep();
    split();
    train();
    eval();
  } catch (const std::exception& e) {
    write_text("FAILED", std::string(e.what()) + "\n");
    throw;
  }
}

}  // namespace eraclass
