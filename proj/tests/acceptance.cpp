// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eraclass/baselines.hpp"
#include "eraclass/evaluation.hpp"
#include "eraclass/features.hpp"
#include "eraclass/hash.hpp"
#include "eraclass/periodization.hpp"
#include "eraclass/pipeline.hpp"
#include "eraclass/rng.hpp"
#include "eraclass/synthetic.hpp"
#include "eraclass/textprep.hpp"
#include "eraclass/utf8.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "reference_values.hpp"

using namespace eraclass;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("eraclass_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Significance intervals against published half-widths and test sizes.
Outcome criterion1() {
  Outcome o;
  struct Case {
    double p;
    std::size_t n;
    double expected, tol;
  };
  for (const auto& c : {Case{0.436, 7055, 0.0116, 5e-5}, Case{0.674, 11296, 0.0087, 2e-4},
                        Case{0.654, 1761, 0.0225, 5e-4}}) {
    const double got = significance_interval(c.p, c.n);
    o.check(std::abs(got - c.expected) <= c.tol, "p=" + fmt("%.3f", c.p) + " gives " + fmt("%.5f", got));
  }
  if (o.pass) o.detail = "0.0116 / 0.0087 / 0.0225 within tolerance";
  return o;
}

// Per-class F1 rebuilt from published precision and recall.
Outcome criterion2() {
  Outcome o;
  std::size_t rows = 0;
  double prose_sum = 0.0;
  for (const auto* table : {&reference::kProseFiveEra, &reference::kPoetryFiveEra}) {
    for (const auto& row : *table) {
      const auto l = reference::one_vs_rest(row.precision_pct, row.recall_pct, 100000);
      const auto r = compute_metrics(l.actual, l.predicted, 2);
      const double f1 = r.per_class[0].f1 * 100.0;
      o.check(std::abs(f1 - row.f1_pct) <= 0.01, std::string(row.era) + " F1 " + fmt("%.4f", f1));
      if (table == &reference::kProseFiveEra) prose_sum += r.per_class[0].f1;
      ++rows;
    }
  }
  const double macro = prose_sum / 5.0;
  o.check(std::abs(macro - reference::kProseFiveEraMacroF1) <= 0.001, "macro F1 " + fmt("%.4f", macro));
  if (o.pass) o.detail = std::to_string(rows) + " rows within 0.01 pp, macro F1 " + fmt("%.4f", macro);
  return o;
}

// Adjacent merging never lowers accuracy; singletons change nothing.
Outcome criterion3() {
  Outcome o;
  Rng rng(20240301);
  for (int trial = 0; trial < 1000 && o.pass; ++trial) {
    const std::size_t k = 3 + rng.uniform_index(13);
    ConfusionMatrix cm(k);
    for (auto& v : cm.counts) v = rng.uniform_index(100);
    std::vector<std::vector<std::size_t>> singletons, groups{{0}};
    for (std::size_t i = 0; i < k; ++i) singletons.push_back({i});
    for (std::size_t i = 1; i < k; ++i) {
      if (rng.uniform01() < 0.5) {
        groups.back().push_back(i);
      } else {
        groups.push_back({i});
      }
    }
    o.check(merged_accuracy(cm, groups) >= cm.accuracy(), "merge lowered accuracy in trial " + std::to_string(trial));
    o.check(merged_accuracy(cm, singletons) == cm.accuracy(), "singletons changed accuracy in trial " +
                                                                 std::to_string(trial));
  }
  if (o.pass) o.detail = "1000 random matrices, 3-15 classes";
  return o;
}

// Analytic gradients against central differences.
Outcome criterion4() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::string summary;
  for (auto family : {gradcheck::Family::dense, gradcheck::Family::embedding, gradcheck::Family::gru,
                      gradcheck::Family::lstm, gradcheck::Family::bigru, gradcheck::Family::conv1d}) {
    Rng rng(Rng::mix(777, static_cast<std::uint64_t>(family)));
    double worst = 0.0;
    for (int config = 0; config < 25; ++config) {
      const auto r = gradcheck::check_random_config(family, rng);
      worst = std::max(worst, r.max_rel_error);
      o.check(r.max_rel_error < gradcheck::kTolerance, std::string(gradcheck::family_name(family)) + " config " +
                                                           std::to_string(config) + ": " + r.worst);
    }
    summary += std::string(summary.empty() ? "" : ", ") + gradcheck::family_name(family) + " " + fmt("%.1e", worst);
  }
  const double secs = seconds_since(t0);
  o.check(secs < 60.0, "took " + fmt("%.1f", secs) + " s");
  if (o.pass) o.detail = "25 configs each, max rel error: " + summary + " (" + fmt("%.2f", secs) + " s)";
  return o;
}

// Library results against brute-force oracles on a 9-document fixture.
Outcome criterion5() {
  Outcome o;
  const auto docs = oracle::fixture_docs();
  const auto labels = oracle::fixture_labels();
  const auto vocab = build_vocab(docs, VocabUnit::word, 1000);
  const auto words = oracle::vocab(docs, 1000);
  const auto idf = fit_idf(docs, vocab);
  double tfidf_err = 0.0, bow_err = 0.0;
  FeatureMatrix x;
  x.cols = vocab.size();
  for (const auto& d : docs) {
    const auto t = tfidf_vector(d, vocab, idf);
    const auto t_ref = oracle::tfidf(words, docs, d);
    const auto b = bow_vector(d, vocab);
    const auto b_ref = oracle::bow(words, d);
    o.check(t.size() == t_ref.size() && b.size() == b_ref.size(), "vector width mismatch");
    if (!o.pass) return o;
    for (std::size_t i = 0; i < t.size(); ++i) {
      tfidf_err = std::max(tfidf_err, std::abs(t[i] - t_ref[i]));
      bow_err = std::max(bow_err, std::abs(b[i] - b_ref[i]));
    }
    x.values.insert(x.values.end(), t.begin(), t.end());
    ++x.rows;
  }
  o.check(tfidf_err <= 1e-9, "tfidf error " + fmt("%.2e", tfidf_err));
  o.check(bow_err <= 1e-9, "bow error " + fmt("%.2e", bow_err));

  std::vector<Sample> train;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    Sample s;
    s.sample_id = std::to_string(i);
    s.tokens = docs[i];
    s.label = labels[i];
    train.push_back(s);
  }
  const auto counts = era_token_counts(train, 3);
  double wf_err = 0.0;
  for (const auto& d : docs) {
    const auto got = word_freq_by_era(d, counts);
    const auto want = oracle::word_freq(d, docs, labels, 3);
    for (std::size_t e = 0; e < 3; ++e) {
      wf_err = std::max(wf_err, std::abs(static_cast<double>(got[e]) - static_cast<double>(want[e])));
    }
  }
  o.check(wf_err <= 1e-9, "word_freq error " + fmt("%.2e", wf_err));

  double lr_err = 0.0;
  for (std::size_t classes : {2u, 3u}) {
    std::vector<std::size_t> y = labels;
    if (classes == 2) {
      for (auto& v : y) v = v == 2 ? 1 : 0;
    }
    LogRegSpec spec;
    spec.tolerance = 1e-9;
    const auto fit = logreg_fit(x, y, classes, spec);
    const double ref = oracle::logreg_gd_minimum(x.values, x.rows, x.cols, y, classes, spec.C);
    lr_err = std::max(lr_err, std::abs(fit.objective_trace.back() - ref));
  }
  o.check(lr_err <= 1e-6, "logreg objective gap " + fmt("%.2e", lr_err));
  if (o.pass) {
    o.detail = "tfidf " + fmt("%.1e", tfidf_err) + ", bow " + fmt("%.1e", bow_err) + ", word_freq " +
               fmt("%.1e", wf_err) + ", logreg objective gap " + fmt("%.1e", lr_err);
  }
  return o;
}

// The ANN learns a synthetic era-vocabulary corpus under both protocols.
Outcome criterion6() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = scratch_dir() / "learning";
  fs::create_directories(dir);
  SyntheticParams params;  // 10 authors x 20 samples = 200 samples per era
  params.seed = 11;
  std::ofstream(dir / "corpus.jsonl") << to_prose_jsonl(synthetic_documents(builtin_scheme("openiti5"), params));

  std::string summary;
  for (const std::string protocol : {"author_disjoint", "merged"}) {
    const nlohmann::json cfg = {{"seed", 42},
                                {"output_dir", (dir / protocol).string()},
                                {"corpus", {{"path", "corpus.jsonl"}}},
                                {"scheme", {{"id", "openiti5"}}},
                                {"split", {{"protocol", protocol}}},
                                {"model", {{"family", "ann"}}}};
    std::ostringstream log;
    Pipeline p(parse_config(cfg, dir), log);
    p.run();

    std::map<std::string, std::size_t> per_class;
    std::map<std::string, std::string> author_of;
    for (const auto& s : samples_from_jsonl(slurp(p.path("samples.jsonl")))) author_of[s.sample_id] = s.author_id;
    std::map<std::string, std::set<std::string>> authors, ids;
    for (const auto& e : parse_split_manifest(slurp(p.path("split_manifest.tsv")))) {
      authors[e.split].insert(author_of.at(e.sample_id));
      o.check(ids[e.split].insert(e.sample_id).second, "duplicate sample " + e.sample_id);
    }
    auto overlap = [](const std::set<std::string>& a, const std::set<std::string>& b) {
      std::size_t n = 0;
      for (const auto& x : a) n += b.count(x);
      return n;
    };
    const char* names[] = {"train", "val", "test"};
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        o.check(overlap(ids[names[i]], ids[names[j]]) == 0, protocol + ": sample in two splits");
        if (protocol == "author_disjoint") {
          o.check(overlap(authors[names[i]], authors[names[j]]) == 0,
                  protocol + ": author shared by " + names[i] + " and " + names[j]);
        }
      }
    }
    const auto report = nlohmann::json::parse(slurp(p.path("eval_report.json")));
    const auto history = nlohmann::json::parse(slurp(p.path("history.json")));
    const double acc = report["accuracy"].get<double>();
    const std::size_t epochs = history["epochs"].size();
    o.check(acc >= 0.99, protocol + " test accuracy " + fmt("%.4f", acc));
    o.check(epochs <= 10, protocol + " trained " + std::to_string(epochs) + " epochs");
    summary += std::string(summary.empty() ? "" : ", ") + protocol + " accuracy " + fmt("%.4f", acc) + " (n=" +
               std::to_string(report["n"].get<std::size_t>()) + ")";
  }
  const double secs = seconds_since(t0);
  o.check(secs < 120.0, "took " + fmt("%.1f", secs) + " s");
  if (o.pass) o.detail = summary + ", splits disjoint (" + fmt("%.2f", secs) + " s)";
  return o;
}

// Boundary years of the published era tables and the custom bin counts.
Outcome criterion7() {
  Outcome o;
  struct Row {
    std::string era;
    int start;
    int end;  // exclusive; 0 when open-ended
  };
  const std::vector<std::pair<std::string, std::vector<Row>>> tables = {
      {"ghoniem6",
       {{"Pre-Islamic", -150, 1},
        {"Islamic", 1, 132},
        {"Abbasid", 132, 334},
        {"Aldoul wa al-emarat", 334, 923},
        {"Ottoman", 923, 1335},
        {"Modern", 1335, 0}}},
      {"openiti5",
       {{"Islamic", 50, 175},
        {"Abbasid", 175, 400},
        {"Aldoul wa al-emarat", 400, 950},
        {"Ottoman", 950, 1350},
        {"Modern", 1350, 1450}}},
      {"belinkov3", {{"Early", 1, 300}, {"Middle", 300, 1300}, {"Late", 1300, 0}}},
  };
  std::size_t checked = 0;
  for (const auto& [id, rows] : tables) {
    const auto scheme = builtin_scheme(id);
    o.check(scheme.size() == rows.size(), id + " has " + std::to_string(scheme.size()) + " eras");
    for (const auto& row : rows) {
      std::vector<int> years{row.start};
      if (row.end != 0) years.push_back(row.end - 1);
      for (int y : years) {
        const auto a = scheme.assign(y);
        o.check(a.clamp == Clamp::none && scheme.bin(a.index).label == row.era,
                id + " year " + std::to_string(y) + " -> " + scheme.bin(a.index).label);
        ++checked;
      }
    }
  }
  const std::size_t counts[][2] = {{300, 5}, {200, 8}, {100, 15}};
  for (const auto& c : counts) {
    const auto s = custom_bins(static_cast<int>(c[0]), 0, 1500);
    o.check(s.size() == c[1], std::to_string(c[0]) + "-year bins give " + std::to_string(s.size()));
  }
  if (o.pass) o.detail = std::to_string(checked) + " boundary years; 300/200/100-year bins give 5/8/15 classes";
  return o;
}

// The preprocessing example and the kashida example.
Outcome criterion8() {
  Outcome o;
  const fs::path lemmas = fs::path(ERACLASS_FIXTURES) / "example_lemmas.tsv";
  const auto normalized = utf8::split_whitespace(normalize(reference::kExampleOriginal));
  o.check(utf8::join(normalized, " ") == reference::kExampleNormalized, "normalized text differs");
  const auto filtered = remove_stopwords(normalized, builtin_stopwords());
  o.check(utf8::join(filtered, " ") == reference::kExampleStopwordsRemoved, "stop-word removal differs");
  const auto lemmatized = lemmatize(normalized, load_lemma_table(lemmas));
  o.check(utf8::join(lemmatized, " ") == reference::kExampleLemmatized, "lemmatized text differs");
  o.check(normalize(reference::kKashidaInput) == reference::kKashidaOutput, "kashida not removed");
  if (o.pass) o.detail = "all stages byte-identical; kashida removed";
  return o;
}

// Two CLI runs with the same config and seed.
Outcome criterion9() {
  Outcome o;
  const fs::path dir = scratch_dir() / "determinism";
  fs::create_directories(dir);
  SyntheticParams params;
  params.authors_per_era = 6;
  params.samples_per_author = 8;
  params.seed = 5;
  std::ofstream(dir / "corpus.jsonl") << to_prose_jsonl(synthetic_documents(builtin_scheme("belinkov3"), params));
  const nlohmann::json cfg = {{"seed", 7},
                              {"corpus", {{"path", "corpus.jsonl"}, {"max_words", 60}}},
                              {"scheme", {{"id", "belinkov3"}}},
                              {"features", {{"max_len", 60}}},
                              {"model", {{"family", "rnn"}, {"epochs", 2}, {"units", 8}, {"embedding_dim", 8}}}};
  std::ofstream(dir / "config.json") << cfg.dump(2);

  std::vector<std::string> fingerprints[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path out = dir / ("run" + std::to_string(run));
    const std::string cmd = std::string("\"") + ERACLASS_CLI + "\" run --config \"" + (dir / "config.json").string() +
                            "\" --out \"" + out.string() + "\" > \"" + (dir / "log.txt").string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    o.check(rc == 0, "run " + std::to_string(run) + " exited with " + std::to_string(rc));
    if (!o.pass) return o;
    for (const char* name : {"split_manifest.tsv", "model.ckpt", "eval_report.json"}) {
      fingerprints[run].push_back(to_hex(fnv1a64(slurp(out / name))));
    }
  }
  const char* names[] = {"split manifest", "checkpoint", "eval report"};
  for (std::size_t i = 0; i < 3; ++i) {
    o.check(fingerprints[0][i] == fingerprints[1][i], std::string(names[i]) + " hashes differ");
  }
  if (o.pass) {
    o.detail = "manifest " + fingerprints[0][0] + ", checkpoint " + fingerprints[0][1] + ", report " +
               fingerprints[0][2] + " identical across runs";
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"significance intervals", criterion1},   {"metric table consistency", criterion2},
      {"merge monotonicity", criterion3},       {"gradient checks", criterion4},
      {"oracle equivalence", criterion5},       {"learning sanity", criterion6},
      {"periodization", criterion7},            {"preprocessing fixtures", criterion8},
      {"determinism", criterion9},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " - "
              << o.detail << std::endl;
  }
  fs::remove_all(scratch_dir());
  return failures == 0 ? 0 : 1;
}
