#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "eraclass/error.hpp"
#include "eraclass/hash.hpp"
#include "eraclass/pipeline.hpp"
#include "eraclass/synthetic.hpp"

using namespace eraclass;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("eraclass_pipeline_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    SyntheticParams p;
    p.authors_per_era = 6;
    p.samples_per_author = 5;
    p.words_per_sample = 40;
    p.seed = 3;
    std::ofstream(dir_ / "corpus.jsonl") << to_prose_jsonl(synthetic_documents(builtin_scheme("openiti5"), p));
  }
  void TearDown() override { fs::remove_all(dir_); }

  nlohmann::json base_config(const std::string& out) const {
    return {{"seed", 5},
            {"output_dir", (dir_ / out).string()},
            {"corpus", {{"path", "corpus.jsonl"}, {"max_words", 40}}},
            {"scheme", {{"id", "openiti5"}}},
            {"model", {{"epochs", 10}, {"batch_size", 16}, {"dropout", 0.2}}}};
  }

  fs::path dir_;
};

}  // namespace

TEST_F(PipelineTest, ConfigDefaultsAndValidation) {
  auto plain = base_config("a");
  plain["model"].erase("batch_size");
  const auto cfg = parse_config(plain, dir_);
  EXPECT_EQ(cfg.corpus_path, dir_ / "corpus.jsonl");
  EXPECT_EQ(cfg.family, ModelFamily::ann);
  EXPECT_EQ(cfg.feature, FeatureKind::bow);
  EXPECT_EQ(cfg.vocab_size, 15000u);
  EXPECT_EQ(cfg.batch_size, 512u);
  EXPECT_EQ(cfg.optimizer.kind, OptimizerKind::rmsprop);
  EXPECT_EQ(cfg.scheme.size(), 5u);

  auto rnn = plain;
  rnn["model"]["family"] = "rnn";
  const auto r = parse_config(rnn, dir_);
  EXPECT_EQ(r.feature, FeatureKind::word_seq);
  EXPECT_EQ(r.vocab_size, 20000u);
  EXPECT_EQ(r.batch_size, 128u);

  auto apcd = base_config("a");
  apcd["scheme"]["id"] = "apcd5";
  EXPECT_EQ(parse_config(apcd, dir_).optimizer.kind, OptimizerKind::adam);

  auto custom = base_config("a");
  custom["scheme"] = {{"custom_bin_years", 200}};
  EXPECT_EQ(parse_config(custom, dir_).scheme.size(), 8u);

  auto unknown = base_config("a");
  unknown["model"]["lerning_rate"] = 0.1;
  EXPECT_THROW(parse_config(unknown, dir_), ConfigError);
  auto mismatch = base_config("a");
  mismatch["model"]["family"] = "rnn";
  mismatch["features"] = {{"kind", "tfidf"}};
  EXPECT_THROW(parse_config(mismatch, dir_), ConfigError);
  auto no_path = base_config("a");
  no_path["corpus"].erase("path");
  EXPECT_THROW(parse_config(no_path, dir_), ConfigError);
  auto lemmas = base_config("a");
  lemmas["prep"] = {{"lemmatize", true}};
  EXPECT_THROW(parse_config(lemmas, dir_), ConfigError);
}

TEST_F(PipelineTest, HashIgnoresOutputDirOnly) {
  const auto a = parse_config(base_config("a"), dir_);
  const auto b = parse_config(base_config("b"), dir_);
  EXPECT_EQ(a.hash(), b.hash());
  auto other = base_config("a");
  other["seed"] = 6;
  EXPECT_NE(parse_config(other, dir_).hash(), a.hash());
}

TEST_F(PipelineTest, StageOrderIsEnforced) {
  std::ostringstream log;
  Pipeline p(parse_config(base_config("order"), dir_), log);
  try {
    p.train();
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("run `eraclass "), std::string::npos) << e.what();
  }
  EXPECT_THROW(p.report(), DataError);
}

TEST_F(PipelineTest, RunWritesArtifactsDeterministically) {
  std::ostringstream log;
  Pipeline a(parse_config(base_config("run1"), dir_), log);
  a.run();
  Pipeline b(parse_config(base_config("run2"), dir_), log);
  b.run();
  for (const auto& name : Pipeline::run_artifacts()) {
    ASSERT_TRUE(fs::exists(a.path(name))) << name;
    if (name == "repro.json") continue;  // names its own output directory
    EXPECT_EQ(fnv1a64(slurp(a.path(name))), fnv1a64(slurp(b.path(name)))) << name;
  }
  const auto hash = a.config().hash();
  EXPECT_EQ(slurp(a.path("split_manifest.tsv")).rfind("# config_hash=" + hash, 0), 0u);
  const auto report = nlohmann::ordered_json::parse(slurp(a.path("eval_report.json")));
  EXPECT_EQ(report.begin().key(), "config_hash");
  EXPECT_GT(report["accuracy"].get<double>(), 0.9);
  EXPECT_NO_THROW(a.report());

  a.analyze_merge({{0, 1}, {2}, {3, 4}});
  const auto merged = nlohmann::json::parse(slurp(a.path("merge_analysis.json")));
  EXPECT_GE(merged["merged_accuracy"].get<double>(), report["accuracy"].get<double>());
}

TEST_F(PipelineTest, LogRegFamilyRuns) {
  auto cfg = base_config("logreg");
  cfg["model"] = {{"family", "logreg"}, {"C", 10.0}};
  cfg["features"] = {{"kind", "tfidf"}};
  cfg["split"] = {{"protocol", "merged"}};
  std::ostringstream log;
  Pipeline p(parse_config(cfg, dir_), log);
  p.run();
  const auto report = nlohmann::json::parse(slurp(p.path("eval_report.json")));
  EXPECT_GT(report["accuracy"].get<double>(), 0.9);
}

TEST_F(PipelineTest, FailedRunLeavesMarker) {
  auto cfg = base_config("broken");
  cfg["corpus"]["path"] = "missing.jsonl";
  std::ostringstream log;
  Pipeline p(parse_config(cfg, dir_), log);
  EXPECT_THROW(p.run(), DataError);
  EXPECT_TRUE(fs::exists(p.path("FAILED")));
}

TEST(SamplesJsonl, RoundTrip) {
  Sample s{"d#0", "auth", {"كلمة", "أخرى"}, 120, 2};
  Sample t{"d#1", "auth", {"x"}, -5, std::nullopt};
  const auto back = samples_from_jsonl(samples_to_jsonl({s, t}));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], s);
  EXPECT_EQ(back[1], t);
}
