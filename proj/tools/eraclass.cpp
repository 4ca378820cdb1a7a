// eraclass: configuration-driven runner for era classification experiments.
//
//   eraclass <subcommand> --config <path> [--out <dir>] [--seed <int>]
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
// ERACLASS_OUT, when set, replaces the config's output_dir (--out still wins).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eraclass/error.hpp"
#include "eraclass/pipeline.hpp"
#include "eraclass/synthetic.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config, "Experiment config (JSON)")->required();
  cmd->add_option("--out", opt.out, "Output directory (overrides config and ERACLASS_OUT)");
  cmd->add_option("--seed", opt.seed, "Seed (overrides config)");
}

eraclass::Pipeline make_pipeline(const CommonOptions& opt) {
  eraclass::ExperimentConfig cfg = eraclass::load_config(opt.config);
  if (const char* env = std::getenv("ERACLASS_OUT"); env && *env) cfg.output_dir = env;
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  if (opt.seed) cfg.seed = *opt.seed;
  return eraclass::Pipeline(std::move(cfg), std::cout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Era classification of Arabic texts"};
  app.require_subcommand(1);
  CommonOptions opt;

  struct Stage {
    const char* name;
    const char* help;
    void (eraclass::Pipeline::*fn)();
  };
  const std::vector<Stage> stages = {
      {"ingest", "Read the corpus and cut samples", &eraclass::Pipeline::ingest},
      {"prep", "Clean, normalize, filter and lemmatize samples", &eraclass::Pipeline::prep},
      {"split", "Label samples and write the train/val/test manifest", &eraclass::Pipeline::split},
      {"train", "Fit features and the model", &eraclass::Pipeline::train},
      {"eval", "Evaluate on the test split", &eraclass::Pipeline::eval},
      {"report", "Summarize a finished run", &eraclass::Pipeline::report},
      {"run", "All stages in order", &eraclass::Pipeline::run},
  };
  std::vector<std::pair<CLI::App*, void (eraclass::Pipeline::*)()>> stage_cmds;
  for (const auto& s : stages) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, opt);
    stage_cmds.emplace_back(cmd, s.fn);
  }

  CLI::App* analyze = app.add_subcommand("analyze", "Post-hoc analyses of a run");
  analyze->require_subcommand(1);
  CLI::App* merge = analyze->add_subcommand("merge", "Accuracy after merging adjacent eras");
  add_common(merge, opt);
  std::string groups;
  merge->add_option("--groups", groups, "Consecutive class groups, e.g. \"0,1;2,3;4\"")->required();
  CLI::App* wordfreq = analyze->add_subcommand("wordfreq", "Per-era word frequency of chosen samples");
  add_common(wordfreq, opt);
  std::vector<std::string> sample_ids;
  wordfreq->add_option("--sample", sample_ids, "Sample id (repeatable; default: first test sample)");

  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic prose corpus (JSONL)");
  std::string synth_out;
  std::string synth_scheme = "openiti5";
  eraclass::SyntheticParams sp;
  synth->add_option("--out", synth_out, "Output JSONL file")->required();
  synth->add_option("--scheme", synth_scheme, "Era scheme id");
  synth->add_option("--authors", sp.authors_per_era, "Authors per era");
  synth->add_option("--samples", sp.samples_per_author, "Samples per author");
  synth->add_option("--seed", sp.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      const auto docs = eraclass::synthetic_documents(eraclass::builtin_scheme(std::string_view(synth_scheme)), sp);
      std::ofstream(synth_out, std::ios::binary) << eraclass::to_prose_jsonl(docs);
      std::cout << "synth: " << docs.size() << " documents -> " << synth_out << "\n";
      return kExitOk;
    }
    for (const auto& [cmd, fn] : stage_cmds) {
      if (cmd->parsed()) {
        auto p = make_pipeline(opt);
        (p.*fn)();
        return kExitOk;
      }
    }
    if (merge->parsed()) {
      std::vector<std::vector<std::size_t>> g;
      try {
        g = eraclass::parse_groups(groups);
      } catch (const std::invalid_argument& e) {
        throw eraclass::ConfigError(std::string("--groups: ") + e.what());
      }
      make_pipeline(opt).analyze_merge(g);
      return kExitOk;
    }
    if (wordfreq->parsed()) {
      make_pipeline(opt).analyze_wordfreq(sample_ids);
      return kExitOk;
    }
  } catch (const eraclass::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const eraclass::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const eraclass::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}
