#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "eraclass/corpus.hpp"
#include "eraclass/periodization.hpp"

namespace eraclass {

/// Generated prose corpus for tests and demos. Every era draws from its own
/// word list (no word is shared between eras) mixed with a common list
/// shared by all eras, so era is learnable from vocabulary alone.
struct SyntheticParams {
  std::size_t authors_per_era = 10;
  std::size_t samples_per_author = 20;  // windows after the skipped head
  std::size_t words_per_sample = 100;
  std::size_t skip_head_words = 300;
  std::size_t era_vocab = 60;
  std::size_t common_vocab = 120;
  double era_word_share = 0.5;  // chance that a word comes from the era list
  std::uint64_t seed = 0;
};

// One document per author with a year drawn inside its era's bin. Words are
// Arabic-letter strings so they survive preprocessing untouched.
std::vector<Document> synthetic_documents(const EraScheme& scheme, const SyntheticParams& params);

// JSONL accepted by ingest_prose.
std::string to_prose_jsonl(const std::vector<Document>& docs);

}  // namespace eraclass
