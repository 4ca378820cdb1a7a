#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "eraclass/corpus.hpp"

namespace eraclass {

enum class VocabUnit { word, character };

inline constexpr std::int32_t kPadIndex = 0;
inline constexpr std::int32_t kOovIndex = 1;
inline constexpr std::int32_t kFirstTokenIndex = 2;

// Units of a sample: its tokens for word vocabularies, or the codepoints of
// the tokens joined by single spaces for character vocabularies.
std::vector<std::string> units_of(const std::vector<std::string>& tokens, VocabUnit unit);

/// Token to index map. Index 0 is padding, 1 is out-of-vocabulary, and
/// tokens take 2..size()+1 in order of descending training frequency, ties
/// broken by first occurrence.
class Vocabulary {
 public:
  Vocabulary() = default;

  VocabUnit unit() const { return unit_; }
  std::size_t size() const { return tokens_.size(); }
  std::size_t max_size() const { return max_size_; }

  // kOovIndex for unknown units.
  std::int32_t index_of(std::string_view token) const;
  const std::string& token_at(std::int32_t index) const { return tokens_.at(static_cast<std::size_t>(index - kFirstTokenIndex)); }
  std::size_t frequency_at(std::int32_t index) const { return freqs_.at(static_cast<std::size_t>(index - kFirstTokenIndex)); }

  // `token<TAB>index<TAB>train_frequency` per line.
  std::string dump() const;
  static Vocabulary parse(std::string_view contents, VocabUnit unit);
  std::uint64_t fingerprint() const;

  friend Vocabulary build_vocab(const std::vector<std::vector<std::string>>& train_units, VocabUnit unit,
                                std::size_t max_size);

 private:
  VocabUnit unit_ = VocabUnit::word;
  std::size_t max_size_ = 0;
  std::vector<std::string> tokens_;
  std::vector<std::size_t> freqs_;
  std::unordered_map<std::string, std::int32_t> index_;
};

// `train_units` are per-sample unit lists (see units_of). Throws
// std::invalid_argument on an empty training set or max_size == 0.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& train_units, VocabUnit unit,
                       std::size_t max_size);

// idf(t) = ln((1 + N) / (1 + df(t))) + 1 over the N training samples;
// entry i belongs to vocabulary index i + 2.
using IdfTable = std::vector<double>;
IdfTable fit_idf(const std::vector<std::vector<std::string>>& train_units, const Vocabulary& vocab);

// Binary presence; out-of-vocabulary units are ignored.
std::vector<double> bow_vector(const std::vector<std::string>& units, const Vocabulary& vocab);

// Raw count times idf, then L2-normalized (an all-zero vector stays zero).
std::vector<double> tfidf_vector(const std::vector<std::string>& units, const Vocabulary& vocab,
                                 const IdfTable& idf);

// Post-padded (PAD = 0) and truncated to max_len; unknown units map to OOV.
std::vector<std::int32_t> encode_sequence(const std::vector<std::string>& units, const Vocabulary& vocab,
                                          std::size_t max_len);

enum class FeatureKind { bow, tfidf, word_seq, char_seq };

FeatureKind parse_feature_kind(std::string_view s);
std::string_view to_string(FeatureKind k);
inline bool is_sequence(FeatureKind k) { return k == FeatureKind::word_seq || k == FeatureKind::char_seq; }
inline VocabUnit unit_for(FeatureKind k) { return k == FeatureKind::char_seq ? VocabUnit::character : VocabUnit::word; }

// Row-major dense matrix; sequence kinds store token indices as doubles.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  FeatureKind kind = FeatureKind::bow;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Everything fitted on the training split that is needed to featurize any
/// split the same way.
struct Featurizer {
  FeatureKind kind = FeatureKind::bow;
  Vocabulary vocab;
  IdfTable idf;             // tfidf only
  std::size_t max_len = 0;  // sequence kinds only

  static Featurizer fit(const std::vector<Sample>& train, FeatureKind kind, std::size_t vocab_size,
                        std::size_t max_len_override = 0);

  std::size_t width() const { return is_sequence(kind) ? max_len : vocab.size(); }
  FeatureMatrix transform(const std::vector<Sample>& samples) const;
};

}  // namespace eraclass
