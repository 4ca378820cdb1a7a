#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace eraclass {

using LemmaTable = std::unordered_map<std::string, std::string>;
using StopwordSet = std::unordered_set<std::string>;

struct PrepConfig {
  bool remove_stopwords = false;
  bool apply_lemmas = false;
  LemmaTable lemma_table;
  StopwordSet stopword_list;

  // Throws ConfigError when lemmas are requested without a table.
  void validate() const;
};

/// Strips HTML tags, Unicode punctuation and symbols (categories P and S),
/// ASCII digits and Arabic-Indic digits, then collapses whitespace runs to a
/// single space and trims both ends. Tags are replaced by a space so that
/// "a<br>b" stays two words.
std::string clean(std::string_view text);

/// Deletes Arabic diacritics (U+064B..U+065F, U+0670) and tatweel (U+0640).
/// Every other byte is copied through unchanged.
std::string normalize(std::string_view text);

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordSet& stopwords);

// Replaces each token found in the table; length is preserved.
std::vector<std::string> lemmatize(const std::vector<std::string>& tokens, const LemmaTable& table);

// Whitespace tokenization of normalize(clean(text)).
std::vector<std::string> tokenize(std::string_view text);

// Full pipeline: tokenize, then optional stop-word removal, then optional lemmas.
std::vector<std::string> preprocess(std::string_view text, const PrepConfig& config);

bool is_arabic_mark(char32_t cp);
bool is_punctuation_or_symbol(char32_t cp);

// Whitespace-separated words; lines starting with '#' are comments.
StopwordSet parse_stopwords(std::string_view contents);
StopwordSet load_stopwords(const std::filesystem::path& path);
// The Arabic list compiled into the library (data/stopwords_ar.txt).
const StopwordSet& builtin_stopwords();

LemmaTable parse_lemma_table(std::string_view contents);
LemmaTable load_lemma_table(const std::filesystem::path& path);

}  // namespace eraclass
