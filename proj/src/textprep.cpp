#include "eraclass/textprep.hpp"

#include <algorithm>

#include "builtin_data.hpp"
#include "eraclass/error.hpp"
#include "eraclass/utf8.hpp"
#include "io_util.hpp"
#include "unicode_tables.hpp"

namespace eraclass {

void PrepConfig::validate() const {
  if (apply_lemmas && lemma_table.empty()) {
    throw ConfigError("apply_lemmas requires a non-empty lemma table");
  }
}

bool is_arabic_mark(char32_t cp) {
  return (cp >= 0x064B && cp <= 0x065F) || cp == 0x0670 || cp == 0x0640;
}

bool is_punctuation_or_symbol(char32_t cp) {
  const auto& table = detail::kPunctuationAndSymbols;
  auto it = std::upper_bound(table.begin(), table.end(), cp,
                             [](char32_t v, const detail::CodepointRange& r) { return v < r.first; });
  if (it == table.begin()) return false;
  --it;
  return cp <= it->last;
}

namespace {

bool is_removed_digit(char32_t cp) {
  return (cp >= U'0' && cp <= U'9') || (cp >= 0x0660 && cp <= 0x0669);
}

}  // namespace

std::string clean(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;

  for (std::size_t pos = 0, len = 0; pos < text.size(); pos += len) {
    if (text[pos] == '<') {
      const std::size_t close = text.find('>', pos + 1);
      if (close != std::string_view::npos) {
        pending_space = !out.empty();
        len = close - pos + 1;
        continue;
      }
    }
    const char32_t cp = utf8::decode_at(text, pos, len);
    if (cp == utf8::kInvalid) continue;
    if (utf8::is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (is_punctuation_or_symbol(cp) || is_removed_digit(cp)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.append(text.substr(pos, len));
  }
  return out;
}

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t pos = 0, len = 0; pos < text.size(); pos += len) {
    const char32_t cp = utf8::decode_at(text, pos, len);
    if (cp != utf8::kInvalid && is_arabic_mark(cp)) continue;
    out.append(text.substr(pos, len));
  }
  return out;
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordSet& stopwords) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!stopwords.contains(t)) out.push_back(t);
  }
  return out;
}

std::vector<std::string> lemmatize(const std::vector<std::string>& tokens, const LemmaTable& table) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    const auto it = table.find(t);
    out.push_back(it == table.end() ? t : it->second);
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  return utf8::split_whitespace(normalize(clean(text)));
}

std::vector<std::string> preprocess(std::string_view text, const PrepConfig& config) {
  config.validate();
  auto tokens = tokenize(text);
  if (config.remove_stopwords) tokens = remove_stopwords(tokens, config.stopword_list);
  if (config.apply_lemmas) tokens = lemmatize(tokens, config.lemma_table);
  return tokens;
}

StopwordSet parse_stopwords(std::string_view contents) {
  StopwordSet out;
  for (auto line : detail::lines(contents)) {
    if (detail::is_comment_or_blank(line)) continue;
    for (auto& word : utf8::split_whitespace(line)) out.insert(std::move(word));
  }
  return out;
}

StopwordSet load_stopwords(const std::filesystem::path& path) {
  return parse_stopwords(detail::read_file(path));
}

const StopwordSet& builtin_stopwords() {
  static const StopwordSet set = parse_stopwords(detail::kBuiltinStopwordsAr);
  return set;
}

LemmaTable parse_lemma_table(std::string_view contents) {
  LemmaTable table;
  std::size_t line_no = 0;
  for (auto line : detail::lines(contents)) {
    ++line_no;
    if (detail::is_comment_or_blank(line)) continue;
    const auto cols = detail::split_tabs(line);
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty()) {
      throw DataError("lemma table line " + std::to_string(line_no) + ": expected surface<TAB>lemma");
    }
    table.emplace(std::string(cols[0]), std::string(cols[1]));
  }
  return table;
}

LemmaTable load_lemma_table(const std::filesystem::path& path) {
  return parse_lemma_table(detail::read_file(path));
}

}  // namespace eraclass
