#include "eraclass/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "eraclass/error.hpp"
#include "eraclass/hash.hpp"
#include "eraclass/utf8.hpp"
#include "io_util.hpp"

namespace eraclass {

std::vector<std::string> units_of(const std::vector<std::string>& tokens, VocabUnit unit) {
  if (unit == VocabUnit::word) return tokens;
  return utf8::split_codepoints(utf8::join(tokens, " "));
}

std::int32_t Vocabulary::index_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kOovIndex : it->second;
}

std::string Vocabulary::dump() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out += '\t';
    out += std::to_string(i + kFirstTokenIndex);
    out += '\t';
    out += std::to_string(freqs_[i]);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view contents, VocabUnit unit) {
  Vocabulary v;
  v.unit_ = unit;
  std::size_t line_no = 0;
  for (auto line : detail::lines(contents)) {
    ++line_no;
    if (line.empty() || line.starts_with("# ")) continue;
    const auto cols = detail::split_tabs(line);
    std::size_t index = 0;
    std::size_t freq = 0;
    if (cols.size() != 3 ||
        std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), index).ec != std::errc() ||
        std::from_chars(cols[2].data(), cols[2].data() + cols[2].size(), freq).ec != std::errc() ||
        index != v.tokens_.size() + kFirstTokenIndex) {
      throw DataError("vocabulary line " + std::to_string(line_no) + " is malformed");
    }
    v.index_.emplace(std::string(cols[0]), static_cast<std::int32_t>(index));
    v.tokens_.emplace_back(cols[0]);
    v.freqs_.push_back(freq);
  }
  v.max_size_ = v.tokens_.size();
  return v;
}

std::uint64_t Vocabulary::fingerprint() const { return fnv1a64(dump()); }

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& train_units, VocabUnit unit,
                       std::size_t max_size) {
  if (max_size == 0) throw std::invalid_argument("vocabulary max_size must be at least 1");
  if (train_units.empty()) throw std::invalid_argument("cannot build a vocabulary from an empty training set");

  struct Entry {
    std::string token;
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  std::vector<Entry> entries;
  std::unordered_map<std::string, std::size_t> pos;
  for (const auto& units : train_units) {
    for (const auto& u : units) {
      auto [it, inserted] = pos.try_emplace(u, entries.size());
      if (inserted) entries.push_back({u, 0, entries.size()});
      ++entries[it->second].count;
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.count > b.count; });
  if (entries.size() > max_size) entries.resize(max_size);

  Vocabulary v;
  v.unit_ = unit;
  v.max_size_ = max_size;
  for (auto& e : entries) {
    v.index_.emplace(e.token, static_cast<std::int32_t>(v.tokens_.size()) + kFirstTokenIndex);
    v.freqs_.push_back(e.count);
    v.tokens_.push_back(std::move(e.token));
  }
  return v;
}

IdfTable fit_idf(const std::vector<std::vector<std::string>>& train_units, const Vocabulary& vocab) {
  std::vector<std::size_t> df(vocab.size(), 0);
  std::vector<std::size_t> last_doc(vocab.size(), static_cast<std::size_t>(-1));
  for (std::size_t d = 0; d < train_units.size(); ++d) {
    for (const auto& u : train_units[d]) {
      const auto idx = vocab.index_of(u);
      if (idx < kFirstTokenIndex) continue;
      const auto i = static_cast<std::size_t>(idx - kFirstTokenIndex);
      if (last_doc[i] != d) {
        last_doc[i] = d;
        ++df[i];
      }
    }
  }
  const double n = static_cast<double>(train_units.size());
  IdfTable idf(vocab.size());
  for (std::size_t i = 0; i < idf.size(); ++i) {
    idf[i] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[i]))) + 1.0;
  }
  return idf;
}

std::vector<double> bow_vector(const std::vector<std::string>& units, const Vocabulary& vocab) {
  std::vector<double> v(vocab.size(), 0.0);
  for (const auto& u : units) {
    const auto idx = vocab.index_of(u);
    if (idx >= kFirstTokenIndex) v[static_cast<std::size_t>(idx - kFirstTokenIndex)] = 1.0;
  }
  return v;
}

std::vector<double> tfidf_vector(const std::vector<std::string>& units, const Vocabulary& vocab,
                                 const IdfTable& idf) {
  if (idf.size() != vocab.size()) throw std::invalid_argument("idf table does not match vocabulary");
  std::vector<double> v(vocab.size(), 0.0);
  for (const auto& u : units) {
    const auto idx = vocab.index_of(u);
    if (idx >= kFirstTokenIndex) v[static_cast<std::size_t>(idx - kFirstTokenIndex)] += 1.0;
  }
  double norm2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] *= idf[i];
    norm2 += v[i] * v[i];
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
  }
  return v;
}

std::vector<std::int32_t> encode_sequence(const std::vector<std::string>& units, const Vocabulary& vocab,
                                          std::size_t max_len) {
  std::vector<std::int32_t> out(max_len, kPadIndex);
  const std::size_t n = std::min(max_len, units.size());
  for (std::size_t i = 0; i < n; ++i) out[i] = vocab.index_of(units[i]);
  return out;
}

FeatureKind parse_feature_kind(std::string_view s) {
  if (s == "bow") return FeatureKind::bow;
  if (s == "tfidf") return FeatureKind::tfidf;
  if (s == "word_seq") return FeatureKind::word_seq;
  if (s == "char_seq") return FeatureKind::char_seq;
  throw ConfigError("unknown feature kind '" + std::string(s) + "'");
}

std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::bow: return "bow";
    case FeatureKind::tfidf: return "tfidf";
    case FeatureKind::word_seq: return "word_seq";
    case FeatureKind::char_seq: return "char_seq";
  }
  return "?";
}

Featurizer Featurizer::fit(const std::vector<Sample>& train, FeatureKind kind, std::size_t vocab_size,
                           std::size_t max_len_override) {
  Featurizer f;
  f.kind = kind;
  std::vector<std::vector<std::string>> units;
  units.reserve(train.size());
  for (const auto& s : train) units.push_back(units_of(s.tokens, unit_for(kind)));
  f.vocab = build_vocab(units, unit_for(kind), vocab_size);
  if (kind == FeatureKind::tfidf) f.idf = fit_idf(units, f.vocab);
  if (is_sequence(kind)) {
    if (max_len_override > 0) {
      f.max_len = max_len_override;
    } else {
      for (const auto& u : units) f.max_len = std::max(f.max_len, u.size());
    }
  }
  return f;
}

FeatureMatrix Featurizer::transform(const std::vector<Sample>& samples) const {
  FeatureMatrix m;
  m.kind = kind;
  m.rows = samples.size();
  m.cols = width();
  m.values.assign(m.rows * m.cols, 0.0);
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const auto units = units_of(samples[r].tokens, unit_for(kind));
    double* row = m.values.data() + r * m.cols;
    switch (kind) {
      case FeatureKind::bow: {
        const auto v = bow_vector(units, vocab);
        std::copy(v.begin(), v.end(), row);
        break;
      }
      case FeatureKind::tfidf: {
        const auto v = tfidf_vector(units, vocab, idf);
        std::copy(v.begin(), v.end(), row);
        break;
      }
      case FeatureKind::word_seq:
      case FeatureKind::char_seq: {
        const auto v = encode_sequence(units, vocab, max_len);
        for (std::size_t c = 0; c < v.size(); ++c) row[c] = static_cast<double>(v[c]);
        break;
      }
    }
  }
  return m;
}

}  // namespace eraclass
