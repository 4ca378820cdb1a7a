#include "eraclass/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "eraclass/error.hpp"
#include "eraclass/hash.hpp"
#include "eraclass/rng.hpp"
#include "eraclass/utf8.hpp"
#include "io_util.hpp"
#include "json.hpp"

namespace eraclass {

namespace {

using nlohmann::json;

struct RawRecord {
  std::string id;
  std::string author;
  std::optional<int> year;
  std::optional<std::string> era;
  std::optional<std::string> kind;
  std::optional<std::string> text;
  std::optional<std::string> verse;
};

std::optional<std::string> string_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw std::invalid_argument(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

std::optional<int> int_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw std::invalid_argument(std::string("field '") + key + "' is not an integer");
  return it->get<int>();
}

RawRecord parse_json_record(std::string_view line) {
  const json obj = json::parse(line);
  if (!obj.is_object()) throw std::invalid_argument("record is not a JSON object");
  RawRecord r;
  r.id = string_field(obj, "id").value_or("");
  r.author = string_field(obj, "author").value_or("");
  r.year = int_field(obj, "year_hijri");
  r.era = string_field(obj, "era");
  r.kind = string_field(obj, "kind");
  r.text = string_field(obj, "text");
  r.verse = string_field(obj, "verse");
  return r;
}

RawRecord parse_tsv_record(std::string_view line) {
  const auto cols = detail::split_tabs(line);
  if (cols.size() != 4) throw std::invalid_argument("expected 4 tab-separated columns");
  RawRecord r;
  r.id = std::string(cols[0]);
  r.author = std::string(cols[1]);
  if (!cols[2].empty()) {
    int y = 0;
    auto [ptr, ec] = std::from_chars(cols[2].data(), cols[2].data() + cols[2].size(), y);
    if (ec != std::errc() || ptr != cols[2].data() + cols[2].size()) {
      throw std::invalid_argument("year_hijri is not an integer");
    }
    r.year = y;
  }
  r.text = std::string(cols[3]);
  r.kind = "prose";
  return r;
}

// Resolves the record's year, or explains why it cannot.
std::optional<int> resolve_year(const RawRecord& r, const EraScheme* era_years, std::string& reason) {
  if (r.year) {
    if (*r.year < kMinYearAh || *r.year > kMaxYearAh) {
      reason = "year_hijri " + std::to_string(*r.year) + " outside [-150, 1450]";
      return std::nullopt;
    }
    return r.year;
  }
  if (!r.era) {
    reason = "missing year_hijri and era";
    return std::nullopt;
  }
  if (era_years == nullptr) {
    reason = "era '" + *r.era + "' given without year and no era table to resolve it";
    return std::nullopt;
  }
  if (auto mid = era_years->midpoint_year(*r.era)) return mid;
  reason = "unknown era '" + *r.era + "'";
  return std::nullopt;
}

template <typename OnRecord>
void for_each_record(const std::filesystem::path& path, ProseFormat format, IngestResult& result,
                     OnRecord&& on_record) {
  const std::string contents = detail::read_file(path);
  std::size_t line_no = 0;
  for (auto line : detail::lines(contents)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    RawRecord rec;
    try {
      rec = format == ProseFormat::jsonl ? parse_json_record(line) : parse_tsv_record(line);
    } catch (const std::exception& e) {
      result.skipped.push_back({line_no, std::string("malformed record: ") + e.what()});
      continue;
    }
    on_record(line_no, rec);
  }
}

std::vector<std::string> words_of(const Document& doc) { return utf8::split_whitespace(doc.text); }

}  // namespace

IngestResult ingest_prose(const std::filesystem::path& path, ProseFormat format, const EraScheme* era_years) {
  IngestResult result;
  std::unordered_set<std::string> seen;
  for_each_record(path, format, result, [&](std::size_t line_no, const RawRecord& r) {
    auto skip = [&](std::string reason) { result.skipped.push_back({line_no, std::move(reason)}); };
    if (r.kind && *r.kind != "prose") return skip("kind '" + *r.kind + "' in a prose corpus");
    if (r.id.empty()) return skip("missing id");
    if (r.author.empty()) return skip("missing author");
    std::string reason;
    const auto year = resolve_year(r, era_years, reason);
    if (!year) return skip(reason);
    if (!r.text || utf8::split_whitespace(*r.text).empty()) return skip("missing or empty text");
    if (!seen.insert(r.id).second) return skip("duplicate id '" + r.id + "' (first version kept)");

    Document doc;
    doc.doc_id = r.id;
    doc.author_id = r.author;
    doc.year_hijri = *year;
    doc.era = r.era;
    doc.kind = DocKind::prose;
    doc.text = *r.text;
    result.documents.push_back(std::move(doc));
  });
  return result;
}

IngestResult ingest_poetry(const std::filesystem::path& path, const EraScheme* era_years) {
  IngestResult result;
  std::unordered_map<std::string, std::size_t> by_poet;
  for_each_record(path, ProseFormat::jsonl, result, [&](std::size_t line_no, const RawRecord& r) {
    auto skip = [&](std::string reason) { result.skipped.push_back({line_no, std::move(reason)}); };
    if (r.kind && *r.kind != "poetry") return skip("kind '" + *r.kind + "' in a poetry corpus");
    if (r.author.empty()) return skip("missing author");
    const std::optional<std::string>& verse = r.verse ? r.verse : r.text;
    if (!verse || utf8::split_whitespace(*verse).empty()) return skip("missing or empty verse");

    const auto it = by_poet.find(r.author);
    if (it != by_poet.end()) {
      result.documents[it->second].verses.push_back(*verse);
      return;
    }
    std::string reason;
    const auto year = resolve_year(r, era_years, reason);
    if (!year) return skip(reason);

    Document doc;
    doc.doc_id = r.author;
    doc.author_id = r.author;
    doc.year_hijri = *year;
    doc.era = r.era;
    doc.kind = DocKind::poetry;
    doc.verses.push_back(*verse);
    by_poet.emplace(r.author, result.documents.size());
    result.documents.push_back(std::move(doc));
  });
  return result;
}

std::vector<Sample> prose_windows(const Document& doc, std::size_t max_words, std::size_t skip_head_words) {
  if (max_words == 0) throw std::invalid_argument("max_words must be at least 1");
  const auto words = words_of(doc);
  std::vector<Sample> out;
  std::size_t k = 0;
  for (std::size_t start = skip_head_words; start < words.size(); start += max_words, ++k) {
    const std::size_t end = std::min(words.size(), start + max_words);
    Sample s;
    s.sample_id = doc.doc_id + "#" + std::to_string(k);
    s.author_id = doc.author_id;
    s.year_hijri = doc.year_hijri;
    s.tokens.assign(words.begin() + static_cast<std::ptrdiff_t>(start),
                    words.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::size_t> allocate_quota(const std::vector<std::size_t>& capacity, std::size_t quota) {
  const std::size_t n = capacity.size();
  std::vector<std::size_t> alloc(n, 0);
  if (n == 0) return alloc;
  const std::size_t total = std::accumulate(capacity.begin(), capacity.end(), std::size_t{0});
  if (total <= quota) return capacity;

  // Water-filling: documents that cannot reach the even share take all they
  // have; the rest split what remains.
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);
  std::size_t remaining = quota;
  for (;;) {
    const std::size_t share = remaining / active.size();
    std::vector<std::size_t> still_active;
    for (std::size_t i : active) {
      if (capacity[i] <= share) {
        alloc[i] = capacity[i];
        remaining -= capacity[i];
      } else {
        still_active.push_back(i);
      }
    }
    if (still_active.size() == active.size()) break;
    active = std::move(still_active);
    if (active.empty()) return alloc;
  }
  const std::size_t share = remaining / active.size();
  std::size_t extra = remaining % active.size();
  for (std::size_t i : active) alloc[i] = share;
  // Leftover units go to the longest documents first.
  std::stable_sort(active.begin(), active.end(),
                   [&](std::size_t a, std::size_t b) { return capacity[a] > capacity[b]; });
  for (std::size_t i : active) {
    if (extra == 0) break;
    ++alloc[i];
    --extra;
  }
  return alloc;
}

std::vector<Sample> sample_prose(const std::vector<Document>& author_docs, const ProseSampling& params) {
  std::vector<std::vector<Sample>> windows;
  std::vector<std::size_t> capacity;
  for (const auto& doc : author_docs) {
    windows.push_back(prose_windows(doc, params.max_words, params.skip_head_words));
    capacity.push_back(windows.back().size());
  }
  const auto alloc = params.per_author_quota ? allocate_quota(capacity, *params.per_author_quota) : capacity;

  std::vector<Sample> out;
  for (std::size_t d = 0; d < author_docs.size(); ++d) {
    auto& w = windows[d];
    if (alloc[d] >= w.size()) {
      std::move(w.begin(), w.end(), std::back_inserter(out));
      continue;
    }
    std::vector<std::size_t> picks(w.size());
    std::iota(picks.begin(), picks.end(), 0);
    Rng rng(Rng::mix(params.seed, fnv1a64(author_docs[d].doc_id)));
    rng.shuffle(std::span(picks));
    picks.resize(alloc[d]);
    std::sort(picks.begin(), picks.end());
    for (std::size_t p : picks) out.push_back(std::move(w[p]));
  }
  return out;
}

std::vector<Sample> sample_prose_corpus(const std::vector<Document>& docs, const ProseSampling& params) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Document>> groups;
  for (const auto& d : docs) {
    auto [it, inserted] = groups.try_emplace(d.author_id);
    if (inserted) order.push_back(d.author_id);
    it->second.push_back(d);
  }
  std::vector<Sample> out;
  for (const auto& author : order) {
    auto part = sample_prose(groups[author], params);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<Sample> sample_poetry(const Document& doc, std::size_t verses_per_sample) {
  if (verses_per_sample < 1 || verses_per_sample > 16) {
    throw std::invalid_argument("verses_per_sample must be in 1..16");
  }
  std::vector<Sample> out;
  const std::size_t groups = doc.verses.size() / verses_per_sample;
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<std::string> verses(doc.verses.begin() + static_cast<std::ptrdiff_t>(g * verses_per_sample),
                                    doc.verses.begin() + static_cast<std::ptrdiff_t>((g + 1) * verses_per_sample));
    Sample s;
    s.sample_id = doc.doc_id + "#" + std::to_string(g);
    s.author_id = doc.author_id;
    s.year_hijri = doc.year_hijri;
    s.tokens = utf8::split_whitespace(utf8::join(verses, " "));
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> sample_poetry_corpus(const std::vector<Document>& docs, std::size_t verses_per_sample) {
  std::vector<Sample> out;
  for (const auto& d : docs) {
    auto part = sample_poetry(d, verses_per_sample);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<Sample> preprocess_samples(const std::vector<Sample>& samples, const PrepConfig& config) {
  config.validate();
  std::vector<Sample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    Sample p = s;
    p.tokens = preprocess(utf8::join(s.tokens, " "), config);
    if (!p.tokens.empty()) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace eraclass
