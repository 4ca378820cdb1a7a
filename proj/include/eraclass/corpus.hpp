#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eraclass/periodization.hpp"
#include "eraclass/textprep.hpp"

namespace eraclass {

enum class DocKind { prose, poetry };

inline constexpr int kMinYearAh = -150;
inline constexpr int kMaxYearAh = 1450;

struct Document {
  std::string doc_id;
  std::string author_id;
  int year_hijri = 0;
  std::optional<std::string> era;
  DocKind kind = DocKind::prose;
  std::string text;                 // prose
  std::vector<std::string> verses;  // poetry, in file order
};

struct Sample {
  std::string sample_id;
  std::string author_id;
  std::vector<std::string> tokens;
  int year_hijri = 0;
  std::optional<std::size_t> label;

  bool operator==(const Sample&) const = default;
};

struct SkippedRecord {
  std::size_t line = 0;
  std::string reason;
};

struct IngestResult {
  std::vector<Document> documents;
  std::vector<SkippedRecord> skipped;
};

enum class ProseFormat {
  jsonl,  // one JSON object per line: id, author, year_hijri | era, kind, text
  tsv,    // id<TAB>author<TAB>year_hijri<TAB>text
};

/// Reads prose records into one Document each. Records missing an id, an
/// author, text, or a usable year are skipped and reported; so are repeated
/// ids (the first version of a book wins). An era name without a year is
/// resolved to the era's midpoint year through `era_years` when given.
/// Throws DataError when the file cannot be read.
IngestResult ingest_prose(const std::filesystem::path& path, ProseFormat format = ProseFormat::jsonl,
                          const EraScheme* era_years = nullptr);

/// Reads verse-per-line poetry records and concatenates each poet's verses,
/// in file order, into a single Document whose id is the poet name. The year
/// (or era) of a poet's first accepted record is used for the whole Document.
IngestResult ingest_poetry(const std::filesystem::path& path, const EraScheme* era_years = nullptr);

struct ProseSampling {
  std::size_t max_words = 100;
  std::size_t skip_head_words = 300;
  std::optional<std::size_t> per_author_quota;  // nullopt = keep every window
  std::uint64_t seed = 0;
};

// Every contiguous, non-overlapping window of at most max_words words after
// the skipped head. Words are whitespace-delimited.
std::vector<Sample> prose_windows(const Document& doc, std::size_t max_words, std::size_t skip_head_words);

// Per-document sample counts for an author: the quota is spread as evenly as
// possible, with any share a short document cannot fill moved to the longer
// documents. `capacity` holds each document's window count.
std::vector<std::size_t> allocate_quota(const std::vector<std::size_t>& capacity, std::size_t quota);

/// Samples one author's prose documents under the quota. When a document
/// offers more windows than its allocation, a seeded random subset is kept in
/// document order.
std::vector<Sample> sample_prose(const std::vector<Document>& author_docs, const ProseSampling& params);

// Groups documents by author (first-appearance order) and samples each group.
std::vector<Sample> sample_prose_corpus(const std::vector<Document>& docs, const ProseSampling& params);

// Consecutive groups of exactly verses_per_sample verses joined by one
// space; a trailing partial group is dropped. Requires 1..16 verses.
std::vector<Sample> sample_poetry(const Document& doc, std::size_t verses_per_sample);
std::vector<Sample> sample_poetry_corpus(const std::vector<Document>& docs, std::size_t verses_per_sample);

// Runs the text pipeline over each sample's text; samples left with no
// tokens are dropped.
std::vector<Sample> preprocess_samples(const std::vector<Sample>& samples, const PrepConfig& config);

}  // namespace eraclass
