#include "eraclass/synthetic.hpp"

#include <stdexcept>

#include "eraclass/rng.hpp"
#include "eraclass/utf8.hpp"
#include "json.hpp"

namespace eraclass {

namespace {

// Bijective base-28 spelling over the Arabic letters alef..yeh, so distinct
// ids give distinct words.
std::string arabic_word(std::size_t id) {
  static constexpr char32_t kLetters[] = {
      0x0627, 0x0628, 0x062A, 0x062B, 0x062C, 0x062D, 0x062E, 0x062F, 0x0630, 0x0631, 0x0632, 0x0633, 0x0634, 0x0635,
      0x0636, 0x0637, 0x0638, 0x0639, 0x063A, 0x0641, 0x0642, 0x0643, 0x0644, 0x0645, 0x0646, 0x0647, 0x0648, 0x064A};
  constexpr std::size_t base = std::size(kLetters);
  std::string out;
  std::size_t n = id + 1;
  do {
    --n;
    utf8::append(out, kLetters[n % base]);
    n /= base;
  } while (n > 0);
  return out;
}

}  // namespace

std::vector<Document> synthetic_documents(const EraScheme& scheme, const SyntheticParams& p) {
  if (p.era_vocab == 0 || p.words_per_sample == 0) throw std::invalid_argument("synthetic: empty vocabulary or samples");
  Rng rng(p.seed);
  const std::size_t eras = scheme.size();
  // Word ids: common list first, then one disjoint block per era. Ids from
  // 28 + 28^2 on spell words of three or more letters, which keeps them clear
  // of the stop-word list.
  const std::size_t first = 28 + 28 * 28;
  auto common_word = [&](std::size_t k) { return arabic_word(first + k); };
  auto era_word = [&](std::size_t e, std::size_t k) { return arabic_word(first + p.common_vocab + e * p.era_vocab + k); };

  std::vector<Document> docs;
  const std::size_t words = p.skip_head_words + p.samples_per_author * p.words_per_sample;
  for (std::size_t e = 0; e < eras; ++e) {
    const EraBin& bin = scheme.bins()[e];
    for (std::size_t a = 0; a < p.authors_per_era; ++a) {
      Document d;
      d.author_id = "era" + std::to_string(e) + "_author" + std::to_string(a);
      d.doc_id = d.author_id + "_book";
      const auto span = static_cast<std::uint64_t>(bin.end_ah - bin.start_ah);
      do {
        d.year_hijri = bin.start_ah + static_cast<int>(rng.uniform_index(span));
      } while (scheme.is_excluded(d.year_hijri));
      std::vector<std::string> text;
      text.reserve(words);
      for (std::size_t w = 0; w < words; ++w) {
        const bool era_specific = p.common_vocab == 0 || rng.uniform01() < p.era_word_share;
        text.push_back(era_specific ? era_word(e, rng.uniform_index(p.era_vocab))
                                    : common_word(rng.uniform_index(p.common_vocab)));
      }
      d.text = utf8::join(text, " ");
      docs.push_back(std::move(d));
    }
  }
  return docs;
}

std::string to_prose_jsonl(const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::ordered_json j;
    j["id"] = d.doc_id;
    j["author"] = d.author_id;
    j["year_hijri"] = d.year_hijri;
    j["kind"] = "prose";
    j["text"] = d.text;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace eraclass
