#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "eraclass/corpus.hpp"
#include "eraclass/periodization.hpp"

namespace eraclass {

struct LabeledDataset {
  std::vector<Sample> samples;  // every sample carries a label < scheme.size()
  EraScheme scheme;
  std::vector<std::size_t> class_counts;

  std::size_t excluded = 0;       // dropped by the scheme's exclusions
  std::size_t clamped_below = 0;  // years before the first bin
  std::size_t clamped_above = 0;  // years at or after the last bin's end

  std::size_t size() const { return samples.size(); }
  void recount();
};

enum class SplitProtocol { author_disjoint, merged };

SplitProtocol parse_split_protocol(std::string_view s);
std::string_view to_string(SplitProtocol p);

struct SplitSpec {
  double test_frac = 0.15;
  double val_frac_of_train = 0.15;
  SplitProtocol protocol = SplitProtocol::author_disjoint;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DatasetSplit {
  LabeledDataset train;
  LabeledDataset val;
  LabeledDataset test;
};

LabeledDataset label_dataset(std::vector<Sample> samples, const EraScheme& scheme);

// Uniform random downsample of every class to the smallest class count.
// Survivors keep their original order. Throws DataError naming any empty class.
LabeledDataset balance(const LabeledDataset& ds, std::uint64_t seed);

/// Splits into train/validation/test.
///
/// merged: per-class shuffles, then test and validation counts are spread
/// over classes by largest remainder so each class is within one sample of
/// its proportional share.
///
/// author_disjoint: authors are ordered by sample count (largest first, ties
/// in seeded random order) and each goes to the split whose deficit against
/// its target size is largest within the author's dominant class (ties: the
/// larger overall deficit). A split left without authors takes the smallest
/// author of the split holding the most. Author sets of the three splits are
/// pairwise disjoint. Needs at least three authors; throws DataError when a
/// single author holds more than (1 - test_frac) of the samples.
DatasetSplit split(const LabeledDataset& ds, const SplitSpec& spec);

// Balancing and splitting in protocol order: merged balances first, then
// splits; author_disjoint splits first, then balances inside each split.
DatasetSplit build_splits(const LabeledDataset& ds, const SplitSpec& spec, bool balance_classes);

// `sample_id<TAB>split<TAB>label` per line, train then val then test.
std::string format_split_manifest(const DatasetSplit& split);

struct ManifestEntry {
  std::string sample_id;
  std::string split;
  std::size_t label = 0;
};
std::vector<ManifestEntry> parse_split_manifest(std::string_view contents);

}  // namespace eraclass
