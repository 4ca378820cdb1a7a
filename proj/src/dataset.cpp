#include "eraclass/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "eraclass/error.hpp"
#include "eraclass/rng.hpp"
#include "io_util.hpp"

namespace eraclass {

void LabeledDataset::recount() {
  class_counts.assign(scheme.size(), 0);
  for (const auto& s : samples) ++class_counts.at(*s.label);
}

SplitProtocol parse_split_protocol(std::string_view s) {
  if (s == "author_disjoint") return SplitProtocol::author_disjoint;
  if (s == "merged") return SplitProtocol::merged;
  throw ConfigError("unknown split protocol '" + std::string(s) + "'");
}

std::string_view to_string(SplitProtocol p) {
  return p == SplitProtocol::merged ? "merged" : "author_disjoint";
}

void SplitSpec::validate() const {
  if (!(test_frac > 0.0 && test_frac < 1.0) || !(val_frac_of_train > 0.0 && val_frac_of_train < 1.0)) {
    throw ConfigError("split fractions must lie strictly between 0 and 1");
  }
}

LabeledDataset label_dataset(std::vector<Sample> samples, const EraScheme& scheme) {
  LabeledDataset ds;
  ds.scheme = scheme;
  for (auto& s : samples) {
    if (scheme.is_excluded(s.year_hijri)) {
      ++ds.excluded;
      continue;
    }
    const auto a = scheme.assign(s.year_hijri);
    if (a.clamp == Clamp::below) ++ds.clamped_below;
    if (a.clamp == Clamp::above) ++ds.clamped_above;
    s.label = a.index;
    ds.samples.push_back(std::move(s));
  }
  ds.recount();
  return ds;
}

namespace {

LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::size_t>& indices) {
  LabeledDataset out;
  out.scheme = ds.scheme;
  out.samples.reserve(indices.size());
  for (std::size_t i : indices) out.samples.push_back(ds.samples[i]);
  out.recount();
  return out;
}

std::vector<std::vector<std::size_t>> indices_by_class(const LabeledDataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.scheme.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i) by_class[*ds.samples[i].label].push_back(i);
  return by_class;
}

// Distributes `total` over classes proportionally to `counts` (largest
// remainder, ties to the lower class index).
std::vector<std::size_t> apportion(const std::vector<std::size_t>& counts, std::size_t total) {
  const std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::vector<std::size_t> out(counts.size(), 0);
  if (n == 0) return out;
  std::vector<std::pair<double, std::size_t>> rema;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double exact = static_cast<double>(counts[c]) * static_cast<double>(total) / static_cast<double>(n);
    out[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += out[c];
    rema.push_back({exact - static_cast<double>(out[c]), c});
  }
  std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < rema.size(); ++k) {
    if (out[rema[k].second] < counts[rema[k].second]) {
      ++out[rema[k].second];
      ++assigned;
    }
  }
  return out;
}

std::size_t round_count(double x) { return static_cast<std::size_t>(std::llround(x)); }

DatasetSplit split_merged(const LabeledDataset& ds, const SplitSpec& spec) {
  Rng rng(spec.seed);
  auto by_class = indices_by_class(ds);
  for (auto& idx : by_class) rng.shuffle(std::span(idx));

  std::vector<std::size_t> counts;
  for (const auto& idx : by_class) counts.push_back(idx.size());
  const std::size_t n = ds.size();
  const std::size_t n_test = round_count(static_cast<double>(n) * spec.test_frac);
  const auto test_per_class = apportion(counts, n_test);

  std::vector<std::size_t> rest_counts(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) rest_counts[c] = counts[c] - test_per_class[c];
  const std::size_t n_val = round_count(static_cast<double>(n - n_test) * spec.val_frac_of_train);
  const auto val_per_class = apportion(rest_counts, n_val);

  std::vector<std::size_t> train, val, test;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& idx = by_class[c];
    std::size_t k = 0;
    for (; k < test_per_class[c]; ++k) test.push_back(idx[k]);
    for (std::size_t v = 0; v < val_per_class[c]; ++v, ++k) val.push_back(idx[k]);
    for (; k < idx.size(); ++k) train.push_back(idx[k]);
  }
  for (auto* part : {&train, &val, &test}) std::sort(part->begin(), part->end());
  return {subset(ds, train), subset(ds, val), subset(ds, test)};
}

DatasetSplit split_author_disjoint(const LabeledDataset& ds, const SplitSpec& spec) {
  std::vector<std::string> authors;
  std::unordered_map<std::string, std::size_t> author_index;
  std::vector<std::size_t> author_size;
  for (const auto& s : ds.samples) {
    auto [it, inserted] = author_index.try_emplace(s.author_id, authors.size());
    if (inserted) {
      authors.push_back(s.author_id);
      author_size.push_back(0);
    }
    ++author_size[it->second];
  }
  if (authors.size() < 3) {
    throw DataError("author-disjoint split needs at least 3 authors, found " + std::to_string(authors.size()));
  }
  const double n = static_cast<double>(ds.size());
  for (std::size_t a = 0; a < authors.size(); ++a) {
    if (static_cast<double>(author_size[a]) > (1.0 - spec.test_frac) * n) {
      throw DataError("author-disjoint split infeasible: author '" + authors[a] + "' holds " +
                      std::to_string(author_size[a]) + " of " + std::to_string(ds.size()) + " samples");
    }
  }

  std::vector<std::size_t> order(authors.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(std::span(order));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return author_size[a] > author_size[b]; });

  const double target_test = n * spec.test_frac;
  const double target_val = (n - target_test) * spec.val_frac_of_train;
  const double fracs[3] = {(n - target_test - target_val) / n, target_val / n, target_test / n};

  // Deficits are measured inside the author's dominant class so that every
  // split receives authors of every class whenever the class has enough of
  // them; ties fall back to the overall deficit, then to split order.
  const std::size_t classes = ds.class_counts.size();
  std::vector<std::vector<std::size_t>> author_class(authors.size(), std::vector<std::size_t>(classes, 0));
  for (const auto& s : ds.samples) ++author_class[author_index.at(s.author_id)][*s.label];
  std::vector<std::size_t> dominant(authors.size(), 0);
  for (std::size_t a = 0; a < authors.size(); ++a) {
    dominant[a] = static_cast<std::size_t>(
        std::max_element(author_class[a].begin(), author_class[a].end()) - author_class[a].begin());
  }
  std::vector<std::vector<double>> class_filled(3, std::vector<double>(classes, 0.0));
  double filled[3] = {0, 0, 0};
  std::vector<int> assignment(authors.size(), 0);
  std::vector<std::size_t> members[3];
  for (std::size_t a : order) {
    const std::size_t c = dominant[a];
    const double class_n = static_cast<double>(ds.class_counts[c]);
    auto class_deficit = [&](int k) { return fracs[k] * class_n - class_filled[k][c]; };
    auto deficit = [&](int k) { return fracs[k] * n - filled[k]; };
    int best = 0;
    for (int k = 1; k < 3; ++k) {
      const double dk = class_deficit(k);
      const double db = class_deficit(best);
      if (dk > db || (dk == db && deficit(k) > deficit(best))) best = k;
    }
    assignment[a] = best;
    filled[best] += static_cast<double>(author_size[a]);
    for (std::size_t k = 0; k < classes; ++k) class_filled[best][k] += static_cast<double>(author_class[a][k]);
    members[best].push_back(a);
  }
  // Every split gets at least one author: borrow the smallest author from
  // the split holding the most authors.
  for (int k = 0; k < 3; ++k) {
    if (!members[k].empty()) continue;
    int donor = 0;
    for (int j = 1; j < 3; ++j) {
      if (members[j].size() > members[donor].size()) donor = j;
    }
    const std::size_t moved = members[donor].back();
    members[donor].pop_back();
    members[k].push_back(moved);
    assignment[moved] = k;
  }

  std::vector<std::size_t> parts[3];
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    parts[assignment[author_index.at(ds.samples[i].author_id)]].push_back(i);
  }
  return {subset(ds, parts[0]), subset(ds, parts[1]), subset(ds, parts[2])};
}

}  // namespace

LabeledDataset balance(const LabeledDataset& ds, std::uint64_t seed) {
  auto by_class = indices_by_class(ds);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) {
      throw DataError("cannot balance: class '" + ds.scheme.bin(c).label + "' has no samples");
    }
  }
  std::size_t smallest = by_class.front().size();
  for (const auto& idx : by_class) smallest = std::min(smallest, idx.size());

  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& idx : by_class) {
    rng.shuffle(std::span(idx));
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(smallest));
  }
  std::sort(keep.begin(), keep.end());
  LabeledDataset out = subset(ds, keep);
  out.excluded = ds.excluded;
  out.clamped_below = ds.clamped_below;
  out.clamped_above = ds.clamped_above;
  return out;
}

DatasetSplit split(const LabeledDataset& ds, const SplitSpec& spec) {
  spec.validate();
  return spec.protocol == SplitProtocol::merged ? split_merged(ds, spec) : split_author_disjoint(ds, spec);
}

DatasetSplit build_splits(const LabeledDataset& ds, const SplitSpec& spec, bool balance_classes) {
  if (!balance_classes) return split(ds, spec);
  if (spec.protocol == SplitProtocol::merged) return split(balance(ds, spec.seed), spec);
  DatasetSplit s = split(ds, spec);
  s.train = balance(s.train, Rng::mix(spec.seed, 1));
  s.val = balance(s.val, Rng::mix(spec.seed, 2));
  s.test = balance(s.test, Rng::mix(spec.seed, 3));
  return s;
}

std::string format_split_manifest(const DatasetSplit& split) {
  std::string out;
  const std::pair<const char*, const LabeledDataset*> parts[] = {
      {"train", &split.train}, {"val", &split.val}, {"test", &split.test}};
  for (const auto& [name, ds] : parts) {
    for (const auto& s : ds->samples) {
      out += s.sample_id;
      out += '\t';
      out += name;
      out += '\t';
      out += std::to_string(*s.label);
      out += '\n';
    }
  }
  return out;
}

std::vector<ManifestEntry> parse_split_manifest(std::string_view contents) {
  std::vector<ManifestEntry> out;
  std::size_t line_no = 0;
  for (auto line : detail::lines(contents)) {
    ++line_no;
    if (detail::is_comment_or_blank(line)) continue;
    const auto cols = detail::split_tabs(line);
    std::size_t label = 0;
    if (cols.size() != 3 ||
        std::from_chars(cols[2].data(), cols[2].data() + cols[2].size(), label).ec != std::errc() ||
        (cols[1] != "train" && cols[1] != "val" && cols[1] != "test")) {
      throw DataError("split manifest line " + std::to_string(line_no) + " is malformed");
    }
    out.push_back({std::string(cols[0]), std::string(cols[1]), label});
  }
  return out;
}

}  // namespace eraclass
