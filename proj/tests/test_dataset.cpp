#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "eraclass/dataset.hpp"
#include "eraclass/error.hpp"

using namespace eraclass;

namespace {

// `authors_per_class` authors per bin of a 3-class scheme, each with
// `per_author` samples dated inside its bin.
LabeledDataset make_dataset(std::size_t authors_per_class, std::size_t per_author,
                            std::vector<std::size_t> extra_per_class = {}) {
  const EraScheme scheme("s", {{"a", 0, 100}, {"b", 100, 200}, {"c", 200, 300}});
  std::vector<Sample> samples;
  for (std::size_t c = 0; c < 3; ++c) {
    const std::size_t extra = c < extra_per_class.size() ? extra_per_class[c] : 0;
    for (std::size_t a = 0; a < authors_per_class; ++a) {
      const std::size_t n = per_author + (a == 0 ? extra : 0);
      for (std::size_t k = 0; k < n; ++k) {
        Sample s;
        s.author_id = "auth" + std::to_string(c) + "_" + std::to_string(a);
        s.sample_id = s.author_id + "#" + std::to_string(k);
        s.year_hijri = static_cast<int>(c * 100 + 10 + a);
        s.tokens = {"t"};
        samples.push_back(std::move(s));
      }
    }
  }
  return label_dataset(std::move(samples), scheme);
}

std::set<std::string> authors(const LabeledDataset& ds) {
  std::set<std::string> out;
  for (const auto& s : ds.samples) out.insert(s.author_id);
  return out;
}

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
  for (const auto& x : a) {
    if (b.count(x)) return false;
  }
  return true;
}

}  // namespace

TEST(Label, AssignsExcludesAndClamps) {
  const EraScheme scheme("s", {{"a", 0, 100}, {"b", 100, 200}}, {{-50, -10}});
  std::vector<Sample> samples(4);
  const int years[] = {-20, -60, 150, 250};
  for (std::size_t i = 0; i < 4; ++i) {
    samples[i].sample_id = std::to_string(i);
    samples[i].year_hijri = years[i];
  }
  const auto ds = label_dataset(samples, scheme);
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.excluded, 1u);
  EXPECT_EQ(ds.clamped_below, 1u);
  EXPECT_EQ(ds.clamped_above, 1u);
  EXPECT_EQ(ds.class_counts, (std::vector<std::size_t>{1, 2}));
}

TEST(Balance, DownsamplesToSmallestClassKeepingOrder) {
  const auto ds = make_dataset(2, 5, {7, 0, 3});
  const auto b = balance(ds, 11);
  EXPECT_EQ(b.class_counts, (std::vector<std::size_t>{10, 10, 10}));
  // Survivors keep their relative input order.
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < ds.size(); ++i) pos[ds.samples[i].sample_id] = i;
  for (std::size_t i = 1; i < b.size(); ++i) {
    EXPECT_LT(pos[b.samples[i - 1].sample_id], pos[b.samples[i].sample_id]);
  }
  EXPECT_EQ(balance(ds, 11).samples, b.samples);
}

TEST(Balance, EmptyClassNamed) {
  const EraScheme scheme("s", {{"a", 0, 100}, {"lonely", 100, 200}});
  std::vector<Sample> samples(2);
  samples[0].sample_id = "x";
  samples[1].sample_id = "y";
  const auto ds = label_dataset(samples, scheme);
  try {
    balance(ds, 1);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
}

TEST(SplitMerged, ProportionalCounts) {
  // 100 samples: 34/33/33 over three classes.
  auto ds = make_dataset(1, 33, {1, 0, 0});
  ASSERT_EQ(ds.size(), 100u);
  SplitSpec spec;
  spec.protocol = SplitProtocol::merged;
  spec.seed = 3;
  const auto s = split(ds, spec);
  EXPECT_EQ(s.test.size(), 15u);
  EXPECT_GE(s.val.size(), 12u);
  EXPECT_LE(s.val.size(), 13u);
  EXPECT_EQ(s.train.size() + s.val.size() + s.test.size(), 100u);
  for (std::size_t c = 0; c < 3; ++c) {
    const double share = static_cast<double>(ds.class_counts[c]) * 0.15;
    EXPECT_LE(std::abs(static_cast<double>(s.test.class_counts[c]) - share), 1.0);
  }
}

TEST(SplitAuthorDisjoint, AuthorSetsDisjointAndAllClassesPresent) {
  const auto ds = make_dataset(10, 20);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SplitSpec spec;
    spec.seed = seed;
    const auto s = split(ds, spec);
    const auto tr = authors(s.train), va = authors(s.val), te = authors(s.test);
    EXPECT_TRUE(disjoint(tr, va));
    EXPECT_TRUE(disjoint(tr, te));
    EXPECT_TRUE(disjoint(va, te));
    EXPECT_EQ(tr.size() + va.size() + te.size(), 30u);
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_GT(s.train.class_counts[c], 0u);
      EXPECT_GT(s.val.class_counts[c], 0u);
      EXPECT_GT(s.test.class_counts[c], 0u);
    }
  }
}

TEST(SplitAuthorDisjoint, RejectsDegenerateInputs) {
  EXPECT_THROW(split(make_dataset(0, 0, {5, 5, 0}), SplitSpec{}), DataError);
  const auto ds = make_dataset(1, 1, {100, 0, 0});
  EXPECT_THROW(split(ds, SplitSpec{}), DataError);
}

TEST(SplitSpec, Validates) {
  SplitSpec s;
  s.test_frac = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.test_frac = 0.2;
  s.val_frac_of_train = 1.0;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_EQ(parse_split_protocol("merged"), SplitProtocol::merged);
  EXPECT_THROW(parse_split_protocol("bogus"), ConfigError);
}

TEST(BuildSplits, BalancedAndDeterministic) {
  const auto ds = make_dataset(10, 20, {15, 0, 0});
  for (auto protocol : {SplitProtocol::author_disjoint, SplitProtocol::merged}) {
    SplitSpec spec;
    spec.protocol = protocol;
    spec.seed = 9;
    const auto a = build_splits(ds, spec, true);
    const auto b = build_splits(ds, spec, true);
    EXPECT_EQ(format_split_manifest(a), format_split_manifest(b));
    // Merged splits balance the pool first, so each split is balanced to
    // within one sample; author-disjoint splits balance inside each split.
    const std::size_t slack = protocol == SplitProtocol::merged ? 1 : 0;
    for (const auto* part : {&a.train, &a.val, &a.test}) {
      const auto [lo, hi] = std::minmax_element(part->class_counts.begin(), part->class_counts.end());
      EXPECT_LE(*hi - *lo, slack);
    }
    if (protocol == SplitProtocol::author_disjoint) {
      EXPECT_TRUE(disjoint(authors(a.train), authors(a.test)));
      EXPECT_TRUE(disjoint(authors(a.val), authors(a.test)));
      EXPECT_TRUE(disjoint(authors(a.train), authors(a.val)));
    }
  }
}

TEST(Manifest, RoundTrip) {
  SplitSpec spec;
  spec.seed = 1;
  const auto s = split(make_dataset(5, 4), spec);
  const auto text = format_split_manifest(s);
  const auto entries = parse_split_manifest(text);
  ASSERT_EQ(entries.size(), s.train.size() + s.val.size() + s.test.size());
  EXPECT_EQ(entries.front().split, "train");
  EXPECT_EQ(entries.back().split, "test");
  EXPECT_EQ(entries.front().sample_id, s.train.samples.front().sample_id);
  EXPECT_EQ(entries.front().label, *s.train.samples.front().label);
  EXPECT_THROW(parse_split_manifest("a\tbogus\t0\n"), DataError);
}
