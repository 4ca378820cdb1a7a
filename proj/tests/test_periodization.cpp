#include <gtest/gtest.h>

#include <stdexcept>
#include <string>
#include <vector>

#include "eraclass/error.hpp"
#include "eraclass/periodization.hpp"

using namespace eraclass;

namespace {

struct Boundary {
  int year;
  std::string era;
};

void expect_eras(const EraScheme& s, const std::vector<Boundary>& cases) {
  for (const auto& c : cases) {
    const auto a = s.assign(c.year);
    EXPECT_EQ(s.bin(a.index).label, c.era) << s.name() << " year " << c.year;
    EXPECT_EQ(a.clamp, Clamp::none) << s.name() << " year " << c.year;
  }
}

}  // namespace

TEST(Schemes, SixEraBoundaries) {
  expect_eras(builtin_scheme("ghoniem6"), {{-150, "Pre-Islamic"},
                                           {0, "Pre-Islamic"},
                                           {1, "Islamic"},
                                           {131, "Islamic"},
                                           {132, "Abbasid"},
                                           {333, "Abbasid"},
                                           {334, "Aldoul wa al-emarat"},
                                           {922, "Aldoul wa al-emarat"},
                                           {923, "Ottoman"},
                                           {1334, "Ottoman"},
                                           {1335, "Modern"},
                                           {1449, "Modern"}});
}

TEST(Schemes, FiveEraProseBoundaries) {
  const auto s = builtin_scheme("openiti5");
  ASSERT_EQ(s.size(), 5u);
  expect_eras(s, {{50, "Islamic"},
                  {174, "Islamic"},
                  {175, "Abbasid"},
                  {399, "Abbasid"},
                  {400, "Aldoul wa al-emarat"},
                  {949, "Aldoul wa al-emarat"},
                  {950, "Ottoman"},
                  {1349, "Ottoman"},
                  {1350, "Modern"},
                  {1449, "Modern"}});
  EXPECT_TRUE(s.is_excluded(-150));
  EXPECT_TRUE(s.is_excluded(0));
  EXPECT_FALSE(s.is_excluded(1));
  // Years 1..49 precede the first bin and clamp into it.
  EXPECT_EQ(s.assign(10).clamp, Clamp::below);
  EXPECT_EQ(s.assign(10).index, 0u);
}

TEST(Schemes, ThreePeriodBoundaries) {
  expect_eras(builtin_scheme("belinkov3"), {{1, "Early"},
                                            {299, "Early"},
                                            {300, "Middle"},
                                            {1299, "Middle"},
                                            {1300, "Late"},
                                            {1449, "Late"}});
}

TEST(Schemes, BinaryBoundaries) {
  expect_eras(builtin_scheme("binary_openiti"),
              {{-150, "Classical"}, {1349, "Classical"}, {1350, "Modern"}, {1449, "Modern"}});
}

TEST(Schemes, PoetryFiveEraDropsAldoul) {
  const auto s = builtin_scheme("apcd5");
  EXPECT_EQ(s.labels(), (std::vector<std::string>{"Pre-Islamic", "Islamic", "Abbasid", "Ottoman", "Modern"}));
  EXPECT_TRUE(s.is_excluded(334));
  EXPECT_TRUE(s.is_excluded(922));
  EXPECT_FALSE(s.is_excluded(923));
  EXPECT_FALSE(s.is_excluded(333));
  expect_eras(s, {{333, "Abbasid"}, {923, "Ottoman"}});
}

TEST(Schemes, PoetryTwelveAndElevenEras) {
  const auto s12 = builtin_scheme("apcd12");
  ASSERT_EQ(s12.size(), 12u);
  for (std::size_t i = 1; i < s12.size(); ++i) {
    EXPECT_EQ(s12.bin(i - 1).end_ah, s12.bin(i).start_ah) << "contiguous spans";
  }
  const auto s11 = builtin_scheme("apcd11");
  ASSERT_EQ(s11.size(), 11u);
  EXPECT_FALSE(s11.find_label("Islamic").has_value());
  const auto islamic = s12.bin(*s12.find_label("Islamic"));
  EXPECT_TRUE(s11.is_excluded(islamic.start_ah));
  EXPECT_TRUE(s11.is_excluded(islamic.end_ah - 1));
  EXPECT_FALSE(s11.is_excluded(islamic.end_ah));
}

TEST(Schemes, ClampsOutsideRange) {
  const auto s = builtin_scheme("ghoniem6");
  EXPECT_EQ(s.assign(-151).clamp, Clamp::below);
  EXPECT_EQ(s.assign(-151).index, 0u);
  EXPECT_EQ(s.assign(1450).clamp, Clamp::above);
  EXPECT_EQ(s.assign(1450).index, 5u);
}

TEST(Schemes, GapYearsGoToNextBin) {
  const EraScheme s("gap", {{"a", 0, 10}, {"b", 20, 30}});
  EXPECT_EQ(s.label_of(9), 0u);
  EXPECT_EQ(s.label_of(10), 1u);
  EXPECT_EQ(s.label_of(19), 1u);
}

TEST(Schemes, IdsRoundTripAndUnknownRejected) {
  for (auto id : {SchemeId::ghoniem6, SchemeId::openiti5, SchemeId::belinkov3, SchemeId::binary_openiti,
                  SchemeId::apcd5, SchemeId::apcd12, SchemeId::apcd11}) {
    EXPECT_EQ(parse_scheme_id(to_string(id)), id);
  }
  EXPECT_THROW(builtin_scheme("nope"), ConfigError);
}

TEST(Schemes, LabelLookupIsLenient) {
  const auto s = builtin_scheme("ghoniem6");
  EXPECT_EQ(s.find_label("pre_islamic"), 0u);
  EXPECT_EQ(s.find_label("ALDOUL WA AL EMARAT"), 3u);
  EXPECT_FALSE(s.find_label("Mamluk").has_value());
  EXPECT_EQ(s.midpoint_year("Islamic"), 66);
}

TEST(Schemes, ConstructorValidates) {
  EXPECT_THROW(EraScheme("x", {}), std::invalid_argument);
  EXPECT_THROW(EraScheme("x", {{"a", 5, 5}}), std::invalid_argument);
  EXPECT_THROW(EraScheme("x", {{"a", 0, 10}, {"b", 9, 20}}), std::invalid_argument);
}

TEST(CustomBins, ClassCounts) {
  EXPECT_EQ(custom_bins(300, 0, 1500).size(), 5u);
  EXPECT_EQ(custom_bins(200, 0, 1500).size(), 8u);
  EXPECT_EQ(custom_bins(200, 0, 1600).size(), 8u);
  EXPECT_EQ(custom_bins(100, 0, 1500).size(), 15u);
}

TEST(CustomBins, LabelsAndTruncation) {
  const auto s = custom_bins(200, 0, 1500);
  EXPECT_EQ(s.bin(0).label, "0-200");
  EXPECT_EQ(s.bin(7).label, "1400-1500");
  EXPECT_EQ(s.label_of(199), 0u);
  EXPECT_EQ(s.label_of(200), 1u);
  EXPECT_THROW(custom_bins(0, 0, 100), std::invalid_argument);
  EXPECT_THROW(custom_bins(10, 100, 100), std::invalid_argument);
}

TEST(Merge, ParsesAndCollapsesGroups) {
  const auto groups = parse_groups("0,1; 2 ;3,4,5");
  ASSERT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups[2], (std::vector<std::size_t>{3, 4, 5}));
  const auto merged = merge_adjacent(builtin_scheme("ghoniem6"), groups);
  ASSERT_EQ(merged.size(), 3u);
  EXPECT_EQ(merged.bin(0).label, "Pre-Islamic+Islamic");
  EXPECT_EQ(merged.bin(0).start_ah, -150);
  EXPECT_EQ(merged.bin(0).end_ah, 132);
  EXPECT_EQ(merged.label_of(1000), 2u);
}

TEST(Merge, RejectsNonAdjacentGroups) {
  const auto s = builtin_scheme("belinkov3");
  EXPECT_THROW(merge_adjacent(s, {{0, 2}, {1}}), std::invalid_argument);
  EXPECT_THROW(merge_adjacent(s, {{0, 1}}), std::invalid_argument);
  EXPECT_THROW(merge_adjacent(s, {{0}, {}, {1, 2}}), std::invalid_argument);
  EXPECT_THROW(parse_groups("0,,1"), std::invalid_argument);
  EXPECT_THROW(parse_groups("0;a"), std::invalid_argument);
}

TEST(SchemeFile, RoundTripsAndReportsErrors) {
  const auto s = builtin_scheme("ghoniem6");
  EXPECT_EQ(parse_scheme("# comment\n" + format_scheme(s), "ghoniem6"), s);
  EXPECT_THROW(parse_scheme("a\t1\n", "x"), DataError);
  EXPECT_THROW(parse_scheme("a\t1\tz\n", "x"), DataError);
  EXPECT_THROW(parse_scheme("a\t5\t1\n", "x"), DataError);
}
