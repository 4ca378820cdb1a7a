#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eraclass {

// Half-open Hijri year interval [start_ah, end_ah).
struct EraBin {
  std::string label;
  int start_ah = 0;
  int end_ah = 0;

  bool contains(int year) const { return year >= start_ah && year < end_ah; }
  bool operator==(const EraBin&) const = default;
};

struct YearRange {
  int start_ah = 0;
  int end_ah = 0;

  bool contains(int year) const { return year >= start_ah && year < end_ah; }
  bool operator==(const YearRange&) const = default;
};

enum class Clamp { none, below, above };

struct LabelAssignment {
  std::size_t index = 0;
  Clamp clamp = Clamp::none;
};

/// Ordered, disjoint Hijri-year bins mapped to class indices.
///
/// Years that fall in a gap between bins go to the next bin. `exclusions`
/// lists year ranges whose samples are dropped when a dataset is labeled
/// (e.g. pre-Islamic texts under the OpenITI five-era setup).
class EraScheme {
 public:
  EraScheme() = default;
  // Throws std::invalid_argument unless bins are non-empty, sorted, disjoint
  // and each has start < end.
  EraScheme(std::string name, std::vector<EraBin> bins, std::vector<YearRange> exclusions = {});

  const std::string& name() const { return name_; }
  const std::vector<EraBin>& bins() const { return bins_; }
  const std::vector<YearRange>& exclusions() const { return exclusions_; }
  std::size_t size() const { return bins_.size(); }
  const EraBin& bin(std::size_t i) const { return bins_.at(i); }

  std::vector<std::string> labels() const;

  LabelAssignment assign(int year_ah) const;
  std::size_t label_of(int year_ah) const { return assign(year_ah).index; }

  bool is_excluded(int year_ah) const;

  // Index of the bin whose label matches `era` (case-insensitive; '-', '_'
  // and ' ' are interchangeable).
  std::optional<std::size_t> find_label(std::string_view era) const;

  // Representative year of a named era: start + (end - start) / 2, floored.
  std::optional<int> midpoint_year(std::string_view era) const;

  bool operator==(const EraScheme&) const = default;

 private:
  std::string name_;
  std::vector<EraBin> bins_;
  std::vector<YearRange> exclusions_;
};

enum class SchemeId { ghoniem6, openiti5, belinkov3, binary_openiti, apcd5, apcd12, apcd11 };

SchemeId parse_scheme_id(std::string_view id);
std::string_view to_string(SchemeId id);

EraScheme builtin_scheme(SchemeId id);
// Accepts the string form of SchemeId; throws ConfigError for unknown ids.
EraScheme builtin_scheme(std::string_view id);

// Consecutive [range_start + k*width, range_start + (k+1)*width) bins, the
// last truncated at range_end. Labels are "start-end".
EraScheme custom_bins(int width_years, int range_start, int range_end);

// Collapses each group of consecutive bin indices into one bin. Groups must
// partition 0..n-1 in order; otherwise throws std::invalid_argument.
EraScheme merge_adjacent(const EraScheme& scheme, const std::vector<std::vector<std::size_t>>& groups);

// Throws std::invalid_argument unless `groups` is an ordered partition of
// 0..n-1 into consecutive runs.
void validate_adjacent_groups(const std::vector<std::vector<std::size_t>>& groups, std::size_t n);

// Parses "0,1;2,3;4" into {{0,1},{2,3},{4}}.
std::vector<std::vector<std::size_t>> parse_groups(std::string_view text);

// Scheme file: `label<TAB>start_ah<TAB>end_ah` per line, sorted; '#' comments.
EraScheme parse_scheme(std::string_view contents, std::string name);
EraScheme load_scheme(const std::filesystem::path& path);
std::string format_scheme(const EraScheme& scheme);

}  // namespace eraclass
