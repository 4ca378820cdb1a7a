#include "eraclass/periodization.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include "builtin_data.hpp"
#include "eraclass/error.hpp"
#include "io_util.hpp"

namespace eraclass {

namespace {

// Canonical form for label matching.
std::string fold_label(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '-' || c == '_' || c == ' ') {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else if (c >= 'A' && c <= 'Z') {
      out.push_back(static_cast<char>(c - 'A' + 'a'));
    } else {
      out.push_back(c);
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

int parse_int(std::string_view s, std::string_view what) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw DataError("invalid integer for " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

EraScheme::EraScheme(std::string name, std::vector<EraBin> bins, std::vector<YearRange> exclusions)
    : name_(std::move(name)), bins_(std::move(bins)), exclusions_(std::move(exclusions)) {
  if (bins_.empty()) throw std::invalid_argument("era scheme '" + name_ + "' has no bins");
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (bins_[i].start_ah >= bins_[i].end_ah) {
      throw std::invalid_argument("era bin '" + bins_[i].label + "' has start >= end");
    }
    if (i > 0 && bins_[i].start_ah < bins_[i - 1].end_ah) {
      throw std::invalid_argument("era bins '" + bins_[i - 1].label + "' and '" + bins_[i].label +
                                  "' overlap or are out of order");
    }
  }
  for (const auto& r : exclusions_) {
    if (r.start_ah >= r.end_ah) throw std::invalid_argument("empty exclusion range");
  }
}

std::vector<std::string> EraScheme::labels() const {
  std::vector<std::string> out;
  out.reserve(bins_.size());
  for (const auto& b : bins_) out.push_back(b.label);
  return out;
}

LabelAssignment EraScheme::assign(int year_ah) const {
  if (year_ah < bins_.front().start_ah) return {0, Clamp::below};
  if (year_ah >= bins_.back().end_ah) return {bins_.size() - 1, Clamp::above};
  // First bin whose end lies beyond the year; covers gap years too.
  const auto it = std::upper_bound(bins_.begin(), bins_.end(), year_ah,
                                   [](int y, const EraBin& b) { return y < b.end_ah; });
  return {static_cast<std::size_t>(it - bins_.begin()), Clamp::none};
}

bool EraScheme::is_excluded(int year_ah) const {
  return std::any_of(exclusions_.begin(), exclusions_.end(),
                     [&](const YearRange& r) { return r.contains(year_ah); });
}

std::optional<std::size_t> EraScheme::find_label(std::string_view era) const {
  const std::string key = fold_label(era);
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (fold_label(bins_[i].label) == key) return i;
  }
  return std::nullopt;
}

std::optional<int> EraScheme::midpoint_year(std::string_view era) const {
  const auto idx = find_label(era);
  if (!idx) return std::nullopt;
  const auto& b = bins_[*idx];
  const int width = b.end_ah - b.start_ah;
  return b.start_ah + width / 2;
}

SchemeId parse_scheme_id(std::string_view id) {
  static constexpr std::pair<std::string_view, SchemeId> kIds[] = {
      {"ghoniem6", SchemeId::ghoniem6},   {"openiti5", SchemeId::openiti5},
      {"belinkov3", SchemeId::belinkov3}, {"binary_openiti", SchemeId::binary_openiti},
      {"apcd5", SchemeId::apcd5},         {"apcd12", SchemeId::apcd12},
      {"apcd11", SchemeId::apcd11},
  };
  for (const auto& [name, value] : kIds) {
    if (name == id) return value;
  }
  throw ConfigError("unknown era scheme id '" + std::string(id) + "'");
}

std::string_view to_string(SchemeId id) {
  switch (id) {
    case SchemeId::ghoniem6: return "ghoniem6";
    case SchemeId::openiti5: return "openiti5";
    case SchemeId::belinkov3: return "belinkov3";
    case SchemeId::binary_openiti: return "binary_openiti";
    case SchemeId::apcd5: return "apcd5";
    case SchemeId::apcd12: return "apcd12";
    case SchemeId::apcd11: return "apcd11";
  }
  return "?";
}

EraScheme builtin_scheme(SchemeId id) {
  switch (id) {
    case SchemeId::ghoniem6:
      return EraScheme("ghoniem6", {{"Pre-Islamic", -150, 1},
                                    {"Islamic", 1, 132},
                                    {"Abbasid", 132, 334},
                                    {"Aldoul wa al-emarat", 334, 923},
                                    {"Ottoman", 923, 1335},
                                    {"Modern", 1335, 1450}});
    case SchemeId::openiti5:
      return EraScheme("openiti5",
                       {{"Islamic", 50, 175},
                        {"Abbasid", 175, 400},
                        {"Aldoul wa al-emarat", 400, 950},
                        {"Ottoman", 950, 1350},
                        {"Modern", 1350, 1450}},
                       {{-150, 1}});
    case SchemeId::belinkov3:
      return EraScheme("belinkov3", {{"Early", 1, 300}, {"Middle", 300, 1300}, {"Late", 1300, 1450}});
    case SchemeId::binary_openiti:
      return EraScheme("binary_openiti", {{"Classical", -150, 1350}, {"Modern", 1350, 1450}});
    case SchemeId::apcd5:
      // Ghoniem's eras without Aldoul wa al-emarat; its years become a gap
      // whose samples are dropped.
      return EraScheme("apcd5",
                       {{"Pre-Islamic", -150, 1},
                        {"Islamic", 1, 132},
                        {"Abbasid", 132, 334},
                        {"Ottoman", 923, 1335},
                        {"Modern", 1335, 1450}},
                       {{334, 923}});
    case SchemeId::apcd12:
      return parse_scheme(detail::kBuiltinApcdEraSpans, "apcd12");
    case SchemeId::apcd11: {
      const EraScheme full = parse_scheme(detail::kBuiltinApcdEraSpans, "apcd12");
      std::vector<EraBin> bins;
      std::vector<YearRange> exclusions;
      for (const auto& b : full.bins()) {
        if (b.label == "Islamic") {
          exclusions.push_back({b.start_ah, b.end_ah});
        } else {
          bins.push_back(b);
        }
      }
      return EraScheme("apcd11", std::move(bins), std::move(exclusions));
    }
  }
  throw ConfigError("unknown era scheme id");
}

EraScheme builtin_scheme(std::string_view id) { return builtin_scheme(parse_scheme_id(id)); }

EraScheme custom_bins(int width_years, int range_start, int range_end) {
  if (width_years <= 0) throw std::invalid_argument("bin width must be positive");
  if (range_end <= range_start) throw std::invalid_argument("bin range is empty");
  std::vector<EraBin> bins;
  for (long long start = range_start; start < range_end; start += width_years) {
    const int s = static_cast<int>(start);
    const int e = static_cast<int>(std::min<long long>(start + width_years, range_end));
    bins.push_back({std::to_string(s) + "-" + std::to_string(e), s, e});
  }
  return EraScheme("custom" + std::to_string(width_years), std::move(bins));
}

void validate_adjacent_groups(const std::vector<std::vector<std::size_t>>& groups, std::size_t n) {
  std::size_t next = 0;
  for (const auto& g : groups) {
    if (g.empty()) throw std::invalid_argument("empty merge group");
    for (std::size_t idx : g) {
      if (idx != next) {
        throw std::invalid_argument("merge groups must be consecutive runs covering 0.." +
                                    std::to_string(n - 1) + " in order (unexpected index " +
                                    std::to_string(idx) + ")");
      }
      ++next;
    }
  }
  if (next != n) {
    throw std::invalid_argument("merge groups cover " + std::to_string(next) + " of " +
                                std::to_string(n) + " classes");
  }
}

EraScheme merge_adjacent(const EraScheme& scheme, const std::vector<std::vector<std::size_t>>& groups) {
  validate_adjacent_groups(groups, scheme.size());
  std::vector<EraBin> bins;
  for (const auto& g : groups) {
    EraBin merged{scheme.bin(g.front()).label, scheme.bin(g.front()).start_ah, scheme.bin(g.back()).end_ah};
    for (std::size_t k = 1; k < g.size(); ++k) merged.label += "+" + scheme.bin(g[k]).label;
    bins.push_back(std::move(merged));
  }
  return EraScheme(scheme.name() + "-merged", std::move(bins), scheme.exclusions());
}

std::vector<std::vector<std::size_t>> parse_groups(std::string_view text) {
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> current;
  std::size_t value = 0;
  bool have_digit = false;
  auto flush_value = [&] {
    if (!have_digit) throw std::invalid_argument("malformed group list '" + std::string(text) + "'");
    current.push_back(value);
    value = 0;
    have_digit = false;
  };
  for (char c : text) {
    if (c >= '0' && c <= '9') {
      value = value * 10 + static_cast<std::size_t>(c - '0');
      have_digit = true;
    } else if (c == ',') {
      flush_value();
    } else if (c == ';') {
      flush_value();
      groups.push_back(std::move(current));
      current.clear();
    } else if (c != ' ') {
      throw std::invalid_argument("malformed group list '" + std::string(text) + "'");
    }
  }
  flush_value();
  groups.push_back(std::move(current));
  return groups;
}

EraScheme parse_scheme(std::string_view contents, std::string name) {
  std::vector<EraBin> bins;
  std::size_t line_no = 0;
  for (auto line : detail::lines(contents)) {
    ++line_no;
    if (detail::is_comment_or_blank(line)) continue;
    const auto cols = detail::split_tabs(line);
    if (cols.size() != 3) {
      throw DataError("scheme line " + std::to_string(line_no) + ": expected label<TAB>start<TAB>end");
    }
    bins.push_back({std::string(cols[0]), parse_int(cols[1], "start_ah"), parse_int(cols[2], "end_ah")});
  }
  try {
    return EraScheme(std::move(name), std::move(bins));
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
}

EraScheme load_scheme(const std::filesystem::path& path) {
  return parse_scheme(detail::read_file(path), path.stem().string());
}

std::string format_scheme(const EraScheme& scheme) {
  std::string out;
  for (const auto& b : scheme.bins()) {
    out += b.label + "\t" + std::to_string(b.start_ah) + "\t" + std::to_string(b.end_ah) + "\n";
  }
  return out;
}

}  // namespace eraclass
