#pragma once

#include <array>

namespace eraclass::detail {

struct CodepointRange {
  char32_t first;
  char32_t last;
};

extern const std::array<CodepointRange, 331> kPunctuationAndSymbols;

}  // namespace eraclass::detail
