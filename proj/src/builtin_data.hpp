#pragma once

namespace eraclass::detail {

extern const char* const kBuiltinStopwordsAr;
extern const char* const kBuiltinApcdEraSpans;

}  // namespace eraclass::detail
