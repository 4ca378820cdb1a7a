#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eraclass/tensor.hpp"
#include "json.hpp"

namespace eraclass {

/// Versioned binary weight container.
///
///   bytes 0-7    magic "ERACKPT\0"
///   bytes 8-11   format version, uint32 little-endian (currently 1)
///   bytes 12-19  header length N, uint64 little-endian
///   next N       JSON header: {"kind", "spec", "meta", "tensors": [{"name", "shape"}]}
///   remainder    every tensor's values, in header order, row-major float64
///                little-endian
struct Checkpoint {
  std::string kind;  // "neural" or "logreg"
  nlohmann::json spec;
  nlohmann::json meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(std::string_view name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& ckpt);
// Throws DataError on a bad magic, unknown version or truncated payload.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace eraclass
