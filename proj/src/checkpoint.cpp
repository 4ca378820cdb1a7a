#include "eraclass/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "eraclass/error.hpp"
#include "io_util.hpp"

namespace eraclass {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'E', 'R', 'A', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(std::string_view in, std::size_t pos) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

}  // namespace

const Tensor& Checkpoint::tensor(std::string_view name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw DataError("checkpoint has no tensor '" + std::string(name) + "'");
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  json names = json::array();
  for (const auto& [name, t] : ckpt.tensors) names.push_back({{"name", name}, {"shape", t.shape()}});
  const json header = {{"kind", ckpt.kind}, {"spec", ckpt.spec}, {"meta", ckpt.meta}, {"tensors", names}};
  const std::string h = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, h.size());
  out += h;
  for (const auto& [name, t] : ckpt.tensors) {
    for (double v : t.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw DataError("not an eraclass checkpoint");
  }
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 12);
  if (header_len > bytes.size() - 20) throw DataError("truncated checkpoint header");
  json header;
  try {
    header = json::parse(bytes.substr(20, header_len));
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.kind = header.at("kind").get<std::string>();
  ckpt.spec = header.at("spec");
  ckpt.meta = header.at("meta");
  std::size_t pos = 20 + header_len;
  for (const auto& entry : header.at("tensors")) {
    auto shape = entry.at("shape").get<std::vector<std::size_t>>();
    Tensor t(shape);
    if ((bytes.size() - pos) / 8 < t.size()) throw DataError("truncated checkpoint payload");
    for (double& v : t.data()) {
      v = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
      pos += 8;
    }
    ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(t));
  }
  if (pos != bytes.size()) throw DataError("trailing bytes after checkpoint payload");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  detail::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(detail::read_file(path)); }

}  // namespace eraclass
